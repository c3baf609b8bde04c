use nalgebra::{Vector2, Vector3};

use super::params::HeadingMode;
use super::potential::AttractorPose;
use crate::error::{Error, Result};
use crate::math::wrap_angle;
use crate::voronoi::SolutionPath;

/// Waypoints closer than this are merged.
const MIN_SEGMENT: f64 = 1e-9;

/// Piecewise-linear attractor schedule over `s in [0, 1]`, one equal `s` interval per segment.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    /// Waypoints with continuous (unwrapped) headings.
    waypoints: Vec<AttractorPose>,
}

fn unwrap_towards(prev: f64, a: f64) -> f64 {
    prev + wrap_angle(a - prev)
}

fn dir_angle(d: &Vector2<f64>) -> f64 {
    d.y.atan2(d.x)
}

impl Schedule {
    pub fn new(waypoints: Vec<AttractorPose>) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(Error::Construction("attractor schedule needs at least one waypoint".into()));
        }
        if waypoints.iter().any(|w| !w.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite { context: "attractor waypoint".into() });
        }
        let mut out: Vec<AttractorPose> = Vec::with_capacity(waypoints.len());
        for w in waypoints {
            match out.last() {
                Some(prev) => {
                    let w = AttractorPose::new(w.x, w.y, unwrap_towards(prev.z, w.z));
                    if (w - prev).norm() > MIN_SEGMENT {
                        out.push(w);
                    }
                }
                None => out.push(w),
            }
        }
        Ok(Schedule { waypoints: out })
    }

    /// Schedule from the current end-effector pose through the solution path to `goal`.
    ///
    /// Path points closer than `spacing` to the previously kept point are dropped; the start and
    /// the goal are always kept.
    pub fn from_path(
        start: &AttractorPose,
        path: &SolutionPath,
        goal: &Vector2<f64>,
        heading: HeadingMode,
        spacing: f64,
    ) -> Result<Self> {
        let mut pts: Vec<Vector2<f64>> = vec![start.xy()];
        // Normal angle of the path edge leaving each point; the start leg and goal leg have none.
        let mut normals: Vec<Option<f64>> = vec![None];
        for (k, p) in path.points.iter().enumerate() {
            let n = path.edges.get(k).or_else(|| path.edges.last()).map(|e| e.normal_angle);
            pts.push(*p);
            normals.push(n);
        }
        pts.push(*goal);
        normals.push(path.edges.last().map(|e| e.normal_angle));

        // Drop crowded points, keeping the first occurrence's normal.
        let spacing = spacing.max(MIN_SEGMENT);
        let last = pts.len() - 1;
        let mut kept: Vec<(Vector2<f64>, Option<f64>)> = Vec::new();
        for (k, (p, n)) in pts.into_iter().zip(normals).enumerate() {
            let crowded = kept.last().is_some_and(|(q, _)| (p - *q).norm() <= spacing);
            if !crowded {
                kept.push((p, n));
            } else if k == last && kept.len() > 1 {
                // The goal replaces a crowded interior point.
                let (_, qn) = kept.pop().expect("non-empty");
                kept.push((p, qn.or(n)));
            } else if k == last && (p - kept[0].0).norm() > MIN_SEGMENT {
                kept.push((p, n));
            } else if let Some((_, qn)) = kept.last_mut() {
                if qn.is_none() {
                    *qn = n;
                }
            }
        }

        let mut headings = vec![start.z];
        let n = kept.len();
        for k in 1..n {
            let prev = headings[k - 1];
            let h = match heading {
                HeadingMode::Tangent => {
                    let incoming = dir_angle(&(kept[k].0 - kept[k - 1].0));
                    if k + 1 < n {
                        let outgoing = dir_angle(&(kept[k + 1].0 - kept[k].0));
                        incoming + 0.5 * wrap_angle(outgoing - incoming)
                    } else {
                        incoming
                    }
                }
                HeadingMode::EdgeNormal => match kept[k].1 {
                    Some(a) => {
                        // The normal is defined up to sign; take the orientation nearest the previous heading.
                        let flipped = a + std::f64::consts::PI;
                        if wrap_angle(a - prev).abs() <= wrap_angle(flipped - prev).abs() {
                            a
                        } else {
                            flipped
                        }
                    }
                    None => prev,
                },
            };
            headings.push(unwrap_towards(prev, h));
        }
        Schedule::new(
            kept.iter()
                .zip(headings)
                .map(|((p, _), h)| AttractorPose::new(p.x, p.y, h))
                .collect(),
        )
    }

    pub fn waypoints(&self) -> &[AttractorPose] {
        &self.waypoints
    }

    pub fn segments(&self) -> usize {
        self.waypoints.len().saturating_sub(1)
    }

    /// Segment index for `s`, with `s = 1` in the last segment.
    pub fn segment_of(&self, s: f64) -> usize {
        let k = self.segments();
        if k == 0 {
            return 0;
        }
        ((s.clamp(0.0, 1.0) * k as f64).floor() as usize).min(k - 1)
    }

    /// Interior segment boundaries in `s`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let k = self.segments();
        (1..k).map(|i| i as f64 / k as f64).collect()
    }

    /// Constant derivative `du/ds` on a segment.
    pub fn udot_segment(&self, seg: usize) -> Vector3<f64> {
        let k = self.segments();
        if k == 0 {
            return Vector3::zeros();
        }
        (self.waypoints[seg + 1] - self.waypoints[seg]) * k as f64
    }

    pub fn udot(&self, s: f64) -> Vector3<f64> {
        self.udot_segment(self.segment_of(s))
    }

    /// Attractor at `s` with a continuous heading.
    pub fn u_unwrapped(&self, s: f64) -> AttractorPose {
        let k = self.segments();
        if k == 0 {
            return self.waypoints[0];
        }
        let s = s.clamp(0.0, 1.0);
        let seg = self.segment_of(s);
        let t = s * k as f64 - seg as f64;
        self.waypoints[seg] + (self.waypoints[seg + 1] - self.waypoints[seg]) * t
    }

    pub fn u(&self, s: f64) -> AttractorPose {
        let u = self.u_unwrapped(s);
        AttractorPose::new(u.x, u.y, wrap_angle(u.z))
    }
}
