//! Benchmark metrics over a planned end-effector path and the closed-loop telemetry.

use nalgebra::{Vector2, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::format::num;
use crate::planner::ZSys;

/// One planned sample as written to `trajectory.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub s: f64,
    pub z: ZSys,
    pub u: Vector3<f64>,
    pub eef: Vector2<f64>,
    pub eef_heading: f64,
    /// Smallest signed gap to the true obstacle shapes.
    pub gap: f64,
}

/// QP outcome codes in `telemetry.csv`.
pub const STATUS_OPTIMAL: u8 = 0;
pub const STATUS_INFEASIBLE: u8 = 1;
pub const STATUS_MAX_ITER: u8 = 2;

/// One control tick as written to `telemetry.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct TelemetryRow {
    pub t: f64,
    pub q: Vector6<f64>,
    pub theta: Vector3<f64>,
    pub thrust: Vector6<f64>,
    pub d_hat: Vector6<f64>,
    pub min_h: f64,
    pub min_gap: f64,
    pub status: u8,
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsReport {
    /// Wall time of the trajectory integration alone [s].
    pub plan_time: f64,
    pub min_distance: f64,
    pub arc_length: f64,
    pub jerkiness: f64,
    pub samples: usize,
    pub ticks: usize,
    /// Smallest barrier value seen by the controller; `inf` without a simulation.
    pub h_co_min: f64,
    pub sim_min_gap: f64,
    /// Thrust extremes over ticks whose QP solved.
    pub thrust_min: f64,
    pub thrust_max: f64,
    pub infeasible_ticks: usize,
}

impl MetricsReport {
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "plan_time = {}", num(self.plan_time));
        let _ = writeln!(s, "min_distance = {}", num(self.min_distance));
        let _ = writeln!(s, "arc_length = {}", num(self.arc_length));
        let _ = writeln!(s, "jerkiness = {}", num(self.jerkiness));
        let _ = writeln!(s, "samples = {}", self.samples);
        let _ = writeln!(s, "ticks = {}", self.ticks);
        let _ = writeln!(s, "h_co_min = {}", num(self.h_co_min));
        let _ = writeln!(s, "sim_min_gap = {}", num(self.sim_min_gap));
        let _ = writeln!(s, "thrust_min = {}", num(self.thrust_min));
        let _ = writeln!(s, "thrust_max = {}", num(self.thrust_max));
        let _ = writeln!(s, "infeasible_ticks = {}", self.infeasible_ticks);
        s
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::validation("metrics", e.message().to_string()))
    }
}

pub fn arc_length(points: &[Vector2<f64>]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Mean squared third difference of the path w.r.t. `s`, divided by the arc length.
///
/// Samples are assumed uniform in `s`; the step is the mean spacing.
pub fn jerkiness(s: &[f64], points: &[Vector2<f64>]) -> Result<f64> {
    let n = points.len();
    if n < 4 || s.len() != n {
        return Err(Error::Domain(format!("jerkiness needs at least 4 matching samples, got {n}")));
    }
    let h = (s[n - 1] - s[0]) / (n - 1) as f64;
    if !(h > 0.0) {
        return Err(Error::Domain("samples must advance in s".into()));
    }
    let len = arc_length(points);
    if len <= 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = points
        .windows(4)
        .map(|w| (w[3] - w[2] * 3.0 + w[1] * 3.0 - w[0]).norm_squared())
        .sum();
    Ok(sum / (n - 3) as f64 / h.powi(6) / len)
}

/// Report from planned rows and telemetry; `plan_time` is passed through.
pub fn metrics(rows: &[TrajectoryRow], telemetry: &[TelemetryRow], plan_time: f64) -> Result<MetricsReport> {
    if rows.len() < 4 {
        return Err(Error::Domain(format!("metrics need at least 4 trajectory samples, got {}", rows.len())));
    }
    let pts: Vec<Vector2<f64>> = rows.iter().map(|r| r.eef).collect();
    let s: Vec<f64> = rows.iter().map(|r| r.s).collect();
    let mut rep = MetricsReport {
        plan_time,
        min_distance: rows.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min),
        arc_length: arc_length(&pts),
        jerkiness: jerkiness(&s, &pts)?,
        samples: rows.len(),
        ticks: telemetry.len(),
        h_co_min: f64::INFINITY,
        sim_min_gap: f64::INFINITY,
        thrust_min: f64::INFINITY,
        thrust_max: f64::NEG_INFINITY,
        infeasible_ticks: 0,
    };
    for t in telemetry {
        rep.h_co_min = rep.h_co_min.min(t.min_h);
        rep.sim_min_gap = rep.sim_min_gap.min(t.min_gap);
        if t.fallback {
            rep.infeasible_ticks += 1;
        } else {
            rep.thrust_min = rep.thrust_min.min(t.thrust.min());
            rep.thrust_max = rep.thrust_max.max(t.thrust.max());
        }
    }
    Ok(rep)
}
