use nalgebra::{DVector, Matrix5, SymmetricEigen, Vector3, Vector5, Vector6};

use super::params::{PlannerParams, ProxyMode};
use super::potential::{derivs, gamma_index, gamma_len, grad_gamma, w_total, AttractorPose};
use super::schedule::Schedule;
use super::vehicle::{vehicle_sq_poses, ZSys, IDX_PSI, N_VEHICLE_SQ};
use crate::error::{Error, Result};
use crate::format::num;
use crate::geometry::{closest_pair, closest_pair_warm, ProxyPair, Superquadric2, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::math::wrap_angle;

/// Pseudo-time step of the pre-relaxation flow.
const RELAX_DT: f64 = 0.02;

#[derive(Clone, Debug, PartialEq)]
pub struct PlannerState {
    pub z_sys: ZSys,
    pub gamma: Vec<f64>,
}

impl PlannerState {
    /// State with every proxy pair placed facing the other shape.
    pub fn facing(z_sys: ZSys, obstacles: &[Superquadric2], params: &PlannerParams) -> Self {
        let m = obstacles.len();
        let mut gamma = vec![0.0; gamma_len(m)];
        for (i, sq) in vehicle_sq_poses(&z_sys, &params.vehicle).iter().enumerate() {
            for (j, ob) in obstacles.iter().enumerate() {
                let p = ProxyPair::facing(sq, ob);
                let k = gamma_index(i, j, m);
                gamma[k] = p.gamma_i;
                gamma[k + 1] = p.gamma_j;
            }
        }
        PlannerState { z_sys, gamma }
    }

    fn wrapped(mut self) -> Self {
        for a in IDX_PSI..5 {
            self.z_sys[a] = wrap_angle(self.z_sys[a]);
        }
        for g in &mut self.gamma {
            *g = wrap_angle(*g);
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySample {
    pub s: f64,
    pub z_sys: ZSys,
    pub gamma: Vec<f64>,
    pub u: AttractorPose,
    /// Smallest signed gap over all vehicle/obstacle pairs.
    pub min_gap: f64,
    /// Norm of the configuration gradient of `W`.
    pub grad_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrajectoryStatus {
    Complete,
    /// A non-finite state was produced; samples end at the last good one.
    Aborted { s: f64, reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlannedTrajectory {
    pub samples: Vec<TrajectorySample>,
    pub status: TrajectoryStatus,
    pub relax_steps: usize,
}

/// Warm-started closest pairs for every vehicle/obstacle combination.
#[derive(Clone, Debug)]
struct ProxyTracker {
    normals: Vec<Option<f64>>,
}

impl ProxyTracker {
    fn new(m: usize) -> Self {
        ProxyTracker {
            normals: vec![None; N_VEHICLE_SQ * m],
        }
    }

    /// Closest-pair proxies at `z` and the minimum signed gap.
    fn refresh(&mut self, z: &ZSys, obstacles: &[Superquadric2], params: &PlannerParams) -> (Vec<f64>, f64) {
        let m = obstacles.len();
        let mut gamma = vec![0.0; gamma_len(m)];
        let mut min_gap = f64::INFINITY;
        for (i, sq) in vehicle_sq_poses(z, &params.vehicle).iter().enumerate() {
            for (j, ob) in obstacles.iter().enumerate() {
                let slot = i * m + j;
                let c = match self.normals[slot] {
                    Some(a) => closest_pair_warm(sq, ob, a, DEFAULT_TOL, DEFAULT_MAX_ITER),
                    None => closest_pair(sq, ob, &ProxyPair::facing(sq, ob), DEFAULT_TOL, DEFAULT_MAX_ITER),
                };
                self.normals[slot] = Some(c.normal_angle);
                gamma[2 * slot] = c.proxies.gamma_i;
                gamma[2 * slot + 1] = c.proxies.gamma_j;
                min_gap = min_gap.min(c.gap);
            }
        }
        (gamma, min_gap)
    }
}

/// Minimum signed gap between the vehicle at `z` and the obstacles.
pub fn min_gap(z: &ZSys, obstacles: &[Superquadric2], params: &PlannerParams) -> f64 {
    ProxyTracker::new(obstacles.len()).refresh(z, obstacles, params).1
}

/// Inverse of the Hessian with eigenvalue magnitudes floored, and its condition number.
fn floored_inverse(h: &Matrix5<f64>, floor: f64) -> (Matrix5<f64>, f64) {
    let eig = SymmetricEigen::new((h + h.transpose()) * 0.5);
    let lam = eig.eigenvalues.map(|l| l.abs().max(floor));
    let cond = lam.max() / lam.min();
    let inv = eig.eigenvectors * Matrix5::from_diagonal(&lam.map(|l| 1.0 / l)) * eig.eigenvectors.transpose();
    (inv, cond)
}

struct Flow<'a> {
    obstacles: &'a [Superquadric2],
    params: &'a PlannerParams,
    tracker: ProxyTracker,
}

struct Rhs {
    zdot: Vector5<f64>,
    gdot: Option<DVector<f64>>,
}

impl Flow<'_> {
    fn gamma_at(&mut self, z: &ZSys, state_gamma: &[f64]) -> Vec<f64> {
        match self.params.proxy_mode {
            ProxyMode::QuasiStatic => self.tracker.refresh(z, self.obstacles, self.params).0,
            ProxyMode::Flow => state_gamma.to_vec(),
        }
    }

    /// Right-hand side of the equilibrium-tracking flow; `udot = None` freezes the attractor.
    fn rhs(&mut self, s: f64, z: &ZSys, gamma: &[f64], u: &AttractorPose, udot: Option<&Vector3<f64>>) -> Result<Rhs> {
        let g = self.gamma_at(z, gamma);
        let d = derivs(z, &g, u, self.obstacles, self.params)?;
        let (inv, cond) = floored_inverse(&d.hess, self.params.hessian_floor);
        if !cond.is_finite() || cond > self.params.max_condition {
            return Err(Error::LostEquilibrium {
                s,
                reason: format!("Hessian condition number {cond:.3e}"),
            });
        }
        let mut drive = d.grad * self.params.eta;
        if let Some(ud) = udot {
            drive += d.huz * ud;
        }
        let zdot = -(inv * drive);
        let gdot = match self.params.proxy_mode {
            ProxyMode::QuasiStatic => None,
            ProxyMode::Flow => Some(-grad_gamma(z, &g, self.obstacles, self.params)? * self.params.alpha),
        };
        Ok(Rhs { zdot, gdot })
    }

    /// One classical RK4 step of length `h` starting at `s` with the attractor on `seg`.
    fn rk4(
        &mut self,
        schedule: Option<(&Schedule, usize)>,
        s: f64,
        h: f64,
        st: &PlannerState,
        u_frozen: &AttractorPose,
    ) -> Result<PlannerState> {
        let udot = schedule.map(|(sc, seg)| sc.udot_segment(seg));
        let u_at = |t: f64| match schedule {
            Some((sc, _)) => sc.u(t),
            None => *u_frozen,
        };
        let add = |st: &PlannerState, k: &Rhs, c: f64| PlannerState {
            z_sys: st.z_sys + k.zdot * c,
            gamma: match &k.gdot {
                Some(gd) => st.gamma.iter().zip(gd.iter()).map(|(g, d)| g + d * c).collect(),
                None => st.gamma.clone(),
            },
        };
        let k1 = self.rhs(s, &st.z_sys, &st.gamma, &u_at(s), udot.as_ref())?;
        let s2 = add(st, &k1, h / 2.0);
        let k2 = self.rhs(s + h / 2.0, &s2.z_sys, &s2.gamma, &u_at(s + h / 2.0), udot.as_ref())?;
        let s3 = add(st, &k2, h / 2.0);
        let k3 = self.rhs(s + h / 2.0, &s3.z_sys, &s3.gamma, &u_at(s + h / 2.0), udot.as_ref())?;
        let s4 = add(st, &k3, h);
        let k4 = self.rhs(s + h, &s4.z_sys, &s4.gamma, &u_at(s + h), udot.as_ref())?;
        let zdot = (k1.zdot + k2.zdot * 2.0 + k3.zdot * 2.0 + k4.zdot) / 6.0;
        let gamma = match (&k1.gdot, &k2.gdot, &k3.gdot, &k4.gdot) {
            (Some(a), Some(b), Some(c), Some(d)) => {
                let gd = (a + b * 2.0 + c * 2.0 + d) / 6.0;
                st.gamma.iter().zip(gd.iter()).map(|(g, v)| g + v * h).collect()
            }
            _ => st.gamma.clone(),
        };
        Ok(PlannerState {
            z_sys: st.z_sys + zdot * h,
            gamma,
        }
        .wrapped())
    }

    fn sample(&mut self, s: f64, st: &PlannerState, u: &AttractorPose) -> Result<TrajectorySample> {
        let (qs, gap) = self.tracker.refresh(&st.z_sys, self.obstacles, self.params);
        let gamma = match self.params.proxy_mode {
            ProxyMode::QuasiStatic => qs,
            ProxyMode::Flow => st.gamma.clone(),
        };
        let d = derivs(&st.z_sys, &gamma, u, self.obstacles, self.params)?;
        Ok(TrajectorySample {
            s,
            z_sys: st.z_sys,
            gamma,
            u: *u,
            min_gap: gap,
            grad_norm: d.grad.norm(),
        })
    }
}

fn finite(st: &PlannerState) -> bool {
    st.z_sys.iter().all(|v| v.is_finite()) && st.gamma.iter().all(|v| v.is_finite())
}

/// Runs the equilibrium-restoring flow with the attractor frozen until the gradient norm drops
/// below `params.relax_tol`. Returns the relaxed state and the number of steps taken.
pub fn relax(
    z0: &PlannerState,
    u: &AttractorPose,
    obstacles: &[Superquadric2],
    params: &PlannerParams,
) -> Result<(PlannerState, usize)> {
    params.validate()?;
    let mut flow = Flow {
        obstacles,
        params,
        tracker: ProxyTracker::new(obstacles.len()),
    };
    let mut st = z0.clone();
    for step in 0..=params.relax_max_steps {
        let g = flow.gamma_at(&st.z_sys, &st.gamma);
        let d = derivs(&st.z_sys, &g, u, obstacles, params)?;
        if d.grad.norm() < params.relax_tol {
            if params.proxy_mode == ProxyMode::QuasiStatic {
                st.gamma = g;
            }
            return Ok((st, step));
        }
        if step == params.relax_max_steps {
            break;
        }
        st = flow.rk4(None, 0.0, RELAX_DT, &st, u)?;
        if !finite(&st) {
            return Err(Error::NonFinite { context: "pre-relaxation".into() });
        }
    }
    Err(Error::LostEquilibrium {
        s: 0.0,
        reason: format!("pre-relaxation did not reach gradient norm {:e}", params.relax_tol),
    })
}

/// Integrates the equilibrium-manifold flow over `s in [0, 1]` with `params.n_s` RK4 steps,
/// after relaxing `z0` onto the equilibrium for the first attractor.
pub fn integrate_em(
    z0: &PlannerState,
    schedule: &Schedule,
    obstacles: &[Superquadric2],
    params: &PlannerParams,
) -> Result<PlannedTrajectory> {
    let m = obstacles.len();
    if z0.gamma.len() != gamma_len(m) {
        return Err(Error::Dimension(format!(
            "initial proxies have {} entries, expected {}",
            z0.gamma.len(),
            gamma_len(m)
        )));
    }
    let (mut st, relax_steps) = relax(z0, &schedule.u(0.0), obstacles, params)?;
    let mut flow = Flow {
        obstacles,
        params,
        tracker: ProxyTracker::new(m),
    };
    let n = params.n_s;
    let breaks = schedule.breakpoints();
    let mut samples = vec![flow.sample(0.0, &st, &schedule.u(0.0))?];
    for k in 0..n {
        let (s0, s1) = (k as f64 / n as f64, (k + 1) as f64 / n as f64);
        // Split the step at attractor kinks so each piece sees a constant du/ds.
        let mut cuts = vec![s0];
        cuts.extend(breaks.iter().copied().filter(|&b| b > s0 + 1e-12 && b < s1 - 1e-12));
        cuts.push(s1);
        let mut next = st.clone();
        for w in cuts.windows(2) {
            let seg = schedule.segment_of(0.5 * (w[0] + w[1]));
            next = flow.rk4(Some((schedule, seg)), w[0], w[1] - w[0], &next, &schedule.u(w[0]))?;
        }
        if !finite(&next) {
            return Ok(PlannedTrajectory {
                samples,
                status: TrajectoryStatus::Aborted {
                    s: s1,
                    reason: "non-finite planner state".into(),
                },
                relax_steps,
            });
        }
        st = next;
        samples.push(flow.sample(s1, &st, &schedule.u(s1))?);
    }
    Ok(PlannedTrajectory {
        samples,
        status: TrajectoryStatus::Complete,
        relax_steps,
    })
}

/// Reference for the controller at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetPose {
    /// Position and ZYX Euler angles.
    pub q: Vector6<f64>,
    pub theta: Vector3<f64>,
    /// `t` was outside `[0, T_d]` and was clamped.
    pub clamped: bool,
}

/// Linear interpolation of the planned configuration at `s = t / T_d`.
pub fn target_pose(traj: &PlannedTrajectory, t: f64, params: &PlannerParams) -> Result<TargetPose> {
    let samples = &traj.samples;
    if samples.is_empty() {
        return Err(Error::Construction("empty trajectory".into()));
    }
    if !t.is_finite() {
        return Err(Error::Domain("non-finite time".into()));
    }
    let clamped = !(0.0..=params.t_d).contains(&t);
    let s = (t / params.t_d).clamp(0.0, samples.last().unwrap().s);
    let idx = samples.partition_point(|x| x.s <= s).clamp(1, samples.len().max(2) - 1);
    let z = if samples.len() == 1 {
        samples[0].z_sys
    } else {
        let (a, b) = (&samples[idx - 1], &samples[idx]);
        let w = ((s - a.s) / (b.s - a.s)).clamp(0.0, 1.0);
        ZSys::from_fn(|r, _| {
            if r >= IDX_PSI {
                wrap_angle(a.z_sys[r] + wrap_angle(b.z_sys[r] - a.z_sys[r]) * w)
            } else {
                a.z_sys[r] + (b.z_sys[r] - a.z_sys[r]) * w
            }
        })
    };
    Ok(TargetPose {
        q: Vector6::new(z[0], z[1], params.h_t, 0.0, 0.0, z[2]),
        theta: Vector3::new(z[3], 0.0, z[4]),
        clamped,
    })
}

impl PlannedTrajectory {
    pub fn min_gap(&self) -> f64 {
        self.samples.iter().map(|s| s.min_gap).fold(f64::INFINITY, f64::min)
    }

    pub fn max_grad_norm(&self) -> f64 {
        self.samples.iter().map(|s| s.grad_norm).fold(0.0, f64::max)
    }

    pub fn endpoint(&self) -> Option<&ZSys> {
        self.samples.last().map(|s| &s.z_sys)
    }

    /// CSV with columns `s,x,y,psi,theta1,theta3,u_x,u_y,u_theta,min_gap`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,x,y,psi,theta1,theta3,u_x,u_y,u_theta,min_gap\n");
        for smp in &self.samples {
            let vals = [smp.s]
                .iter()
                .chain(smp.z_sys.iter())
                .chain(smp.u.iter())
                .chain([smp.min_gap].iter())
                .map(|v| num(*v))
                .collect::<Vec<_>>();
            out.push_str(&vals.join(","));
            out.push('\n');
        }
        out
    }
}

/// Total potential along the samples, for diagnostics.
pub fn potential_profile(traj: &PlannedTrajectory, obstacles: &[Superquadric2], params: &PlannerParams) -> Result<Vec<f64>> {
    traj.samples
        .iter()
        .map(|s| w_total(&s.z_sys, &s.gamma, &s.u, obstacles, params))
        .collect()
}
