use nalgebra::{Vector3, Vector6};

use super::cbf::{cbf_rows, Obstacle, ProxyTracker};
use super::dob::DobState;
use super::gains::{GainSet, SafetyParams};
use super::inner::{inner_loop, thrust_limit_rows};
use super::outer::{outer_loop, reference_command, Vector9};
use crate::dynamics::{ArmCommand, ModelParams, VehicleState};
use crate::error::{Error, Result};
use crate::math::wrap_angle;
use crate::planner::VehicleGeometry;
use crate::qp::{QpSolver, QpStatus};

/// Everything one control tick produced.
#[derive(Clone, Debug, PartialEq)]
pub struct TickOutput {
    pub thrust: Vector6<f64>,
    pub arm: ArmCommand,
    pub d_hat: Vector6<f64>,
    pub q_d: Vector6<f64>,
    pub x: Vector9,
    pub status: QpStatus,
    pub fallback: bool,
    pub barrier_rows: usize,
    pub skipped_rows: usize,
    pub dropped_pairs: usize,
    pub min_h: f64,
    pub min_gap: f64,
}

/// Cascaded controller: barrier QP outer loop, DOB-compensated PD inner loop.
#[derive(Clone, Debug)]
pub struct Controller {
    pub gains: GainSet,
    pub safety: SafetyParams,
    pub model: ModelParams,
    pub geom: VehicleGeometry,
    pub obstacles: Vec<Obstacle>,
    pub dt: f64,
    dob: DobState,
    tracker: ProxyTracker,
    solver: QpSolver,
    q_d: Vector6<f64>,
    theta_d: Vector3<f64>,
    thetadot_d: Vector3<f64>,
    previous: Vector9,
}

impl Controller {
    /// Controller holding `initial` with the observer settled at hover thrust.
    pub fn new(
        initial: &VehicleState,
        gains: GainSet,
        safety: SafetyParams,
        model: ModelParams,
        geom: VehicleGeometry,
        obstacles: Vec<Obstacle>,
        dt: f64,
    ) -> Result<Self> {
        safety.validate()?;
        geom.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::validation("control.dt", "must be positive"));
        }
        let dob = DobState::at_rest(&initial.q, &Vector6::repeat(model.hover_thrust()), &model)?;
        Ok(Controller {
            gains,
            safety,
            model,
            geom,
            obstacles,
            dt,
            dob,
            tracker: ProxyTracker::new(),
            solver: QpSolver::new(1e-9, 200),
            q_d: initial.q,
            theta_d: initial.theta,
            thetadot_d: initial.thetadot,
            previous: Vector9::zeros(),
        })
    }

    pub fn set_observer(&mut self, dob: DobState) {
        self.dob = dob;
    }

    pub fn observer(&self) -> &DobState {
        &self.dob
    }

    pub fn desired(&self) -> (Vector6<f64>, Vector3<f64>) {
        (self.q_d, self.theta_d)
    }

    /// One control period toward target pose `q_t`, `theta_t`.
    pub fn tick(&mut self, state: &VehicleState, q_t: &Vector6<f64>, theta_t: &Vector3<f64>) -> Result<TickOutput> {
        if !state.is_finite() {
            return Err(Error::NonFinite { context: "vehicle state".into() });
        }
        let d_hat = self.dob.estimate(&state.q, &state.phi_dot(), &self.gains, &self.model)?;
        let thrust_rows = thrust_limit_rows(state, &self.q_d, &d_hat, self.safety.t_lo, self.safety.t_hi, &self.gains, &self.model)?;
        let report = cbf_rows(state, &self.q_d, &self.obstacles, &self.geom, &mut self.tracker, &self.gains, &self.safety);
        let x_ref = reference_command(q_t, theta_t, &self.q_d, &self.theta_d, &self.thetadot_d, &self.safety);
        let sol = outer_loop(&mut self.solver, &x_ref, &thrust_rows, &report.rows, &self.safety, &self.previous)?;
        let qdot_d = sol.x.fixed_rows::<6>(0).into_owned();
        let thetaddot_d = sol.x.fixed_rows::<3>(6).into_owned();
        let thrust = inner_loop(state, &self.q_d, &qdot_d, &d_hat, &self.gains, &self.model)?;

        let q_d_used = self.q_d;
        self.q_d += qdot_d * self.dt;
        self.q_d[5] = wrap_angle(self.q_d[5]);
        self.thetadot_d += thetaddot_d * self.dt;
        self.theta_d += self.thetadot_d * self.dt;
        self.previous = sol.x;
        self.dob.advance(&state.q, &thrust, &self.gains, &self.model, self.dt)?;

        Ok(TickOutput {
            thrust,
            arm: ArmCommand {
                theta: self.theta_d,
                thetadot: self.thetadot_d,
                thetaddot: thetaddot_d,
            },
            d_hat,
            q_d: q_d_used,
            x: sol.x,
            status: sol.status,
            fallback: sol.fallback,
            barrier_rows: report.rows.len(),
            skipped_rows: sol.skipped_rows,
            dropped_pairs: report.dropped.len(),
            min_h: report.min_h,
            min_gap: report.min_gap,
        })
    }
}
