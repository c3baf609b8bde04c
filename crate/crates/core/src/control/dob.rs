use nalgebra::{SVector, Vector6};

use super::gains::GainSet;
use crate::dynamics::{allocation, ModelParams};
use crate::error::{Error, Result};

pub type Vector12 = SVector<f64, 12>;

/// Stacked second-order filter states: `[x; x']` per channel for the pose and for `M^-1 B T`.
#[derive(Clone, Debug, PartialEq)]
pub struct DobState {
    pub q_dob: Vector12,
    pub p_dob: Vector12,
}

impl Default for DobState {
    fn default() -> Self {
        DobState::zeros()
    }
}

fn split(v: &Vector12) -> (Vector6<f64>, Vector6<f64>) {
    (v.fixed_rows::<6>(0).into_owned(), v.fixed_rows::<6>(6).into_owned())
}

/// `A_dob x + B_dob u` for the per-channel filter `eps^2 x'' + a1 eps x' + a0 x = a0 u`.
fn filter_rate(x: &Vector12, u: &Vector6<f64>, g: &GainSet) -> Vector12 {
    let (x1, x2) = split(x);
    let mut out = Vector12::zeros();
    for i in 0..6 {
        let (a0, a1, e) = (g.a0()[i], g.a1()[i], g.eps()[i]);
        out[i] = x2[i];
        out[6 + i] = -a0 / (e * e) * x1[i] - a1 / e * x2[i] + a0 / (e * e) * u[i];
    }
    out
}

impl DobState {
    pub fn zeros() -> Self {
        DobState {
            q_dob: Vector12::zeros(),
            p_dob: Vector12::zeros(),
        }
    }

    /// Filter states at rest with pose `q` and input thrust `thrust`, so the estimate starts from
    /// the steady value instead of the cold-start transient.
    pub fn at_rest(q: &Vector6<f64>, thrust: &Vector6<f64>, model: &ModelParams) -> Result<Self> {
        let u = nominal_accel_input(q, thrust, model)?;
        let mut s = DobState::zeros();
        s.q_dob.fixed_rows_mut::<6>(0).copy_from(q);
        s.p_dob.fixed_rows_mut::<6>(0).copy_from(&u);
        Ok(s)
    }

    pub fn is_finite(&self) -> bool {
        self.q_dob.iter().chain(self.p_dob.iter()).all(|v| v.is_finite())
    }

    /// Disturbance estimate for the current pose `q` and rates `phi_dot`.
    pub fn estimate(&self, q: &Vector6<f64>, phi_dot: &nalgebra::Vector3<f64>, gains: &GainSet, model: &ModelParams) -> Result<Vector6<f64>> {
        let phi = q.fixed_rows::<3>(3).into_owned();
        let m = model.nominal.mass_matrix(&phi)?;
        let qdot_dob = filter_rate(&self.q_dob, q, gains);
        let (p1, _) = split(&self.p_dob);
        let (_, qdd_filtered) = split(&qdot_dob);
        let d = -(m * (p1 - qdd_filtered)) + model.nominal.coriolis(&phi, phi_dot)? + model.nominal.gravity_vec();
        if !d.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { context: "disturbance estimate".into() });
        }
        Ok(d)
    }

    /// One explicit Euler step of both filters under pose `q` and applied thrust `thrust`.
    pub fn advance(&mut self, q: &Vector6<f64>, thrust: &Vector6<f64>, gains: &GainSet, model: &ModelParams, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("dt = {dt} must be positive")));
        }
        let u = nominal_accel_input(q, thrust, model)?;
        self.q_dob += filter_rate(&self.q_dob, q, gains) * dt;
        self.p_dob += filter_rate(&self.p_dob, &u, gains) * dt;
        Ok(())
    }
}

/// `M_hat^-1 B T`, the input of the second filter.
fn nominal_accel_input(q: &Vector6<f64>, thrust: &Vector6<f64>, model: &ModelParams) -> Result<Vector6<f64>> {
    let phi = q.fixed_rows::<3>(3).into_owned();
    let m = model.nominal.mass_matrix(&phi)?;
    let b = allocation(&phi, &model.allocation)?;
    m.cholesky()
        .map(|c| c.solve(&(b * thrust)))
        .ok_or_else(|| Error::Singular("nominal mass matrix".into()))
}

/// Advances the observer one step and returns the new state with its estimate at `q`.
pub fn dob_update(
    dob: &DobState,
    q: &Vector6<f64>,
    phi_dot: &nalgebra::Vector3<f64>,
    thrust: &Vector6<f64>,
    model: &ModelParams,
    gains: &GainSet,
    dt: f64,
) -> Result<(DobState, Vector6<f64>)> {
    let mut next = dob.clone();
    next.advance(q, thrust, gains, model, dt)?;
    let d = next.estimate(q, phi_dot, gains, model)?;
    Ok((next, d))
}

/// Time after which the unit step response of the channel filter stays within `tol` of 1.
pub fn dob_settling_time(a0: f64, a1: f64, eps: f64, tol: f64) -> f64 {
    // Fine RK4 on the channel ODE; the horizon covers many slowest time constants.
    let (w0, z) = (a0 / (eps * eps), a1 / eps);
    let f = |x: f64, v: f64| (v, -w0 * x - z * v + w0);
    let slow = {
        let disc = z * z - 4.0 * w0;
        if disc >= 0.0 {
            (z - disc.sqrt()) / 2.0
        } else {
            z / 2.0
        }
    };
    let horizon = 40.0 / slow;
    let h = horizon / 400_000.0;
    let (mut x, mut v, mut t) = (0.0f64, 0.0f64, 0.0f64);
    let mut last_out = 0.0;
    while t < horizon {
        let (k1x, k1v) = f(x, v);
        let (k2x, k2v) = f(x + 0.5 * h * k1x, v + 0.5 * h * k1v);
        let (k3x, k3v) = f(x + 0.5 * h * k2x, v + 0.5 * h * k2v);
        let (k4x, k4v) = f(x + h * k3x, v + h * k3v);
        let (xn, vn) = (x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x), v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v));
        let tn = t + h;
        if (1.0 - xn).abs() > tol {
            last_out = tn;
        } else if (1.0 - x).abs() > tol {
            // Interpolate the crossing inside the step.
            let (e0, e1) = ((1.0 - x).abs() - tol, (1.0 - xn).abs() - tol);
            last_out = t + h * e0 / (e0 - e1);
        }
        x = xn;
        v = vn;
        t = tn;
    }
    last_out
}
