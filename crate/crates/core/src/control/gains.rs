use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};

/// Inner-loop PD gains and disturbance-observer filter gains.
#[derive(Clone, Debug, PartialEq)]
pub struct GainSet {
    kp: Matrix6<f64>,
    kd: Matrix6<f64>,
    a0: Vector6<f64>,
    a1: Vector6<f64>,
    eps: Vector6<f64>,
}

fn is_spd(m: &Matrix6<f64>) -> bool {
    m.iter().all(|v| v.is_finite()) && (m - m.transpose()).amax() <= 1e-12 * m.amax().max(1.0) && m.cholesky().is_some()
}

impl GainSet {
    /// Checks every DOB channel for `a0, a1 > 0`, `a0 / a1^2 < 1/2` and `0 < eps < 1`.
    pub fn new(kp: Matrix6<f64>, kd: Matrix6<f64>, a0: Vector6<f64>, a1: Vector6<f64>, eps: Vector6<f64>) -> Result<Self> {
        if !is_spd(&kp) {
            return Err(Error::validation("gains.kp", "must be symmetric positive definite"));
        }
        if !is_spd(&kd) {
            return Err(Error::validation("gains.kd", "must be symmetric positive definite"));
        }
        for i in 0..6 {
            if !(a0[i] > 0.0 && a0[i].is_finite()) {
                return Err(Error::validation(format!("gains.a0[{i}]"), "must be positive"));
            }
            if !(a1[i] > 0.0 && a1[i].is_finite()) {
                return Err(Error::validation(format!("gains.a1[{i}]"), "must be positive"));
            }
            if a0[i] / (a1[i] * a1[i]) >= 0.5 {
                return Err(Error::validation(
                    format!("gains.a0[{i}]"),
                    format!("a0 / a1^2 = {} must be below 1/2", a0[i] / (a1[i] * a1[i])),
                ));
            }
            if !(eps[i] > 0.0 && eps[i] < 1.0) {
                return Err(Error::validation(format!("gains.eps_dob[{i}]"), "must lie in (0, 1)"));
            }
        }
        Ok(GainSet { kp, kd, a0, a1, eps })
    }

    pub fn kp(&self) -> &Matrix6<f64> {
        &self.kp
    }
    pub fn kd(&self) -> &Matrix6<f64> {
        &self.kd
    }
    pub fn a0(&self) -> &Vector6<f64> {
        &self.a0
    }
    pub fn a1(&self) -> &Vector6<f64> {
        &self.a1
    }
    pub fn eps(&self) -> &Vector6<f64> {
        &self.eps
    }
}

impl Default for GainSet {
    fn default() -> Self {
        GainSet::new(
            Matrix6::from_diagonal(&Vector6::new(6.0, 6.0, 8.0, 80.0, 80.0, 35.0)),
            Matrix6::from_diagonal(&Vector6::new(5.0, 5.0, 6.0, 35.0, 35.0, 20.0)),
            Vector6::repeat(1.0),
            Vector6::repeat(2.0),
            Vector6::repeat(0.95),
        )
        .expect("default gains are valid")
    }
}

/// Thrust band, barrier gains, QP weights and target-following gains.
#[derive(Clone, Debug, PartialEq)]
pub struct SafetyParams {
    pub t_lo: f64,
    pub t_hi: f64,
    pub alpha_co: f64,
    pub sigma_co: f64,
    pub q_qdot: Matrix6<f64>,
    pub q_thetaddot: Matrix3<f64>,
    pub gamma_q: Matrix6<f64>,
    pub gamma_theta: Matrix3<f64>,
}

impl Default for SafetyParams {
    fn default() -> Self {
        SafetyParams {
            t_lo: 1.0,
            t_hi: 15.0,
            alpha_co: 5.0,
            sigma_co: 1.0,
            q_qdot: Matrix6::from_diagonal(&Vector6::new(1.0, 1.0, 1.0, 3.0, 3.0, 3.0)),
            q_thetaddot: Matrix3::from_diagonal(&Vector3::repeat(4.0)),
            gamma_q: Matrix6::identity() * 4.0,
            gamma_theta: Matrix3::identity() * 5.0,
        }
    }
}

impl SafetyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_lo.is_finite() && self.t_hi.is_finite() && self.t_lo < self.t_hi) {
            return Err(Error::validation("safety.t_lo", "thrust band needs t_lo < t_hi"));
        }
        if !(self.alpha_co > 0.0 && self.alpha_co.is_finite()) {
            return Err(Error::validation("safety.alpha_co", "must be positive"));
        }
        if !(self.sigma_co > 0.0 && self.sigma_co.is_finite()) {
            return Err(Error::validation("safety.sigma_co", "must be positive"));
        }
        if !is_spd(&self.q_qdot) {
            return Err(Error::validation("safety.q_qdot", "must be symmetric positive definite"));
        }
        if self.q_thetaddot.cholesky().is_none() {
            return Err(Error::validation("safety.q_thetaddot", "must be positive definite"));
        }
        if !is_spd(&self.gamma_q) {
            return Err(Error::validation("safety.gamma_q", "must be symmetric positive definite"));
        }
        if self.gamma_theta.cholesky().is_none() {
            return Err(Error::validation("safety.gamma_theta", "must be positive definite"));
        }
        Ok(())
    }
}
