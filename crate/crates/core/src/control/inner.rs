use nalgebra::{Matrix6, Vector6};

use super::cbf::position_error;
use super::gains::GainSet;
use crate::dynamics::{allocation_inverse, ModelParams, VehicleState};
use crate::error::Result;

/// Generalized force demanded by the inner loop before allocation, split into the part that
/// multiplies `q_dot_d` and the rest: `tau = M_hat K_d q_dot_d + c`.
fn demand(state: &VehicleState, q_d: &Vector6<f64>, d_hat: &Vector6<f64>, gains: &GainSet, model: &ModelParams) -> Result<(Matrix6<f64>, Vector6<f64>)> {
    let phi = state.phi();
    let m = model.nominal.mass_matrix(&phi)?;
    let e = position_error(q_d, &state.q);
    let c = m * (-(gains.kd() * state.qdot) + gains.kp() * e) + model.nominal.coriolis(&phi, &state.phi_dot())?
        + model.nominal.gravity_vec()
        - d_hat;
    Ok((m * gains.kd(), c))
}

/// Rotor thrusts of the disturbance-compensated PD law; not clamped.
pub fn inner_loop(
    state: &VehicleState,
    q_d: &Vector6<f64>,
    qdot_d: &Vector6<f64>,
    d_hat: &Vector6<f64>,
    gains: &GainSet,
    model: &ModelParams,
) -> Result<Vector6<f64>> {
    let binv = allocation_inverse(&state.phi(), &model.allocation)?;
    let (mk, c) = demand(state, q_d, d_hat, gains, model)?;
    Ok(binv * (mk * qdot_d + c))
}

/// Linear inequalities on `q_dot_d` equivalent to `t_lo <= T <= t_hi` under [`inner_loop`].
#[derive(Clone, Debug, PartialEq)]
pub struct ThrustRows {
    pub a_lo: Matrix6<f64>,
    pub b_lo: Vector6<f64>,
    pub a_hi: Matrix6<f64>,
    pub b_hi: Vector6<f64>,
}

pub fn thrust_limit_rows(
    state: &VehicleState,
    q_d: &Vector6<f64>,
    d_hat: &Vector6<f64>,
    t_lo: f64,
    t_hi: f64,
    gains: &GainSet,
    model: &ModelParams,
) -> Result<ThrustRows> {
    let binv = allocation_inverse(&state.phi(), &model.allocation)?;
    let (mk, c) = demand(state, q_d, d_hat, gains, model)?;
    let a_lo = -(binv * mk);
    let bc = binv * c;
    Ok(ThrustRows {
        a_lo,
        b_lo: Vector6::repeat(-t_lo) + bc,
        a_hi: -a_lo,
        b_hi: Vector6::repeat(t_hi) - bc,
    })
}
