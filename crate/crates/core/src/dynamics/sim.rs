use nalgebra::{Vector3, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::model::{allocation, ModelParams};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct VehicleState {
    /// Position and ZYX Euler angles `[roll, pitch, yaw]`.
    pub q: Vector6<f64>,
    pub qdot: Vector6<f64>,
    pub theta: Vector3<f64>,
    pub thetadot: Vector3<f64>,
}

impl VehicleState {
    pub fn phi(&self) -> Vector3<f64> {
        Vector3::new(self.q[3], self.q[4], self.q[5])
    }

    pub fn phi_dot(&self) -> Vector3<f64> {
        Vector3::new(self.qdot[3], self.qdot[4], self.qdot[5])
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qdot.iter()).chain(self.theta.iter()).chain(self.thetadot.iter()).all(|v| v.is_finite())
    }
}

/// Desired arm motion for one step.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ArmCommand {
    pub theta: Vector3<f64>,
    pub thetadot: Vector3<f64>,
    pub thetaddot: Vector3<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    SemiImplicitEuler,
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Physical per-rotor thrust ceiling; the plant clips thrust into `[0, thrust_max]`.
    pub thrust_max: f64,
    /// Critically damped tracking gain of the arm joints [1/s].
    pub arm_gain: f64,
    pub integrator: Integrator,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            thrust_max: 18.0,
            arm_gain: 20.0,
            integrator: Integrator::SemiImplicitEuler,
        }
    }
}

/// Generalized acceleration of the true plant.
pub fn accelerations(state: &VehicleState, thrust: &Vector6<f64>, d_true: &Vector6<f64>, model: &ModelParams) -> Result<Vector6<f64>> {
    let phi = state.phi();
    let m = model.truth.mass_matrix(&phi)?;
    let b = allocation(&phi, &model.allocation)?;
    let rhs = b * thrust + d_true - model.truth.coriolis(&phi, &state.phi_dot())? - model.truth.gravity_vec();
    m.cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| Error::Singular("mass matrix".into()))
}

fn arm_accel(theta: &Vector3<f64>, thetadot: &Vector3<f64>, cmd: &ArmCommand, gain: f64) -> Vector3<f64> {
    cmd.thetaddot + (cmd.thetadot - thetadot) * (2.0 * gain) + (cmd.theta - theta) * (gain * gain)
}

/// Advances the plant by `dt` under thrust `thrust` and external wrench `d_true`.
pub fn step(
    state: &VehicleState,
    thrust: &Vector6<f64>,
    arm: &ArmCommand,
    d_true: &Vector6<f64>,
    dt: f64,
    model: &ModelParams,
    opts: &SimOptions,
) -> Result<VehicleState> {
    if !(dt > 0.0 && dt <= 0.01) {
        return Err(Error::Domain(format!("dt = {dt} outside (0, 0.01]")));
    }
    let t = thrust.map(|v| v.clamp(0.0, opts.thrust_max));
    let next = match opts.integrator {
        Integrator::SemiImplicitEuler => {
            let qdd = accelerations(state, &t, d_true, model)?;
            let thdd = arm_accel(&state.theta, &state.thetadot, arm, opts.arm_gain);
            let qdot = state.qdot + qdd * dt;
            let thetadot = state.thetadot + thdd * dt;
            VehicleState {
                q: state.q + qdot * dt,
                qdot,
                theta: state.theta + thetadot * dt,
                thetadot,
            }
        }
        Integrator::Rk4 => {
            let deriv = |s: &VehicleState| -> Result<VehicleState> {
                Ok(VehicleState {
                    q: s.qdot,
                    qdot: accelerations(s, &t, d_true, model)?,
                    theta: s.thetadot,
                    thetadot: arm_accel(&s.theta, &s.thetadot, arm, opts.arm_gain),
                })
            };
            let add = |s: &VehicleState, k: &VehicleState, h: f64| VehicleState {
                q: s.q + k.q * h,
                qdot: s.qdot + k.qdot * h,
                theta: s.theta + k.theta * h,
                thetadot: s.thetadot + k.thetadot * h,
            };
            let k1 = deriv(state)?;
            let k2 = deriv(&add(state, &k1, dt / 2.0))?;
            let k3 = deriv(&add(state, &k2, dt / 2.0))?;
            let k4 = deriv(&add(state, &k3, dt))?;
            VehicleState {
                q: state.q + (k1.q + k2.q * 2.0 + k3.q * 2.0 + k4.q) * (dt / 6.0),
                qdot: state.qdot + (k1.qdot + k2.qdot * 2.0 + k3.qdot * 2.0 + k4.qdot) * (dt / 6.0),
                theta: state.theta + (k1.theta + k2.theta * 2.0 + k3.theta * 2.0 + k4.theta) * (dt / 6.0),
                thetadot: state.thetadot
                    + (k1.thetadot + k2.thetadot * 2.0 + k3.thetadot * 2.0 + k4.thetadot) * (dt / 6.0),
            }
        }
    };
    if !next.is_finite() {
        return Err(Error::NonFinite {
            context: "vehicle state".into(),
        });
    }
    if next.phi().y.cos() < super::model::PITCH_MARGIN.sin() {
        return Err(Error::Singular("pitch reached the Euler-rate singularity".into()));
    }
    Ok(next)
}

/// Wind stand-in: smoothed square wave on the x-force channel plus optional white noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindProfile {
    /// Peak force [N].
    pub amplitude: f64,
    /// Square-wave period [s].
    pub period: f64,
    /// Edge sharpness; larger is closer to a true square wave.
    pub sharpness: f64,
    /// Constant offset added to the wave [N].
    pub bias: f64,
    /// Standard deviation of per-tick Gaussian noise [N].
    pub noise_std: f64,
}

impl Default for WindProfile {
    fn default() -> Self {
        WindProfile {
            amplitude: 1.0,
            period: 8.0,
            sharpness: 3.0,
            bias: 0.0,
            noise_std: 0.0,
        }
    }
}

impl WindProfile {
    pub fn calm() -> Self {
        WindProfile {
            amplitude: 0.0,
            ..WindProfile::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0 && self.sharpness > 0.0 && self.noise_std >= 0.0) {
            return Err(Error::validation("disturbance", "period and sharpness must be positive, noise_std >= 0"));
        }
        Ok(())
    }

    /// Deterministic part of the x-channel force at time `t`.
    pub fn wave(&self, t: f64) -> f64 {
        let s = (2.0 * PI * t / self.period).sin();
        self.bias + self.amplitude * (self.sharpness * s).tanh() / self.sharpness.tanh()
    }
}

/// Seeded disturbance source.
#[derive(Clone, Debug)]
pub struct Disturbance {
    pub profile: WindProfile,
    rng: ChaCha8Rng,
}

impl Disturbance {
    pub fn new(profile: WindProfile, seed: u64) -> Self {
        Disturbance {
            profile,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn sample(&mut self, t: f64) -> Vector6<f64> {
        let mut f = self.profile.wave(t);
        if self.profile.noise_std > 0.0 {
            let n = Normal::new(0.0, self.profile.noise_std).expect("validated noise");
            f += n.sample(&mut self.rng);
        }
        Vector6::new(f, 0.0, 0.0, 0.0, 0.0, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::model::allocation_inverse;
    use approx::assert_relative_eq;

    fn level() -> VehicleState {
        VehicleState {
            q: Vector6::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0),
            ..VehicleState::default()
        }
    }

    #[test]
    fn free_fall() {
        let m = ModelParams::default();
        let a = accelerations(&level(), &Vector6::zeros(), &Vector6::zeros(), &m).unwrap();
        assert!((a[2] + m.truth.gravity).abs() < 1e-9);
        assert!(a.rows(3, 3).amax() < 1e-12);
    }

    #[test]
    fn gravity_and_coriolis_cancelled() {
        let m = ModelParams::default();
        let s = VehicleState {
            q: Vector6::new(0.0, 0.0, 1.0, 0.02, -0.03, 0.3),
            qdot: Vector6::new(0.1, 0.0, 0.0, 0.3, -0.2, 0.5),
            ..VehicleState::default()
        };
        let phi = s.phi();
        let t = allocation_inverse(&phi, &m.allocation).unwrap()
            * (m.truth.coriolis(&phi, &s.phi_dot()).unwrap() + m.truth.gravity_vec());
        assert!(t.iter().all(|&v| v > 0.0 && v < 18.0));
        let n = step(&s, &t, &ArmCommand::default(), &Vector6::zeros(), 0.005, &m, &SimOptions::default()).unwrap();
        assert!((n.qdot - s.qdot).amax() < 1e-12);
    }

    #[test]
    fn constant_push() {
        let m = ModelParams::default();
        let hover = allocation_inverse(&Vector3::zeros(), &m.allocation).unwrap() * m.truth.gravity_vec();
        let d = Vector6::new(2.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let a = accelerations(&level(), &hover, &d, &m).unwrap();
        assert_relative_eq!(a[0], 2.0 / m.truth.mass, epsilon = 1e-12);
    }

    #[test]
    fn momentum_conserved_without_gravity() {
        let mut m = ModelParams::default();
        m.truth.gravity = 1e-300;
        let mut s = VehicleState {
            qdot: Vector6::new(0.3, -0.2, 0.1, 0.4, 0.2, -0.3),
            ..level()
        };
        let p0 = s.qdot.fixed_rows::<3>(0).into_owned() * m.truth.mass;
        for _ in 0..200 {
            s = step(&s, &Vector6::zeros(), &ArmCommand::default(), &Vector6::zeros(), 0.005, &m, &SimOptions::default()).unwrap();
            let p = s.qdot.fixed_rows::<3>(0).into_owned() * m.truth.mass;
            assert!((p - p0).amax() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_dt() {
        let m = ModelParams::default();
        let o = SimOptions::default();
        assert!(step(&level(), &Vector6::zeros(), &ArmCommand::default(), &Vector6::zeros(), 0.02, &m, &o).is_err());
        assert!(step(&level(), &Vector6::zeros(), &ArmCommand::default(), &Vector6::zeros(), 0.0, &m, &o).is_err());
    }

    fn rollout(dt: f64, integrator: Integrator) -> VehicleState {
        let m = ModelParams::default();
        let opts = SimOptions { integrator, ..SimOptions::default() };
        let mut s = VehicleState {
            qdot: Vector6::new(0.2, 0.1, 0.0, 0.2, -0.1, 0.3),
            ..level()
        };
        let t = Vector6::new(6.0, 5.5, 6.2, 5.8, 6.1, 5.9);
        let arm = ArmCommand { theta: Vector3::new(0.3, 0.0, -0.4), ..ArmCommand::default() };
        let n = (1.0 / dt).round() as usize;
        for _ in 0..n {
            s = step(&s, &t, &arm, &Vector6::new(0.5, 0.0, 0.0, 0.0, 0.0, 0.0), dt, &m, &opts).unwrap();
        }
        s
    }

    fn diff(a: &VehicleState, b: &VehicleState) -> f64 {
        (a.q - b.q).amax().max((a.qdot - b.qdot).amax()).max((a.theta - b.theta).amax()).max((a.thetadot - b.thetadot).amax())
    }

    #[test]
    fn halving_dt_converges() {
        let d_rk = diff(&rollout(0.005, Integrator::Rk4), &rollout(0.0025, Integrator::Rk4));
        assert!(d_rk < 1e-5, "rk4 {d_rk}");
        // First-order scheme: the change halves along with the step.
        let e1 = diff(&rollout(0.005, Integrator::SemiImplicitEuler), &rollout(0.0025, Integrator::SemiImplicitEuler));
        let e2 = diff(&rollout(0.0025, Integrator::SemiImplicitEuler), &rollout(0.00125, Integrator::SemiImplicitEuler));
        assert!((e1 / e2 - 2.0).abs() < 0.3, "ratio {}", e1 / e2);
    }

    #[test]
    fn wind_is_deterministic_and_bounded() {
        let p = WindProfile { noise_std: 0.1, ..WindProfile::default() };
        let mut a = Disturbance::new(p, 3);
        let mut b = Disturbance::new(p, 3);
        for k in 0..100 {
            let t = k as f64 * 0.1;
            assert_eq!(a.sample(t), b.sample(t));
            assert!(WindProfile::default().wave(t).abs() <= 1.0 + 1e-12);
        }
    }
}
