use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::math::rot_zyx;

/// Smallest allowed distance of the pitch angle from +-pi/2.
pub const PITCH_MARGIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidBody {
    pub mass: f64,
    pub inertia: Matrix3<f64>,
    pub gravity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Allocation {
    /// Distance from the center to each propeller [m].
    pub arm_length: f64,
    /// Fixed motor tilt [rad].
    pub tilt: f64,
    /// Thrust-to-torque coefficient [m].
    pub torque_coeff: f64,
}

/// True plant parameters plus the nominal copy the controller believes in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub truth: RigidBody,
    pub nominal: RigidBody,
    pub allocation: Allocation,
}

impl Default for RigidBody {
    fn default() -> Self {
        RigidBody {
            mass: 3.5,
            inertia: Matrix3::from_diagonal(&Vector3::new(0.075, 0.075, 0.13)),
            gravity: 9.81,
        }
    }
}

impl Default for Allocation {
    fn default() -> Self {
        Allocation {
            arm_length: 0.278,
            tilt: PI / 12.0,
            torque_coeff: 0.016,
        }
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            truth: RigidBody::default(),
            nominal: RigidBody::default(),
            allocation: Allocation::default(),
        }
    }
}

impl RigidBody {
    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::validation(format!("{name}.mass"), "must be positive"));
        }
        if !(self.gravity > 0.0 && self.gravity.is_finite()) {
            return Err(Error::validation(format!("{name}.gravity"), "must be positive"));
        }
        let j = &self.inertia;
        if (j - j.transpose()).amax() > 1e-12 || j.cholesky().is_none() {
            return Err(Error::validation(format!("{name}.inertia"), "must be symmetric positive definite"));
        }
        Ok(())
    }

    pub fn mass_matrix(&self, phi: &Vector3<f64>) -> Result<Matrix6<f64>> {
        let q = euler_rate_map(phi)?;
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&(Matrix3::identity() * self.mass));
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&(q.transpose() * self.inertia * q));
        Ok(m)
    }

    pub fn coriolis(&self, phi: &Vector3<f64>, phi_dot: &Vector3<f64>) -> Result<Vector6<f64>> {
        let q = euler_rate_map(phi)?;
        let qd = euler_rate_map_dot(phi, phi_dot);
        let w = q * phi_dot;
        let rot = q.transpose() * (self.inertia * qd * phi_dot + w.cross(&(self.inertia * w)));
        Ok(Vector6::new(0.0, 0.0, 0.0, rot.x, rot.y, rot.z))
    }

    pub fn gravity_vec(&self) -> Vector6<f64> {
        Vector6::new(0.0, 0.0, self.mass * self.gravity, 0.0, 0.0, 0.0)
    }
}

impl Allocation {
    pub fn validate(&self) -> Result<()> {
        if !(self.tilt > 0.0 && self.tilt < FRAC_PI_2) {
            return Err(Error::validation("model.tilt", "must lie in (0, pi/2)"));
        }
        if !(self.arm_length > 0.0 && self.torque_coeff.is_finite()) {
            return Err(Error::validation("model.arm_length", "must be positive"));
        }
        Ok(())
    }

    /// Constant map from the six rotor thrusts to the body-frame wrench.
    pub fn body_matrix(&self) -> Matrix6<f64> {
        let (s, c) = self.tilt.sin_cos();
        let p1 = self.arm_length * c + self.torque_coeff * s;
        let p2 = self.arm_length * s - self.torque_coeff * c;
        let r3 = 3f64.sqrt() / 2.0;
        #[rustfmt::skip]
        let m = Matrix6::new(
            0.5 * s, -s, 0.5 * s, 0.5 * s, -s, 0.5 * s,
            -r3 * s, 0.0, r3 * s, -r3 * s, 0.0, r3 * s,
            c, c, c, c, c, c,
            -0.5 * p1, -p1, -0.5 * p1, 0.5 * p1, p1, 0.5 * p1,
            r3 * p1, 0.0, -r3 * p1, -r3 * p1, 0.0, r3 * p1,
            p2, -p2, p2, -p2, p2, -p2,
        );
        m
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.truth.validate("model.truth")?;
        self.nominal.validate("model.nominal")?;
        self.allocation.validate()
    }

    /// Per-rotor thrust that balances gravity at level attitude.
    pub fn hover_thrust(&self) -> f64 {
        self.truth.mass * self.truth.gravity / (6.0 * self.allocation.tilt.cos())
    }
}

fn check_pitch(phi: &Vector3<f64>) -> Result<()> {
    if !phi.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            context: "attitude".into(),
        });
    }
    if phi.y.cos() < PITCH_MARGIN.sin() {
        return Err(Error::Singular(format!("pitch {:.6} at the Euler-rate singularity", phi.y)));
    }
    Ok(())
}

/// Maps ZYX Euler rates to body angular velocity, `omega = Q phi_dot`.
pub fn euler_rate_map(phi: &Vector3<f64>) -> Result<Matrix3<f64>> {
    check_pitch(phi)?;
    let (sr, cr) = phi.x.sin_cos();
    let (sp, cp) = phi.y.sin_cos();
    Ok(Matrix3::new(1.0, 0.0, -sp, 0.0, cr, sr * cp, 0.0, -sr, cr * cp))
}

/// Time derivative of [`euler_rate_map`].
pub fn euler_rate_map_dot(phi: &Vector3<f64>, phi_dot: &Vector3<f64>) -> Matrix3<f64> {
    let (sr, cr) = phi.x.sin_cos();
    let (sp, cp) = phi.y.sin_cos();
    let (dr, dp) = (phi_dot.x, phi_dot.y);
    Matrix3::new(
        0.0,
        0.0,
        -cp * dp,
        0.0,
        -sr * dr,
        cr * cp * dr - sr * sp * dp,
        0.0,
        -cr * dr,
        -sr * cp * dr - cr * sp * dp,
    )
}

/// Generalized-force allocation `blkdiag(R, Q^T) * body_matrix`.
pub fn allocation(phi: &Vector3<f64>, params: &Allocation) -> Result<Matrix6<f64>> {
    let q = euler_rate_map(phi)?;
    let r = rot_zyx(phi);
    let mut blk = Matrix6::zeros();
    blk.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    blk.fixed_view_mut::<3, 3>(3, 3).copy_from(&q.transpose());
    Ok(blk * params.body_matrix())
}

pub fn allocation_inverse(phi: &Vector3<f64>, params: &Allocation) -> Result<Matrix6<f64>> {
    allocation(phi, params)?
        .try_inverse()
        .ok_or_else(|| Error::Singular("allocation matrix is not invertible".into()))
}

/// Vee of a skew-symmetric matrix.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn phi_strategy() -> impl Strategy<Value = Vector3<f64>> {
        (-1.2f64..1.2, -1.3f64..1.3, -3.0f64..3.0).prop_map(|(a, b, c)| Vector3::new(a, b, c))
    }

    #[test]
    fn identity_at_level() {
        assert_eq!(euler_rate_map(&Vector3::zeros()).unwrap(), Matrix3::identity());
        let w = euler_rate_map(&Vector3::zeros()).unwrap() * Vector3::new(0.0, 0.0, 0.7);
        assert_eq!(w, Vector3::new(0.0, 0.0, 0.7));
        let b = RigidBody::default();
        let m = b.mass_matrix(&Vector3::zeros()).unwrap();
        assert_relative_eq!(m.fixed_view::<3, 3>(3, 3).into_owned(), b.inertia);
        assert_eq!(b.coriolis(&Vector3::new(0.3, 0.2, 0.1), &Vector3::zeros()).unwrap(), Vector6::zeros());
    }

    #[test]
    fn singular_pitch_rejected() {
        assert!(euler_rate_map(&Vector3::new(0.0, FRAC_PI_2, 0.0)).is_err());
        assert!(RigidBody::default().mass_matrix(&Vector3::new(0.0, -FRAC_PI_2 + 1e-4, 0.0)).is_err());
    }

    #[test]
    fn equal_thrusts_give_pure_lift() {
        let a = Allocation::default();
        let t = 4.0;
        let w = allocation(&Vector3::zeros(), &a).unwrap() * Vector6::repeat(t);
        let expected = Vector6::new(0.0, 0.0, 6.0 * t * a.tilt.cos(), 0.0, 0.0, 0.0);
        assert_relative_eq!(w, expected, epsilon = 1e-12);
    }

    #[test]
    fn hover_thrust_value() {
        let m = ModelParams::default();
        let h = m.hover_thrust();
        assert!((h - 5.9243).abs() < 1e-3, "{h}");
        assert!(h > 1.0 && h < 15.0);
        let b = allocation(&Vector3::zeros(), &m.allocation).unwrap();
        assert_eq!(b.rank(1e-9), 6);
    }

    #[test]
    fn allocation_well_conditioned_in_envelope() {
        let a = Allocation::default();
        let lim = 30f64.to_radians();
        for i in 0..=6 {
            for j in 0..=6 {
                for yaw in [-3.0, 0.0, 1.0] {
                    let phi = Vector3::new(-lim + lim * i as f64 / 3.0, -lim + lim * j as f64 / 3.0, yaw);
                    let sv = allocation(&phi, &a).unwrap().singular_values();
                    assert!(sv.max() / sv.min() < 1e4);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn mass_matrix_spd(phi in phi_strategy()) {
            let m = RigidBody::default().mass_matrix(&phi).unwrap();
            prop_assert!((m - m.transpose()).amax() < 1e-12);
            prop_assert!(m.cholesky().is_some());
        }

        #[test]
        fn rate_map_matches_rotation_fd(phi in phi_strategy(), rate in prop::array::uniform3(-2.0f64..2.0)) {
            let pd = Vector3::from(rate);
            let h = 1e-6;
            let rdot = (rot_zyx(&(phi + pd * h)) - rot_zyx(&(phi - pd * h))) / (2.0 * h);
            let w = vee(&(rot_zyx(&phi).transpose() * rdot));
            let wq = euler_rate_map(&phi).unwrap() * pd;
            prop_assert!((w - wq).amax() < 1e-6, "{w} vs {wq}");
        }

        #[test]
        fn rate_map_dot_matches_fd(phi in phi_strategy(), rate in prop::array::uniform3(-2.0f64..2.0)) {
            let pd = Vector3::from(rate);
            let h = 1e-6;
            let fd = (euler_rate_map(&(phi + pd * h)).unwrap() - euler_rate_map(&(phi - pd * h)).unwrap()) / (2.0 * h);
            prop_assert!((fd - euler_rate_map_dot(&phi, &pd)).amax() < 1e-6);
        }
    }

    /// Kinetic energy of the rigid body in generalized coordinates.
    fn kinetic(b: &RigidBody, q: &Vector6<f64>, qd: &Vector6<f64>) -> f64 {
        let phi = Vector3::new(q[3], q[4], q[5]);
        let w = euler_rate_map(&phi).unwrap() * Vector3::new(qd[3], qd[4], qd[5]);
        0.5 * b.mass * qd.fixed_rows::<3>(0).norm_squared() + 0.5 * w.dot(&(b.inertia * w))
    }

    #[test]
    fn lagrangian_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let b = RigidBody {
            inertia: Matrix3::new(0.08, 0.004, -0.002, 0.004, 0.07, 0.001, -0.002, 0.001, 0.13),
            ..RigidBody::default()
        };
        for _ in 0..100 {
            let q0 = Vector6::from_fn(|i, _| if i == 4 { rng.random_range(-1.0..1.0) } else { rng.random_range(-1.5..1.5) });
            let v = Vector6::from_fn(|_, _| rng.random_range(-1.5..1.5));
            let a = Vector6::from_fn(|_, _| rng.random_range(-1.5..1.5));
            let path = |t: f64| (q0 + v * t + a * (0.5 * t * t), v + a * t);
            let h = 1e-4;
            let dl_dqd = |t: f64| {
                let (q, qd) = path(t);
                Vector6::from_fn(|i, _| {
                    let mut p = qd;
                    let mut m = qd;
                    p[i] += h;
                    m[i] -= h;
                    (kinetic(&b, &q, &p) - kinetic(&b, &q, &m)) / (2.0 * h)
                })
            };
            let ddt = (dl_dqd(h) - dl_dqd(-h)) / (2.0 * h);
            let (q, qd) = path(0.0);
            let dl_dq = Vector6::from_fn(|i, _| {
                let mut p = q;
                let mut m = q;
                p[i] += h;
                m[i] -= h;
                (kinetic(&b, &p, &qd) - kinetic(&b, &m, &qd)) / (2.0 * h)
            });
            let phi = Vector3::new(q[3], q[4], q[5]);
            let pd = Vector3::new(qd[3], qd[4], qd[5]);
            let lhs = b.mass_matrix(&phi).unwrap() * a + b.coriolis(&phi, &pd).unwrap();
            let err = (ddt - dl_dq - lhs).amax();
            assert!(err < 1e-6 * lhs.amax().max(1.0), "err {err}");
        }
    }
}
