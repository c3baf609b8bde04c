//! Small numeric helpers: signed powers, angle wrapping, rotations.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use std::f64::consts::PI;

/// `sign(x) * |x|^e`, with the convention that the result at `x = 0` is 0.
#[inline]
pub fn spow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(e)
    }
}

/// Wraps an angle into `(-pi, pi]`.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

#[inline]
pub fn rot2(angle: f64) -> Matrix2<f64> {
    let (s, c) = angle.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Counter-clockwise perpendicular.
#[inline]
pub fn perp(v: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

#[inline]
pub fn unit2(angle: f64) -> Vector2<f64> {
    let (s, c) = angle.sin_cos();
    Vector2::new(c, s)
}

#[inline]
pub fn cross2(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Body-to-world rotation for `phi = [roll, pitch, yaw]`, composed as `Rz * Ry * Rx`.
pub fn rot_zyx(phi: &Vector3<f64>) -> Matrix3<f64> {
    rot_z(phi.z) * rot_y(phi.y) * rot_x(phi.x)
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Checks orthonormality and a positive determinant.
pub fn is_rotation(r: &Matrix3<f64>, tol: f64) -> bool {
    let e = r.transpose() * r - Matrix3::identity();
    e.iter().all(|x| x.abs() <= tol) && (r.determinant() - 1.0).abs() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn spow_zero_and_sign() {
        assert_eq!(spow(0.0, 0.3), 0.0);
        assert_eq!(spow(-0.0, 2.0), 0.0);
        assert_relative_eq!(spow(-8.0, 1.0 / 3.0), -2.0, epsilon = 1e-12);
        assert_relative_eq!(spow(4.0, 0.5), 2.0);
    }

    #[test]
    fn zyx_matches_small_yaw() {
        let r = rot_zyx(&Vector3::new(0.0, 0.0, 0.3));
        assert_relative_eq!(r, rot_z(0.3));
    }

    proptest! {
        #[test]
        fn wrap_stays_in_range(a in -100.0f64..100.0) {
            let w = wrap_angle(a);
            prop_assert!(w > -PI - 1e-12 && w <= PI + 1e-12);
            prop_assert!(((a - w) / (2.0 * PI) - ((a - w) / (2.0 * PI)).round()).abs() < 1e-9);
        }

        #[test]
        fn zyx_is_rotation(r in -3.0f64..3.0, p in -1.5f64..1.5, y in -3.0f64..3.0) {
            prop_assert!(is_rotation(&rot_zyx(&Vector3::new(r, p, y)), 1e-12));
        }
    }
}
