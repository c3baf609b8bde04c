//! 3D kinematics of points rigidly attached to the vehicle body or the arm links.

use nalgebra::{Matrix3, SMatrix, Vector2, Vector3};

use crate::dynamics::{euler_rate_map, euler_rate_map_dot, VehicleState};
use crate::error::Result;
use crate::math::{rot_y, rot_z, rot_zyx, skew};
use crate::planner::{Attachment, VehicleGeometry};

/// Body-frame position of a point and its derivatives in the joint angles.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmPoint {
    pub y: Vector3<f64>,
    /// Columns `dy/dtheta_k`.
    pub jac: Matrix3<f64>,
    /// `d2y / dtheta_a dtheta_b`, indexed `[a][b]`.
    pub hess: [[Vector3<f64>; 3]; 3],
}

/// Body-frame position of a point given in the 2D frame of `attachment`.
///
/// Blade points sit at the rotor height. Arm points live in the link frames: link 1 is rotated
/// by `Rz(theta1) Ry(theta2)` about the arm base and link 2 by a further `Rz(theta3)` about the
/// elbow. With `theta2 = 0` this reduces to the planar chain used by the planner.
pub fn body_point(geom: &VehicleGeometry, attachment: Attachment, local: &Vector2<f64>, theta: &Vector3<f64>) -> ArmPoint {
    let zero = [[Vector3::zeros(); 3]; 3];
    match attachment {
        Attachment::Body => ArmPoint {
            y: Vector3::new(local.x, local.y, geom.blade_height),
            jac: Matrix3::zeros(),
            hess: zero,
        },
        Attachment::Link1 | Attachment::Link2 => {
            let base = Vector3::new(geom.arm_base[0], geom.arm_base[1], geom.arm_height);
            let l = Vector3::new(local.x, local.y, 0.0);
            let sz = skew(&Vector3::z());
            let sy = skew(&Vector3::y());
            let a = rot_z(theta.x);
            let b = rot_y(theta.y);
            let link2 = attachment == Attachment::Link2;
            let c = if link2 { rot_z(theta.z) } else { Matrix3::identity() };
            let v1 = if link2 { Vector3::new(geom.l1, 0.0, 0.0) } else { Vector3::zeros() };
            let w = v1 + c * l;
            let y = base + a * b * w;
            let d1 = a * sz * b * w;
            let d2 = a * b * sy * w;
            let d3 = if link2 { a * b * c * sz * l } else { Vector3::zeros() };
            let mut hess = zero;
            hess[0][0] = a * sz * sz * b * w;
            hess[0][1] = a * sz * b * sy * w;
            hess[1][1] = a * b * sy * sy * w;
            if link2 {
                hess[0][2] = a * sz * b * c * sz * l;
                hess[1][2] = a * b * sy * c * sz * l;
                hess[2][2] = a * b * c * sz * sz * l;
            }
            for r in 0..3 {
                for s in 0..r {
                    hess[r][s] = hess[s][r];
                }
            }
            ArmPoint {
                y,
                jac: Matrix3::from_columns(&[d1, d2, d3]),
                hess,
            }
        }
    }
}

/// World position, velocity and acceleration map of an attached point:
/// `p'' = jac [q''; theta''] + bias`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointKinematics {
    pub pos: Vector3<f64>,
    pub vel: Vector3<f64>,
    pub jac: SMatrix<f64, 3, 9>,
    pub bias: Vector3<f64>,
}

pub fn point_kinematics(
    state: &VehicleState,
    geom: &VehicleGeometry,
    attachment: Attachment,
    local: &Vector2<f64>,
) -> Result<PointKinematics> {
    let phi = state.phi();
    let phi_dot = state.phi_dot();
    let q = euler_rate_map(&phi)?;
    let qd = euler_rate_map_dot(&phi, &phi_dot);
    let r = rot_zyx(&phi);
    let ap = body_point(geom, attachment, local, &state.theta);
    let y = ap.y;
    let w = q * phi_dot;
    let ydot = ap.jac * state.thetadot;
    let mut ybias = Vector3::zeros();
    for a in 0..3 {
        for b in 0..3 {
            ybias += ap.hess[a][b] * (state.thetadot[a] * state.thetadot[b]);
        }
    }
    let p = state.q.fixed_rows::<3>(0).into_owned();
    let pdot = state.qdot.fixed_rows::<3>(0).into_owned();
    let mut jac = SMatrix::<f64, 3, 9>::zeros();
    jac.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
    jac.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-(r * skew(&y) * q)));
    jac.fixed_view_mut::<3, 3>(0, 6).copy_from(&(r * ap.jac));
    let bias = r * (-(skew(&y) * qd * phi_dot) + w.cross(&w.cross(&y)) + w.cross(&ydot) * 2.0 + ybias);
    Ok(PointKinematics {
        pos: p + r * y,
        vel: pdot + r * (w.cross(&y) + ydot),
        jac,
        bias,
    })
}

/// World position only, for finite-difference checks.
pub fn point_position(q: &nalgebra::Vector6<f64>, theta: &Vector3<f64>, geom: &VehicleGeometry, attachment: Attachment, local: &Vector2<f64>) -> Vector3<f64> {
    let phi = q.fixed_rows::<3>(3).into_owned();
    q.fixed_rows::<3>(0).into_owned() + rot_zyx(&phi) * body_point(geom, attachment, local, theta).y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{vehicle_sq_poses, ZSys};
    use nalgebra::Vector6;
    use proptest::prelude::*;

    #[test]
    fn planar_configuration_matches_planner_shapes() {
        let geom = VehicleGeometry::default();
        let z = ZSys::new(0.4, -0.3, 0.7, 0.5, -1.1);
        let q = Vector6::new(z[0], z[1], 1.0, 0.0, 0.0, z[2]);
        let theta = Vector3::new(z[3], 0.0, z[4]);
        let sqs = vehicle_sq_poses(&z, &geom);
        for (k, part) in geom.parts().iter().enumerate() {
            let p = point_position(&q, &theta, &geom, part.attachment, &part.local.translation);
            assert!((p.xy() - sqs[k].center()).norm() < 1e-12);
            let h = if part.attachment == Attachment::Body { geom.blade_height } else { geom.arm_height };
            assert!((p.z - 1.0 - h).abs() < 1e-12);
        }
    }

    fn traj(t: f64, c: &[f64; 18]) -> (Vector6<f64>, Vector3<f64>) {
        // Smooth prescribed motion: each coordinate a0 + a1 sin(t + phase).
        let q = Vector6::from_fn(|i, _| c[i] + 0.3 * (t * (1.0 + 0.2 * i as f64) + c[9 + i % 9]).sin());
        let th = Vector3::from_fn(|i, _| c[6 + i] + 0.5 * (t * (0.7 + 0.3 * i as f64) + c[15 + i]).sin());
        (q, th)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn acceleration_map_matches_time_fd(
            c in prop::array::uniform18(-0.6f64..0.6), part in 0usize..8, lx in -0.1f64..0.1, ly in -0.05f64..0.05,
            t in 0.0f64..5.0,
        ) {
            let geom = VehicleGeometry::default();
            let p = geom.parts()[part];
            let local = p.local.translation + Vector2::new(lx, ly);
            let h = 1e-3;
            let pos = |t: f64| {
                let (q, th) = traj(t, &c);
                point_position(&q, &th, &geom, p.attachment, &local)
            };
            let (q, th) = traj(t, &c);
            let d1 = |t: f64| (traj(t + 1e-6, &c), traj(t - 1e-6, &c));
            let ((qp, tp), (qm, tm)) = d1(t);
            let qdot = (qp - qm) / 2e-6;
            let thdot = (tp - tm) / 2e-6;
            let (qpp, tpp) = traj(t + h, &c);
            let (qmm, tmm) = traj(t - h, &c);
            let qdd = (qpp - q * 2.0 + qmm) / (h * h);
            let thdd = (tpp - th * 2.0 + tmm) / (h * h);
            let st = VehicleState { q, qdot, theta: th, thetadot: thdot };
            let k = point_kinematics(&st, &geom, p.attachment, &local).unwrap();
            let fd_vel = (pos(t + 1e-6) - pos(t - 1e-6)) / 2e-6;
            let fd_acc = (pos(t + h) - pos(t) * 2.0 + pos(t - h)) / (h * h);
            let mut x = nalgebra::SVector::<f64, 9>::zeros();
            x.fixed_rows_mut::<6>(0).copy_from(&qdd);
            x.fixed_rows_mut::<3>(6).copy_from(&thdd);
            let acc = k.jac * x + k.bias;
            prop_assert!((k.vel - fd_vel).norm() <= 1e-6 * fd_vel.norm().max(1.0));
            prop_assert!((acc - fd_acc).norm() <= 1e-4 * fd_acc.norm().max(1.0), "{} vs {}", acc, fd_acc);
        }
    }
}
