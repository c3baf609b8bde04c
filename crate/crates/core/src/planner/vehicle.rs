use nalgebra::{Vector2, Vector5};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{Pose2, Superquadric2};
use crate::math::{perp, unit2};

/// Planar configuration `[x, y, psi, theta1, theta3]`.
pub type ZSys = Vector5<f64>;

pub const IDX_PSI: usize = 2;
pub const IDX_THETA1: usize = 3;
pub const IDX_THETA3: usize = 4;
pub const N_BLADES: usize = 6;
pub const N_VEHICLE_SQ: usize = 8;

/// Shapes and attachment points of the six blade discs and the two arm links.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleGeometry {
    /// Radius of each blade disc [m].
    pub blade_radius: f64,
    /// Distance of blade centers from the body origin [m].
    pub blade_distance: f64,
    /// Angle of the first blade in the body frame; the rest follow every 60 degrees [rad].
    pub blade_phase: f64,
    /// Arm base in the body frame [m].
    pub arm_base: [f64; 2],
    pub l1: f64,
    pub l2: f64,
    /// Half thickness of each link [m].
    pub link_half_width: f64,
    pub link_eps: f64,
    /// Height of the rotor plane above the body origin [m].
    pub blade_height: f64,
    /// Height of the arm plane relative to the body origin [m].
    pub arm_height: f64,
}

impl Default for VehicleGeometry {
    fn default() -> Self {
        VehicleGeometry {
            blade_radius: 0.115,
            blade_distance: 0.278,
            blade_phase: PI / 6.0,
            arm_base: [0.0, 0.0],
            l1: 0.3,
            l2: 0.3,
            link_half_width: 0.025,
            link_eps: 0.5,
            blade_height: 0.05,
            arm_height: -0.1,
        }
    }
}

/// Which rigid body of the chain a vehicle SQ is attached to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Attachment {
    Body,
    Link1,
    Link2,
}

/// Shape of one vehicle SQ in the frame of the body it is attached to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartShape {
    pub a1: f64,
    pub a2: f64,
    pub eps: f64,
    /// Pose relative to the attachment frame (body frame or link frame).
    pub local: Pose2,
    pub attachment: Attachment,
}

/// World frames of the chain for a configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainFrames {
    pub body: Pose2,
    pub link1: Pose2,
    pub link2: Pose2,
}

impl ChainFrames {
    pub fn frame(&self, a: Attachment) -> &Pose2 {
        match a {
            Attachment::Body => &self.body,
            Attachment::Link1 => &self.link1,
            Attachment::Link2 => &self.link2,
        }
    }

    /// Rotation centers of the joints acting on attachment `a`, indexed by `z` coordinate.
    pub fn rotation_centers(&self, a: Attachment) -> [Option<Vector2<f64>>; 5] {
        let mut c = [None; 5];
        c[IDX_PSI] = Some(self.body.translation);
        if matches!(a, Attachment::Link1 | Attachment::Link2) {
            c[IDX_THETA1] = Some(self.link1.translation);
        }
        if a == Attachment::Link2 {
            c[IDX_THETA3] = Some(self.link2.translation);
        }
        c
    }
}

impl VehicleGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vehicle.blade_radius", self.blade_radius),
            ("vehicle.blade_distance", self.blade_distance),
            ("vehicle.l1", self.l1),
            ("vehicle.l2", self.l2),
            ("vehicle.link_half_width", self.link_half_width),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(name, "must be positive"));
            }
        }
        if !(self.link_eps > 0.0 && self.link_eps <= 2.0) {
            return Err(Error::validation("vehicle.link_eps", "must lie in (0, 2]"));
        }
        Ok(())
    }

    pub fn arm_base(&self) -> Vector2<f64> {
        Vector2::new(self.arm_base[0], self.arm_base[1])
    }

    pub fn parts(&self) -> [PartShape; N_VEHICLE_SQ] {
        let blade = |k: usize| {
            let c = unit2(self.blade_phase + k as f64 * PI / 3.0) * self.blade_distance;
            PartShape {
                a1: self.blade_radius,
                a2: self.blade_radius,
                eps: 1.0,
                local: Pose2::new(0.0, c.x, c.y),
                attachment: Attachment::Body,
            }
        };
        let link = |l: f64, attachment| PartShape {
            a1: l / 2.0,
            a2: self.link_half_width,
            eps: self.link_eps,
            local: Pose2::new(0.0, l / 2.0, 0.0),
            attachment,
        };
        [
            blade(0),
            blade(1),
            blade(2),
            blade(3),
            blade(4),
            blade(5),
            link(self.l1, Attachment::Link1),
            link(self.l2, Attachment::Link2),
        ]
    }

    pub fn frames(&self, z: &ZSys) -> ChainFrames {
        let body = Pose2::new(z[IDX_PSI], z[0], z[1]);
        let base = body.to_world(&self.arm_base());
        let a1 = z[IDX_PSI] + z[IDX_THETA1];
        let link1 = Pose2::new(a1, base.x, base.y);
        let elbow = base + unit2(a1) * self.l1;
        let link2 = Pose2::new(a1 + z[IDX_THETA3], elbow.x, elbow.y);
        ChainFrames { body, link1, link2 }
    }

    /// Reach of the vehicle footprint from the body origin, used for coarse culling.
    pub fn radius(&self) -> f64 {
        let blades = self.blade_distance + self.blade_radius;
        let arm = self.arm_base().norm() + self.l1 + self.l2 + self.link_half_width;
        blades.max(arm)
    }
}

/// World-frame superquadrics of the vehicle at configuration `z`.
pub fn vehicle_sq_poses(z: &ZSys, geom: &VehicleGeometry) -> Vec<Superquadric2> {
    let f = geom.frames(z);
    geom.parts()
        .iter()
        .map(|p| {
            let pose = f.frame(p.attachment).compose(&p.local);
            Superquadric2::new(p.a1, p.a2, p.eps, pose).expect("validated vehicle geometry")
        })
        .collect()
}

/// End-effector position and heading.
pub fn forward_kinematics_eef(z: &ZSys, geom: &VehicleGeometry) -> (Vector2<f64>, f64) {
    let f = geom.frames(z);
    (f.link2.to_world(&Vector2::new(geom.l2, 0.0)), f.link2.angle)
}

/// First and second derivatives of a world point rigidly attached to the chain.
pub struct PointJacobian {
    /// Columns are `dP/dz_a`.
    pub d1: [Vector2<f64>; 5],
    pub centers: [Option<Vector2<f64>>; 5],
}

impl PointJacobian {
    pub fn new(p: &Vector2<f64>, centers: [Option<Vector2<f64>>; 5]) -> Self {
        let mut d1 = [Vector2::zeros(); 5];
        d1[0] = Vector2::new(1.0, 0.0);
        d1[1] = Vector2::new(0.0, 1.0);
        for a in IDX_PSI..5 {
            if let Some(c) = centers[a] {
                d1[a] = perp(&(p - c));
            }
        }
        PointJacobian { d1, centers }
    }

    /// `d2P/dz_a dz_b`.
    pub fn d2(&self, p: &Vector2<f64>, a: usize, b: usize) -> Vector2<f64> {
        if a < IDX_PSI || b < IDX_PSI {
            return Vector2::zeros();
        }
        match (self.centers[a], self.centers[b]) {
            (Some(_), Some(_)) => {
                let c = self.centers[a.max(b)].unwrap();
                -(p - c)
            }
            _ => Vector2::zeros(),
        }
    }
}

/// Heading Jacobian of the attachment: which joints rotate it.
pub fn heading_jacobian(a: Attachment) -> [f64; 5] {
    match a {
        Attachment::Body => [0.0, 0.0, 1.0, 0.0, 0.0],
        Attachment::Link1 => [0.0, 0.0, 1.0, 1.0, 0.0],
        Attachment::Link2 => [0.0, 0.0, 1.0, 1.0, 1.0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::rot2;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_state_layout() {
        let g = VehicleGeometry::default();
        let sqs = vehicle_sq_poses(&ZSys::zeros(), &g);
        assert_eq!(sqs.len(), N_VEHICLE_SQ);
        for (k, p) in g.parts().iter().take(N_BLADES).enumerate() {
            assert_relative_eq!(sqs[k].center(), p.local.translation, epsilon = 1e-15);
        }
        assert_relative_eq!(sqs[6].center(), Vector2::new(g.l1 / 2.0, 0.0), epsilon = 1e-15);
        let (p, h) = forward_kinematics_eef(&ZSys::zeros(), &g);
        assert_relative_eq!(p, Vector2::new(g.l1 + g.l2, 0.0), epsilon = 1e-15);
        assert_eq!(h, 0.0);
    }

    #[test]
    fn yaw_rotates_everything() {
        let g = VehicleGeometry::default();
        let a = vehicle_sq_poses(&ZSys::zeros(), &g);
        let b = vehicle_sq_poses(&ZSys::new(0.0, 0.0, PI / 2.0, 0.0, 0.0), &g);
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(y.center(), rot2(PI / 2.0) * x.center(), epsilon = 1e-12);
        }
    }

    #[test]
    fn elbow_example() {
        let g = VehicleGeometry::default();
        let z = ZSys::new(0.5, -0.2, 0.3, PI / 4.0, -PI / 4.0);
        let (p, h) = forward_kinematics_eef(&z, &g);
        assert_relative_eq!(h, 0.3, epsilon = 1e-15);
        let expected = Vector2::new(0.5, -0.2) + unit2(0.3 + PI / 4.0) * g.l1 + unit2(0.3) * g.l2;
        assert_relative_eq!(p, expected, epsilon = 1e-12);
        let (p90, _) = forward_kinematics_eef(&ZSys::new(0.0, 0.0, 0.0, PI / 2.0, 0.0), &g);
        assert_relative_eq!(p90, Vector2::new(0.0, g.l1 + g.l2), epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn fk_matches_transform_composition(
            x in -3.0f64..3.0, y in -3.0f64..3.0, psi in -PI..PI, t1 in -PI..PI, t3 in -PI..PI,
            bx in -0.1f64..0.1, by in -0.1f64..0.1,
        ) {
            let g = VehicleGeometry { arm_base: [bx, by], ..VehicleGeometry::default() };
            let z = ZSys::new(x, y, psi, t1, t3);
            // Homogeneous 3x3 composition as an independent oracle.
            let hom = |a: f64, tx: f64, ty: f64| nalgebra::Matrix3::new(a.cos(), -a.sin(), tx, a.sin(), a.cos(), ty, 0.0, 0.0, 1.0);
            let t = hom(psi, x, y) * hom(0.0, bx, by) * hom(t1, 0.0, 0.0) * hom(0.0, g.l1, 0.0) * hom(t3, 0.0, 0.0) * hom(0.0, g.l2, 0.0);
            let (p, h) = forward_kinematics_eef(&z, &g);
            prop_assert!((p.x - t[(0, 2)]).abs() < 1e-12 && (p.y - t[(1, 2)]).abs() < 1e-12);
            prop_assert!((crate::math::wrap_angle(h) - t[(1, 0)].atan2(t[(0, 0)])).abs() < 1e-9
                || (crate::math::wrap_angle(h).abs() - PI).abs() < 1e-9);
        }

        #[test]
        fn point_jacobian_matches_fd(
            z in prop::array::uniform5(-1.5f64..1.5), part in 0usize..8, bx in -0.2f64..0.2, by in -0.05f64..0.05,
        ) {
            let g = VehicleGeometry::default();
            let parts = g.parts();
            let z = ZSys::from(z);
            let world = |z: &ZSys| {
                let f = g.frames(z);
                f.frame(parts[part].attachment).compose(&parts[part].local).to_world(&Vector2::new(bx, by))
            };
            let p = world(&z);
            let f = g.frames(&z);
            let jac = PointJacobian::new(&p, f.rotation_centers(parts[part].attachment));
            let h = 1e-6;
            for a in 0..5 {
                let mut zp = z; zp[a] += h;
                let mut zm = z; zm[a] -= h;
                let fd = (world(&zp) - world(&zm)) / (2.0 * h);
                prop_assert!((fd - jac.d1[a]).amax() < 1e-8);
                for b in 0..5 {
                    let jp = PointJacobian::new(&world(&zp), g.frames(&zp).rotation_centers(parts[part].attachment));
                    let jm = PointJacobian::new(&world(&zm), g.frames(&zm).rotation_centers(parts[part].attachment));
                    let fd2 = (jp.d1[b] - jm.d1[b]) / (2.0 * h);
                    prop_assert!((fd2 - jac.d2(&p, a, b)).amax() < 1e-7, "a {a} b {b}");
                }
            }
        }
    }
}
