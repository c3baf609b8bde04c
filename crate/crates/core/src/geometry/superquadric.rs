use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::math::{is_rotation, rot2, spow, wrap_angle};

/// Planar rigid transform: rotation by `angle`, then translation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose2 {
    pub angle: f64,
    pub translation: Vector2<f64>,
}

impl Pose2 {
    pub fn new(angle: f64, x: f64, y: f64) -> Self {
        Pose2 {
            angle,
            translation: Vector2::new(x, y),
        }
    }

    pub fn identity() -> Self {
        Pose2::new(0.0, 0.0, 0.0)
    }

    pub fn rotation(&self) -> Matrix2<f64> {
        rot2(self.angle)
    }

    pub fn to_world(&self, body: &Vector2<f64>) -> Vector2<f64> {
        self.rotation() * body + self.translation
    }

    pub fn to_body(&self, world: &Vector2<f64>) -> Vector2<f64> {
        self.rotation().transpose() * (world - self.translation)
    }

    /// `self * other`: `other` expressed in this frame, mapped to the parent frame.
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        Pose2 {
            angle: self.angle + other.angle,
            translation: self.to_world(&other.translation),
        }
    }
}

fn check_exponent(e: f64, name: &str) -> Result<()> {
    if !(e > 0.0 && e <= 2.0) {
        return Err(Error::Domain(format!("{name} = {e} outside (0, 2]")));
    }
    Ok(())
}

fn check_axis(a: f64, name: &str) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("{name} = {a} must be positive")));
    }
    Ok(())
}

/// `|x|^e`, floored away from zero when `e < 0` so second derivatives stay finite.
#[inline]
fn apow(x: f64, e: f64) -> f64 {
    if e < 0.0 {
        x.abs().max(1e-12).powf(e)
    } else {
        x.abs().powf(e)
    }
}

/// Planar superellipse `|x/a1|^(2/eps) + |y/a2|^(2/eps) = 1` with a rigid pose.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Superquadric2 {
    a1: f64,
    a2: f64,
    eps: f64,
    pose: Pose2,
}

impl Superquadric2 {
    pub fn new(a1: f64, a2: f64, eps: f64, pose: Pose2) -> Result<Self> {
        check_axis(a1, "a1")?;
        check_axis(a2, "a2")?;
        check_exponent(eps, "eps")?;
        if !(pose.angle.is_finite() && pose.translation.iter().all(|v| v.is_finite())) {
            return Err(Error::Domain("non-finite pose".into()));
        }
        Ok(Superquadric2 { a1, a2, eps, pose })
    }

    pub fn circle(radius: f64, x: f64, y: f64) -> Result<Self> {
        Self::new(radius, radius, 1.0, Pose2::new(0.0, x, y))
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }
    pub fn a2(&self) -> f64 {
        self.a2
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn pose(&self) -> &Pose2 {
        &self.pose
    }
    pub fn center(&self) -> Vector2<f64> {
        self.pose.translation
    }

    pub fn with_pose(&self, pose: Pose2) -> Self {
        Superquadric2 { pose, ..*self }
    }

    /// Ellipse (`eps = 1`) with the same center and axis ratio that contains this shape.
    pub fn circumscribing_ellipse(&self) -> Self {
        let scale = 2f64.powf((1.0 - self.eps) / 2.0).max(1.0);
        Superquadric2 {
            a1: self.a1 * scale,
            a2: self.a2 * scale,
            eps: 1.0,
            pose: self.pose,
        }
    }

    /// Inside-outside value for a body-frame point; no finiteness check.
    #[inline]
    pub fn inside_outside_body(&self, b: &Vector2<f64>) -> f64 {
        let m = 2.0 / self.eps;
        (b.x / self.a1).abs().powf(m) + (b.y / self.a2).abs().powf(m) - 1.0
    }

    pub fn inside_outside(&self, p: &Vector2<f64>) -> Result<f64> {
        if !(p.x.is_finite() && p.y.is_finite()) {
            return Err(Error::Domain("non-finite point".into()));
        }
        Ok(self.inside_outside_body(&self.pose.to_body(p)))
    }

    /// Value, world gradient and world Hessian of the inside-outside function.
    pub fn inside_outside_derivs(&self, p: &Vector2<f64>) -> (f64, Vector2<f64>, Matrix2<f64>) {
        let r = self.pose.rotation();
        let b = r.transpose() * (p - self.pose.translation);
        let m = 2.0 / self.eps;
        let (u, v) = (b.x / self.a1, b.y / self.a2);
        let f = u.abs().powf(m) + v.abs().powf(m) - 1.0;
        let g = Vector2::new(m / self.a1 * spow(u, m - 1.0), m / self.a2 * spow(v, m - 1.0));
        let h = Matrix2::new(
            m * (m - 1.0) / (self.a1 * self.a1) * apow(u, m - 2.0),
            0.0,
            0.0,
            m * (m - 1.0) / (self.a2 * self.a2) * apow(v, m - 2.0),
        );
        (f, r * g, r * h * r.transpose())
    }

    pub fn proxy_point_body(&self, gamma: f64) -> Vector2<f64> {
        let (s, c) = gamma.sin_cos();
        Vector2::new(self.a1 * spow(c, self.eps), self.a2 * spow(s, self.eps))
    }

    /// Boundary point at angular parameter `gamma`, in world coordinates.
    pub fn proxy_point(&self, gamma: f64) -> Vector2<f64> {
        self.pose.to_world(&self.proxy_point_body(gamma))
    }

    /// Angular parameter of a body-frame boundary point.
    pub fn gamma_of_body_point(&self, b: &Vector2<f64>) -> f64 {
        let inv = 1.0 / self.eps;
        spow(b.y / self.a2, inv).atan2(spow(b.x / self.a1, inv))
    }

    /// Support function in body coordinates: `max n.x` over the shape and the maximizer.
    pub fn support_body(&self, n: &Vector2<f64>) -> (f64, Vector2<f64>) {
        let u = (self.a1 * n.x).abs();
        let v = (self.a2 * n.y).abs();
        let big = u.max(v);
        if big == 0.0 {
            return (0.0, Vector2::zeros());
        }
        if self.eps >= 2.0 {
            // Diamond: the support point is a vertex.
            return if u >= v {
                (u, Vector2::new(self.a1.copysign(n.x), 0.0))
            } else {
                (v, Vector2::new(0.0, self.a2.copysign(n.y)))
            };
        }
        let q = 2.0 / (2.0 - self.eps);
        let h = big * ((u / big).powf(q) + (v / big).powf(q)).powf(1.0 / q);
        let x = self.a1 * spow(n.x.signum() * u / h, q - 1.0);
        let y = self.a2 * spow(n.y.signum() * v / h, q - 1.0);
        (h, Vector2::new(if n.x == 0.0 { 0.0 } else { x }, if n.y == 0.0 { 0.0 } else { y }))
    }

    /// World support function and support point for world direction `n`.
    pub fn support(&self, n: &Vector2<f64>) -> (f64, Vector2<f64>) {
        let r = self.pose.rotation();
        let (h, b) = self.support_body(&(r.transpose() * n));
        (h + n.dot(&self.pose.translation), r * b + self.pose.translation)
    }
}

/// Angular parameters of a 3D proxy: latitude in `[-pi/2, pi/2]`, longitude in `(-pi, pi]`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ProxyAngles3 {
    pub lat: f64,
    pub lon: f64,
}

impl ProxyAngles3 {
    /// Wraps into the canonical domain, reflecting latitude over the poles.
    pub fn new(lat: f64, lon: f64) -> Self {
        let mut lat = wrap_angle(lat);
        let mut lon = lon;
        if lat > FRAC_PI_2 {
            lat = PI - lat;
            lon += PI;
        } else if lat < -FRAC_PI_2 {
            lat = -PI - lat;
            lon += PI;
        }
        ProxyAngles3 {
            lat,
            lon: wrap_angle(lon),
        }
    }
}

/// Superquadric solid with a rigid pose in 3D.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Superquadric3 {
    a: Vector3<f64>,
    eps1: f64,
    eps2: f64,
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Superquadric3 {
    pub fn new(
        a: Vector3<f64>,
        eps1: f64,
        eps2: f64,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
    ) -> Result<Self> {
        check_axis(a.x, "a1")?;
        check_axis(a.y, "a2")?;
        check_axis(a.z, "a3")?;
        check_exponent(eps1, "eps1")?;
        check_exponent(eps2, "eps2")?;
        if !is_rotation(&rotation, 1e-9) {
            return Err(Error::Domain("rotation is not in SO(3)".into()));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("non-finite translation".into()));
        }
        Ok(Superquadric3 {
            a,
            eps1,
            eps2,
            rotation,
            translation,
        })
    }

    /// Vertical extrusion of a planar shape: `a3 = height / 2`, centered at half height.
    pub fn extrude(sq: &Superquadric2, height: f64, eps1: f64) -> Result<Self> {
        Self::new(
            Vector3::new(sq.a1, sq.a2, height / 2.0),
            eps1,
            sq.eps,
            crate::math::rot_z(sq.pose.angle),
            Vector3::new(sq.pose.translation.x, sq.pose.translation.y, height / 2.0),
        )
    }

    pub fn axes(&self) -> Vector3<f64> {
        self.a
    }
    pub fn eps1(&self) -> f64 {
        self.eps1
    }
    pub fn eps2(&self) -> f64 {
        self.eps2
    }
    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }
    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Inside-outside value plus one for a body-frame point (the bracket before the `- 1`).
    #[inline]
    pub fn bracket_body(&self, b: &Vector3<f64>) -> f64 {
        let m2 = 2.0 / self.eps2;
        let m1 = 2.0 / self.eps1;
        let xy = (b.x / self.a.x).abs().powf(m2) + (b.y / self.a.y).abs().powf(m2);
        xy.powf(self.eps2 / self.eps1) + (b.z / self.a.z).abs().powf(m1)
    }

    pub fn inside_outside_body(&self, b: &Vector3<f64>) -> f64 {
        self.bracket_body(b) - 1.0
    }

    pub fn inside_outside(&self, p: &Vector3<f64>) -> Result<f64> {
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("non-finite point".into()));
        }
        let b = self.rotation.transpose() * (p - self.translation);
        Ok(self.inside_outside_body(&b))
    }

    /// Bracket value with its body-frame gradient and Hessian.
    pub fn bracket_derivs(&self, b: &Vector3<f64>) -> (f64, Vector3<f64>, Matrix3<f64>) {
        let m2 = 2.0 / self.eps2;
        let m1 = 2.0 / self.eps1;
        let r = self.eps2 / self.eps1;
        let (u, v, w) = (b.x / self.a.x, b.y / self.a.y, b.z / self.a.z);
        let a = u.abs().powf(m2) + v.abs().powf(m2);
        let ax = m2 / self.a.x * spow(u, m2 - 1.0);
        let ay = m2 / self.a.y * spow(v, m2 - 1.0);
        let axx = m2 * (m2 - 1.0) / (self.a.x * self.a.x) * apow(u, m2 - 2.0);
        let ayy = m2 * (m2 - 1.0) / (self.a.y * self.a.y) * apow(v, m2 - 2.0);
        let ar1 = apow(a, r - 1.0);
        let ar2 = apow(a, r - 2.0);
        let g = a.powf(r) + w.abs().powf(m1);
        let grad = Vector3::new(
            r * ar1 * ax,
            r * ar1 * ay,
            m1 / self.a.z * spow(w, m1 - 1.0),
        );
        let cross = r * (r - 1.0) * ar2;
        let hxx = cross * ax * ax + r * ar1 * axx;
        let hyy = cross * ay * ay + r * ar1 * ayy;
        let hxy = cross * ax * ay;
        let hzz = m1 * (m1 - 1.0) / (self.a.z * self.a.z) * apow(w, m1 - 2.0);
        let hess = Matrix3::new(hxx, hxy, 0.0, hxy, hyy, 0.0, 0.0, 0.0, hzz);
        (g, grad, hess)
    }

    pub fn proxy_point_body(&self, g: &ProxyAngles3) -> Vector3<f64> {
        let (s1, c1) = g.lat.sin_cos();
        let (s2, c2) = g.lon.sin_cos();
        let ce = spow(c1, self.eps1);
        Vector3::new(
            self.a.x * ce * spow(c2, self.eps2),
            self.a.y * ce * spow(s2, self.eps2),
            self.a.z * spow(s1, self.eps1),
        )
    }

    pub fn proxy_point(&self, g: &ProxyAngles3) -> Vector3<f64> {
        self.rotation * self.proxy_point_body(g) + self.translation
    }
}
