//! Closest boundary points ("proxies") between two planar superquadrics.
//!
//! The search runs over the direction `n(theta)` of a separating line. For a
//! direction the signed separation is `-h_i(n) - h_j(-n)`, where `h` is the
//! closed-form support function of a superellipse. Its maximum is the gap for
//! disjoint shapes and minus the penetration depth for overlapping ones, and
//! the maximizing support points are the proxies. The derivative of the
//! separation with respect to `theta` is `(p_j - p_i) . n_perp`, which is
//! driven to zero by a bracketed root search.

use nalgebra::Vector2;
use std::f64::consts::PI;

use super::superquadric::Superquadric2;
use crate::math::{perp, unit2, wrap_angle};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 200;

const SCAN: usize = 64;

/// Angular parameters of the two interacting boundary points.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ProxyPair {
    pub gamma_i: f64,
    pub gamma_j: f64,
}

impl ProxyPair {
    pub fn new(gamma_i: f64, gamma_j: f64) -> Self {
        ProxyPair {
            gamma_i: wrap_angle(gamma_i),
            gamma_j: wrap_angle(gamma_j),
        }
    }

    /// Initial guess: each proxy at the body-frame angle pointing at the other center.
    pub fn facing(sq_i: &Superquadric2, sq_j: &Superquadric2) -> Self {
        let d = sq_j.center() - sq_i.center();
        let ai = d.y.atan2(d.x) - sq_i.pose().angle;
        let aj = (-d.y).atan2(-d.x) - sq_j.pose().angle;
        ProxyPair::new(ai, aj)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosestPair {
    pub proxies: ProxyPair,
    /// Signed separation: the distance when disjoint, minus the penetration depth otherwise.
    pub gap: f64,
    /// Angle of the unit normal pointing from shape i toward shape j.
    pub normal_angle: f64,
    pub point_i: Vector2<f64>,
    pub point_j: Vector2<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl ClosestPair {
    pub fn normal(&self) -> Vector2<f64> {
        unit2(self.normal_angle)
    }
}

#[derive(Clone, Copy)]
struct Eval {
    theta: f64,
    f: f64,
    fp: f64,
    pi: Vector2<f64>,
    pj: Vector2<f64>,
}

fn eval(a: &Superquadric2, b: &Superquadric2, theta: f64) -> Eval {
    let n = unit2(theta);
    let (hi, pi) = a.support(&n);
    let (hj, pj) = b.support(&-n);
    Eval {
        theta,
        f: -hi - hj,
        fp: (pj - pi).dot(&perp(&n)),
        pi,
        pj,
    }
}

fn finish(a: &Superquadric2, b: &Superquadric2, e: Eval, converged: bool, iterations: usize) -> ClosestPair {
    let gi = a.gamma_of_body_point(&a.pose().to_body(&e.pi));
    let gj = b.gamma_of_body_point(&b.pose().to_body(&e.pj));
    ClosestPair {
        proxies: ProxyPair::new(gi, gj),
        gap: e.f,
        normal_angle: wrap_angle(e.theta),
        point_i: a.proxy_point(wrap_angle(gi)),
        point_j: b.proxy_point(wrap_angle(gj)),
        converged,
        iterations,
    }
}

/// Bracketed root search on the separation derivative between `lo` (fp >= 0) and `hi` (fp <= 0).
fn refine(
    a: &Superquadric2,
    b: &Superquadric2,
    mut lo: Eval,
    mut hi: Eval,
    tol: f64,
    max_iter: usize,
    iters: &mut usize,
) -> (Eval, bool) {
    let mut best = if lo.f >= hi.f { lo } else { hi };
    let (mut flo, mut fhi) = (lo.fp, hi.fp);
    let mut side = 0i8;
    let mut widths = [hi.theta - lo.theta; 2];
    while *iters < max_iter {
        let w = hi.theta - lo.theta;
        if w <= tol {
            return (best, true);
        }
        let mut t = if flo - fhi > 0.0 {
            (lo.theta * (-fhi) + hi.theta * flo) / (flo - fhi)
        } else {
            0.5 * (lo.theta + hi.theta)
        };
        // Fall back to bisection when the bracket is not shrinking fast enough.
        if w > 0.5 * widths[0] || !(t > lo.theta && t < hi.theta) {
            t = 0.5 * (lo.theta + hi.theta);
        }
        widths = [widths[1], w];
        *iters += 1;
        let e = eval(a, b, t);
        if e.f > best.f {
            best = e;
        }
        if e.fp == 0.0 {
            return (e, true);
        }
        if e.fp > 0.0 {
            lo = e;
            flo = e.fp;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        } else {
            hi = e;
            fhi = e.fp;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        }
    }
    (best, false)
}

/// Walks from `start` in the uphill direction, doubling the step, until the derivative changes sign.
fn bracket_from(
    a: &Superquadric2,
    b: &Superquadric2,
    start: Eval,
    step: f64,
    iters: &mut usize,
) -> Option<(Eval, Eval)> {
    if start.fp == 0.0 {
        return Some((start, start));
    }
    let dir = start.fp.signum();
    let mut prev = start;
    let mut h = step;
    let mut travelled = 0.0;
    while travelled < PI {
        travelled += h;
        *iters += 1;
        let e = eval(a, b, start.theta + dir * travelled);
        if e.fp * dir <= 0.0 {
            return Some(if dir > 0.0 { (prev, e) } else { (e, prev) });
        }
        prev = e;
        h *= 2.0;
    }
    None
}

fn global(a: &Superquadric2, b: &Superquadric2, seed: Option<f64>, tol: f64, max_iter: usize) -> ClosestPair {
    let d = b.center() - a.center();
    let base = if d.norm() > 0.0 { d.y.atan2(d.x) } else { 0.0 };
    let step = 2.0 * PI / SCAN as f64;
    let mut iters = 0;
    let mut best = eval(a, b, base);
    for k in 1..SCAN {
        let e = eval(a, b, base + step * k as f64);
        if e.f > best.f {
            best = e;
        }
    }
    if let Some(s) = seed {
        let e = eval(a, b, s);
        if e.f > best.f {
            best = e;
        }
    }
    iters += SCAN;
    if best.fp == 0.0 {
        return finish(a, b, best, true, iters);
    }
    match bracket_from(a, b, best, step / 8.0, &mut iters) {
        Some((lo, hi)) if lo.theta < hi.theta => {
            let (e, ok) = refine(a, b, lo, hi, tol, max_iter + iters, &mut iters);
            let e = if e.f >= best.f { e } else { best };
            finish(a, b, e, ok, iters)
        }
        Some((lo, _)) => finish(a, b, lo, true, iters),
        None => finish(a, b, best, false, iters),
    }
}

/// Closest-pair search seeded by `init`, with a global direction scan for robustness.
pub fn closest_pair(
    sq_i: &Superquadric2,
    sq_j: &Superquadric2,
    init: &ProxyPair,
    tol: f64,
    max_iter: usize,
) -> ClosestPair {
    let pi = sq_i.proxy_point(init.gamma_i);
    let pj = sq_j.proxy_point(init.gamma_j);
    let d = pj - pi;
    let seed = (d.norm() > 0.0).then(|| d.y.atan2(d.x));
    global(sq_i, sq_j, seed, tol, max_iter)
}

/// Local search from a previous normal direction; falls back to the global scan when the
/// local result reports contact or the bracket walk fails.
pub fn closest_pair_warm(
    sq_i: &Superquadric2,
    sq_j: &Superquadric2,
    normal_angle: f64,
    tol: f64,
    max_iter: usize,
) -> ClosestPair {
    let mut iters = 1;
    let start = eval(sq_i, sq_j, normal_angle);
    if let Some((lo, hi)) = bracket_from(sq_i, sq_j, start, 1e-3, &mut iters) {
        let (e, ok) = if lo.theta < hi.theta {
            refine(sq_i, sq_j, lo, hi, tol, max_iter, &mut iters)
        } else {
            (lo, true)
        };
        // A positive separation is the unique local maximum, hence global.
        if e.f > 0.0 {
            return finish(sq_i, sq_j, e, ok, iters);
        }
    }
    global(sq_i, sq_j, Some(normal_angle), tol, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cp(a: &Superquadric2, b: &Superquadric2) -> ClosestPair {
        closest_pair(a, b, &ProxyPair::facing(a, b), DEFAULT_TOL, DEFAULT_MAX_ITER)
    }

    #[test]
    fn unit_circles() {
        let a = Superquadric2::circle(1.0, 0.0, 0.0).unwrap();
        let b = Superquadric2::circle(1.0, 3.0, 0.0).unwrap();
        let r = cp(&a, &b);
        assert!(r.converged);
        assert_relative_eq!(r.gap, 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.point_i, Vector2::new(1.0, 0.0), epsilon = 1e-9);
        assert_relative_eq!(r.point_j, Vector2::new(2.0, 0.0), epsilon = 1e-9);
    }

    #[test]
    fn overlapping_circles_negative_gap() {
        let a = Superquadric2::circle(1.0, 0.0, 0.0).unwrap();
        let b = Superquadric2::circle(1.0, 1.5, 0.0).unwrap();
        let r = cp(&a, &b);
        assert_relative_eq!(r.gap, -0.5, epsilon = 1e-9);
        assert!(b.inside_outside(&r.point_i).unwrap() < 0.0);
    }

    #[test]
    fn boxes_face_to_face() {
        for &g in &[0.01, 0.1, 0.7] {
            let a = Superquadric2::new(0.5, 0.5, 0.2, Pose2::identity()).unwrap();
            let b = Superquadric2::new(0.5, 0.5, 0.2, Pose2::new(0.0, 1.0 + g, 0.2)).unwrap();
            let r = cp(&a, &b);
            assert!((r.gap - g).abs() < 1e-4, "gap {} vs {g}", r.gap);
        }
    }

    #[test]
    fn warm_start_agrees_with_cold() {
        let a = Superquadric2::new(0.3, 0.6, 0.5, Pose2::new(0.4, 0.0, 0.0)).unwrap();
        let b = Superquadric2::new(0.5, 0.2, 1.4, Pose2::new(-0.2, 1.5, 0.8)).unwrap();
        let cold = cp(&a, &b);
        for off in [-1.0, -0.1, 0.0, 0.3, 2.5] {
            let warm = closest_pair_warm(&a, &b, cold.normal_angle + off, DEFAULT_TOL, DEFAULT_MAX_ITER);
            assert!((warm.gap - cold.gap).abs() < 1e-10);
        }
    }

    fn random_sq() -> impl Strategy<Value = Superquadric2> {
        (0.1f64..1.0, 0.1f64..1.0, 0.3f64..1.8, -PI..PI, -3.0f64..3.0, -3.0f64..3.0)
            .prop_map(|(a1, a2, e, ang, x, y)| Superquadric2::new(a1, a2, e, Pose2::new(ang, x, y)).unwrap())
    }

    proptest! {
        #[test]
        fn symmetric_in_arguments(a in random_sq(), b in random_sq()) {
            let ab = cp(&a, &b);
            let ba = cp(&b, &a);
            prop_assert!((ab.gap - ba.gap).abs() < 1e-8, "{} vs {}", ab.gap, ba.gap);
        }

        #[test]
        fn disjoint_proxies_realize_gap(a in random_sq(), b in random_sq()) {
            let r = cp(&a, &b);
            prop_assume!(r.gap > 1e-3);
            let dist = (r.point_j - r.point_i).norm();
            prop_assert!(dist >= r.gap - 1e-9);
            // Near-flat faces leave the proxies free to slide along the face.
            if a.eps().min(b.eps()) >= 0.5 {
                prop_assert!((dist - r.gap).abs() < 1e-6, "{} vs {}", dist, r.gap);
            }
            prop_assert!(a.inside_outside(&r.point_i).unwrap().abs() < 1e-9);
            prop_assert!(b.inside_outside(&r.point_j).unwrap().abs() < 1e-9);
        }
    }
}
