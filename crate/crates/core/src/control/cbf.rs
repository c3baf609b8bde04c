//! Barrier function between a vehicle proxy and an extruded obstacle, and the QP rows it induces.

use nalgebra::{Matrix3, SMatrix, SVector, Vector2, Vector3, Vector6};

use super::gains::{GainSet, SafetyParams};
use super::kinematics::point_kinematics;
use crate::dynamics::VehicleState;
use crate::error::{Error, Result};
use crate::geometry::{
    closest_pair, closest_pair_warm, ProxyPair, Superquadric2, Superquadric3, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::planner::{vehicle_sq_poses, VehicleGeometry, ZSys};

/// An obstacle as seen by the planner (2D) and by the controller (3D extrusion).
#[derive(Clone, Debug, PartialEq)]
pub struct Obstacle {
    pub footprint: Superquadric2,
    pub solid: Superquadric3,
}

impl Obstacle {
    /// Extrudes `footprint` from the ground to `height` with vertical exponent `eps1`.
    pub fn extruded(footprint: Superquadric2, height: f64, eps1: f64) -> Result<Self> {
        Ok(Obstacle {
            solid: Superquadric3::extrude(&footprint, height, eps1)?,
            footprint,
        })
    }
}

/// Displacement from the obstacle center to the proxy, in the obstacle frame.
pub fn delta_x(r_j: &Matrix3<f64>, p_j: &Vector3<f64>, r_i: &Matrix3<f64>, p_i: &Vector3<f64>, proxy_body: &Vector3<f64>) -> Vector3<f64> {
    r_j.transpose() * (p_i - p_j) + r_j.transpose() * r_i * proxy_body
}

/// `ln` of the inside-outside bracket of the obstacle at body-frame point `dx`.
pub fn h_co(dx: &Vector3<f64>, obstacle: &Superquadric3) -> Result<f64> {
    h_co_derivs(dx, obstacle).map(|(h, _, _)| h)
}

/// Value, gradient and Hessian of `h_co` in `dx`.
pub fn h_co_derivs(dx: &Vector3<f64>, obstacle: &Superquadric3) -> Result<(f64, Vector3<f64>, Matrix3<f64>)> {
    if !dx.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite { context: "barrier argument".into() });
    }
    let (g, dg, hg) = obstacle.bracket_derivs(dx);
    if !(g > 1e-300) || !g.is_finite() {
        return Err(Error::Domain("degenerate proxy at the obstacle center".into()));
    }
    let grad = dg / g;
    let hess = hg / g - grad * grad.transpose();
    Ok((g.ln(), grad, hess))
}

/// One barrier row `a x + sigma <= b` over `x = [q_dot_d; theta_ddot_d]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CbfRow {
    pub a: SMatrix<f64, 1, 9>,
    pub b: f64,
    pub h: f64,
    pub hdot: f64,
    /// Vehicle SQ index and obstacle index.
    pub pair: (usize, usize),
}

/// Warm-start memory of the planar closest pairs used to pick proxies each tick.
#[derive(Clone, Debug, Default)]
pub struct ProxyTracker {
    normals: Vec<Option<f64>>,
}

impl ProxyTracker {
    pub fn new() -> Self {
        ProxyTracker::default()
    }

    /// Vehicle-side proxy angle for every pair, ordered by `(i, j)`, and the planar gaps.
    pub fn refresh(&mut self, state: &VehicleState, geom: &VehicleGeometry, obstacles: &[Obstacle]) -> Vec<(f64, f64)> {
        let m = obstacles.len();
        let z = ZSys::new(state.q[0], state.q[1], state.q[5], state.theta[0], state.theta[2]);
        let sqs = vehicle_sq_poses(&z, geom);
        if self.normals.len() != sqs.len() * m {
            self.normals = vec![None; sqs.len() * m];
        }
        let mut out = Vec::with_capacity(sqs.len() * m);
        for (i, sq) in sqs.iter().enumerate() {
            for (j, ob) in obstacles.iter().enumerate() {
                let slot = i * m + j;
                let c = match self.normals[slot] {
                    Some(a) => closest_pair_warm(sq, &ob.footprint, a, DEFAULT_TOL, DEFAULT_MAX_ITER),
                    None => closest_pair(sq, &ob.footprint, &ProxyPair::facing(sq, &ob.footprint), DEFAULT_TOL, DEFAULT_MAX_ITER),
                };
                self.normals[slot] = Some(c.normal_angle);
                out.push((c.proxies.gamma_i, c.gap));
            }
        }
        out
    }
}

/// Barrier value and its first two time derivatives' ingredients for one pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairBarrier {
    pub h: f64,
    pub grad: Vector3<f64>,
    pub hess: Matrix3<f64>,
    pub dx: Vector3<f64>,
    pub dx_dot: Vector3<f64>,
    /// `(dX)'' = a_dx [q''; theta''] + b_dx`.
    pub a_dx: SMatrix<f64, 3, 9>,
    pub b_dx: Vector3<f64>,
}

/// Barrier data for vehicle SQ `part` against `obstacle`, with the proxy at angle `gamma_i`.
pub fn pair_barrier(
    state: &VehicleState,
    geom: &VehicleGeometry,
    part: usize,
    gamma_i: f64,
    obstacle: &Superquadric3,
) -> Result<PairBarrier> {
    let p = geom.parts()[part];
    let shape = Superquadric2::new(p.a1, p.a2, p.eps, crate::geometry::Pose2::identity())?;
    let local: Vector2<f64> = p.local.translation + shape.proxy_point_body(gamma_i);
    let k = point_kinematics(state, geom, p.attachment, &local)?;
    let rjt = obstacle.rotation().transpose();
    let dx = rjt * (k.pos - obstacle.translation());
    let (h, grad, hess) = h_co_derivs(&dx, obstacle)?;
    Ok(PairBarrier {
        h,
        grad,
        hess,
        dx,
        dx_dot: rjt * k.vel,
        a_dx: rjt * k.jac,
        b_dx: rjt * k.bias,
    })
}

/// Assembles the barrier row for one pair under the inner-loop closed-form acceleration.
pub fn barrier_row(
    pb: &PairBarrier,
    state: &VehicleState,
    q_d: &Vector6<f64>,
    gains: &GainSet,
    params: &SafetyParams,
    pair: (usize, usize),
) -> CbfRow {
    let ga = pb.grad.transpose() * pb.a_dx;
    let mut blk = SMatrix::<f64, 9, 9>::identity();
    blk.fixed_view_mut::<6, 6>(0, 0).copy_from(gains.kd());
    let a = -(ga * blk);
    let e = position_error(q_d, &state.q);
    let drift6: Vector6<f64> = -(gains.kd() * state.qdot) + gains.kp() * e;
    let mut drift = SVector::<f64, 9>::zeros();
    drift.fixed_rows_mut::<6>(0).copy_from(&drift6);
    let hdot = pb.grad.dot(&pb.dx_dot);
    let alpha = params.alpha_co;
    let b = (ga * drift)[0]
        + pb.grad.dot(&pb.b_dx)
        + pb.dx_dot.dot(&(pb.hess * pb.dx_dot))
        + 2.0 * alpha * hdot
        + alpha * alpha * pb.h;
    CbfRow { a, b, h: pb.h, hdot, pair }
}

/// `q_d - q` with the yaw residual wrapped.
pub fn position_error(q_d: &Vector6<f64>, q: &Vector6<f64>) -> Vector6<f64> {
    let mut e = q_d - q;
    e[5] = crate::math::wrap_angle(e[5]);
    e
}

/// Flags for pairs whose barrier could not be formed this tick.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RowReport {
    pub rows: Vec<CbfRow>,
    pub dropped: Vec<(usize, usize)>,
    pub min_h: f64,
    pub min_gap: f64,
}

/// Barrier rows for every vehicle/obstacle pair, sorted by `(i, j)`.
pub fn cbf_rows(
    state: &VehicleState,
    q_d: &Vector6<f64>,
    obstacles: &[Obstacle],
    geom: &VehicleGeometry,
    tracker: &mut ProxyTracker,
    gains: &GainSet,
    params: &SafetyParams,
) -> RowReport {
    let m = obstacles.len();
    let proxies = tracker.refresh(state, geom, obstacles);
    let mut rep = RowReport {
        min_h: f64::INFINITY,
        min_gap: f64::INFINITY,
        ..RowReport::default()
    };
    for (slot, &(gamma_i, gap)) in proxies.iter().enumerate() {
        let pair = (slot / m, slot % m);
        rep.min_gap = rep.min_gap.min(gap);
        match pair_barrier(state, geom, pair.0, gamma_i, &obstacles[pair.1].solid) {
            Ok(pb) => {
                rep.min_h = rep.min_h.min(pb.h);
                rep.rows.push(barrier_row(&pb, state, q_d, gains, params, pair));
            }
            Err(_) => rep.dropped.push(pair),
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2;
    use crate::math::rot_zyx;
    use proptest::prelude::*;

    fn sphere(r: f64) -> Superquadric3 {
        Superquadric3::new(Vector3::repeat(r), 1.0, 1.0, Matrix3::identity(), Vector3::zeros()).unwrap()
    }

    #[test]
    fn delta_x_examples() {
        let b = Vector3::new(0.1, 0.2, 0.3);
        let i = Matrix3::identity();
        assert_eq!(delta_x(&i, &Vector3::zeros(), &i, &Vector3::zeros(), &b), b);
        let t = Vector3::new(1.0, -2.0, 0.5);
        assert_eq!(delta_x(&i, &Vector3::zeros(), &i, &t, &b), t + b);
    }

    #[test]
    fn h_co_examples() {
        let s = sphere(0.5);
        assert!(h_co(&Vector3::new(0.5, 0.0, 0.0), &s).unwrap().abs() < 1e-15);
        assert!((h_co(&Vector3::new(0.0, 0.6, 0.8), &s).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert!(matches!(h_co(&Vector3::zeros(), &s), Err(Error::Domain(_))));
    }

    #[test]
    fn h_co_sign_agrees_with_inside_outside() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let ob = Superquadric3::new(Vector3::new(0.4, 0.3, 1.0), 0.25, 0.6, rot_zyx(&Vector3::new(0.0, 0.0, 0.4)), Vector3::new(0.2, 0.1, 1.0)).unwrap();
        for _ in 0..1000 {
            let p = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-0.5..2.5));
            let dx = ob.rotation().transpose() * (p - ob.translation());
            let h = h_co(&dx, &ob).unwrap();
            let f = ob.inside_outside(&p).unwrap();
            assert_eq!(h > 0.0, f > 0.0, "h {h} f {f}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn h_co_derivatives_match_fd(
            x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0,
            e1 in 0.3f64..1.8, e2 in 0.3f64..1.8,
        ) {
            let ob = Superquadric3::new(Vector3::new(0.4, 0.3, 0.5), e1, e2, Matrix3::identity(), Vector3::zeros()).unwrap();
            let dx = Vector3::new(x, y, z);
            prop_assume!(dx.iter().all(|v| v.abs() > 0.02));
            let (h, g, hs) = h_co_derivs(&dx, &ob).unwrap();
            let step = 1e-6;
            for k in 0..3 {
                let mut p = dx; p[k] += step;
                let mut m = dx; m[k] -= step;
                let fd = (h_co(&p, &ob).unwrap() - h_co(&m, &ob).unwrap()) / (2.0 * step);
                prop_assert!((fd - g[k]).abs() <= 1e-4 * g.norm().max(1e-3));
                let (_, gp, _) = h_co_derivs(&p, &ob).unwrap();
                let (_, gm, _) = h_co_derivs(&m, &ob).unwrap();
                let col = (gp - gm) / (2.0 * step);
                prop_assert!((col - hs.column(k)).norm() <= 1e-4 * hs.norm().max(1e-3));
            }
            prop_assert!(h.is_finite());
        }
    }

    #[test]
    fn far_obstacle_row_is_inactive() {
        let geom = VehicleGeometry::default();
        let fp = Superquadric2::new(0.3, 0.3, 1.0, Pose2::new(0.0, 20.0, 0.0)).unwrap();
        let obs = vec![Obstacle::extruded(fp, 3.0, 0.25).unwrap()];
        let st = VehicleState {
            q: Vector6::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0),
            ..VehicleState::default()
        };
        let mut tr = ProxyTracker::new();
        let rep = cbf_rows(&st, &st.q, &obs, &geom, &mut tr, &GainSet::default(), &SafetyParams::default());
        assert_eq!(rep.rows.len(), 8);
        for r in &rep.rows {
            assert!(r.hdot.abs() < 1e-12);
            assert!(r.b > 25.0 * r.h * 0.999);
            // Any bounded command satisfies the row.
            assert!(r.a.abs().sum() * 10.0 + SafetyParams::default().sigma_co < r.b);
        }
        assert!(rep.min_gap > 18.0);
    }
}
