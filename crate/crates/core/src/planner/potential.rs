use nalgebra::{DVector, Matrix5, Matrix5x3, Vector2, Vector3, Vector5};

use super::params::PlannerParams;
use super::vehicle::{heading_jacobian, vehicle_sq_poses, Attachment, PointJacobian, ZSys, N_VEHICLE_SQ};
use crate::error::{Error, Result};
use crate::geometry::Superquadric2;
use crate::math::wrap_angle;

/// Attractor pose `[u_x, u_y, u_theta]`.
pub type AttractorPose = Vector3<f64>;

/// Step for finite-difference gradients.
pub const H_FD_GRAD: f64 = 1e-6;
/// Step for finite-difference Hessians.
pub const H_FD_HESS: f64 = 1e-4;

/// Index of `gamma_i` for vehicle SQ `i` and obstacle `j`; `gamma_j` follows it.
#[inline]
pub fn gamma_index(i: usize, j: usize, n_obstacles: usize) -> usize {
    2 * (i * n_obstacles + j)
}

pub fn gamma_len(n_obstacles: usize) -> usize {
    2 * N_VEHICLE_SQ * n_obstacles
}

/// Value and derivatives of `W` with the proxy variables held fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivs {
    pub w: f64,
    pub grad: Vector5<f64>,
    pub hess: Matrix5<f64>,
    /// `d2W / dz du`.
    pub huz: Matrix5x3<f64>,
}

fn pair_value(vehicle_sq: &Superquadric2, gi: f64, obstacle: &Superquadric2, gj: f64, p: &PlannerParams) -> f64 {
    let pi = vehicle_sq.proxy_point(gi);
    let pj = obstacle.proxy_point(gj);
    let d = obstacle.inside_outside_body(&obstacle.pose().to_body(&pi));
    0.5 * p.stiffness.value(d - p.stiffness.d_prime) * (pi - pj).norm_squared()
}

fn check_gamma(gamma: &[f64], n_obstacles: usize) -> Result<()> {
    if gamma.len() != gamma_len(n_obstacles) {
        return Err(Error::Dimension(format!(
            "proxy vector has {} entries, expected {}",
            gamma.len(),
            gamma_len(n_obstacles)
        )));
    }
    Ok(())
}

/// Proxy potential: one spring per vehicle-SQ/obstacle pair with distance-dependent stiffness.
pub fn w_proxy(z: &ZSys, gamma: &[f64], obstacles: &[Superquadric2], params: &PlannerParams) -> Result<f64> {
    let m = obstacles.len();
    check_gamma(gamma, m)?;
    let sqs = vehicle_sq_poses(z, &params.vehicle);
    let mut w = 0.0;
    for (i, sq) in sqs.iter().enumerate() {
        for (j, ob) in obstacles.iter().enumerate() {
            let k = gamma_index(i, j, m);
            w += pair_value(sq, gamma[k], ob, gamma[k + 1], params);
        }
    }
    Ok(w)
}

fn eef_error(z: &ZSys, u: &AttractorPose, params: &PlannerParams) -> Vector3<f64> {
    let (p, h) = super::vehicle::forward_kinematics_eef(z, &params.vehicle);
    Vector3::new(u.x - p.x, u.y - p.y, wrap_angle(u.z - h))
}

/// Attractor spring between the end effector and `u`; the heading residual is wrapped.
pub fn w_target(z: &ZSys, u: &AttractorPose, params: &PlannerParams) -> f64 {
    let e = eef_error(z, u, params);
    0.5 * e.dot(&(params.k_tgt_matrix() * e))
}

pub fn w_total(
    z: &ZSys,
    gamma: &[f64],
    u: &AttractorPose,
    obstacles: &[Superquadric2],
    params: &PlannerParams,
) -> Result<f64> {
    Ok(w_proxy(z, gamma, obstacles, params)? + w_target(z, u, params))
}

/// Analytic value, gradient, Hessian and mixed Hessian of `W` in `z`.
pub fn derivs(
    z: &ZSys,
    gamma: &[f64],
    u: &AttractorPose,
    obstacles: &[Superquadric2],
    params: &PlannerParams,
) -> Result<Derivs> {
    let m = obstacles.len();
    check_gamma(gamma, m)?;
    let geom = &params.vehicle;
    let frames = geom.frames(z);
    let parts = geom.parts();
    let sp = &params.stiffness;
    let mut w = 0.0;
    let mut grad = Vector5::zeros();
    let mut hess = Matrix5::zeros();

    for (i, part) in parts.iter().enumerate() {
        let pose = frames.frame(part.attachment).compose(&part.local);
        let sq = Superquadric2::new(part.a1, part.a2, part.eps, pose)?;
        let centers = frames.rotation_centers(part.attachment);
        for (j, ob) in obstacles.iter().enumerate() {
            let k = gamma_index(i, j, m);
            let pi = sq.proxy_point(gamma[k]);
            let pj = ob.proxy_point(gamma[k + 1]);
            let r = pi - pj;
            let rho = r.norm_squared();
            let (f, gf, hf) = ob.inside_outside_derivs(&pi);
            let d = f - sp.d_prime;
            let (kv, k1, k2) = (sp.value(d), sp.slope(d), sp.curvature(d));
            w += 0.5 * kv * rho;

            let jac = PointJacobian::new(&pi, centers);
            let fa: [f64; 5] = std::array::from_fn(|a| gf.dot(&jac.d1[a]));
            let ra: [f64; 5] = std::array::from_fn(|a| r.dot(&jac.d1[a]));
            for a in 0..5 {
                grad[a] += 0.5 * k1 * fa[a] * rho + kv * ra[a];
            }
            for a in 0..5 {
                for b in a..5 {
                    let pab = jac.d2(&pi, a, b);
                    let fab = jac.d1[a].dot(&(hf * jac.d1[b])) + gf.dot(&pab);
                    let v = 0.5 * k2 * fa[a] * fa[b] * rho
                        + 0.5 * k1 * fab * rho
                        + k1 * (fa[a] * ra[b] + fa[b] * ra[a])
                        + kv * (jac.d1[a].dot(&jac.d1[b]) + r.dot(&pab));
                    hess[(a, b)] += v;
                    if a != b {
                        hess[(b, a)] += v;
                    }
                }
            }
        }
    }

    // Attractor spring.
    let kt = params.k_tgt_matrix();
    let e = eef_error(z, u, params);
    let ke = kt * e;
    w += 0.5 * e.dot(&ke);
    let (p_eef, _) = super::vehicle::forward_kinematics_eef(z, geom);
    let jac = PointJacobian::new(&p_eef, frames.rotation_centers(Attachment::Link2));
    let hj = heading_jacobian(Attachment::Link2);
    // Jacobian of the end-effector pose, 3 x 5.
    let je = nalgebra::Matrix3x5::from_fn(|r, c| if r < 2 { jac.d1[c][r] } else { hj[c] });
    grad -= je.transpose() * ke;
    hess += je.transpose() * kt * je;
    let kp = Vector2::new(ke.x, ke.y);
    for a in 0..5 {
        for b in 0..5 {
            hess[(a, b)] -= kp.dot(&jac.d2(&p_eef, a, b));
        }
    }
    let huz = -je.transpose() * kt;
    Ok(Derivs { w, grad, hess, huz })
}

fn finite_or(w: f64, coordinate: &str) -> Result<f64> {
    crate::error::finite_or(w, &format!("potential stencil at {coordinate}"))
}

/// Central-difference gradients of `W` in `z` and in the proxy variables.
pub fn grad_w(
    z: &ZSys,
    gamma: &[f64],
    u: &AttractorPose,
    obstacles: &[Superquadric2],
    params: &PlannerParams,
) -> Result<(Vector5<f64>, DVector<f64>)> {
    let h = H_FD_GRAD;
    let mut gz = Vector5::zeros();
    for a in 0..5 {
        let (mut zp, mut zm) = (*z, *z);
        zp[a] += h;
        zm[a] -= h;
        let wp = finite_or(w_total(&zp, gamma, u, obstacles, params)?, &format!("z[{a}]"))?;
        let wm = finite_or(w_total(&zm, gamma, u, obstacles, params)?, &format!("z[{a}]"))?;
        gz[a] = (wp - wm) / (2.0 * h);
    }
    Ok((gz, grad_gamma(z, gamma, obstacles, params)?))
}

/// Central-difference gradient of `W_proxy` in the proxy variables; each entry only touches its pair.
pub fn grad_gamma(z: &ZSys, gamma: &[f64], obstacles: &[Superquadric2], params: &PlannerParams) -> Result<DVector<f64>> {
    let m = obstacles.len();
    check_gamma(gamma, m)?;
    let h = H_FD_GRAD;
    let sqs = vehicle_sq_poses(z, &params.vehicle);
    let mut g = DVector::zeros(gamma.len());
    for (i, sq) in sqs.iter().enumerate() {
        for (j, ob) in obstacles.iter().enumerate() {
            let k = gamma_index(i, j, m);
            let (gi, gj) = (gamma[k], gamma[k + 1]);
            let e = |a: f64, b: f64| pair_value(sq, a, ob, b, params);
            let ctx = |c: usize| format!("gamma[{c}]");
            g[k] = (finite_or(e(gi + h, gj), &ctx(k))? - finite_or(e(gi - h, gj), &ctx(k))?) / (2.0 * h);
            g[k + 1] =
                (finite_or(e(gi, gj + h), &ctx(k + 1))? - finite_or(e(gi, gj - h), &ctx(k + 1))?) / (2.0 * h);
        }
    }
    Ok(g)
}

/// Central-difference `d2W/dz2` (symmetrized) and `d2W/du dz`.
pub fn hessians_w(
    z: &ZSys,
    gamma: &[f64],
    u: &AttractorPose,
    obstacles: &[Superquadric2],
    params: &PlannerParams,
) -> Result<(Matrix5<f64>, Matrix5x3<f64>)> {
    let h = H_FD_HESS;
    let w = |z: &ZSys, u: &AttractorPose, c: &str| finite_or(w_total(z, gamma, u, obstacles, params)?, c);
    let mut hzz = Matrix5::zeros();
    for a in 0..5 {
        for b in 0..5 {
            let ctx = format!("z[{a}], z[{b}]");
            let shifted = |sa: f64, sb: f64| {
                let mut zz = *z;
                zz[a] += sa * h;
                zz[b] += sb * h;
                w(&zz, u, &ctx)
            };
            hzz[(a, b)] = (shifted(1.0, 1.0)? - shifted(1.0, -1.0)? - shifted(-1.0, 1.0)? + shifted(-1.0, -1.0)?)
                / (4.0 * h * h);
        }
    }
    let hzz = (hzz + hzz.transpose()) * 0.5;
    let mut huz = Matrix5x3::zeros();
    for a in 0..5 {
        for c in 0..3 {
            let ctx = format!("z[{a}], u[{c}]");
            let shifted = |sa: f64, sc: f64| {
                let mut zz = *z;
                let mut uu = *u;
                zz[a] += sa * h;
                uu[c] += sc * h;
                w(&zz, &uu, &ctx)
            };
            huz[(a, c)] = (shifted(1.0, 1.0)? - shifted(1.0, -1.0)? - shifted(-1.0, 1.0)? + shifted(-1.0, -1.0)?)
                / (4.0 * h * h);
        }
    }
    Ok((hzz, huz))
}
