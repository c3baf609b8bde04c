//! Dense convex QP: minimize `0.5 x'Hx + g'x` subject to `Ax <= b`.
//!
//! Dual active-set method after Goldfarb and Idnani. Starting from the
//! unconstrained minimizer, the most violated row (lowest index on ties) enters
//! the working set; rows whose multipliers would turn negative are dropped via
//! partial steps. The objective is non-decreasing across iterations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const ROW_CAP: usize = 64;
const REGULARIZATION: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct QpProblem {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl QpProblem {
    pub fn new(h: DMatrix<f64>, g: DVector<f64>, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let n = g.len();
        if h.nrows() != n || h.ncols() != n {
            return Err(Error::Dimension(format!("H is {}x{}, expected {n}x{n}", h.nrows(), h.ncols())));
        }
        if a.ncols() != n && a.nrows() > 0 {
            return Err(Error::Dimension(format!("A has {} columns, expected {n}", a.ncols())));
        }
        if a.nrows() != b.len() {
            return Err(Error::Dimension(format!("A has {} rows but b has {}", a.nrows(), b.len())));
        }
        if a.nrows() > ROW_CAP {
            return Err(Error::Dimension(format!("{} rows exceed the cap of {ROW_CAP}", a.nrows())));
        }
        Ok(QpProblem { h, g, a, b })
    }

    /// Problem without inequality rows.
    pub fn unconstrained(h: DMatrix<f64>, g: DVector<f64>) -> Result<Self> {
        let n = g.len();
        Self::new(h, g, DMatrix::zeros(0, n), DVector::zeros(0))
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.g.dot(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Clone, Debug)]
pub struct KktResiduals {
    pub primal: f64,
    pub stationarity: f64,
    pub complementarity: f64,
}

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub status: QpStatus,
    pub duals: DVector<f64>,
    pub iterations: usize,
    /// Rows in the final working set, in insertion order.
    pub active: Vec<usize>,
    pub regularized: bool,
    pub objective: f64,
    pub kkt: KktResiduals,
    /// Objective after each accepted step; filled only when tracing is enabled.
    pub trace: Vec<f64>,
}

pub fn kkt_residuals(p: &QpProblem, x: &DVector<f64>, duals: &DVector<f64>) -> KktResiduals {
    let ax = &p.a * x;
    let mut primal = 0.0f64;
    let mut comp = 0.0f64;
    for i in 0..p.b.len() {
        let v = ax[i] - p.b[i];
        primal = primal.max(v);
        comp = comp.max((duals[i] * v).abs());
    }
    let stat = &p.h * x + &p.g + p.a.transpose() * duals;
    KktResiduals {
        primal,
        stationarity: stat.norm(),
        complementarity: comp,
    }
}

/// Solver with warm-start memory of the previous working set.
#[derive(Clone, Debug)]
pub struct QpSolver {
    pub tol: f64,
    pub max_iter: usize,
    pub trace: bool,
    warm: Vec<usize>,
}

impl Default for QpSolver {
    fn default() -> Self {
        QpSolver {
            tol: 1e-6,
            max_iter: 200,
            trace: false,
            warm: Vec::new(),
        }
    }
}

/// Stateless convenience wrapper.
pub fn solve(p: &QpProblem, tol: f64, max_iter: usize) -> Result<QpSolution> {
    let mut s = QpSolver {
        tol,
        max_iter,
        ..QpSolver::default()
    };
    s.solve(p)
}

struct Factored {
    hinv: DMatrix<f64>,
    regularized: bool,
}

fn factor(h: &DMatrix<f64>) -> Result<Factored> {
    let n = h.nrows();
    let sym = (h + h.transpose()) * 0.5;
    if (h - &sym).amax() > 1e-10 * h.amax().max(1.0) {
        return Err(Error::Domain("QP Hessian is not symmetric".into()));
    }
    let min_eig = if n == 0 {
        1.0
    } else {
        sym.clone().symmetric_eigenvalues().min()
    };
    let (hh, regularized) = if min_eig <= REGULARIZATION {
        if min_eig < -1e-8 * sym.amax().max(1.0) {
            return Err(Error::Domain(format!("QP Hessian is indefinite (min eigenvalue {min_eig:.3e})")));
        }
        (sym + DMatrix::identity(n, n) * REGULARIZATION, true)
    } else {
        (sym, false)
    };
    let chol = hh
        .cholesky()
        .ok_or_else(|| Error::Singular("QP Hessian factorization failed".into()))?;
    Ok(Factored {
        hinv: chol.inverse(),
        regularized,
    })
}

/// Solves the equality-constrained problem on `set`; returns `None` if the rows are dependent.
fn solve_eqp(p: &QpProblem, hinv: &DMatrix<f64>, set: &[usize]) -> Option<(DVector<f64>, DVector<f64>)> {
    let x0 = -(hinv * &p.g);
    if set.is_empty() {
        return Some((x0, DVector::zeros(0)));
    }
    let n = p.g.len();
    let aw = DMatrix::from_fn(set.len(), n, |r, c| p.a[(set[r], c)]);
    let s = &aw * hinv * aw.transpose();
    let rhs = &aw * &x0 - DVector::from_fn(set.len(), |r, _| p.b[set[r]]);
    let lu = s.lu();
    let lam = lu.solve(&rhs)?;
    if !lam.iter().all(|v| v.is_finite()) {
        return None;
    }
    let x = &x0 - hinv * aw.transpose() * &lam;
    Some((x, lam))
}

impl QpSolver {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        QpSolver {
            tol,
            max_iter,
            ..QpSolver::default()
        }
    }

    pub fn reset(&mut self) {
        self.warm.clear();
    }

    pub fn solve(&mut self, p: &QpProblem) -> Result<QpSolution> {
        let n = p.g.len();
        let m = p.b.len();
        if p.h.nrows() != n || p.a.nrows() != m || (m > 0 && p.a.ncols() != n) {
            return Err(Error::Dimension("inconsistent QP dimensions".into()));
        }
        if m > ROW_CAP {
            return Err(Error::Dimension(format!("{m} rows exceed the cap of {ROW_CAP}")));
        }
        let fac = factor(&p.h)?;

        if let Some(sol) = self.try_warm(p, &fac) {
            return Ok(sol);
        }
        let sol = self.dual_active_set(p, &fac);
        self.warm = if sol.status == QpStatus::Optimal {
            sol.active.clone()
        } else {
            Vec::new()
        };
        Ok(sol)
    }

    fn violation_tol(&self, p: &QpProblem, i: usize, x: &DVector<f64>) -> f64 {
        let scale = p.a.row(i).norm() * x.norm() + p.b[i].abs();
        1e-12 * scale.max(1.0)
    }

    fn try_warm(&self, p: &QpProblem, fac: &Factored) -> Option<QpSolution> {
        let m = p.b.len();
        if self.warm.is_empty() || self.warm.iter().any(|&i| i >= m) {
            return None;
        }
        let (x, lam) = solve_eqp(p, &fac.hinv, &self.warm)?;
        if lam.iter().any(|&l| l < 0.0) {
            return None;
        }
        for i in 0..m {
            if p.a.row(i).dot(&x.transpose()) - p.b[i] > self.violation_tol(p, i, &x) {
                return None;
            }
        }
        let mut duals = DVector::zeros(m);
        for (k, &i) in self.warm.iter().enumerate() {
            duals[i] = lam[k];
        }
        let kkt = kkt_residuals(p, &x, &duals);
        if kkt.primal > 1e-7 || kkt.stationarity > self.tol || kkt.complementarity > self.tol {
            return None;
        }
        Some(QpSolution {
            objective: p.objective(&x),
            x,
            status: QpStatus::Optimal,
            duals,
            iterations: 0,
            active: self.warm.clone(),
            regularized: fac.regularized,
            kkt,
            trace: Vec::new(),
        })
    }

    fn dual_active_set(&self, p: &QpProblem, fac: &Factored) -> QpSolution {
        let n = p.g.len();
        let m = p.b.len();
        let hinv = &fac.hinv;
        let mut x = -(hinv * &p.g);
        let mut active: Vec<usize> = Vec::new();
        let mut u: Vec<f64> = Vec::new();
        let mut iterations = 0;
        let mut trace = Vec::new();
        if self.trace {
            trace.push(p.objective(&x));
        }
        let status = 'outer: loop {
            // Most violated inactive row, lowest index on ties.
            let mut pick: Option<(usize, f64)> = None;
            for i in 0..m {
                if active.contains(&i) {
                    continue;
                }
                let v = p.a.row(i).dot(&x.transpose()) - p.b[i];
                if v > self.violation_tol(p, i, &x) && pick.is_none_or(|(_, best)| v > best) {
                    pick = Some((i, v));
                }
            }
            let Some((row, _)) = pick else {
                break QpStatus::Optimal;
            };
            let np = -p.a.row(row).transpose();
            let mut u_plus = u.clone();
            u_plus.push(0.0);
            loop {
                iterations += 1;
                if iterations > self.max_iter {
                    break 'outer QpStatus::MaxIter;
                }
                let k_act = active.len();
                let (z, r) = if k_act == 0 {
                    (hinv * &np, DVector::zeros(0))
                } else {
                    let nmat = DMatrix::from_fn(n, k_act, |rr, c| -p.a[(active[c], rr)]);
                    let hn = hinv * &nmat;
                    let s = nmat.transpose() * &hn;
                    let r = match s.lu().solve(&(hn.transpose() * &np)) {
                        Some(r) => r,
                        None => break 'outer QpStatus::Infeasible,
                    };
                    (hinv * &np - &hn * &r, r)
                };
                // Partial step limited by multipliers of the working set.
                let mut t1 = f64::INFINITY;
                let mut drop = None;
                for (idx, &rv) in r.iter().enumerate() {
                    if rv > 1e-14 {
                        let ratio = u_plus[idx] / rv;
                        if ratio < t1 {
                            t1 = ratio;
                            drop = Some(idx);
                        }
                    }
                }
                let s_p = p.b[row] - p.a.row(row).dot(&x.transpose());
                let zn = z.dot(&np);
                let t2 = if zn > 1e-14 * np.norm_squared().max(1e-300) {
                    -s_p / zn
                } else {
                    f64::INFINITY
                };
                if t1.is_infinite() && t2.is_infinite() {
                    break 'outer QpStatus::Infeasible;
                }
                let t = t1.min(t2);
                if t2.is_finite() {
                    x += &z * t;
                }
                for idx in 0..k_act {
                    u_plus[idx] -= t * r[idx];
                }
                u_plus[k_act] += t;
                if self.trace {
                    trace.push(p.objective(&x));
                }
                if t2 <= t1 {
                    active.push(row);
                    u = u_plus;
                    break;
                }
                let d = drop.expect("partial step has a blocking row");
                active.remove(d);
                u_plus.remove(d);
            }
        };

        let mut duals = DVector::zeros(m);
        if status == QpStatus::Optimal {
            // Re-solve on the final working set to remove accumulated update error.
            if let Some((xs, lam)) = solve_eqp(p, hinv, &active) {
                if lam.iter().all(|&l| l >= -1e-12) {
                    x = xs;
                    u = lam.iter().map(|l| l.max(0.0)).collect();
                }
            }
            for (k, &i) in active.iter().enumerate() {
                duals[i] = u[k];
            }
        }
        let kkt = kkt_residuals(p, &x, &duals);
        QpSolution {
            objective: p.objective(&x),
            x,
            status,
            duals,
            iterations,
            active,
            regularized: fac.regularized,
            kkt,
            trace,
        }
    }
}
