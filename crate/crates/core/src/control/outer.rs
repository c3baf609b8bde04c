//! Safety filter: a QP over `x = [q_dot_d; theta_ddot_d]` that tracks the planned target while
//! honoring the thrust band and the barrier rows.

use nalgebra::{DMatrix, DVector, SVector, Vector3, Vector6};

use super::cbf::{position_error, CbfRow};
use super::gains::SafetyParams;
use super::inner::ThrustRows;
use crate::error::Result;
use crate::qp::{QpProblem, QpSolver, QpStatus, ROW_CAP};

pub type Vector9 = SVector<f64, 9>;

/// Thrust rows always enter; barrier rows fill what is left of the row cap.
pub const MAX_BARRIER_ROWS: usize = ROW_CAP - 12;

/// Unconstrained optimum of the outer QP.
pub fn reference_command(
    q_t: &Vector6<f64>,
    theta_t: &Vector3<f64>,
    q_d: &Vector6<f64>,
    theta_d: &Vector3<f64>,
    thetadot_d: &Vector3<f64>,
    params: &SafetyParams,
) -> Vector9 {
    let qdot = params.gamma_q * position_error(q_t, q_d);
    let g = params.gamma_theta;
    let thdd = -(g * thetadot_d) * 2.0 + g * g * (theta_t - theta_d);
    let mut x = Vector9::zeros();
    x.fixed_rows_mut::<6>(0).copy_from(&qdot);
    x.fixed_rows_mut::<3>(6).copy_from(&thdd);
    x
}

/// Keeps the `cap` rows with the smallest barrier value, in their original order.
pub fn select_rows(rows: &[CbfRow], cap: usize) -> (Vec<&CbfRow>, usize) {
    if rows.len() <= cap {
        return (rows.iter().collect(), 0);
    }
    let mut idx: Vec<usize> = (0..rows.len()).collect();
    idx.sort_by(|&a, &b| rows[a].h.total_cmp(&rows[b].h).then(a.cmp(&b)));
    idx.truncate(cap);
    idx.sort_unstable();
    (idx.into_iter().map(|i| &rows[i]).collect(), rows.len() - cap)
}

/// Builds the outer QP. Returns the problem and the number of barrier rows left out.
pub fn outer_problem(x_ref: &Vector9, thrust: &ThrustRows, barriers: &[CbfRow], params: &SafetyParams) -> Result<(QpProblem, usize)> {
    let mut w = DMatrix::<f64>::zeros(9, 9);
    w.view_mut((0, 0), (6, 6)).copy_from(&params.q_qdot);
    w.view_mut((6, 6), (3, 3)).copy_from(&params.q_thetaddot);
    let h = &w * 2.0;
    let xr = DVector::from_column_slice(x_ref.as_slice());
    let g = -(&h * xr);
    let (kept, skipped) = select_rows(barriers, MAX_BARRIER_ROWS);
    let m = 12 + kept.len();
    let mut a = DMatrix::<f64>::zeros(m, 9);
    let mut b = DVector::<f64>::zeros(m);
    for r in 0..6 {
        for c in 0..6 {
            a[(r, c)] = thrust.a_lo[(r, c)];
            a[(6 + r, c)] = thrust.a_hi[(r, c)];
        }
        b[r] = thrust.b_lo[r];
        b[6 + r] = thrust.b_hi[r];
    }
    for (k, row) in kept.iter().enumerate() {
        for c in 0..9 {
            a[(12 + k, c)] = row.a[(0, c)];
        }
        b[12 + k] = row.b - params.sigma_co;
    }
    Ok((QpProblem::new(h, g, a, b)?, skipped))
}

/// Result of one outer-loop solve.
#[derive(Clone, Debug, PartialEq)]
pub struct OuterSolution {
    pub x: Vector9,
    pub status: QpStatus,
    /// The solver failed and `x` is the damped previous command.
    pub fallback: bool,
    pub skipped_rows: usize,
    pub iterations: usize,
}

/// Solves the outer QP; on infeasibility or iteration exhaustion returns `0.5 * previous`.
pub fn outer_loop(
    solver: &mut QpSolver,
    x_ref: &Vector9,
    thrust: &ThrustRows,
    barriers: &[CbfRow],
    params: &SafetyParams,
    previous: &Vector9,
) -> Result<OuterSolution> {
    let (p, skipped) = outer_problem(x_ref, thrust, barriers, params)?;
    let sol = solver.solve(&p)?;
    let ok = sol.status == QpStatus::Optimal && sol.x.iter().all(|v| v.is_finite());
    if ok {
        Ok(OuterSolution {
            x: Vector9::from_column_slice(sol.x.as_slice()),
            status: sol.status,
            fallback: false,
            skipped_rows: skipped,
            iterations: sol.iterations,
        })
    } else {
        solver.reset();
        Ok(OuterSolution {
            x: previous * 0.5,
            status: sol.status,
            fallback: true,
            skipped_rows: skipped,
            iterations: sol.iterations,
        })
    }
}
