use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::vehicle::VehicleGeometry;
use crate::error::{Error, Result};
use crate::geometry::StiffnessParams;

/// How the proxy variables evolve during integration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxyMode {
    /// Re-solve the closest pair at every right-hand-side evaluation.
    #[default]
    QuasiStatic,
    /// Integrate the gradient flow `dGamma/ds = -alpha dW/dGamma` alongside `z`.
    Flow,
}

/// Orientation assigned to the attractor heading at each waypoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadingMode {
    /// Along the path direction, averaged at interior waypoints.
    #[default]
    Tangent,
    /// Along the Voronoi edge normal, sign chosen closest to the previous heading.
    EdgeNormal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerParams {
    /// Row-major attractor stiffness.
    pub k_tgt: [[f64; 3]; 3],
    pub eta: f64,
    pub alpha: f64,
    pub stiffness: StiffnessParams,
    /// Task duration [s].
    pub t_d: f64,
    /// Flight altitude [m].
    pub h_t: f64,
    pub vehicle: VehicleGeometry,
    /// Number of RK4 steps over `s in [0, 1]`.
    pub n_s: usize,
    /// Eigenvalue floor applied to the configuration Hessian before inversion.
    pub hessian_floor: f64,
    /// Largest admissible condition number of the floored Hessian.
    pub max_condition: f64,
    /// Gradient norm that ends the pre-relaxation.
    pub relax_tol: f64,
    pub relax_max_steps: usize,
    pub proxy_mode: ProxyMode,
    pub heading: HeadingMode,
    /// Solution-path points closer than this to the previous attractor waypoint are skipped [m].
    pub waypoint_spacing: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            k_tgt: [[1600.0, 0.0, 0.0], [0.0, 1600.0, 0.0], [0.0, 0.0, 800.0]],
            eta: 20.0,
            alpha: 20.0,
            stiffness: StiffnessParams::default(),
            t_d: 30.0,
            h_t: 1.0,
            vehicle: VehicleGeometry::default(),
            n_s: 400,
            hessian_floor: 1.0,
            max_condition: 1e10,
            relax_tol: 1e-4,
            relax_max_steps: 2000,
            proxy_mode: ProxyMode::QuasiStatic,
            heading: HeadingMode::Tangent,
            waypoint_spacing: 0.05,
        }
    }
}

impl PlannerParams {
    pub fn k_tgt_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.k_tgt[r][c])
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k_tgt_matrix();
        if !k.iter().all(|v| v.is_finite()) || (k - k.transpose()).amax() > 1e-12 * k.amax().max(1.0) {
            return Err(Error::validation("planner.k_tgt", "must be symmetric"));
        }
        if k.cholesky().is_none() {
            return Err(Error::validation("planner.k_tgt", "must be positive definite"));
        }
        for (name, v) in [
            ("planner.eta", self.eta),
            ("planner.alpha", self.alpha),
            ("planner.t_d", self.t_d),
            ("planner.hessian_floor", self.hessian_floor),
            ("planner.max_condition", self.max_condition),
            ("planner.relax_tol", self.relax_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(name, "must be positive"));
            }
        }
        if !(self.waypoint_spacing >= 0.0 && self.waypoint_spacing.is_finite()) {
            return Err(Error::validation("planner.waypoint_spacing", "must be non-negative"));
        }
        if !self.h_t.is_finite() {
            return Err(Error::validation("planner.h_t", "must be finite"));
        }
        if self.n_s == 0 {
            return Err(Error::validation("planner.n_s", "must be at least 1"));
        }
        self.stiffness
            .validate()
            .map_err(|e| Error::validation("planner.stiffness", e.to_string()))?;
        self.vehicle.validate()
    }
}
