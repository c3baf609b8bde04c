//! Whole-body motion planning and safety-critical control for a planar aerial
//! manipulator whose bodies and obstacles are modelled as superquadrics.
//!
//! The pipeline runs geometry, then a maximum-clearance Voronoi graph, then an
//! equilibrium-manifold trajectory, then a closed-loop 6-DOF simulation with a
//! disturbance-observer inner loop and a barrier-function QP outer loop.

pub mod control;
pub mod dynamics;
pub mod error;
pub mod format;
pub mod geometry;
pub mod harness;
pub mod math;
pub mod planner;
pub mod qp;
pub mod voronoi;

pub use error::{Error, Result};
