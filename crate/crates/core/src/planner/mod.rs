//! Equilibrium-manifold local planner.
//!
//! The vehicle (six blade discs and two arm links) and the obstacles interact
//! through proxy springs whose stiffness rises sharply inside a safety margin.
//! An attractor drags the end effector along the Voronoi solution path and the
//! configuration follows the equilibrium of the total potential.

mod integrate;
mod params;
mod potential;
mod schedule;
mod vehicle;

pub use integrate::{
    integrate_em, min_gap, potential_profile, relax, target_pose, PlannedTrajectory, PlannerState, TargetPose,
    TrajectorySample, TrajectoryStatus,
};
pub use params::{HeadingMode, PlannerParams, ProxyMode};
pub use potential::{
    derivs, gamma_index, gamma_len, grad_gamma, grad_w, hessians_w, w_proxy, w_target, w_total, AttractorPose, Derivs,
    H_FD_GRAD, H_FD_HESS,
};
pub use schedule::Schedule;
pub use vehicle::{
    forward_kinematics_eef, heading_jacobian, vehicle_sq_poses, Attachment, ChainFrames, PartShape, PointJacobian,
    VehicleGeometry, ZSys, IDX_PSI, IDX_THETA1, IDX_THETA3, N_BLADES, N_VEHICLE_SQ,
};
