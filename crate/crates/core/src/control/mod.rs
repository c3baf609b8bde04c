//! Closed-loop control: disturbance observer, inner PD loop on rotor thrusts and an outer
//! barrier-function QP that keeps every vehicle part clear of the extruded obstacles.

mod cbf;
mod controller;
mod dob;
mod gains;
mod inner;
mod kinematics;
mod outer;

pub use cbf::{
    barrier_row, cbf_rows, delta_x, h_co, h_co_derivs, pair_barrier, position_error, CbfRow, Obstacle, PairBarrier,
    ProxyTracker, RowReport,
};
pub use controller::{Controller, TickOutput};
pub use dob::{dob_settling_time, dob_update, DobState, Vector12};
pub use gains::{GainSet, SafetyParams};
pub use inner::{inner_loop, thrust_limit_rows, ThrustRows};
pub use kinematics::{body_point, point_kinematics, point_position, ArmPoint, PointKinematics};
pub use outer::{outer_loop, outer_problem, reference_command, select_rows, OuterSolution, Vector9, MAX_BARRIER_ROWS};
