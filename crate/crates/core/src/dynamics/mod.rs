//! Euler-Lagrange model of the tilted-rotor hexarotor, thrust allocation, and a
//! fixed-step simulator with disturbance injection and tracked arm joints.

mod model;
mod sim;

pub use model::{
    allocation, allocation_inverse, euler_rate_map, euler_rate_map_dot, vee, Allocation, ModelParams, RigidBody,
    PITCH_MARGIN,
};
pub use sim::{accelerations, step, ArmCommand, Disturbance, Integrator, SimOptions, VehicleState, WindProfile};
