//! Superquadric shapes, boundary proxies, contact stiffness and closest-pair queries.

mod closest;
mod stiffness;
mod superquadric;

pub use closest::{closest_pair, closest_pair_warm, ClosestPair, ProxyPair, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use stiffness::{stiffness, StiffnessParams};
pub use superquadric::{Pose2, ProxyAngles3, Superquadric2, Superquadric3};
