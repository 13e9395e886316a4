//! Online mower routing: Dubins geometry, pasture simulation, planners,
//! tour construction, vehicle kinematics and an experiment harness.

pub mod geom;
pub mod harness;
pub mod kinematics;
pub mod planners;
pub mod tsp;
pub mod world;
