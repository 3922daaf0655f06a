//! Edge placement, UAV tour energy planning, and split-learning simulation
//! for sensor fields on farms.

pub mod deployment;
pub mod energy;
pub mod field;
pub mod harness;
pub mod planner;
pub mod scaling;
pub mod split;
pub mod tsp;
