//! Deterministic multi-robot frontier exploration on occupancy grids.

pub mod assign;
pub mod frontier;
pub mod gridmap;
pub mod pathdist;
pub mod sensor;
pub mod sim;
pub mod strategies;
pub mod worlds;
pub mod bench;
