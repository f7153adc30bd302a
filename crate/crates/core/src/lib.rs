//! Planning and operations models for battery-swapping networks serving
//! electric heavy-duty trucks, with fast-charging baselines for comparison.

pub mod energy;
pub mod fixtures;
pub mod metrics;
pub mod milp;
pub mod netdecomp;
pub mod scenario;
pub mod signals;
pub mod solver;
pub mod trips;
