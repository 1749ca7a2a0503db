//! Topological-map navigation on 2-D occupancy grids: ray-cast sensing,
//! waypoint prediction, online topological mapping, graph-aware planning,
//! a rotate-then-forward controller with deadlock escape, and the standard
//! navigation metrics.

pub mod controller;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod planner;
pub mod topomap;
pub mod waypoint;
pub mod world;

pub use error::{Error, Result};
pub use geometry::Point;
