//! State primitives shared by every simulator.

mod circle;
mod interval;
mod partition;
mod seed;

pub use circle::{arc_distance, ccw_distance, CirclePos, DELTA_MIN, TAU};
pub use interval::{Arc, IntervalSet};
pub use partition::Partition;
pub use seed::{SeedSpec, StreamRng};

pub(crate) use circle::{resort_cyclic, wrap};
