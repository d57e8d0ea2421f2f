//! Coalescing and annihilating Brownian motions on the circle.
//!
//! The crate couples three views of the same object: particle systems on the
//! continuum circle `T = R / 2πZ`, their nearest-neighbour analogues on the
//! discrete cycle, and the random ultrametric tree generated by the coalescence
//! times. A look-down particle representation links the coalescing system to a
//! stepping-stone model with infinitely many types.
//!
//! Conventions used throughout:
//!
//! * positions live in `[0, 2π)`; every particle is a standard Brownian motion
//!   (variance `t` after time `t`), so the gap between two independent
//!   particles has variance rate 2;
//! * particle and site indices are zero-based;
//! * every random routine takes either a caller-supplied [`rand::Rng`] or a
//!   [`SeedSpec`], and is deterministic given it.

pub mod continuum;
pub mod error;
pub mod formulas;
pub mod harness;
pub mod lattice;
pub mod lookdown;
pub mod model;
pub mod stats;
pub mod tree;

pub use error::{Error, Result};
pub use model::{
    arc_distance, ccw_distance, Arc, CirclePos, IntervalSet, Partition, SeedSpec, StreamRng,
    DELTA_MIN, TAU,
};
