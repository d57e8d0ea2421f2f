//! The ultrametric space of coalescence times and its fractal statistics.
//!
//! Two leaves are at distance `τ_ij`, the time their blocks merged. Closed
//! balls of radius `ε` are the blocks alive at time `ε`, so covering numbers
//! are block counts. Energies and capacities are taken with respect to
//! power-law gauges `r ↦ r^{-β}`.

mod cantor;
mod dendrogram;
mod energy;
mod simplex;
mod ultrametric;

pub use cantor::{compare_to_cantor, CantorComparison, CapacityRatio};
pub use dendrogram::{build_dendrogram, synthetic_binary_tree, Dendrogram, DimensionEstimate};
pub use energy::{capacity_estimate, capacity_with, tree_energy, Gauge};
pub use simplex::{project_to_simplex, MinimizerOptions, SimplexMinimum};
pub use ultrametric::UltrametricMatrix;
