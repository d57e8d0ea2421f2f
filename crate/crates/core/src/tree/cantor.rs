use serde::{Deserialize, Serialize};

use super::dendrogram::Dendrogram;
use super::energy::{capacity_estimate, line_capacity, Gauge};
use super::simplex::MinimizerOptions;
use crate::error::{invalid, Result};
use crate::formulas::cantor_atoms;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityRatio {
    pub beta: f64,
    pub tree_capacity: f64,
    pub cantor_capacity: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorComparison {
    pub cantor_level: u32,
    pub rows: Vec<CapacityRatio>,
}

impl CantorComparison {
    /// Largest ratio divided by the smallest.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .rows
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.ratio), hi.max(r.ratio)));
        hi / lo
    }

    /// True when every ratio lies in `[lo, hi]`.
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.rows.iter().all(|r| r.ratio >= lo && r.ratio <= hi)
    }
}

/// Largest Cantor level compared densely.
const MAX_LEVEL: u32 = 10;

/// Capacity of the tree divided by that of the level-`k` Cantor atoms, for
/// each `β`. Without an explicit level, `k ≈ log₂ n` so both sides have about
/// as many points.
pub fn compare_to_cantor(d: &Dendrogram, betas: &[f64], level: Option<u32>) -> Result<CantorComparison> {
    if betas.is_empty() {
        return invalid("need at least one beta");
    }
    let n = d.leaf_count().max(2);
    let level = level.unwrap_or_else(|| ((n as f64).log2().round() as u32).clamp(1, MAX_LEVEL));
    if !(1..=MAX_LEVEL).contains(&level) {
        return invalid(format!("cantor level must be in 1..={MAX_LEVEL}"));
    }
    let atoms = cantor_atoms(level)?;
    let rows = betas
        .iter()
        .map(|&beta| {
            let g = Gauge::power(beta)?;
            let tree_capacity = capacity_estimate(d, &g)?;
            let cantor_capacity = line_capacity(&atoms, &g, MinimizerOptions::default())?;
            Ok(CapacityRatio {
                beta,
                tree_capacity,
                cantor_capacity,
                ratio: tree_capacity / cantor_capacity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CantorComparison {
        cantor_level: level,
        rows,
    })
}
