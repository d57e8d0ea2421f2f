use std::io::Write;

use serde::{Deserialize, Serialize};

use super::coalescing::{CoalescingState, MergeEvent};
use crate::error::{invalid, Result};
use crate::model::SeedSpec;
use crate::tree::{Dendrogram, UltrametricMatrix};

/// Block statistics of the coalescing system started from `n` uniform particles.
///
/// The pairwise coalescence times are stored as the list of merge events; the
/// dense matrix is only built on request since it needs `n²` entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockTrace {
    pub n: usize,
    pub horizon: f64,
    pub grid: Vec<f64>,
    pub counts: Vec<usize>,
    /// Block frequencies at each grid time, ordered by smallest index.
    pub freqs: Vec<Vec<f64>>,
    pub merges: Vec<MergeEvent>,
}

impl BlockTrace {
    /// Coalescence tree, censored at the horizon.
    pub fn dendrogram(&self) -> Dendrogram {
        Dendrogram::from_merges(self.n, self.merges.clone(), self.horizon)
            .expect("simulated merges form a valid dendrogram")
    }

    /// Dense matrix of coalescence times; unmerged pairs read as the horizon.
    pub fn ultrametric(&self) -> UltrametricMatrix {
        self.dendrogram().ultrametric()
    }

    /// `Σ_i F_i(t)²` at each grid time.
    pub fn sum_of_squares(&self) -> Vec<f64> {
        self.freqs
            .iter()
            .map(|f| f.iter().map(|x| x * x).sum())
            .collect()
    }

    /// Time of the first merge, if any happened before the horizon.
    pub fn first_merge_time(&self) -> Option<f64> {
        self.merges.first().map(|m| m.time)
    }

    /// Write rows `rep, t, N, F_1 .. F_k`, padding frequencies with zeros to
    /// the widest row.
    pub fn write_csv<W: Write>(&self, rep: u64, header: bool, out: W) -> Result<()> {
        let width = self.freqs.iter().map(Vec::len).max().unwrap_or(0);
        let mut w = csv::Writer::from_writer(out);
        if header {
            let mut h = vec!["rep".to_string(), "t".into(), "N".into()];
            h.extend((1..=width).map(|i| format!("F_{i}")));
            w.write_record(&h)?;
        }
        for ((t, n), f) in self.grid.iter().zip(&self.counts).zip(&self.freqs) {
            let mut row = vec![rep.to_string(), t.to_string(), n.to_string()];
            row.extend((0..width).map(|i| f.get(i).copied().unwrap_or(0.0).to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Run the coalescing system from `n` independent uniform particles to
/// `horizon`, stopping exactly at every grid time to record the blocks.
///
/// Grid times may include 0 and are sorted before use.
pub fn simulate_block_history(
    n: usize,
    horizon: f64,
    grid: &[f64],
    dt: f64,
    seed: SeedSpec,
) -> Result<BlockTrace> {
    if n == 0 {
        return invalid("n must be >= 1");
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return invalid(format!("horizon must be > 0, got {horizon}"));
    }
    if grid.iter().any(|&t| !(0.0..=horizon).contains(&t)) {
        return invalid("grid times must lie in [0, horizon]");
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);

    let mut rng = seed.rng();
    let mut state = CoalescingState::uniform(n, &mut rng)?;
    let mut counts = Vec::with_capacity(grid.len());
    let mut freqs = Vec::with_capacity(grid.len());
    for &t in &grid {
        state.run_until(t, dt, &mut rng)?;
        counts.push(state.block_count());
        freqs.push(state.partition().frequencies());
    }
    state.run_until(horizon, dt, &mut rng)?;
    Ok(BlockTrace {
        n,
        horizon,
        grid,
        counts,
        freqs,
        merges: state.merges().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_particle_never_merges() {
        let tr = simulate_block_history(1, 1.0, &[0.1, 0.5, 1.0], 1e-3, SeedSpec::new(1, 0)).unwrap();
        assert_eq!(tr.counts, vec![1, 1, 1]);
        assert!(tr.merges.is_empty());
    }

    #[test]
    fn time_zero_snapshot() {
        let tr = simulate_block_history(4, 0.1, &[0.0, 0.1], 1e-3, SeedSpec::new(1, 0)).unwrap();
        assert_eq!(tr.counts[0], 4);
        assert_eq!(tr.freqs[0], vec![0.25; 4]);
    }

    #[test]
    fn bad_arguments() {
        let s = SeedSpec::new(1, 0);
        assert!(simulate_block_history(0, 1.0, &[], 1e-3, s).is_err());
        assert!(simulate_block_history(2, 1.0, &[2.0], 1e-3, s).is_err());
        assert!(simulate_block_history(2, 1.0, &[0.5], 0.0, s).is_err());
    }

    #[test]
    fn csv_is_padded() {
        let tr = simulate_block_history(6, 0.5, &[0.0, 0.5], 1e-3, SeedSpec::new(2, 0)).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(0, true, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("rep,t,N,F_1"));
        let widths: Vec<usize> = lines.iter().map(|l| l.split(',').count()).collect();
        assert!(widths.iter().all(|&w| w == 3 + 6));
    }
}
