//! Particle systems on the continuum circle.
//!
//! Time is discretised with step `dt`. Within a step every particle receives an
//! exact Gaussian increment, and a collision between cyclic neighbours is
//! decided by the exact probability that the Brownian bridge of their gap
//! touched zero. Only neighbours need checking because continuous paths cannot
//! cross without meeting.

mod annihilating;
mod bridge;
mod coalescing;
mod duality;
mod scaling;
mod trace;

pub use annihilating::{simulate_annihilating, AnnihilatingState};
pub use bridge::bridge_hit_prob;
pub use coalescing::{advance_coalescing, CoalescingState, MergeEvent};
pub use duality::{estimate_duality_gap, DualityEstimate};
pub use scaling::{estimate_scaling_exponent, PowerLawFit};
pub use trace::{simulate_block_history, BlockTrace};

pub(crate) use bridge::collided;

/// Step size used when a caller has no better choice.
pub const DEFAULT_DT: f64 = 1e-4;

/// Cyclic runs of indices joined by `linked[i]` (which links `i` to `i + 1`).
///
/// Returns the runs in cyclic order together with the index the walk started
/// from; walking from just after an unlinked position keeps each run contiguous.
pub(crate) fn cyclic_runs(linked: &[bool]) -> (Vec<Vec<usize>>, usize) {
    let k = linked.len();
    let start = match linked.iter().position(|&l| !l) {
        Some(i) => (i + 1) % k,
        None => return (vec![(0..k).collect()], 0),
    };
    let mut runs = Vec::new();
    let mut cur = Vec::new();
    for m in 0..k {
        let idx = (start + m) % k;
        cur.push(idx);
        if !linked[idx] {
            runs.push(std::mem::take(&mut cur));
        }
    }
    (runs, start)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_wrap_around() {
        let (runs, start) = cyclic_runs(&[true, false, false, true]);
        assert_eq!(start, 2);
        assert_eq!(runs, vec![vec![2], vec![3, 0, 1]]);
        let (runs, _) = cyclic_runs(&[true, true]);
        assert_eq!(runs, vec![vec![0, 1]]);
        let (runs, _) = cyclic_runs(&[false, false, false]);
        assert_eq!(runs, vec![vec![1], vec![2], vec![0]]);
    }
}
