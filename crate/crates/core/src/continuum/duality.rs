use serde::{Deserialize, Serialize};

use super::annihilating::AnnihilatingState;
use super::coalescing::CoalescingState;
use crate::error::{invalid, Result};
use crate::model::{CirclePos, IntervalSet, SeedSpec};
use crate::stats::mean_se;

/// Both sides of `P{W^A(t) ⊆ B} = Q{A ⊆ V^B(t)}`, estimated independently.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityEstimate {
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_se: f64,
    pub rhs_se: f64,
    pub joint_se: f64,
    pub reps: u64,
}

impl DualityEstimate {
    pub fn gap(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

const LHS_TAG: u64 = 0;
const RHS_TAG: u64 = 1;

/// Monte Carlo check of the coalescing/annihilating duality.
///
/// Replication `r` of the coalescing side uses `seed.derive(0).stream(r)` and
/// of the annihilating side `seed.derive(1).stream(r)`.
pub fn estimate_duality_gap(
    a: &[CirclePos],
    b: &IntervalSet,
    t: f64,
    reps: u64,
    dt: f64,
    seed: SeedSpec,
) -> Result<DualityEstimate> {
    if a.is_empty() {
        return invalid("A must be non-empty");
    }
    if reps == 0 {
        return invalid("reps must be >= 1");
    }
    if !(t >= 0.0 && t.is_finite()) {
        return invalid(format!("t must be >= 0, got {t}"));
    }
    let start = CoalescingState::new(a)?;
    let mut lhs = Vec::with_capacity(reps as usize);
    let mut rhs = Vec::with_capacity(reps as usize);
    for r in 0..reps {
        let mut rng = seed.derive(LHS_TAG).stream(r).rng();
        let mut w = start.clone();
        w.run_until(t, dt, &mut rng)?;
        let inside = w.positions().iter().all(|&x| b.contains(x));
        lhs.push(f64::from(u8::from(inside)));

        let mut rng = seed.derive(RHS_TAG).stream(r).rng();
        let mut v = AnnihilatingState::new(b);
        v.run_until(t, dt, &mut rng)?;
        let set = v.interval_set();
        let covered = a.iter().all(|&x| set.contains(x));
        rhs.push(f64::from(u8::from(covered)));
    }
    let (lhs, lhs_se) = mean_se(&lhs);
    let (rhs, rhs_se) = mean_se(&rhs);
    Ok(DualityEstimate {
        lhs,
        rhs,
        lhs_se,
        rhs_se,
        joint_se: lhs_se.hypot(rhs_se),
        reps,
    })
}
