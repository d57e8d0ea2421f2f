use rand::Rng;

use crate::error::{invalid, Result};
use crate::model::DELTA_MIN;

/// Above this exponent the hit probability is below `e^{-40}` and no coin is drawn.
const SKIP_EXPONENT: f64 = 40.0;

/// Probability that the gap between two independent standard Brownian
/// particles touched zero while moving from `g1` to `g2` over time `dt`.
///
/// The gap has variance rate 2, so the bridge-minimum law gives `exp(-g1 g2 / dt)`.
pub fn bridge_hit_prob(g1: f64, g2: f64, dt: f64) -> Result<f64> {
    if !(g1 > 0.0 && g2 > 0.0 && dt > 0.0) || !(g1.is_finite() && g2.is_finite() && dt.is_finite()) {
        return invalid(format!("bridge needs positive finite arguments, got ({g1}, {g2}, {dt})"));
    }
    Ok((-g1 * g2 / dt).exp())
}

/// Decide whether a neighbouring pair met during the step.
///
/// `old_gap` is the gap before the step and `new_gap` the unwrapped gap after it;
/// a non-positive new gap means the pair crossed.
#[inline]
pub(crate) fn collided<R: Rng + ?Sized>(old_gap: f64, new_gap: f64, dt: f64, rng: &mut R) -> bool {
    if old_gap <= DELTA_MIN || new_gap <= DELTA_MIN {
        return true;
    }
    let x = old_gap * new_gap / dt;
    if x > SKIP_EXPONENT {
        return false;
    }
    rng.random::<f64>() < (-x).exp()
}
