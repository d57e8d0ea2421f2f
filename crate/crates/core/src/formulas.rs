//! Closed-form reference values.
//!
//! Every series is truncated by an analytic bound on its remainder. Absorbed
//! Brownian motion on `[0, 2π]` uses variance rate 2 (the gap between two
//! independent particles); small times use the method of images and large
//! times the sine expansion, so both regimes converge in a handful of terms.

use std::f64::consts::PI;

use libm::erfc;

use crate::error::{invalid, Result};
use crate::model::TAU;

/// Accuracy target for truncated series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesTolerance {
    pub tail_bound: f64,
}

impl Default for SeriesTolerance {
    fn default() -> Self {
        Self { tail_bound: 1e-15 }
    }
}

const TAIL: f64 = 1e-15;

/// Below this time the small-time representations take over.
const SMALL_T: f64 = 1e-6;

/// Spectral sums switch to image sums below this time.
const IMAGE_T: f64 = 0.5;

/// Compensated summation.
fn neumaier(terms: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Bound on `Σ_{k>K} exp(-k² t / 4)`.
fn gauss_tail(k: usize, t: f64) -> f64 {
    let k = k as f64;
    2.0 * (-k * k * t / 4.0).exp() / (k * t)
}

/// Smallest `K` with `scale · gauss_tail(K, t) < tol`.
fn gauss_cutoff(t: f64, scale: f64, tol: f64) -> usize {
    let mut k = 1usize;
    while scale * gauss_tail(k, t) >= tol {
        k = (k * 2).max(k + 1);
    }
    // back off to the smallest power-of-two step that still meets the bound
    let (mut lo, mut hi) = (k / 2, k);
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if scale * gauss_tail(mid.max(1), t) < tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi.max(1)
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

fn check_time(t: f64, strict: bool) -> Result<()> {
    let ok = t.is_finite() && if strict { t > 0.0 } else { t >= 0.0 };
    if ok {
        Ok(())
    } else {
        invalid(format!("time must be {}, got {t}", if strict { "> 0" } else { ">= 0" }))
    }
}

fn check_start(x: f64) -> Result<()> {
    if (0.0..=TAU).contains(&x) {
        Ok(())
    } else {
        invalid(format!("start {x} outside [0, 2π]"))
    }
}

fn theta_large(u: f64) -> f64 {
    let mut sum = 0.0;
    let mut n = 1.0f64;
    loop {
        sum += (-PI * n * n * u).exp();
        let next = n + 1.0;
        let tail = 2.0 * (-PI * next * next * u).exp() / (1.0 - (-PI * (2.0 * next + 1.0) * u).exp());
        if tail < TAIL {
            break;
        }
        n = next;
    }
    1.0 + 2.0 * sum
}

/// Jacobi theta `θ(u) = Σ_{n∈Z} exp(-π n² u)`.
///
/// For `u < 1` the functional equation `θ(u) = u^{-1/2} θ(1/u)` is applied so
/// that at most a few terms are ever summed.
pub fn theta(u: f64) -> Result<f64> {
    if !(u.is_finite() && u > 0.0) {
        return invalid(format!("theta needs u > 0, got {u}"));
    }
    Ok(if u >= 1.0 {
        theta_large(u)
    } else {
        theta_large(1.0 / u) / u.sqrt()
    })
}

/// `E N(t) = 1 + 2 Σ_{n≥1} exp(-(n/2)² t)`, the mean number of blocks at time `t`
/// for the system started from every point of the circle.
pub fn expected_block_count(t: f64) -> Result<f64> {
    check_time(t, true)?;
    if t < SMALL_T {
        return theta(t / (4.0 * PI));
    }
    let k = gauss_cutoff(t, 2.0, TAIL);
    let sum = neumaier((1..=k).rev().map(|n| {
        let n = n as f64;
        (-n * n * t / 4.0).exp()
    }));
    Ok(1.0 + 2.0 * sum)
}

/// `P{T₁₂ ≤ t}` for two particles started independently and uniformly.
pub fn pair_meeting_cdf(t: f64) -> Result<f64> {
    check_time(t, false)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    if t < SMALL_T {
        // exact up to terms of order exp(-π²/t)
        return Ok(2.0 * t.sqrt() / PI.powf(1.5));
    }
    let scale = 8.0 / (PI * PI);
    let k = gauss_cutoff(t, scale, TAIL);
    let rest = neumaier((1..=k).rev().step_by(1).filter(|m| m % 2 == 1).map(|m| {
        let m = m as f64;
        (-m * m * t / 4.0).exp() / (m * m)
    }));
    Ok((1.0 - scale * rest).clamp(0.0, 1.0))
}

/// Probability that variance-rate-2 Brownian motion started at `x` has not
/// left `(0, 2π)` by time `t`.
pub fn absorbed_survival(x: f64, t: f64) -> Result<f64> {
    check_start(x)?;
    check_time(t, false)?;
    if x == 0.0 || x == TAU {
        return Ok(0.0);
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    if t < IMAGE_T {
        return Ok(position_mass_images(x, TAU, t).clamp(0.0, 1.0));
    }
    let k = gauss_cutoff(t, 4.0 / PI, TAIL);
    let sum = neumaier((0..=k / 2).rev().map(|j| {
        let m = (2 * j + 1) as f64;
        (m * x / 2.0).sin() * (-m * m * t / 4.0).exp() / m
    }));
    Ok((4.0 / PI * sum).clamp(0.0, 1.0))
}

/// Probability that the absorbed motion from `x` exits at `2π`, and does so by time `t`.
pub fn exit_high_cdf(x: f64, t: f64) -> Result<f64> {
    check_start(x)?;
    check_time(t, false)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == TAU {
        return Ok(1.0);
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if t < IMAGE_T {
        let s = (2.0 * t).sqrt();
        let sum = neumaier((0..8).rev().map(|k| {
            let c = (2 * k + 1) as f64 * TAU;
            2.0 * std_normal_sf((c - x) / s) - 2.0 * std_normal_sf((c + x) / s)
        }));
        return Ok(sum.clamp(0.0, 1.0));
    }
    let k = gauss_cutoff(t, 2.0 / PI, TAIL);
    let sum = neumaier((1..=k).rev().map(|n| {
        let nf = n as f64;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sign / nf * (nf * x / 2.0).sin() * (-nf * nf * t / 4.0).exp()
    }));
    Ok((x / TAU + 2.0 / PI * sum).clamp(0.0, 1.0))
}

/// Probability of exit at `0` by time `t`, by reflection `x ↦ 2π - x`.
pub fn exit_low_cdf(x: f64, t: f64) -> Result<f64> {
    check_start(x)?;
    exit_high_cdf(TAU - x, t)
}

/// `∫_0^y p_t(x, z) dz` for the killed motion, via images.
fn position_mass_images(x: f64, y: f64, t: f64) -> f64 {
    let s = (2.0 * t).sqrt();
    neumaier((-4i32..=4).map(|k| {
        let o = 2.0 * k as f64 * TAU;
        (std_normal_cdf((y - x + o) / s) - std_normal_cdf((o - x) / s))
            - (std_normal_cdf((y + x + o) / s) - std_normal_cdf((x + o) / s))
    }))
}

/// CDF at `y` of the absorbed motion's position at time `t`, atoms at `0`
/// and `2π` included.
///
/// This is the law of the length of a single annihilating arc of initial
/// length `x`.
pub fn absorbed_position_cdf(x: f64, y: f64, t: f64) -> Result<f64> {
    check_start(x)?;
    check_time(t, false)?;
    if y.is_nan() {
        return invalid("y is NaN");
    }
    if y < 0.0 {
        return Ok(0.0);
    }
    if y >= TAU {
        return Ok(1.0);
    }
    if t == 0.0 {
        return Ok(if y >= x { 1.0 } else { 0.0 });
    }
    let low = exit_low_cdf(x, t)?;
    if x == 0.0 || x == TAU {
        return Ok(low);
    }
    let alive = if t < IMAGE_T {
        position_mass_images(x, y, t)
    } else {
        let k = gauss_cutoff(t, 4.0 / PI, TAIL);
        neumaier((1..=k).rev().map(|n| {
            let nf = n as f64;
            (nf * x / 2.0).sin() * (-nf * nf * t / 4.0).exp() * (2.0 / nf) * (1.0 - (nf * y / 2.0).cos())
        })) / PI
    };
    Ok((low + alive).clamp(0.0, 1.0))
}

/// `P{x + B_t ∈ arc}` for standard Brownian motion wrapped onto the circle,
/// with the arc given as counter-clockwise `(start, length)`.
pub fn wrapped_gaussian_arc_mass(x: f64, start: f64, length: f64, t: f64) -> Result<f64> {
    check_time(t, false)?;
    if !(0.0..=TAU).contains(&length) {
        return invalid(format!("arc length {length} outside [0, 2π]"));
    }
    if !(x.is_finite() && start.is_finite()) {
        return invalid("positions must be finite");
    }
    let a = (start - x).rem_euclid(TAU);
    if t == 0.0 {
        let inside = a > 0.0 && a < TAU && a + length > TAU;
        return Ok(if inside { 1.0 } else { 0.0 });
    }
    let s = t.sqrt();
    let reach = (10.0 * s / TAU).ceil() as i64 + 2;
    let sum = neumaier((-reach..=reach).map(|k| {
        let o = k as f64 * TAU;
        std_normal_cdf((a + length + o) / s) - std_normal_cdf((a + o) / s)
    }));
    Ok(sum.clamp(0.0, 1.0))
}

/// Atoms of the level-`k` natural measure on the middle-1/2 Cantor set: the
/// midpoints of the `2^k` surviving intervals of length `4^{-k}`.
pub fn cantor_atoms(level: u32) -> Result<Vec<f64>> {
    if level > 14 {
        return invalid(format!("cantor level {level} exceeds 14"));
    }
    let mut starts = vec![0.0f64];
    let mut len = 1.0f64;
    for _ in 0..level {
        let child = len / 4.0;
        starts = starts
            .iter()
            .flat_map(|&a| [a, a + len - child])
            .collect();
        len = child;
    }
    Ok(starts.into_iter().map(|a| a + len / 2.0).collect())
}

/// `Σ_{i≠j} m_i m_j |x_i - x_j|^{-β}` for the level-`k` Cantor measure.
pub fn cantor_energy(level: u32, beta: f64) -> Result<f64> {
    if !(beta.is_finite() && beta >= 0.0) {
        return invalid(format!("beta must be >= 0, got {beta}"));
    }
    let x = cantor_atoms(level)?;
    let m = 1.0 / x.len() as f64;
    let mut total = 0.0;
    for i in 0..x.len() {
        let row: f64 = x[i + 1..].iter().map(|y| (y - x[i]).powf(-beta)).sum();
        total += row;
    }
    Ok(2.0 * m * m * total)
}
