//! Small statistical helpers used by estimators and tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Result};

/// Sum after sorting, so the result does not depend on input order.
pub fn ordered_sum(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

/// Sample mean and its standard error. A single value has SE 0.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = ordered_sum(values) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = ordered_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// Kolmogorov-Smirnov distance to a CDF that may have atoms.
///
/// `cdf_left(x)` is the left limit `F(x-)`; for a continuous law pass the CDF
/// itself. Tied samples are treated as one jump of the empirical CDF.
pub fn ks_one_sample_atoms(samples: &[f64], cdf: impl Fn(f64) -> f64, cdf_left: impl Fn(f64) -> f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < v.len() {
        let x = v[i];
        let mut j = i;
        while j < v.len() && v[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / n - cdf_left(x)).abs()).max((j as f64 / n - cdf(x)).abs());
        i = j;
    }
    d
}

/// Kolmogorov-Smirnov distance between two empirical CDFs. Ties are handled.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Upper-tail p-value of Pearson's statistic; cells with zero expectation must be empty.
pub fn chi_square_pvalue(observed: &[u64], expected: &[f64]) -> Result<f64> {
    if observed.len() != expected.len() {
        return invalid("observed and expected lengths differ");
    }
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &e) in observed.iter().zip(expected) {
        if e <= 0.0 {
            if o > 0 {
                return Ok(0.0);
            }
            continue;
        }
        stat += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    if cells < 2 {
        return Ok(1.0);
    }
    let dist = ChiSquared::new((cells - 1) as f64).expect("positive degrees of freedom");
    Ok(1.0 - dist.cdf(stat))
}

/// Ordinary least squares `y ≈ intercept + slope · x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n != ys.len() {
        return invalid("x and y lengths differ");
    }
    if n < 3 {
        return invalid("need at least three points");
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    // shift by the first value so a constant response has exactly zero deviations
    let my = ys[0] + ys.iter().map(|y| y - ys[0]).sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return invalid("x values are all equal");
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_se = (sse.max(0.0) / (nf - 2.0) / sxx).sqrt();
    Ok(LinearFit {
        slope,
        intercept,
        slope_se,
        r_squared,
    })
}
