use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::stats::linear_fit;

/// `value ≈ exp(intercept) · t^slope`, fitted on log-log axes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub r_squared: f64,
}

/// Least-squares slope of `ln value` against `ln t`, equal weights.
pub fn estimate_scaling_exponent(curve: &[(f64, f64)]) -> Result<PowerLawFit> {
    if curve.len() < 4 {
        return invalid(format!("need at least 4 points, got {}", curve.len()));
    }
    if curve.iter().any(|&(t, v)| !(t > 0.0 && v > 0.0 && t.is_finite() && v.is_finite())) {
        return invalid("all times and values must be positive and finite");
    }
    let xs: Vec<f64> = curve.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = curve.iter().map(|p| p.1.ln()).collect();
    let f = linear_fit(&xs, &ys)?;
    Ok(PowerLawFit {
        slope: f.slope,
        intercept: f.intercept,
        slope_se: f.slope_se,
        r_squared: f.r_squared,
    })
}
