use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};

/// Mean final regret at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub horizon: u64,
    pub mean: f64,
    pub stderr: f64,
}

/// `R_T ≈ c_coef * T^alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub c_coef: f64,
    pub alpha: f64,
    /// OLS standard error of the slope; undefined with only two points.
    pub stderr_alpha: Option<f64>,
    pub points: Vec<FitPoint>,
}

impl PowerLawFit {
    pub fn predict(&self, horizon: f64) -> f64 {
        self.c_coef * horizon.powf(self.alpha)
    }
}

/// Unweighted OLS of `ln(mean)` on `ln T`.
pub fn fit_power_law(points: &[FitPoint]) -> Result<PowerLawFit> {
    if points.len() < 2 {
        return Err(PricingError::DegenerateFit(format!(
            "need at least two points, got {}",
            points.len()
        )));
    }
    if let Some(p) = points.iter().find(|p| !(p.mean > 0.0) || p.horizon == 0) {
        return Err(PricingError::DegenerateFit(format!(
            "non-positive point (T={}, mean={})",
            p.horizon, p.mean
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.horizon as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean.ln()).collect();
    let n = xs.len() as f64;
    let x_bar = xs.iter().sum::<f64>() / n;
    let y_bar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_bar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(PricingError::DegenerateFit("all horizons are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_bar) * (y - y_bar)).sum();
    let alpha = sxy / sxx;
    let intercept = y_bar - alpha * x_bar;
    let stderr_alpha = (points.len() > 2).then(|| {
        let ssr: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - alpha * x).powi(2))
            .sum();
        (ssr / (n - 2.0) / sxx).sqrt()
    });
    Ok(PowerLawFit {
        c_coef: intercept.exp(),
        alpha,
        stderr_alpha,
        points: points.to_vec(),
    })
}
