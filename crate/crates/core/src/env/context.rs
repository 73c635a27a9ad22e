//! Context distributions. Coordinate 0 is always the intercept `1`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// How contexts are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContextSpec {
    /// `x = (1, f_1, .., f_{d-1})` with independent `f_j ~ Unif[lo, hi]`.
    InterceptUniform { d: usize, lo: f64, hi: f64 },
    /// `x = (1, r_1, .., r_{d-1})` with independent Rademacher `r_j`.
    InterceptRademacher { d: usize },
}

impl ContextSpec {
    pub fn dim(&self) -> usize {
        match *self {
            ContextSpec::InterceptUniform { d, .. } | ContextSpec::InterceptRademacher { d } => d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(invalid("context dimension must be at least 1"));
        }
        if let ContextSpec::InterceptUniform { lo, hi, .. } = *self {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(invalid(format!("feature range [{lo}, {hi}] is empty")));
            }
        }
        Ok(())
    }

    /// Range of one non-intercept feature.
    fn feature_range(&self) -> (f64, f64) {
        match *self {
            ContextSpec::InterceptUniform { lo, hi, .. } => (lo, hi),
            ContextSpec::InterceptRademacher { .. } => (-1.0, 1.0),
        }
    }

    /// `B_x`: the largest Euclidean norm of any reachable context.
    pub fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.feature_range();
        let m = lo.abs().max(hi.abs());
        (1.0 + (self.dim() - 1) as f64 * m * m).sqrt()
    }

    /// Exact `(min, max)` of `<x, theta>` over every reachable context.
    pub fn value_range(&self, theta: &[f64]) -> (f64, f64) {
        let (lo, hi) = self.feature_range();
        theta[1..].iter().fold((theta[0], theta[0]), |(mn, mx), &t| {
            let (a, b) = (t * lo, t * hi);
            (mn + a.min(b), mx + a.max(b))
        })
    }

    /// Population second moment `E[x x^T]`, row-major.
    pub fn second_moment(&self) -> Vec<f64> {
        let d = self.dim();
        let (lo, hi) = self.feature_range();
        let (mean, sq) = match *self {
            ContextSpec::InterceptUniform { .. } => {
                (0.5 * (lo + hi), (lo * lo + lo * hi + hi * hi) / 3.0)
            }
            ContextSpec::InterceptRademacher { .. } => (0.0, 1.0),
        };
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = match (i, j) {
                    (0, 0) => 1.0,
                    (0, _) | (_, 0) => mean,
                    _ if i == j => sq,
                    _ => mean * mean,
                };
            }
        }
        m
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        x.push(1.0);
        match *self {
            ContextSpec::InterceptUniform { d, lo, hi } => {
                x.extend((1..d).map(|_| lo + (hi - lo) * rng.random::<f64>()));
            }
            ContextSpec::InterceptRademacher { d } => {
                x.extend((1..d).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }));
            }
        }
        x
    }
}
