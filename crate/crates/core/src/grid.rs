//! Residual-grid mechanics.
//!
//! The grid is `w_i = -c + 2 i Delta` for `i = 0..=M` with `M = ceil(c / Delta)`.
//! Indices `0..M` are queried. Probing index `j` posts the conservative
//! markdown `u_hat + w_{j+1} - 3 Delta`; whenever `|u_hat - u| <= Delta` the
//! realized residual then lands in `[w_{j-1}, w_j]`, so the purchase
//! probability is sandwiched between `S(w_j)` and `S(w_{j-1})`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualGrid {
    c: f64,
    delta: f64,
    points: Vec<f64>,
}

/// Builds the grid for support radius `c` and scale `delta`.
pub fn build_grid(c: f64, delta: f64) -> Result<ResidualGrid> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid(format!("support radius must be positive, got {c}")));
    }
    if !(delta > 0.0) || delta > c {
        return Err(invalid(format!("grid scale must lie in (0, c = {c}], got {delta}")));
    }
    let m = (c / delta).ceil() as usize;
    let points = (0..=m).map(|i| -c + 2.0 * i as f64 * delta).collect();
    Ok(ResidualGrid { c, delta, points })
}

impl ResidualGrid {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn support_radius(&self) -> f64 {
        self.c
    }

    /// `M`, the number of queried indices.
    pub fn m_count(&self) -> usize {
        self.points.len() - 1
    }

    /// `w_0 ..= w_M`.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `w_i`, with the boundary convention `w_{-1} = w_0 - 2 Delta`.
    pub fn point(&self, i: isize) -> f64 {
        if i < 0 {
            self.points[0] - 2.0 * self.delta
        } else {
            self.points[i as usize]
        }
    }
}

/// A probe price and whether clipping to `[0, B]` was needed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbePrice {
    pub price: f64,
    pub clipped: bool,
}

/// `clip_[0,B](u_hat + w_{j+1} - 3 Delta)`.
pub fn probe_price(u_hat: f64, j: usize, grid: &ResidualGrid, price_cap: f64) -> ProbePrice {
    debug_assert!(j < grid.m_count());
    let raw = u_hat + grid.points[j + 1] - 3.0 * grid.delta;
    let price = raw.clamp(0.0, price_cap);
    ProbePrice {
        price,
        clipped: price != raw,
    }
}

/// `c_ucb * sqrt(ln T / max(1, n))`.
pub fn conf_radius(n: u64, horizon: u64, c_ucb: f64) -> f64 {
    c_ucb * ((horizon as f64).ln() / n.max(1) as f64).sqrt()
}

/// `(u_hat + w_{j+1} + Delta) * min(1, m_hat + b)`.
pub fn ucb_score(u_hat: f64, j: usize, grid: &ResidualGrid, m_hat: f64, radius: f64) -> f64 {
    (u_hat + grid.points[j + 1] + grid.delta) * (m_hat + radius).min(1.0)
}

/// How the selected index is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMode {
    /// The selected index is still uncertain and is probed itself.
    Direct,
    /// The selected index is certain; its left neighbour is probed instead.
    Redirect,
    /// Index 0 is certain and has no left neighbour; it is probed itself.
    Boundary,
}

/// Selected index `j_t`, played index `a_t` and the mode linking them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Action {
    pub selected: usize,
    pub played: usize,
    pub mode: ProbeMode,
}

/// Argmax of `scores` (ties to the lowest index), then the one-step redirect rule.
pub fn choose_action(scores: &[f64], radii: &[f64], delta: f64) -> Action {
    assert!(!scores.is_empty(), "at least one queried index is required");
    let selected = scores
        .iter()
        .enumerate()
        .fold(0, |best, (j, &s)| if s > scores[best] { j } else { best });
    let (played, mode) = if radii[selected] > delta {
        (selected, ProbeMode::Direct)
    } else if selected == 0 {
        (0, ProbeMode::Boundary)
    } else {
        (selected - 1, ProbeMode::Redirect)
    };
    Action {
        selected,
        played,
        mode,
    }
}

/// Per-index play counts and outcome sums.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProbeStats {
    counts: Vec<u64>,
    sums: Vec<u64>,
}

impl ProbeStats {
    pub fn new(m_count: usize) -> Self {
        Self {
            counts: vec![0; m_count],
            sums: vec![0; m_count],
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Credits outcome `o` to index `j`, whatever mode produced the play.
    pub fn record(&mut self, j: usize, purchased: bool) {
        self.counts[j] += 1;
        self.sums[j] += u64::from(purchased);
    }

    pub fn count(&self, j: usize) -> u64 {
        self.counts[j]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sum(&self, j: usize) -> u64 {
        self.sums[j]
    }

    /// Empirical purchase rate, `0` before the first play.
    pub fn mean(&self, j: usize) -> f64 {
        match self.counts[j] {
            0 => 0.0,
            n => self.sums[j] as f64 / n as f64,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Serializable per-index view of the grid statistics at one moment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSnapshot {
    pub points: Vec<f64>,
    pub counts: Vec<u64>,
    pub means: Vec<f64>,
    pub radii: Vec<f64>,
}

impl GridSnapshot {
    pub fn capture(grid: &ResidualGrid, stats: &ProbeStats, horizon: u64, c_ucb: f64) -> Self {
        Self {
            points: grid.points.clone(),
            counts: stats.counts.clone(),
            means: (0..stats.len()).map(|j| stats.mean(j)).collect(),
            radii: stats
                .counts
                .iter()
                .map(|&n| conf_radius(n, horizon, c_ucb))
                .collect(),
        }
    }
}
