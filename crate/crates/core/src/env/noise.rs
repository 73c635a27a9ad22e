//! Valuation noise as a finite mixture of atoms and uniform segments, and its
//! exact survival curve `S(w) = P(xi >= w)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

const WEIGHT_TOL: f64 = 1e-12;
const MEAN_TOL: f64 = 1e-12;

/// One mixture component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseComponent {
    /// Point mass `weight` at residual `at`.
    Atom { at: f64, weight: f64 },
    /// `weight` spread uniformly over `[lo, hi]`.
    Uniform { lo: f64, hi: f64, weight: f64 },
}

impl NoiseComponent {
    pub fn weight(&self) -> f64 {
        match *self {
            NoiseComponent::Atom { weight, .. } | NoiseComponent::Uniform { weight, .. } => weight,
        }
    }

    fn mean(&self) -> f64 {
        match *self {
            NoiseComponent::Atom { at, .. } => at,
            NoiseComponent::Uniform { lo, hi, .. } => 0.5 * (lo + hi),
        }
    }

    /// Contribution of this component to `P(xi >= w)`.
    fn survival(&self, w: f64) -> f64 {
        match *self {
            NoiseComponent::Atom { at, weight } => {
                if at >= w {
                    weight
                } else {
                    0.0
                }
            }
            NoiseComponent::Uniform { lo, hi, weight } => {
                weight * ((hi - w) / (hi - lo)).clamp(0.0, 1.0)
            }
        }
    }

    /// Contribution to `P(xi > w)`.
    fn strict_survival(&self, w: f64) -> f64 {
        match *self {
            NoiseComponent::Atom { at, weight } => {
                if at > w {
                    weight
                } else {
                    0.0
                }
            }
            NoiseComponent::Uniform { .. } => self.survival(w),
        }
    }
}

/// A noise distribution: a labelled mixture of atoms and uniform segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Short name used in result files (`uniform`, `cliff`, ...).
    #[serde(default = "default_label")]
    pub label: String,
    pub components: Vec<NoiseComponent>,
}

fn default_label() -> String {
    "custom".to_owned()
}

impl NoiseSpec {
    pub fn new(label: impl Into<String>, components: Vec<NoiseComponent>) -> Self {
        Self {
            label: label.into(),
            components,
        }
    }

    /// `Unif[-c, c]`.
    pub fn uniform(c: f64) -> Self {
        Self::new(
            "uniform",
            vec![NoiseComponent::Uniform {
                lo: -c,
                hi: c,
                weight: 1.0,
            }],
        )
    }

    /// Point mass `atom_weight` at zero on top of `Unif[-c, c]`.
    pub fn cliff(c: f64, atom_weight: f64) -> Self {
        Self::new(
            "cliff",
            vec![
                NoiseComponent::Atom {
                    at: 0.0,
                    weight: atom_weight,
                },
                NoiseComponent::Uniform {
                    lo: -c,
                    hi: c,
                    weight: 1.0 - atom_weight,
                },
            ],
        )
    }

    /// Noise identically zero.
    pub fn degenerate() -> Self {
        Self::new(
            "degenerate",
            vec![NoiseComponent::Atom {
                at: 0.0,
                weight: 1.0,
            }],
        )
    }

    /// Closed-form mixture mean.
    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.weight() * c.mean()).sum()
    }

    /// Checks weights, supports and (optionally) the zero-mean normalization.
    pub fn validate(&self, c: f64, require_zero_mean: bool) -> Result<()> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid(format!("support radius must be positive, got {c}")));
        }
        if self.components.is_empty() {
            return Err(invalid("noise has no components"));
        }
        let in_support = |v: f64| v.is_finite() && (-c..=c).contains(&v);
        for comp in &self.components {
            let w = comp.weight();
            if !(w > 0.0 && w <= 1.0) {
                return Err(invalid(format!("component weight {w} outside (0, 1]")));
            }
            match *comp {
                NoiseComponent::Atom { at, .. } => {
                    if !in_support(at) {
                        return Err(invalid(format!("atom at {at} outside [-{c}, {c}]")));
                    }
                }
                NoiseComponent::Uniform { lo, hi, .. } => {
                    if !in_support(lo) || !in_support(hi) {
                        return Err(invalid(format!(
                            "segment [{lo}, {hi}] outside [-{c}, {c}]"
                        )));
                    }
                    if lo >= hi {
                        return Err(invalid(format!("segment [{lo}, {hi}] is empty")));
                    }
                }
            }
        }
        let total: f64 = self.components.iter().map(NoiseComponent::weight).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(invalid(format!("weights sum to {total}, not 1")));
        }
        if require_zero_mean && self.mean().abs() > MEAN_TOL {
            return Err(invalid(format!("noise mean {} is not zero", self.mean())));
        }
        Ok(())
    }

    /// Direct mixture evaluation of `P(xi >= w)`, independent of [`SurvivalCurve`].
    pub fn survival_direct(&self, w: f64) -> f64 {
        self.components.iter().map(|c| c.survival(w)).sum()
    }

    fn strict_survival_direct(&self, w: f64) -> f64 {
        self.components.iter().map(|c| c.strict_survival(w)).sum()
    }

    /// Draws one noise value.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut pick = rng.random::<f64>();
        let last = self.components.len() - 1;
        for (i, comp) in self.components.iter().enumerate() {
            pick -= comp.weight();
            if pick < 0.0 || i == last {
                return match *comp {
                    NoiseComponent::Atom { at, .. } => at,
                    NoiseComponent::Uniform { lo, hi, .. } => lo + (hi - lo) * rng.random::<f64>(),
                };
            }
        }
        unreachable!("noise has at least one component")
    }
}

/// One linear piece of `S` on the open interval `(left, right)`.
///
/// `S` is left-continuous, so `S(right) = at_right` and the piece runs from the
/// right-limit `after_left = S(left+)` down to `at_right`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Piece {
    pub left: f64,
    pub right: f64,
    pub after_left: f64,
    pub at_right: f64,
}

impl Piece {
    pub fn slope(&self) -> f64 {
        (self.at_right - self.after_left) / (self.right - self.left)
    }

    fn eval(&self, w: f64) -> f64 {
        let t = (w - self.left) / (self.right - self.left);
        (self.after_left + (self.at_right - self.after_left) * t).clamp(self.at_right, self.after_left)
    }
}

/// Exact, piecewise-linear survival curve with atoms.
///
/// Outside the support the curve is extended by `S(w) = 1` for `w <= -c` and
/// `S(w) = 0` for `w > c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    c: f64,
    breakpoints: Vec<f64>,
    at_breakpoint: Vec<f64>,
    pieces: Vec<Piece>,
    atoms: Vec<(f64, f64)>,
}

/// Builds the exact survival curve of `noise` on `[-c, c]`.
pub fn make_survival(noise: &NoiseSpec, c: f64) -> Result<SurvivalCurve> {
    noise.validate(c, false)?;

    let mut breakpoints = vec![-c, c];
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    for comp in &noise.components {
        match *comp {
            NoiseComponent::Atom { at, weight } => {
                breakpoints.push(at);
                match atoms.iter_mut().find(|(a, _)| *a == at) {
                    Some((_, q)) => *q += weight,
                    None => atoms.push((at, weight)),
                }
            }
            NoiseComponent::Uniform { lo, hi, .. } => {
                breakpoints.push(lo);
                breakpoints.push(hi);
            }
        }
    }
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Anchor the values at the support edges exactly.
    let last = breakpoints.len() - 1;
    let at_breakpoint: Vec<f64> = breakpoints
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            if i == 0 {
                1.0
            } else {
                noise.survival_direct(b).clamp(0.0, 1.0)
            }
        })
        .collect();
    let after: Vec<f64> = breakpoints
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            if i == last {
                0.0
            } else {
                noise.strict_survival_direct(b).clamp(0.0, 1.0)
            }
        })
        .collect();
    let pieces = breakpoints
        .windows(2)
        .enumerate()
        .map(|(k, pair)| Piece {
            left: pair[0],
            right: pair[1],
            after_left: after[k],
            at_right: at_breakpoint[k + 1].min(after[k]),
        })
        .collect();

    Ok(SurvivalCurve {
        c,
        breakpoints,
        at_breakpoint,
        pieces,
        atoms,
    })
}

impl SurvivalCurve {
    pub fn support_radius(&self) -> f64 {
        self.c
    }

    /// `S(w) = P(xi >= w)`.
    pub fn eval(&self, w: f64) -> f64 {
        if w <= -self.c {
            return 1.0;
        }
        if w > self.c || w.is_nan() {
            return 0.0;
        }
        match self.breakpoints.binary_search_by(|b| b.total_cmp(&w)) {
            Ok(i) => self.at_breakpoint[i],
            Err(i) => self.pieces[i - 1].eval(w),
        }
    }

    /// `lim_{v -> w+} S(v) = P(xi > w)`.
    pub fn right_limit(&self, w: f64) -> f64 {
        if w < -self.c {
            return 1.0;
        }
        if w >= self.c || w.is_nan() {
            return 0.0;
        }
        match self.breakpoints.binary_search_by(|b| b.total_cmp(&w)) {
            Ok(i) => self.pieces[i].after_left,
            Err(i) => self.pieces[i - 1].eval(w),
        }
    }

    /// Sorted breakpoints, including `-c` and `c`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `(location, mass)` of every atom, sorted by location.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub(crate) fn pieces(&self) -> &[Piece] {
        &self.pieces
    }
}
