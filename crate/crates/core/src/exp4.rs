//! Sampled-policy EXP4 baseline.
//!
//! A fixed ensemble of experts, each a pair (candidate parameter, candidate
//! monotone survival curve). Every round each expert recommends the action-grid
//! price maximizing its own predicted revenue; EXP4 mixes the recommendations
//! with exponential weights plus uniform exploration and updates the weights
//! from an inverse-propensity reward estimate.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::dot;
use crate::error::{invalid, PricingError, Result};
use crate::estimator::{delta_for, stage_length};
use crate::grid::build_grid;
use crate::policy::PricingPolicy;
use crate::rng::SimRng;

/// Ensemble sizes and survival tabulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Exp4Params {
    pub k_theta: usize,
    pub k_f: usize,
    pub k_policy: usize,
    /// Survival candidates are tabulated on the residual grid a CMRUP run of
    /// this horizon would build (with the default multiplier below).
    pub survival_grid_horizon: u64,
    pub survival_grid_delta_mult: f64,
}

impl Default for Exp4Params {
    fn default() -> Self {
        Self {
            k_theta: 256,
            k_f: 64,
            k_policy: 2048,
            survival_grid_horizon: 8000,
            survival_grid_delta_mult: 0.35,
        }
    }
}

/// A monotone survival curve tabulated on an evenly spaced residual grid and
/// linearly interpolated in between; `1` left of the grid, `0` right of it.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedSurvival {
    start: f64,
    spacing: f64,
    values: Vec<f64>,
}

impl TabulatedSurvival {
    pub fn new(start: f64, spacing: f64, values: Vec<f64>) -> Self {
        debug_assert!(values.len() >= 2);
        Self {
            start,
            spacing,
            values,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, w: f64) -> f64 {
        self.at(self.locate(w))
    }

    fn locate(&self, w: f64) -> Lookup {
        let pos = (w - self.start) / self.spacing;
        if pos < 0.0 {
            return Lookup::Below;
        }
        let last = self.values.len() - 1;
        if pos > last as f64 {
            return Lookup::Above;
        }
        let i = (pos.floor() as usize).min(last - 1);
        Lookup::Inside(i, pos - i as f64)
    }

    fn at(&self, lookup: Lookup) -> f64 {
        match lookup {
            Lookup::Below => 1.0,
            Lookup::Above => 0.0,
            Lookup::Inside(i, t) => self.values[i] + (self.values[i + 1] - self.values[i]) * t,
        }
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.start == other.start
            && self.spacing == other.spacing
            && self.values.len() == other.values.len()
    }
}

/// Position of a residual relative to a tabulation grid.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Lookup {
    Below,
    Above,
    Inside(usize, f64),
}

/// An expert: indices into the ensemble's parameter and survival pools.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpertPolicy {
    pub theta: usize,
    pub survival: usize,
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub thetas: Vec<Vec<f64>>,
    pub survivals: Vec<TabulatedSurvival>,
    pub experts: Vec<ExpertPolicy>,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.experts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experts.is_empty()
    }

    pub fn theta(&self, e: usize) -> &[f64] {
        &self.thetas[self.experts[e].theta]
    }

    pub fn survival(&self, e: usize) -> &TabulatedSurvival {
        &self.survivals[self.experts[e].survival]
    }
}

const INTERCEPT_RANGE: (f64, f64) = (1.0, 3.0);
const COEF_RANGE: (f64, f64) = (0.0, 0.3);

/// Corners of the parameter sampling box followed by its center.
fn anchor_thetas(d: usize) -> Vec<Vec<f64>> {
    let range = |i: usize| if i == 0 { INTERCEPT_RANGE } else { COEF_RANGE };
    let mut anchors: Vec<Vec<f64>> = if d < 16 {
        (0u32..1 << d)
            .map(|mask| {
                (0..d)
                    .map(|i| {
                        let (lo, hi) = range(i);
                        if mask >> i & 1 == 1 { hi } else { lo }
                    })
                    .collect()
            })
            .collect()
    } else {
        Vec::new()
    };
    anchors.push((0..d).map(|i| {
        let (lo, hi) = range(i);
        0.5 * (lo + hi)
    }).collect());
    anchors
}

fn sample_thetas(d: usize, k_theta: usize, rng: &mut SimRng) -> Vec<Vec<f64>> {
    let mut thetas = anchor_thetas(d);
    // Keep the center if the anchors alone overflow the pool.
    if thetas.len() > k_theta {
        let center = thetas.pop().expect("center anchor");
        thetas.truncate(k_theta.saturating_sub(1));
        thetas.push(center);
        thetas.truncate(k_theta);
    }
    while thetas.len() < k_theta {
        thetas.push(
            (0..d)
                .map(|i| {
                    let (lo, hi) = if i == 0 { INTERCEPT_RANGE } else { COEF_RANGE };
                    lo + (hi - lo) * rng.random::<f64>()
                })
                .collect(),
        );
    }
    thetas
}

fn structured_survivals(points: &[f64], c: f64) -> Vec<Vec<f64>> {
    let uniform = |s: f64| -> Vec<f64> {
        points.iter().map(|&w| ((s - w) / (2.0 * s)).clamp(0.0, 1.0)).collect()
    };
    let step = |a: f64| -> Vec<f64> {
        points.iter().map(|&w| if w <= a { 1.0 } else { 0.0 }).collect()
    };
    let mut out = Vec::new();
    for s in [0.25, 0.5, 0.75, 1.0] {
        out.push(uniform(s * c));
    }
    for a in [-0.5, -0.25, 0.0, 0.25, 0.5] {
        out.push(step(a * c));
    }
    let base = uniform(c);
    for height in [0.15, 0.3, 0.5] {
        for a in [-0.25, 0.0, 0.25] {
            let jump = step(a * c);
            out.push(
                base.iter()
                    .zip(&jump)
                    .map(|(u, s)| (1.0 - height) * u + height * s)
                    .collect(),
            );
        }
    }
    out
}

fn random_survival(len: usize, rng: &mut SimRng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Draws the expert ensemble.
///
/// `k_theta` parameter candidates (box anchors, then intercept `~ Unif[1, 3]`
/// and coefficients `~ Unif[0, 0.3]`) are crossed with `k_f` survival
/// candidates (structured uniform, step and cliff shapes, then random monotone
/// curves), and `k_policy` distinct pairs are kept.
pub fn sample_ensemble(
    d: usize,
    rng: &mut SimRng,
    params: &Exp4Params,
    noise_radius: f64,
) -> Result<Ensemble> {
    if params.k_theta == 0 || params.k_f == 0 || params.k_policy == 0 {
        return Err(invalid("ensemble sizes must be positive"));
    }
    let horizon = params.survival_grid_horizon;
    let delta = delta_for(
        horizon,
        stage_length(horizon),
        d,
        params.survival_grid_delta_mult,
    );
    let grid = build_grid(noise_radius, delta.min(noise_radius))?;
    let points = grid.points();

    let thetas = sample_thetas(d, params.k_theta, rng);
    let mut shapes = structured_survivals(points, noise_radius);
    shapes.truncate(params.k_f);
    while shapes.len() < params.k_f {
        shapes.push(random_survival(points.len(), rng));
    }
    let survivals = shapes
        .into_iter()
        .map(|values| TabulatedSurvival::new(points[0], 2.0 * grid.delta(), values))
        .collect();

    let pairs = params.k_theta * params.k_f;
    let mut chosen: Vec<usize> = if pairs <= params.k_policy {
        (0..pairs).collect()
    } else {
        index::sample(rng, pairs, params.k_policy).into_vec()
    };
    chosen.sort_unstable();
    let experts = chosen
        .into_iter()
        .map(|k| ExpertPolicy {
            theta: k / params.k_f,
            survival: k % params.k_f,
        })
        .collect();
    Ok(Ensemble {
        thetas,
        survivals,
        experts,
    })
}

/// Grid spacing, learning rate and exploration rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exp4Hyper {
    pub gamma: f64,
    pub eta: f64,
    pub explore: f64,
}

/// `gamma = clip(T^(-1/4), 0.02, 0.10)`.
pub fn grid_spacing(horizon: u64) -> f64 {
    (horizon as f64).powf(-0.25).clamp(0.02, 0.10)
}

/// Number of actions `floor(1 / gamma) + 1` on the grid `{k gamma B}`.
pub fn action_count(gamma: f64) -> usize {
    (1.0 / gamma + 1e-9).floor() as usize + 1
}

/// Price grid `{k * gamma * B : k = 0, 1, ..} ∩ [0, B]`.
pub fn action_grid(gamma: f64, price_cap: f64) -> Vec<f64> {
    (0..action_count(gamma))
        .map(|k| (k as f64 * gamma * price_cap).min(price_cap))
        .collect()
}

/// `gamma`, `eta = min(0.5, sqrt(ln K_policy / (T K_act)))` and
/// `explore = min(0.2, sqrt(K_act ln K_policy / T))`.
pub fn hyperparams(horizon: u64, k_policy: usize, k_act: usize) -> Exp4Hyper {
    let t = horizon as f64;
    let log_k = (k_policy as f64).ln();
    Exp4Hyper {
        gamma: grid_spacing(horizon),
        eta: (log_k / (t * k_act as f64)).sqrt().min(0.5),
        explore: (k_act as f64 * log_k / t).sqrt().min(0.2),
    }
}

/// Inverse-propensity estimate of the normalized reward `p * o / B`.
pub fn importance_reward(price: f64, purchased: bool, prob: f64, price_cap: f64) -> f64 {
    if purchased {
        price / price_cap / prob
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
struct Pending {
    action: usize,
    prob: f64,
}

#[derive(Debug, Clone)]
pub struct Exp4 {
    ensemble: Ensemble,
    log_weights: Vec<f64>,
    actions: Vec<f64>,
    price_cap: f64,
    hyper: Exp4Hyper,
    recommendations: Vec<usize>,
    distribution: Vec<f64>,
    /// Per parameter candidate and action: where `p - <x, theta>` falls on the grid.
    lookups: Vec<Lookup>,
    pending: Option<Pending>,
}

impl Exp4 {
    /// Ensemble plus the hyperparameters prescribed for `horizon`.
    pub fn new(ensemble: Ensemble, horizon: u64, price_cap: f64) -> Result<Self> {
        let gamma = grid_spacing(horizon);
        let hyper = hyperparams(horizon, ensemble.len(), action_count(gamma));
        Self::from_parts(ensemble, price_cap, hyper)
    }

    pub fn from_parts(ensemble: Ensemble, price_cap: f64, hyper: Exp4Hyper) -> Result<Self> {
        if ensemble.is_empty() {
            return Err(invalid("ensemble is empty"));
        }
        if !(0.0..=1.0).contains(&hyper.explore) || !(hyper.eta >= 0.0) || !(hyper.gamma > 0.0) {
            return Err(invalid(format!("bad EXP4 hyperparameters {hyper:?}")));
        }
        let first = &ensemble.survivals[0];
        if ensemble.survivals.iter().any(|s| !s.same_grid(first)) {
            return Err(invalid("survival candidates must share one tabulation grid"));
        }
        let n = ensemble.len();
        let actions = action_grid(hyper.gamma, price_cap);
        Ok(Self {
            log_weights: vec![-(n as f64).ln(); n],
            recommendations: vec![0; n],
            distribution: vec![0.0; actions.len()],
            lookups: vec![Lookup::Below; ensemble.thetas.len() * actions.len()],
            actions,
            price_cap,
            hyper,
            ensemble,
            pending: None,
        })
    }

    pub fn hyper(&self) -> Exp4Hyper {
        self.hyper
    }

    pub fn actions(&self) -> &[f64] {
        &self.actions
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    /// Normalized expert weights.
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    /// Action distribution computed by the latest `act`.
    pub fn distribution(&self) -> &[f64] {
        &self.distribution
    }

    /// Action index each expert recommended in the latest `act`.
    pub fn recommendations(&self) -> &[usize] {
        &self.recommendations
    }

    fn recommend(&mut self, x: &[f64]) {
        let k_act = self.actions.len();
        let grid = &self.ensemble.survivals[0];
        for (row, theta) in self.lookups.chunks_mut(k_act).zip(&self.ensemble.thetas) {
            let value = dot(x, theta);
            for (slot, &p) in row.iter_mut().zip(&self.actions) {
                *slot = grid.locate(p - value);
            }
        }
        for (e, expert) in self.ensemble.experts.iter().enumerate() {
            let row = &self.lookups[expert.theta * k_act..(expert.theta + 1) * k_act];
            let curve = &self.ensemble.survivals[expert.survival];
            let mut best = (0, f64::NEG_INFINITY);
            for (k, (&p, &at)) in self.actions.iter().zip(row).enumerate() {
                let revenue = p * curve.at(at);
                if revenue > best.1 {
                    best = (k, revenue);
                }
            }
            self.recommendations[e] = best.0;
        }
    }

    fn mix(&mut self) {
        let k = self.actions.len() as f64;
        let explore = self.hyper.explore;
        self.distribution.fill(explore / k);
        for (&rec, &lw) in self.recommendations.iter().zip(&self.log_weights) {
            self.distribution[rec] += (1.0 - explore) * lw.exp();
        }
    }

    /// Credits the outcome of posting action `action` with sampling probability `prob`.
    pub fn update(&mut self, action: usize, purchased: bool, prob: f64) -> Result<()> {
        if !(prob > 0.0) {
            return Err(invalid(format!("sampling probability must be positive, got {prob}")));
        }
        let reward = importance_reward(self.actions[action], purchased, prob, self.price_cap);
        if reward == 0.0 {
            return Ok(());
        }
        let step = self.hyper.eta * reward;
        for (lw, &rec) in self.log_weights.iter_mut().zip(&self.recommendations) {
            if rec == action {
                *lw += step;
            }
        }
        let max = self.log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + self.log_weights.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        for lw in &mut self.log_weights {
            *lw -= lse;
        }
        Ok(())
    }
}

impl PricingPolicy for Exp4 {
    fn act(&mut self, x: &[f64], rng: &mut SimRng) -> Result<f64> {
        if self.pending.is_some() {
            return Err(PricingError::ProtocolViolation(
                "act called twice without observe".into(),
            ));
        }
        self.recommend(x);
        self.mix();
        let mut u = rng.random::<f64>() * self.distribution.iter().sum::<f64>();
        let mut action = self.actions.len() - 1;
        for (k, &p) in self.distribution.iter().enumerate() {
            u -= p;
            if u < 0.0 && p > 0.0 {
                action = k;
                break;
            }
        }
        while self.distribution[action] <= 0.0 {
            action -= 1;
        }
        self.pending = Some(Pending {
            action,
            prob: self.distribution[action],
        });
        Ok(self.actions[action])
    }

    fn observe(&mut self, purchased: bool) -> Result<()> {
        let pending = self.pending.take().ok_or_else(|| {
            PricingError::ProtocolViolation("observe called without a pending act".into())
        })?;
        self.update(pending.action, purchased, pending.prob)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_survival, oracle_best, NoiseSpec};
    use rand::SeedableRng;

    #[test]
    fn default_ensemble_shape() {
        let mut rng = SimRng::seed_from_u64(1);
        let ens = sample_ensemble(5, &mut rng, &Exp4Params::default(), 1.0).unwrap();
        assert_eq!(ens.len(), 2048);
        assert_eq!(ens.thetas.len(), 256);
        assert_eq!(ens.survivals.len(), 64);
        for s in &ens.survivals {
            assert!(s.values().windows(2).all(|w| w[0] >= w[1]));
            assert!(s.values().iter().all(|v| (0.0..=1.0).contains(v)));
        }
        for theta in &ens.thetas {
            assert!((1.0..=3.0).contains(&theta[0]));
            assert!(theta[1..].iter().all(|v| (0.0..=0.3).contains(v)));
        }
        let mut pairs: Vec<_> = ens.experts.iter().map(|e| (e.theta, e.survival)).collect();
        pairs.dedup();
        assert_eq!(pairs.len(), 2048);
    }

    #[test]
    fn ensemble_is_deterministic() {
        let a = sample_ensemble(5, &mut SimRng::seed_from_u64(4), &Exp4Params::default(), 1.0).unwrap();
        let b = sample_ensemble(5, &mut SimRng::seed_from_u64(4), &Exp4Params::default(), 1.0).unwrap();
        assert_eq!(a.thetas, b.thetas);
        assert_eq!(a.survivals, b.survivals);
        assert_eq!(a.experts, b.experts);
    }

    #[test]
    fn hyperparameter_examples() {
        assert!((grid_spacing(10_000) - 0.1).abs() < 1e-12);
        assert!((grid_spacing(160_000) - 0.05).abs() < 1e-12);
        assert_eq!(grid_spacing(100_000_000), 0.02);
        assert_eq!(grid_spacing(10), 0.10);
        assert_eq!(action_count(0.1), 11);
        assert_eq!(action_count(0.05), 21);
        let h = hyperparams(10_000, 2048, 11);
        assert!((h.eta - ((2048f64).ln() / (10_000.0 * 11.0)).sqrt()).abs() < 1e-15);
        assert!((h.explore - (11.0 * (2048f64).ln() / 10_000.0).sqrt()).abs() < 1e-15);
        assert_eq!(hyperparams(10, 2048, 11).explore, 0.2);
        assert_eq!(hyperparams(1, 2048, 11).eta, 0.5);
        let grid = action_grid(0.1, 4.0);
        assert_eq!(grid.len(), 11);
        assert_eq!(*grid.last().unwrap(), 4.0);
    }

    fn two_expert_toy() -> Exp4 {
        let spacing = 1.0;
        let curve = TabulatedSurvival::new(-1.0, spacing, vec![1.0, 0.5, 0.0]);
        let ensemble = Ensemble {
            thetas: vec![vec![1.0], vec![2.0]],
            survivals: vec![curve],
            experts: vec![
                ExpertPolicy { theta: 0, survival: 0 },
                ExpertPolicy { theta: 1, survival: 0 },
            ],
        };
        Exp4::from_parts(ensemble, 3.0, Exp4Hyper { gamma: 0.5, eta: 0.1, explore: 0.3 }).unwrap()
    }

    #[test]
    fn full_exploration_is_uniform() {
        let mut policy = two_expert_toy();
        policy.hyper.explore = 1.0;
        let mut rng = SimRng::seed_from_u64(0);
        policy.act(&[1.0], &mut rng).unwrap();
        for &p in policy.distribution() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stored_probability_matches_mixture() {
        let mut policy = two_expert_toy();
        let mut rng = SimRng::seed_from_u64(3);
        for round in 0..50 {
            let p = policy.act(&[1.0], &mut rng).unwrap();
            let pending = policy.pending.clone().unwrap();
            let w = policy.weights();
            let k = policy.actions().len() as f64;
            let explore = policy.hyper().explore;
            let mass: f64 = policy
                .recommendations()
                .iter()
                .zip(&w)
                .filter(|(r, _)| **r == pending.action)
                .map(|(_, w)| w)
                .sum();
            assert!((pending.prob - ((1.0 - explore) * mass + explore / k)).abs() < 1e-12);
            assert_eq!(p, policy.actions()[pending.action]);
            policy.observe(round % 3 == 0).unwrap();
            assert!((policy.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn no_purchase_leaves_weights_alone() {
        let mut policy = two_expert_toy();
        let mut rng = SimRng::seed_from_u64(3);
        policy.act(&[1.0], &mut rng).unwrap();
        let before = policy.log_weights.clone();
        policy.observe(false).unwrap();
        assert_eq!(before, policy.log_weights);
    }

    #[test]
    fn identical_recommenders_keep_equal_weights() {
        let curve = TabulatedSurvival::new(-1.0, 1.0, vec![1.0, 0.5, 0.0]);
        let ensemble = Ensemble {
            thetas: vec![vec![2.0], vec![2.0], vec![0.5]],
            survivals: vec![curve],
            experts: (0..3).map(|t| ExpertPolicy { theta: t, survival: 0 }).collect(),
        };
        let mut policy =
            Exp4::from_parts(ensemble, 3.0, Exp4Hyper { gamma: 0.25, eta: 0.2, explore: 0.2 }).unwrap();
        let mut rng = SimRng::seed_from_u64(9);
        for round in 0..200 {
            policy.act(&[1.0], &mut rng).unwrap();
            policy.observe(round % 2 == 0).unwrap();
            let w = policy.weights();
            assert!((w[0] - w[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn importance_weighting_is_unbiased() {
        // Exhaustive expectation over the sampled action and the purchase bit.
        let mut policy = two_expert_toy();
        let mut rng = SimRng::seed_from_u64(0);
        policy.act(&[1.0], &mut rng).unwrap();
        let dist = policy.distribution().to_vec();
        let actions = policy.actions().to_vec();
        assert_eq!(actions.len(), 3);
        let buy = [0.9, 0.6, 0.2];
        for target in 0..3 {
            let mut expectation = 0.0;
            for (a, &pa) in dist.iter().enumerate() {
                for (purchased, po) in [(true, buy[a]), (false, 1.0 - buy[a])] {
                    let r = importance_reward(actions[a], purchased, pa, 3.0);
                    if a == target {
                        expectation += pa * po * r;
                    }
                }
            }
            let truth = actions[target] / 3.0 * buy[target];
            assert!((expectation - truth).abs() < 1e-12);
        }
    }

    #[test]
    fn true_model_expert_plays_nearest_grid_price() {
        let noise = NoiseSpec::uniform(1.0);
        let s = make_survival(&noise, 1.0).unwrap();
        let spacing = 0.01;
        let points: Vec<f64> = (0..=200).map(|i| -1.0 + spacing * i as f64).collect();
        let values = points.iter().map(|&w| s.eval(w)).collect();
        let ensemble = Ensemble {
            thetas: vec![vec![2.25]],
            survivals: vec![TabulatedSurvival::new(-1.0, spacing, values)],
            experts: vec![ExpertPolicy { theta: 0, survival: 0 }],
        };
        let mut policy =
            Exp4::from_parts(ensemble, 4.0, Exp4Hyper { gamma: 0.02, eta: 0.1, explore: 0.0 }).unwrap();
        let target = oracle_best(&s, 2.25, 4.0).price;
        let nearest = policy
            .actions()
            .iter()
            .cloned()
            .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
            .unwrap();
        let mut rng = SimRng::seed_from_u64(1);
        for _ in 0..20 {
            let p = policy.act(&[1.0], &mut rng).unwrap();
            assert_eq!(p, nearest);
            policy.observe(true).unwrap();
        }
    }

    #[test]
    fn weights_survive_long_runs() {
        let mut policy = two_expert_toy();
        policy.hyper.eta = 0.5;
        let mut rng = SimRng::seed_from_u64(2);
        for _ in 0..100_000 {
            policy.act(&[1.0], &mut rng).unwrap();
            policy.observe(true).unwrap();
        }
        let w = policy.weights();
        assert!(w.iter().all(|v| v.is_finite()));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
