//! Conservative-markdown redirect-UCB pricing.
//!
//! Three stages over a horizon `T`, with `t1 = tw = ceil(T^(2/3))`:
//!
//! 1. **Estimate**: post `p ~ Unif[0, B]` and accumulate `(x, B * o)`. After
//!    `t1` rounds solve for `theta_hat`, fix `Delta` and build the residual grid.
//! 2. **Warmup**: probe a uniformly random grid index each round.
//! 3. **Adapt**: score every index optimistically, pick the argmax `j_t` and
//!    probe it directly while its radius exceeds `Delta`; afterwards probe
//!    `j_t - 1` instead (or `0` at the boundary).
//!
//! All randomness comes from the stream passed to `act`, drawn in a fixed
//! order: one uniform per Stage-1 round, one index per warmup round, nothing
//! in Stage 3.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{dot, PricingInstance};
use crate::error::{invalid, PricingError, Result};
use crate::estimator::{
    delta_for, solve_theta, stage_length, DesignAccumulator, ThetaHat, DEFAULT_EIG_TOL,
};
use crate::grid::{
    build_grid, choose_action, conf_radius, probe_price, ucb_score, Action, GridSnapshot,
    ProbeMode, ProbeStats, ResidualGrid,
};
use crate::policy::PricingPolicy;
use crate::rng::SimRng;

/// Tunable constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CmrupParams {
    /// Grid-scale multiplier in `Delta = delta_mult * sqrt(d ln T / t1)`.
    pub delta_mult: f64,
    /// Confidence constant in `b = c_ucb * sqrt(ln T / max(1, n))`.
    pub c_ucb: f64,
}

impl Default for CmrupParams {
    fn default() -> Self {
        Self {
            delta_mult: 0.35,
            c_ucb: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmrupConfig {
    pub horizon: u64,
    pub dim: usize,
    pub params: CmrupParams,
    pub price_cap: f64,
    pub noise_radius: f64,
}

impl CmrupConfig {
    pub fn for_instance(instance: &PricingInstance, horizon: u64, params: CmrupParams) -> Self {
        Self {
            horizon,
            dim: instance.dim(),
            params,
            price_cap: instance.price_cap(),
            noise_radius: instance.noise_radius(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.horizon < 8 {
            return Err(invalid(format!("horizon must be at least 8, got {}", self.horizon)));
        }
        if !(self.params.delta_mult > 0.0) {
            return Err(invalid("delta_mult must be positive"));
        }
        if !(self.params.c_ucb > 0.0) {
            return Err(invalid("c_ucb must be positive"));
        }
        if self.dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Estimate,
    Warmup,
    Adapt,
}

/// What the policy did in the most recent round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub stage: Stage,
    pub price: f64,
    pub clipped: bool,
    /// `<x, theta_hat>`; `None` during Stage 1.
    pub u_hat: Option<f64>,
    /// Index whose statistics receive the outcome.
    pub played: Option<usize>,
    /// Stage-3 selection and mode.
    pub action: Option<Action>,
    /// `max_j U_{t,j}` in Stage 3.
    pub max_score: Option<f64>,
}

#[derive(Debug, Clone)]
enum Pending {
    Estimate(Vec<f64>),
    Probe(usize),
}

#[derive(Debug, Clone)]
pub struct Cmrup {
    config: CmrupConfig,
    t1: u64,
    tw: u64,
    delta: f64,
    round: u64,
    acc: DesignAccumulator,
    theta_hat: Option<ThetaHat>,
    rank_deficient: bool,
    grid: Option<ResidualGrid>,
    stats: ProbeStats,
    direct_counts: Vec<u64>,
    clipped_probes: u64,
    pending: Option<Pending>,
    last: Option<RoundRecord>,
    scores: Vec<f64>,
    radii: Vec<f64>,
}

impl Cmrup {
    /// Fails with `InvalidSpec` if the configuration is out of range or the
    /// implied grid scale exceeds the noise radius.
    pub fn new(config: CmrupConfig) -> Result<Self> {
        config.validate()?;
        let t1 = stage_length(config.horizon);
        let delta = delta_for(config.horizon, t1, config.dim, config.params.delta_mult);
        if delta > config.noise_radius {
            return Err(invalid(format!(
                "grid scale {delta} exceeds noise radius {}; horizon {} is too small",
                config.noise_radius, config.horizon
            )));
        }
        Ok(Self {
            t1,
            tw: t1,
            delta,
            round: 0,
            acc: DesignAccumulator::new(config.dim),
            theta_hat: None,
            rank_deficient: false,
            grid: None,
            stats: ProbeStats::default(),
            direct_counts: Vec::new(),
            clipped_probes: 0,
            pending: None,
            last: None,
            scores: Vec::new(),
            radii: Vec::new(),
            config,
        })
    }

    /// Starts directly at the warmup stage with a supplied parameter, skipping
    /// estimation. Stage lengths and `Delta` are unchanged. Used to study the
    /// grid stages in isolation (for example with `theta_hat = theta*`).
    pub fn with_parameter(config: CmrupConfig, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != config.dim {
            return Err(invalid("parameter length does not match dimension"));
        }
        let mut policy = Self::new(config)?;
        policy.round = policy.t1;
        policy.install_parameter(theta)?;
        Ok(policy)
    }

    fn install_parameter(&mut self, theta: Vec<f64>) -> Result<()> {
        let grid = build_grid(self.config.noise_radius, self.delta)?;
        let m = grid.m_count();
        self.stats = ProbeStats::new(m);
        self.direct_counts = vec![0; m];
        self.scores = vec![0.0; m];
        self.radii = vec![0.0; m];
        self.grid = Some(grid);
        self.theta_hat = Some(ThetaHat {
            theta,
            delta: self.delta,
            t1: self.t1,
        });
        Ok(())
    }

    /// Stage of the next round to be played.
    pub fn stage(&self) -> Stage {
        if self.round < self.t1 {
            Stage::Estimate
        } else if self.round < self.t1 + self.tw {
            Stage::Warmup
        } else {
            Stage::Adapt
        }
    }

    pub fn config(&self) -> &CmrupConfig {
        &self.config
    }

    /// Completed rounds.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn t1(&self) -> u64 {
        self.t1
    }

    pub fn tw(&self) -> u64 {
        self.tw
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn theta_hat(&self) -> Option<&ThetaHat> {
        self.theta_hat.as_ref()
    }

    /// Whether the Stage-1 pseudoinverse dropped a direction.
    pub fn rank_deficient(&self) -> bool {
        self.rank_deficient
    }

    pub fn grid(&self) -> Option<&ResidualGrid> {
        self.grid.as_ref()
    }

    pub fn stats(&self) -> &ProbeStats {
        &self.stats
    }

    /// Per-index number of Stage-3 rounds executed in direct mode.
    pub fn direct_counts(&self) -> &[u64] {
        &self.direct_counts
    }

    pub fn clipped_probes(&self) -> u64 {
        self.clipped_probes
    }

    pub fn last_round(&self) -> Option<&RoundRecord> {
        self.last.as_ref()
    }

    /// Upper bound on direct plays of any one index: `ceil(c_ucb^2 ln T / Delta^2) + 1`.
    pub fn direct_budget(&self) -> u64 {
        let c = self.config.params.c_ucb;
        (c * c * (self.config.horizon as f64).ln() / (self.delta * self.delta)).ceil() as u64 + 1
    }

    pub fn snapshot(&self) -> Option<GridSnapshot> {
        self.grid.as_ref().map(|g| {
            GridSnapshot::capture(g, &self.stats, self.config.horizon, self.config.params.c_ucb)
        })
    }

    fn u_hat(&self, x: &[f64]) -> f64 {
        dot(x, &self.theta_hat.as_ref().expect("parameter installed").theta)
    }

    fn finish_estimation(&mut self) -> Result<()> {
        let sol = solve_theta(&self.acc, DEFAULT_EIG_TOL);
        self.rank_deficient = sol.rank_deficient();
        self.install_parameter(sol.theta)
    }

    fn probe(&mut self, stage: Stage, u_hat: f64, j: usize, action: Option<Action>, max_score: Option<f64>) -> f64 {
        let grid = self.grid.as_ref().expect("grid built after Stage 1");
        let probe = probe_price(u_hat, j, grid, self.config.price_cap);
        if probe.clipped {
            self.clipped_probes += 1;
        }
        self.pending = Some(Pending::Probe(j));
        self.last = Some(RoundRecord {
            stage,
            price: probe.price,
            clipped: probe.clipped,
            u_hat: Some(u_hat),
            played: Some(j),
            action,
            max_score,
        });
        probe.price
    }
}

impl PricingPolicy for Cmrup {
    fn act(&mut self, x: &[f64], rng: &mut SimRng) -> Result<f64> {
        if self.pending.is_some() {
            return Err(PricingError::ProtocolViolation(
                "act called twice without observe".into(),
            ));
        }
        if x.len() != self.config.dim {
            return Err(invalid(format!(
                "context has {} entries, expected {}",
                x.len(),
                self.config.dim
            )));
        }
        match self.stage() {
            Stage::Estimate => {
                let price = self.config.price_cap * rng.random::<f64>();
                self.pending = Some(Pending::Estimate(x.to_vec()));
                self.last = Some(RoundRecord {
                    stage: Stage::Estimate,
                    price,
                    clipped: false,
                    u_hat: None,
                    played: None,
                    action: None,
                    max_score: None,
                });
                Ok(price)
            }
            Stage::Warmup => {
                let u_hat = self.u_hat(x);
                let j = rng.random_range(0..self.stats.len());
                Ok(self.probe(Stage::Warmup, u_hat, j, None, None))
            }
            Stage::Adapt => {
                let u_hat = self.u_hat(x);
                let grid = self.grid.as_ref().expect("grid built after Stage 1");
                let (horizon, c_ucb) = (self.config.horizon, self.config.params.c_ucb);
                for j in 0..self.stats.len() {
                    let b = conf_radius(self.stats.count(j), horizon, c_ucb);
                    self.radii[j] = b;
                    self.scores[j] = ucb_score(u_hat, j, grid, self.stats.mean(j), b);
                }
                let action = choose_action(&self.scores, &self.radii, self.delta);
                let max_score = self.scores[action.selected];
                if action.mode == ProbeMode::Direct {
                    self.direct_counts[action.played] += 1;
                }
                Ok(self.probe(Stage::Adapt, u_hat, action.played, Some(action), Some(max_score)))
            }
        }
    }

    fn observe(&mut self, purchased: bool) -> Result<()> {
        match self.pending.take() {
            None => Err(PricingError::ProtocolViolation(
                "observe called without a pending act".into(),
            )),
            Some(Pending::Estimate(x)) => {
                self.acc.accumulate(&x, purchased, self.config.price_cap);
                self.round += 1;
                if self.round == self.t1 {
                    self.finish_estimation()?;
                }
                Ok(())
            }
            Some(Pending::Probe(j)) => {
                self.stats.record(j, purchased);
                self.round += 1;
                Ok(())
            }
        }
    }
}
