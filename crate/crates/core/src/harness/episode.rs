use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Algorithm, RunConfig};
use crate::cmrup::{Cmrup, CmrupConfig};
use crate::env::{feedback, PricingInstance, RevenueOracle};
use crate::error::{PricingError, Result};
use crate::exp4::{sample_ensemble, Exp4};
use crate::policy::{FixedPricePolicy, OraclePolicy, PricingPolicy};
use crate::rng::{stream, SimRng, StreamPurpose};

/// Per-round slack allowed before a negative regret increment is an error.
const NEGATIVE_SLACK: f64 = 1e-12;

/// One logged point of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: u64,
    pub cum_regret: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realized_revenue: Option<f64>,
}

/// Diagnostics recorded alongside a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunMeta {
    pub theta_hat: Option<Vec<f64>>,
    pub delta: Option<f64>,
    /// Rounds at which Stage 2 and Stage 3 begin (CMRUP only).
    pub stage_boundaries: Option<(u64, u64)>,
    pub clipped_probes: u64,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub noise: String,
    pub d: usize,
    pub horizon: u64,
    pub seed: u64,
    pub checkpoints: Vec<Checkpoint>,
    pub meta: RunMeta,
}

impl RunTrace {
    /// `R_T`.
    pub fn final_regret(&self) -> f64 {
        self.checkpoints.last().map_or(0.0, |c| c.cum_regret)
    }

    /// Checks that cumulative regret is non-negative and non-decreasing.
    pub fn check_monotone(&self) -> Result<()> {
        let mut prev = 0.0;
        for c in &self.checkpoints {
            if !(c.cum_regret >= prev) {
                return Err(PricingError::RegretInvariant(format!(
                    "{} T={} seed={}: regret {} at t={} below {}",
                    self.algorithm, self.horizon, self.seed, c.cum_regret, c.t, prev
                )));
            }
            prev = c.cum_regret;
        }
        Ok(())
    }
}

enum AnyPolicy {
    Cmrup(Box<Cmrup>),
    Exp4(Box<Exp4>),
    Oracle(OraclePolicy),
    Fixed(FixedPricePolicy),
}

impl AnyPolicy {
    fn build(cfg: &RunConfig, instance: &PricingInstance) -> Result<Self> {
        Ok(match cfg.algorithm {
            Algorithm::Cmrup => AnyPolicy::Cmrup(Box::new(Cmrup::new(CmrupConfig::for_instance(
                instance,
                cfg.horizon,
                cfg.cmrup,
            ))?)),
            Algorithm::D2Exp4 => {
                let mut rng = stream(cfg.master_seed, cfg.horizon, cfg.seed, StreamPurpose::Ensemble);
                let ensemble =
                    sample_ensemble(instance.dim(), &mut rng, &cfg.exp4, instance.noise_radius())?;
                AnyPolicy::Exp4(Box::new(Exp4::new(ensemble, cfg.horizon, instance.price_cap())?))
            }
            Algorithm::Oracle => AnyPolicy::Oracle(OraclePolicy::new(instance)),
            Algorithm::FixedPrice => AnyPolicy::Fixed(FixedPricePolicy::new(
                cfg.fixed_price.unwrap_or(instance.price_cap()),
            )),
        })
    }

    fn as_policy(&mut self) -> &mut dyn PricingPolicy {
        match self {
            AnyPolicy::Cmrup(p) => p.as_mut(),
            AnyPolicy::Exp4(p) => p.as_mut(),
            AnyPolicy::Oracle(p) => p,
            AnyPolicy::Fixed(p) => p,
        }
    }

    fn meta(&self) -> RunMeta {
        match self {
            AnyPolicy::Cmrup(p) => RunMeta {
                theta_hat: p.theta_hat().map(|t| t.theta.clone()),
                delta: Some(p.delta()),
                stage_boundaries: Some((p.t1() + 1, p.t1() + p.tw() + 1)),
                clipped_probes: p.clipped_probes(),
                wall_time_secs: 0.0,
            },
            _ => RunMeta::default(),
        }
    }
}

/// Runs one episode and accounts pseudo-regret against the exact oracle.
///
/// Contexts and noise come from the environment stream, the policy's own
/// randomness from the policy stream; both are derived from
/// `(master_seed, horizon, seed)`.
pub fn run_episode(cfg: &RunConfig) -> Result<RunTrace> {
    cfg.validate()?;
    let started = Instant::now();
    let instance = PricingInstance::new(cfg.instance.clone())?;
    let mut policy = AnyPolicy::build(cfg, &instance)?;
    let oracle = RevenueOracle::new(instance.survival().clone(), instance.price_cap());
    let mut env_rng = stream(cfg.master_seed, cfg.horizon, cfg.seed, StreamPurpose::Environment);
    let mut policy_rng: SimRng = stream(cfg.master_seed, cfg.horizon, cfg.seed, StreamPurpose::Policy);

    let schedule = cfg.checkpoints.rounds(cfg.horizon);
    let mut next = schedule.iter().peekable();
    let mut checkpoints = Vec::with_capacity(schedule.len());
    let cap = instance.price_cap();
    let mut cum = 0.0;
    let mut realized = 0.0;

    for t in 1..=cfg.horizon {
        let step = instance.sample_step(&mut env_rng);
        let pol = policy.as_policy();
        let price = pol.act(&step.x, &mut policy_rng)?;
        let purchased = feedback(price, step.y);
        pol.observe(purchased)?;

        let best = oracle.best(step.u).revenue;
        let increment = best - instance.expected_revenue(price, step.u);
        if increment < -NEGATIVE_SLACK || increment > cap + NEGATIVE_SLACK || increment.is_nan() {
            return Err(PricingError::RegretInvariant(format!(
                "round {t}: increment {increment} outside [0, B]"
            )));
        }
        cum += increment.max(0.0);
        if purchased {
            realized += price;
        }
        if next.peek() == Some(&&t) {
            next.next();
            checkpoints.push(Checkpoint {
                t,
                cum_regret: cum,
                realized_revenue: cfg.log_realized.then_some(realized),
            });
        }
    }

    let mut meta = policy.meta();
    meta.wall_time_secs = started.elapsed().as_secs_f64();
    let trace = RunTrace {
        algorithm: cfg.algorithm,
        noise: instance.noise_label().to_owned(),
        d: instance.dim(),
        horizon: cfg.horizon,
        seed: cfg.seed,
        checkpoints,
        meta,
    };
    trace.check_monotone()?;
    Ok(trace)
}
