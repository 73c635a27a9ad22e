use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cmrup::CmrupParams;
use crate::env::InstanceSpec;
use crate::error::{invalid, PricingError, Result};
use crate::exp4::Exp4Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Cmrup,
    #[serde(rename = "d2exp4")]
    #[value(name = "d2exp4")]
    D2Exp4,
    Oracle,
    FixedPrice,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Cmrup => "cmrup",
            Algorithm::D2Exp4 => "d2exp4",
            Algorithm::Oracle => "oracle",
            Algorithm::FixedPrice => "fixed_price",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rounds at which cumulative regret is recorded. The final round is always included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckpointSchedule {
    /// `1, 2, 4, 8, ..` up to the horizon.
    #[default]
    Geometric,
    Explicit { rounds: Vec<u64> },
}

impl CheckpointSchedule {
    pub fn rounds(&self, horizon: u64) -> Vec<u64> {
        let mut rounds: Vec<u64> = match self {
            CheckpointSchedule::Geometric => std::iter::successors(Some(1u64), |t| t.checked_mul(2))
                .take_while(|&t| t <= horizon)
                .collect(),
            CheckpointSchedule::Explicit { rounds } => {
                rounds.iter().copied().filter(|&t| t >= 1 && t <= horizon).collect()
            }
        };
        rounds.push(horizon);
        rounds.sort_unstable();
        rounds.dedup();
        rounds
    }
}

/// Everything that determines one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub horizon: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub master_seed: u64,
    pub instance: InstanceSpec,
    #[serde(default)]
    pub cmrup: CmrupParams,
    #[serde(default)]
    pub exp4: Exp4Params,
    /// Price posted by `fixed_price`; defaults to the cap `B`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_price: Option<f64>,
    #[serde(default)]
    pub checkpoints: CheckpointSchedule,
    /// Also accumulate realized revenue (diagnostic only).
    #[serde(default)]
    pub log_realized: bool,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, instance: InstanceSpec, horizon: u64) -> Self {
        Self {
            algorithm,
            horizon,
            seed: 0,
            master_seed: 0,
            instance,
            cmrup: CmrupParams::default(),
            exp4: Exp4Params::default(),
            fixed_price: None,
            checkpoints: CheckpointSchedule::default(),
            log_realized: false,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| PricingError::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| PricingError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(invalid("horizon must be positive"));
        }
        if let Some(p) = self.fixed_price {
            if !(0.0..=self.instance.price_cap).contains(&p) {
                return Err(invalid(format!("fixed price {p} outside [0, B]")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::NoisePreset;

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::new(Algorithm::D2Exp4, InstanceSpec::benchmark(NoisePreset::Cliff), 4000);
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let cfg = RunConfig::new(Algorithm::Cmrup, InstanceSpec::benchmark(NoisePreset::Uniform), 1000);
        let text = cfg.to_toml_string().unwrap();
        assert!(RunConfig::from_toml_str(&format!("bogus = 1\n{text}")).is_err());
        let nested = text.replace("[cmrup]", "[cmrup]\nextra = 2.0");
        assert!(RunConfig::from_toml_str(&nested).is_err());
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let text = r#"
algorithm = "cmrup"
horizon = 1000

[instance]
theta_star = [2.0, 0.125, 0.125, 0.125, 0.125]
price_cap = 4.0
noise_radius = 1.0

[instance.context]
kind = "intercept_uniform"
d = 5
lo = 0.0
hi = 1.0

[instance.noise]
label = "cliff"
components = [
  { kind = "atom", at = 0.0, weight = 0.3 },
  { kind = "uniform", lo = -1.0, hi = 1.0, weight = 0.7 },
]
"#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.instance, InstanceSpec::benchmark(NoisePreset::Cliff));
        assert_eq!(cfg.cmrup, CmrupParams::default());
        assert_eq!(cfg.checkpoints, CheckpointSchedule::Geometric);
    }

    #[test]
    fn geometric_checkpoints() {
        assert_eq!(CheckpointSchedule::Geometric.rounds(10), vec![1, 2, 4, 8, 10]);
        assert_eq!(CheckpointSchedule::Geometric.rounds(8), vec![1, 2, 4, 8]);
        let explicit = CheckpointSchedule::Explicit { rounds: vec![5, 50, 3] };
        assert_eq!(explicit.rounds(20), vec![3, 5, 20]);
    }
}
