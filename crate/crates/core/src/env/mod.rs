//! Synthetic pricing environments.

mod context;
mod instance;
mod noise;
mod oracle;

pub use context::ContextSpec;
pub use instance::{
    embed_noncontextual, feedback, InstanceSpec, NoisePreset, PricingInstance, Step,
};
pub(crate) use instance::dot;
pub use noise::{make_survival, NoiseComponent, NoiseSpec, SurvivalCurve};
pub use oracle::{oracle_best, OracleChoice, RevenueOracle};
