//! Contextual dynamic pricing with linear valuations and agnostic,
//! possibly discontinuous noise.
//!
//! A buyer with context `x` values the item at `y = <x, theta*> + xi`, where the
//! noise `xi` is bounded but otherwise arbitrary: it may have atoms, so the
//! demand curve `S(w) = P(xi >= w)` may jump. The seller posts a price `p` and
//! sees only whether `p <= y`.
//!
//! The crate provides
//!
//! - [`env`]: synthetic worlds (atom/uniform noise mixtures, exact survival
//!   curves, contexts) and the exact clairvoyant oracle;
//! - [`estimator`]: randomized-price least squares for `theta*`;
//! - [`grid`]: residual-grid probes, confidence radii, optimistic scores and the
//!   one-step redirect rule;
//! - [`cmrup`]: the conservative-markdown redirect-UCB policy;
//! - [`exp4`]: a sampled-policy EXP4 baseline;
//! - [`harness`]: pseudo-regret episodes, sweeps, power-law fits and reports.
//!
//! ```
//! use pricing_lab::env::{InstanceSpec, NoisePreset};
//! use pricing_lab::harness::{run_episode, Algorithm, RunConfig};
//!
//! let cfg = RunConfig::new(Algorithm::Cmrup, InstanceSpec::benchmark(NoisePreset::Cliff), 2000);
//! let trace = run_episode(&cfg)?;
//! assert!(trace.final_regret() > 0.0);
//! # Ok::<(), pricing_lab::PricingError>(())
//! ```

pub mod cmrup;
pub mod env;
mod error;
pub mod estimator;
pub mod exp4;
pub mod grid;
pub mod harness;
pub mod policy;
pub mod rng;

pub use error::{PricingError, Result};
