//! The contract shared by every pricing policy the harness can run.

use crate::env::{RevenueOracle, PricingInstance};
use crate::error::{PricingError, Result};
use crate::rng::SimRng;

/// Maps a context to a price, then consumes the single purchase bit.
///
/// Policies never see valuations or noise; `observe` takes one bit. Each
/// `act` must be followed by exactly one `observe`.
pub trait PricingPolicy {
    fn act(&mut self, x: &[f64], rng: &mut SimRng) -> Result<f64>;
    fn observe(&mut self, purchased: bool) -> Result<()>;
}

/// Clairvoyant policy: knows `theta*` and `S`, posts the oracle price.
#[derive(Debug, Clone)]
pub struct OraclePolicy {
    theta_star: Vec<f64>,
    oracle: RevenueOracle,
    pending: bool,
}

impl OraclePolicy {
    pub fn new(instance: &PricingInstance) -> Self {
        Self {
            theta_star: instance.theta_star().to_vec(),
            oracle: RevenueOracle::new(instance.survival().clone(), instance.price_cap()),
            pending: false,
        }
    }
}

impl PricingPolicy for OraclePolicy {
    fn act(&mut self, x: &[f64], _rng: &mut SimRng) -> Result<f64> {
        begin(&mut self.pending)?;
        Ok(self.oracle.best(crate::env::dot(x, &self.theta_star)).price)
    }

    fn observe(&mut self, _purchased: bool) -> Result<()> {
        end(&mut self.pending)
    }
}

/// Posts the same price every round.
#[derive(Debug, Clone)]
pub struct FixedPricePolicy {
    price: f64,
    pending: bool,
}

impl FixedPricePolicy {
    pub fn new(price: f64) -> Self {
        Self {
            price,
            pending: false,
        }
    }
}

impl PricingPolicy for FixedPricePolicy {
    fn act(&mut self, _x: &[f64], _rng: &mut SimRng) -> Result<f64> {
        begin(&mut self.pending)?;
        Ok(self.price)
    }

    fn observe(&mut self, _purchased: bool) -> Result<()> {
        end(&mut self.pending)
    }
}

fn begin(pending: &mut bool) -> Result<()> {
    if std::mem::replace(pending, true) {
        return Err(PricingError::ProtocolViolation(
            "act called twice without observe".into(),
        ));
    }
    Ok(())
}

fn end(pending: &mut bool) -> Result<()> {
    if !std::mem::replace(pending, false) {
        return Err(PricingError::ProtocolViolation(
            "observe called without a pending act".into(),
        ));
    }
    Ok(())
}
