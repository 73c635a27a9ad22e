//! Exact clairvoyant benchmark `max_{p in [0, B]} p * S(p - u)`.
//!
//! On each open piece of the survival curve, revenue is a quadratic in the
//! residual, so the supremum over `[0, B]` is attained at one of finitely many
//! candidates: the interior stationary point of a concave piece, a breakpoint
//! (where the left-continuous `S` takes its larger value, capturing atoms), or
//! a cap of the price range. Candidates are evaluated in price space with the
//! same `p * S(p - u)` expression the regret accounting uses.

use super::noise::SurvivalCurve;

/// The oracle's price and revenue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleChoice {
    pub price: f64,
    pub revenue: f64,
}

/// Precomputed candidate structure for one survival curve and price cap.
#[derive(Debug, Clone)]
pub struct RevenueOracle {
    survival: SurvivalCurve,
    price_cap: f64,
}

impl RevenueOracle {
    pub fn new(survival: SurvivalCurve, price_cap: f64) -> Self {
        Self {
            survival,
            price_cap,
        }
    }

    pub fn survival(&self) -> &SurvivalCurve {
        &self.survival
    }

    /// Largest price `p <= u + w` with `p - u <= w` in floating point, so that
    /// evaluating at `p` includes any atom sitting at residual `w`.
    fn price_at_residual(u: f64, w: f64) -> f64 {
        let mut p = u + w;
        while p - u > w {
            p = p.next_down();
        }
        p
    }

    fn candidates(&self, u: f64) -> Vec<f64> {
        let cap = self.price_cap;
        let mut prices = vec![0.0, cap];
        prices.extend(
            self.survival
                .breakpoints()
                .iter()
                .map(|&b| Self::price_at_residual(u, b)),
        );
        for piece in self.survival.pieces() {
            let slope = piece.slope();
            if slope < 0.0 {
                // d/dw (u + w)(S(left+) + slope (w - left)) = 0
                let w = 0.5 * (piece.left - u) - piece.after_left / (2.0 * slope);
                if w > piece.left && w < piece.right {
                    prices.push(u + w);
                }
            }
        }
        prices.retain(|p| (0.0..=cap).contains(p));
        prices.sort_by(f64::total_cmp);
        prices
    }

    /// Best price for linear value `u`. Ties go to the lowest price.
    pub fn best(&self, u: f64) -> OracleChoice {
        let mut best = OracleChoice {
            price: 0.0,
            revenue: 0.0,
        };
        for p in self.candidates(u) {
            let revenue = p * self.survival.eval(p - u);
            if revenue > best.revenue {
                best = OracleChoice { price: p, revenue };
            }
        }
        best
    }
}

/// One-shot form of [`RevenueOracle::best`].
pub fn oracle_best(survival: &SurvivalCurve, u: f64, price_cap: f64) -> OracleChoice {
    RevenueOracle::new(survival.clone(), price_cap).best(u)
}
