use rand::Rng;
use serde::{Deserialize, Serialize};

use super::context::ContextSpec;
use super::noise::{make_survival, NoiseSpec, SurvivalCurve};
use crate::error::{invalid, Result};

/// Declarative description of one synthetic pricing world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub theta_star: Vec<f64>,
    pub context: ContextSpec,
    pub noise: NoiseSpec,
    /// `B`: valuations and prices live in `[0, B]`.
    pub price_cap: f64,
    /// `c`: the noise is supported on `[-c, c]`.
    pub noise_radius: f64,
}

/// The two benchmark noise models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NoisePreset {
    /// `Unif[-1, 1]`.
    Uniform,
    /// Mass 0.3 at zero plus `0.7 * Unif[-1, 1]`.
    Cliff,
}

impl NoisePreset {
    pub fn spec(self) -> NoiseSpec {
        match self {
            NoisePreset::Uniform => NoiseSpec::uniform(1.0),
            NoisePreset::Cliff => NoiseSpec::cliff(1.0, 0.3),
        }
    }
}

impl InstanceSpec {
    /// The five-dimensional benchmark world: intercept plus four `Unif(0, 1)`
    /// features, `theta* = (2, 1/8, 1/8, 1/8, 1/8)`, `c = 1`, `B = 4`.
    pub fn benchmark(noise: NoisePreset) -> Self {
        Self {
            theta_star: vec![2.0, 0.125, 0.125, 0.125, 0.125],
            context: ContextSpec::InterceptUniform {
                d: 5,
                lo: 0.0,
                hi: 1.0,
            },
            noise: noise.spec(),
            price_cap: 4.0,
            noise_radius: 1.0,
        }
    }
}

/// A validated instance together with its exact survival curve.
#[derive(Debug, Clone)]
pub struct PricingInstance {
    spec: InstanceSpec,
    kappa: f64,
    survival: SurvivalCurve,
}

/// One environment draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub x: Vec<f64>,
    /// `u = <x, theta*>`.
    pub u: f64,
    /// `y = u + xi`.
    pub y: f64,
}

impl PricingInstance {
    pub fn new(spec: InstanceSpec) -> Result<Self> {
        spec.context.validate()?;
        let d = spec.context.dim();
        if spec.theta_star.len() != d {
            return Err(invalid(format!(
                "theta_star has {} entries, context dimension is {d}",
                spec.theta_star.len()
            )));
        }
        if spec.theta_star.iter().any(|v| !v.is_finite()) {
            return Err(invalid("theta_star must be finite"));
        }
        let c = spec.noise_radius;
        spec.noise.validate(c, true)?;
        let b = spec.price_cap;
        if !(b > 0.0 && b.is_finite()) {
            return Err(invalid(format!("price cap must be positive, got {b}")));
        }
        let (u_min, u_max) = spec.context.value_range(&spec.theta_star);
        let kappa = u_min - c;
        if kappa <= 0.0 {
            return Err(invalid(format!(
                "buffer violated: min <x, theta*> - c = {kappa} is not positive"
            )));
        }
        if u_max + c > b {
            return Err(invalid(format!(
                "buffer violated: max <x, theta*> + c = {} exceeds B = {b}",
                u_max + c
            )));
        }
        let survival = make_survival(&spec.noise, c)?;
        Ok(Self {
            spec,
            kappa,
            survival,
        })
    }

    pub fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.theta_star.len()
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.spec.theta_star
    }

    pub fn price_cap(&self) -> f64 {
        self.spec.price_cap
    }

    pub fn noise_radius(&self) -> f64 {
        self.spec.noise_radius
    }

    /// `kappa = min <x, theta*> - c`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn survival(&self) -> &SurvivalCurve {
        &self.survival
    }

    pub fn noise_label(&self) -> &str {
        &self.spec.noise.label
    }

    pub fn linear_value(&self, x: &[f64]) -> f64 {
        dot(x, &self.spec.theta_star)
    }

    /// Draws a context and then a noise value, in that order.
    pub fn sample_step<R: Rng + ?Sized>(&self, rng: &mut R) -> Step {
        let x = self.spec.context.sample(rng);
        let u = self.linear_value(&x);
        let y = u + self.spec.noise.sample(rng);
        Step { x, u, y }
    }

    /// Expected revenue `p * S(p - u)` of posting `p` when the linear value is `u`.
    pub fn expected_revenue(&self, p: f64, u: f64) -> f64 {
        p * self.survival.eval(p - u)
    }
}

/// Purchase indicator: the buyer accepts iff `p <= y`.
pub fn feedback(price: f64, valuation: f64) -> bool {
    price <= valuation
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lifts a single-curve pricing problem into `d` dimensions: `theta* = (u0, 0, .., 0)`
/// and contexts are an intercept plus Rademacher coordinates, so `E[x x^T] = I`.
pub fn embed_noncontextual(
    d: usize,
    u0: f64,
    noise: NoiseSpec,
    noise_radius: f64,
    price_cap: f64,
) -> Result<PricingInstance> {
    if d < 2 {
        return Err(invalid(format!("embedding needs d >= 2, got {d}")));
    }
    let mut theta_star = vec![0.0; d];
    theta_star[0] = u0;
    PricingInstance::new(InstanceSpec {
        theta_star,
        context: ContextSpec::InterceptRademacher { d },
        noise,
        price_cap,
        noise_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn feedback_is_inclusive() {
        assert!(feedback(2.0, 2.0));
        assert!(!feedback(2.0001, 2.0));
        assert!(feedback(0.0, 0.0));
        assert!(feedback(0.0, 3.0));
    }

    #[test]
    fn benchmark_instance_is_valid() {
        for preset in [NoisePreset::Uniform, NoisePreset::Cliff] {
            let inst = PricingInstance::new(InstanceSpec::benchmark(preset)).unwrap();
            assert_eq!(inst.kappa(), 1.0);
            assert_eq!(inst.dim(), 5);
        }
    }

    #[test]
    fn valuation_examples() {
        let inst = PricingInstance::new(InstanceSpec::benchmark(NoisePreset::Uniform)).unwrap();
        assert_eq!(inst.linear_value(&[1.0, 0.0, 0.0, 0.0, 0.0]), 2.0);
        let u = inst.linear_value(&[1.0; 5]);
        assert_eq!(u + 1.0, 3.5);
        assert!(u + 1.0 <= inst.price_cap());
    }

    #[test]
    fn valuations_stay_in_range_and_center_on_u() {
        let inst = PricingInstance::new(InstanceSpec::benchmark(NoisePreset::Cliff)).unwrap();
        let mut rng = crate::rng::SimRng::seed_from_u64(5);
        let x = [1.0, 0.5, 0.5, 0.5, 0.5];
        let u = inst.linear_value(&x);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let step = inst.sample_step(&mut rng);
            assert!(step.y >= 0.0 && step.y <= inst.price_cap());
            let y = u + inst.spec().noise.sample(&mut rng);
            sum += y;
            sq += (y - u) * (y - u);
        }
        let mean = sum / n as f64;
        let sigma = (sq / n as f64).sqrt();
        assert!((mean - u).abs() < 3.0 * sigma / (n as f64).sqrt());
    }

    #[test]
    fn buffer_violations_are_rejected() {
        let mut spec = InstanceSpec::benchmark(NoisePreset::Uniform);
        spec.price_cap = 3.4;
        assert!(PricingInstance::new(spec).is_err());
        let mut spec = InstanceSpec::benchmark(NoisePreset::Uniform);
        spec.theta_star[0] = 1.0;
        assert!(PricingInstance::new(spec).is_err());
        let mut spec = InstanceSpec::benchmark(NoisePreset::Uniform);
        spec.theta_star.pop();
        assert!(PricingInstance::new(spec).is_err());
    }

    #[test]
    fn embedding_examples() {
        let inst = embed_noncontextual(3, 2.0, NoiseSpec::uniform(1.0), 1.0, 4.0).unwrap();
        assert_eq!(inst.theta_star(), &[2.0, 0.0, 0.0]);
        let mut rng = crate::rng::SimRng::seed_from_u64(9);
        for _ in 0..100 {
            let s = inst.sample_step(&mut rng);
            assert_eq!(s.u, 2.0);
        }
        assert!(embed_noncontextual(1, 2.0, NoiseSpec::uniform(1.0), 1.0, 4.0).is_err());
        assert!(embed_noncontextual(3, 0.5, NoiseSpec::uniform(1.0), 1.0, 4.0).is_err());
    }
}
