//! Payoff processes and the direct weighted estimator.

use crate::math::{exp, sqrt};
use crate::sim::Particle;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayoffKind {
    /// `|S_T − K|`, exercisable at maturity only.
    EuropeanStraddle,
    /// `|R_T − K|` on the running average, exercisable at maturity only.
    AsianStraddle,
    /// `(K − S_t)⁺`, exercisable on the exercise grid.
    AmericanPut,
    /// `(R_t − K)⁺`, exercisable on the exercise grid.
    AsianCallEarly,
}

impl PayoffKind {
    pub fn uses_average(self) -> bool {
        matches!(self, PayoffKind::AsianStraddle | PayoffKind::AsianCallEarly)
    }

    pub fn early_exercise(self) -> bool {
        matches!(self, PayoffKind::AmericanPut | PayoffKind::AsianCallEarly)
    }

    fn intrinsic(self, strike: f64, price: f64, average: f64) -> f64 {
        match self {
            PayoffKind::EuropeanStraddle => (price - strike).abs(),
            PayoffKind::AsianStraddle => (average - strike).abs(),
            PayoffKind::AmericanPut => (strike - price).max(0.0),
            PayoffKind::AsianCallEarly => (average - strike).max(0.0),
        }
    }
}

/// A payoff discounted to time 0 at the model drift: `Z_t = e^{−μt}·p(S_t or R_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffSpec {
    pub kind: PayoffKind,
    pub strike: f64,
    /// Maturity in simulation steps.
    pub maturity_steps: usize,
    /// Step length in years.
    pub dt: f64,
    /// Discount rate (the model drift μ).
    pub rate: f64,
}

impl PayoffSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.strike > 0.0) || !self.strike.is_finite() {
            return Err(Error::InvalidConfig(alloc::format!("strike must be > 0, got {}", self.strike)));
        }
        if self.maturity_steps == 0 {
            return Err(Error::InvalidConfig("maturity must be at least one step".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::NonPositiveStep(self.dt));
        }
        Ok(())
    }

    pub fn discount(&self, step: usize) -> f64 {
        exp(-self.rate * step as f64 * self.dt)
    }

    /// Discounted payoff of exercising at `step` in state `(price, average)`.
    #[inline]
    pub fn value(&self, step: usize, price: f64, average: f64) -> f64 {
        self.discount(step) * self.kind.intrinsic(self.strike, price, average)
    }

    #[inline]
    pub fn value_of(&self, step: usize, particle: &Particle) -> f64 {
        self.value(step, particle.price, particle.average)
    }
}

/// `R_t = ((t−1)·R_{t−1} + S_t)/t` for `t ≥ 1`, with `R₀ = 0`.
#[inline]
pub fn running_average_update(previous: f64, price: f64, step: usize) -> Result<f64> {
    if step == 0 {
        return Err(Error::InvalidConfig("running average is undefined at step 0".into()));
    }
    let t = step as f64;
    Ok((t - 1.0) / t * previous + price / t)
}

/// Self-normalised weighted mean `Σwx/Σw` with its delta-method standard error.
pub fn weighted_mean_with_se(
    weights: impl Iterator<Item = f64> + Clone,
    values: impl Iterator<Item = f64> + Clone,
) -> Result<(f64, f64)> {
    let mut sw = 0.0;
    let mut swx = 0.0;
    for (w, x) in weights.clone().zip(values.clone()) {
        sw += w;
        swx += w * x;
    }
    if !(sw > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    let mean = swx / sw;
    let mut s2 = 0.0;
    for (w, x) in weights.zip(values) {
        let r = w * (x - mean);
        s2 += r * r;
    }
    Ok((mean, sqrt(s2) / sw))
}

/// `Ĉ = Σ L_T Z_T / Σ L_T` over a terminal cross-section.
pub fn weighted_price(terminal: &[Particle], payoff: &PayoffSpec) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for p in terminal {
        num += p.weight * payoff.value_of(payoff.maturity_steps, p);
        den += p.weight;
    }
    if !(den > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    Ok(num / den)
}
