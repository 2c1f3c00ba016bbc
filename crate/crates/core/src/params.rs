//! Heston model parameters.
//!
//! The variance follows `dV = (ν − ϱV) dt + κ √V dβ`, so `variance_drift`
//! is the constant term ν (not a long-run level; that is ν/ϱ).

use alloc::format;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HestonParams {
    /// Initial asset price S₀.
    pub spot: f64,
    /// Risk-neutral drift μ per year; also the discount rate.
    pub drift: f64,
    /// Constant term ν of the variance drift.
    pub variance_drift: f64,
    /// Mean-reversion speed ϱ of the variance.
    pub mean_reversion: f64,
    /// Volatility of variance κ.
    pub vol_of_vol: f64,
    /// Correlation ρ between price and variance shocks.
    pub correlation: f64,
    /// Initial variance V₀.
    pub initial_variance: f64,
}

impl HestonParams {
    pub const PS1: HestonParams = HestonParams {
        spot: 100.0,
        drift: 0.02,
        variance_drift: 0.085,
        mean_reversion: 6.21,
        vol_of_vol: 0.2,
        correlation: -0.7,
        initial_variance: 0.501,
    };

    pub const PS2: HestonParams = HestonParams {
        spot: 100.0,
        drift: 0.02,
        variance_drift: 0.424,
        mean_reversion: 6.00,
        vol_of_vol: 0.8,
        correlation: -0.75,
        initial_variance: 0.11,
    };

    pub const PS3: HestonParams = HestonParams {
        spot: 100.0,
        drift: 0.02,
        variance_drift: 0.225,
        mean_reversion: 2.86,
        vol_of_vol: 0.6,
        correlation: -0.96,
        initial_variance: 0.07,
    };

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.spot,
            self.drift,
            self.variance_drift,
            self.mean_reversion,
            self.vol_of_vol,
            self.correlation,
            self.initial_variance,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite field in {self:?}")));
        }
        let positive = [
            ("spot", self.spot),
            ("variance_drift", self.variance_drift),
            ("mean_reversion", self.mean_reversion),
            ("vol_of_vol", self.vol_of_vol),
            ("initial_variance", self.initial_variance),
        ];
        for (name, value) in positive {
            if value <= 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {value}")));
            }
        }
        if self.correlation.abs() > 1.0 {
            return Err(Error::InvalidParams(format!("correlation must lie in [-1, 1], got {}", self.correlation)));
        }
        Ok(())
    }

    /// `4ν/κ²`. Values close to 2 mean the variance spends time near zero.
    pub fn feller_ratio(&self) -> f64 {
        4.0 * self.variance_drift / (self.vol_of_vol * self.vol_of_vol)
    }

    /// Long-run mean of the variance, ν/ϱ.
    pub fn long_run_variance(&self) -> f64 {
        self.variance_drift / self.mean_reversion
    }
}
