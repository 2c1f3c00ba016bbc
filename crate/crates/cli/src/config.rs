//! TOML experiment configuration.
//!
//! ```toml
//! parameter_set = "PS2"      # or a [market] table
//! particles = 100000
//! maturity = 1.0             # years
//! repetitions = 50
//! seed = 1
//! # steps_per_year, substeps, epsilon, stop_policy default per parameter set
//!
//! [resample]
//! mode = "effective"         # none | bootstrap | combined | effective
//! # r, c_eff, c_noneff default per parameter set
//!
//! [payoff]
//! kind = "asian_call_early"  # european_straddle | asian_straddle | american_put | asian_call_early
//! strike = 100.0
//!
//! [sa]
//! per_variable = 5           # J = per_variable^3 (or ^2 for american_put)
//! # gamma, chi default from the SA/DP table
//! ```

use std::path::{Path, PathBuf};

use branchmc_core::sa::ExerciseGrid;
use branchmc_core::sim::EvolveOptions;
use branchmc_core::{
    BasisSpec, BasisVars, HestonParams, PayoffKind, PayoffSpec, ResampleMode, SaConfig, SimConfig, StopPolicy,
};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::registry::{ParameterSet, SaColumn, SimulationDefaults, CUSTOM_DEFAULTS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub spot: f64,
    pub drift: f64,
    pub variance_drift: f64,
    pub mean_reversion: f64,
    pub vol_of_vol: f64,
    pub correlation: f64,
    pub initial_variance: f64,
}

impl From<HestonParams> for MarketConfig {
    fn from(p: HestonParams) -> Self {
        MarketConfig {
            spot: p.spot,
            drift: p.drift,
            variance_drift: p.variance_drift,
            mean_reversion: p.mean_reversion,
            vol_of_vol: p.vol_of_vol,
            correlation: p.correlation,
            initial_variance: p.initial_variance,
        }
    }
}

impl From<MarketConfig> for HestonParams {
    fn from(m: MarketConfig) -> Self {
        HestonParams {
            spot: m.spot,
            drift: m.drift,
            variance_drift: m.variance_drift,
            mean_reversion: m.mean_reversion,
            vol_of_vol: m.vol_of_vol,
            correlation: m.correlation,
            initial_variance: m.initial_variance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopPolicyName {
    Freeze,
    Kill,
}

impl From<StopPolicyName> for StopPolicy {
    fn from(s: StopPolicyName) -> Self {
        match s {
            StopPolicyName::Freeze => StopPolicy::Freeze,
            StopPolicyName::Kill => StopPolicy::Kill,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ResampleName {
    #[default]
    None,
    Bootstrap,
    Combined,
    Effective,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResampleConfig {
    pub mode: ResampleName,
    pub r: Option<f64>,
    pub c_eff: Option<f64>,
    pub c_noneff: Option<f64>,
    /// Rebalance after every `every`-th step.
    pub every: usize,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        ResampleConfig { mode: ResampleName::None, r: None, c_eff: None, c_noneff: None, every: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffName {
    EuropeanStraddle,
    AsianStraddle,
    AmericanPut,
    AsianCallEarly,
}

impl From<PayoffName> for PayoffKind {
    fn from(p: PayoffName) -> Self {
        match p {
            PayoffName::EuropeanStraddle => PayoffKind::EuropeanStraddle,
            PayoffName::AsianStraddle => PayoffKind::AsianStraddle,
            PayoffName::AmericanPut => PayoffKind::AmericanPut,
            PayoffName::AsianCallEarly => PayoffKind::AsianCallEarly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PayoffConfig {
    pub kind: PayoffName,
    pub strike: f64,
}

impl Default for PayoffConfig {
    fn default() -> Self {
        PayoffConfig { kind: PayoffName::EuropeanStraddle, strike: 100.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaSection {
    pub per_variable: usize,
    pub gamma: Option<f64>,
    pub chi: Option<f64>,
    pub averaging: bool,
    /// Exercise every `exercise_every`-th step.
    pub exercise_every: usize,
}

impl Default for SaSection {
    fn default() -> Self {
        SaSection { per_variable: 5, gamma: None, chi: None, averaging: true, exercise_every: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub parameter_set: Option<ParameterSet>,
    pub market: Option<MarketConfig>,
    pub particles: usize,
    pub maturity: f64,
    pub steps_per_year: Option<usize>,
    pub substeps: Option<usize>,
    pub epsilon: Option<f64>,
    pub stop_policy: Option<StopPolicyName>,
    pub exponent_cap: f64,
    pub repetitions: usize,
    pub seed: u64,
    /// Known true price for RMSE; European payoffs fall back to the
    /// semi-analytic price.
    pub reference_price: Option<f64>,
    pub output: Option<PathBuf>,
    pub resample: ResampleConfig,
    pub payoff: PayoffConfig,
    pub sa: SaSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            parameter_set: Some(ParameterSet::Ps2),
            market: None,
            particles: 100_000,
            maturity: 1.0,
            steps_per_year: None,
            substeps: None,
            epsilon: None,
            stop_policy: None,
            exponent_cap: EvolveOptions::default().exponent_cap,
            repetitions: 1,
            seed: 0,
            reference_price: None,
            output: None,
            resample: ResampleConfig::default(),
            payoff: PayoffConfig::default(),
            sa: SaSection::default(),
        }
    }
}

/// Everything a run needs, with table defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub label: String,
    pub parameter_set: Option<ParameterSet>,
    pub sim: SimConfig,
    pub payoff: PayoffSpec,
    pub basis: BasisSpec,
    pub sa: SaConfig,
    pub repetitions: usize,
    pub reference_price: Option<f64>,
    pub maturity: f64,
    pub warnings: Vec<String>,
}

impl ExperimentConfig {
    pub fn preset(set: ParameterSet, kind: PayoffName) -> Self {
        ExperimentConfig {
            parameter_set: Some(set),
            payoff: PayoffConfig { kind, strike: 100.0 },
            ..Default::default()
        }
    }

    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|source| HarnessError::Parse { path: path.to_owned(), source })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment configs always serialise")
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let mut warnings = Vec::new();
        let (params, defaults, set): (HestonParams, SimulationDefaults, _) = match (self.market, self.parameter_set) {
            (Some(m), _) => {
                warnings.push(String::from(
                    "custom market parameters: defaulting to M=6, epsilon=1e-5, kill policy unless set",
                ));
                (m.into(), CUSTOM_DEFAULTS, None)
            }
            (None, Some(s)) => (s.market(), s.simulation(), Some(s)),
            (None, None) => {
                return Err(HarnessError::Config(String::from("either parameter_set or [market] is required")))
            }
        };
        params.validate()?;

        let steps_per_year = self.steps_per_year.unwrap_or(defaults.steps_per_year);
        if steps_per_year == 0 || !(self.maturity > 0.0) {
            return Err(HarnessError::Config(format!(
                "need steps_per_year > 0 and maturity > 0, got {steps_per_year} and {}",
                self.maturity
            )));
        }
        let steps_f = self.maturity * steps_per_year as f64;
        let steps = steps_f.round() as usize;
        if steps == 0 || (steps_f - steps as f64).abs() > 1e-9 {
            return Err(HarnessError::Config(format!(
                "maturity {} is not a whole number of steps at {steps_per_year} per year",
                self.maturity
            )));
        }
        let dt = 1.0 / steps_per_year as f64;

        let resample = match self.resample.mode {
            ResampleName::None => ResampleMode::None,
            ResampleName::Bootstrap => ResampleMode::Bootstrap,
            ResampleName::Combined => ResampleMode::Combined { r: self.resample.r.unwrap_or(defaults.combined_r) },
            ResampleName::Effective => ResampleMode::Effective {
                c_eff: self.resample.c_eff.unwrap_or(defaults.c_eff),
                c_noneff: self.resample.c_noneff.unwrap_or(defaults.c_noneff),
            },
        };

        let kind: PayoffKind = self.payoff.kind.into();
        let payoff = PayoffSpec { kind, strike: self.payoff.strike, maturity_steps: steps, dt, rate: params.drift };
        payoff.validate()?;

        let vars = if kind.uses_average() { BasisVars::PriceVarianceAverage } else { BasisVars::PriceVariance };
        let basis = BasisSpec::new(self.sa.per_variable, vars, self.payoff.strike)?;
        let tabulated = set.and_then(|s| s.sa_parameters(self.sa.per_variable, SaColumn::for_mode(&resample)));
        let (gamma, chi) = match (self.sa.gamma, self.sa.chi, tabulated) {
            (Some(g), Some(c), _) => (g, c),
            (g, c, Some((tg, tc))) => (g.unwrap_or(tg), c.unwrap_or(tc)),
            (g, c, None) => {
                if kind.early_exercise() {
                    warnings.push(String::from("no tabulated SA parameters: defaulting gamma=1, chi=0.05 unless set"));
                }
                (g.unwrap_or(1.0), c.unwrap_or(0.05))
            }
        };
        let grid = match self.sa.exercise_every {
            0 => return Err(HarnessError::Config(String::from("sa.exercise_every must be >= 1"))),
            1 => ExerciseGrid::EveryStep,
            k => ExerciseGrid::Every(k),
        };
        let sa = SaConfig { gamma, chi, averaging: self.sa.averaging, grid };
        if kind.early_exercise() {
            sa.validate()?;
        }

        let sim = SimConfig {
            params,
            particles: self.particles,
            steps,
            dt,
            substeps: self.substeps.unwrap_or(defaults.substeps),
            epsilon: self.epsilon.unwrap_or(defaults.epsilon),
            evolve: EvolveOptions {
                stop_policy: self.stop_policy.map(Into::into).unwrap_or(defaults.stop_policy),
                exponent_cap: self.exponent_cap,
            },
            resample,
            resample_every: self.resample.every,
            record_history: kind.early_exercise(),
            seed: self.seed,
        };
        sim.validate()?;

        let label = format!(
            "{}-{:?}-{:?}-N{}",
            set.map_or("custom", |s| s.name()),
            self.payoff.kind,
            self.resample.mode,
            self.particles
        )
        .to_lowercase();
        Ok(Resolved {
            label,
            parameter_set: set,
            sim,
            payoff,
            basis,
            sa,
            repetitions: self.repetitions,
            reference_price: self.reference_price,
            maturity: self.maturity,
            warnings,
        })
    }
}
