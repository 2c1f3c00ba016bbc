//! Full simulation driver: evolve, rebalance, record.

use alloc::vec::Vec;

use crate::constants::{derive_constants, DerivedConstants};
use crate::history::History;
use crate::params::HestonParams;
use crate::resample::{effective_count, ResampleMode};
use crate::sim::{evolve_step, EvolveOptions, ParticleSystem};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub params: HestonParams,
    pub particles: usize,
    pub steps: usize,
    pub dt: f64,
    /// Simpson substeps per step; even and at least 2.
    pub substeps: usize,
    pub epsilon: f64,
    pub evolve: EvolveOptions,
    pub resample: ResampleMode,
    /// Rebalance after every `resample_every`-th step (never after the last).
    pub resample_every: usize,
    /// Keep the full genealogy; needed for early-exercise pricing.
    pub record_history: bool,
    pub seed: u64,
}

impl SimConfig {
    /// One year split into `steps` steps, 16 substeps, ε = 1e-4, no
    /// resampling.
    pub fn new(params: HestonParams, particles: usize, steps: usize, seed: u64) -> Self {
        SimConfig {
            params,
            particles,
            steps,
            dt: 1.0 / steps as f64,
            substeps: 16,
            epsilon: 1e-4,
            evolve: EvolveOptions::default(),
            resample: ResampleMode::None,
            resample_every: 1,
            record_history: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<DerivedConstants> {
        self.params.validate()?;
        self.resample.validate()?;
        if self.particles == 0 || self.steps == 0 || self.resample_every == 0 {
            return Err(Error::InvalidConfig(alloc::format!(
                "particles, steps and resample_every must be positive (got {}, {}, {})",
                self.particles,
                self.steps,
                self.resample_every
            )));
        }
        if self.particles > u32::MAX as usize / 4 {
            return Err(Error::InvalidConfig(alloc::format!("too many particles: {}", self.particles)));
        }
        derive_constants(&self.params, self.dt, self.substeps, self.epsilon)
    }
}

/// Per-step summary, taken after rebalancing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    /// Σ L over the initial particle count.
    pub mean_weight: f64,
    /// Effective count of the weights before rebalancing, so it is bounded
    /// by the previous step's `count`.
    pub effective_count: f64,
    /// Population after rebalancing.
    pub count: usize,
    pub branched_fraction: f64,
    pub min_variance: f64,
    pub stopped: usize,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub system: ParticleSystem,
    pub history: Option<History>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub constants: DerivedConstants,
}

pub fn simulate(config: &SimConfig) -> Result<SimOutput> {
    let consts = config.validate()?;
    let mut system = ParticleSystem::new(&config.params, &consts, config.particles);
    let mut history = if config.record_history {
        let mut h = History::new();
        h.record(&system)?;
        Some(h)
    } else {
        None
    };
    let mut diagnostics = Vec::with_capacity(config.steps);

    for step in 1..=config.steps {
        evolve_step(&mut system, &consts, &config.evolve, config.seed)?;
        let rebalance = step < config.steps && step.is_multiple_of(config.resample_every);
        let report = if rebalance { config.resample.apply(&mut system, config.seed)? } else { None };
        let effective = match report {
            Some(r) => r.effective_count,
            None => effective_count(system.weights())?,
        };
        let mut min_variance = f64::INFINITY;
        let mut stopped = 0;
        for p in system.particles() {
            min_variance = min_variance.min(p.variance);
            stopped += p.stopped as usize;
        }
        diagnostics.push(StepDiagnostics {
            step,
            mean_weight: system.total_weight() / system.initial_count() as f64,
            effective_count: effective,
            count: system.len(),
            branched_fraction: report.map_or(0.0, |r| r.branched_fraction),
            min_variance,
            stopped,
        });
        if let Some(h) = history.as_mut() {
            h.record(&system)?;
        }
    }
    Ok(SimOutput { system, history, diagnostics, constants: consts })
}
