//! Cached large-sample "true" prices for payoffs without a closed form.

use std::collections::BTreeMap;
use std::path::Path;

use branchmc_core::{PayoffKind, ResampleMode};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::experiment::run_experiment;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub price: f64,
    /// Standard error of the mean over repetitions (NaN for one repetition).
    pub std_error: f64,
    pub repetitions: usize,
    pub particles: usize,
}

type Cache = BTreeMap<String, GroundTruth>;

/// Key identifying the computation: the config minus its output path.
pub fn cache_key(config: &ExperimentConfig) -> String {
    let mut c = config.clone();
    c.output = None;
    c.to_toml()
}

fn load(path: &Path) -> Result<Cache> {
    match std::fs::read_to_string(path) {
        Ok(text) => Ok(serde_json::from_str(&text)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Cache::new()),
        Err(e) => Err(e.into()),
    }
}

/// Runs `config` (defaulting to effective branching) unless `cache` holds a
/// result for the same key, and stores new results there.
pub fn ground_truth(config: &ExperimentConfig, cache: &Path) -> Result<(GroundTruth, bool)> {
    let key = cache_key(config);
    let mut entries = load(cache)?;
    if let Some(hit) = entries.get(&key) {
        return Ok((*hit, true));
    }
    let mut run = config.resolve()?;
    if run.sim.resample == ResampleMode::None && run.payoff.kind != PayoffKind::EuropeanStraddle {
        run.sim.resample = match config.parameter_set {
            Some(s) => {
                let d = s.simulation();
                ResampleMode::Effective { c_eff: d.c_eff, c_noneff: d.c_noneff }
            }
            None => ResampleMode::None,
        };
    }
    let report = run_experiment(&run)?;
    let n = report.repetitions.len();
    let truth = GroundTruth {
        price: report.mean,
        std_error: report.std_dev / (n as f64).sqrt(),
        repetitions: n,
        particles: run.sim.particles,
    };
    entries.insert(key, truth);
    if let Some(dir) = cache.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(cache, serde_json::to_string_pretty(&entries)?)?;
    Ok((truth, false))
}
