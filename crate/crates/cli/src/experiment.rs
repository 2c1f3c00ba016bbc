//! Repeated, seeded simulate → rebalance → price runs.

use std::time::Instant;

use branchmc_core::rng::repetition_seed;
use branchmc_core::{heston_call, sa_dp_price, simulate, weighted_price, PayoffKind, SimOutput};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Resolved;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub repetition: usize,
    pub seed: u64,
    pub price: f64,
    pub final_count: usize,
    /// Σ L_T over the initial particle count.
    pub mean_weight: f64,
    pub min_effective_count: f64,
    pub mean_branched_fraction: f64,
    /// SA/DP projection residual; 0 for payoffs without early exercise.
    pub projection_residual: f64,
}

/// Per-step diagnostics averaged over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub step: usize,
    pub mean_weight: f64,
    pub effective_count: f64,
    pub count: f64,
    pub branched_fraction: f64,
    pub min_variance: f64,
    pub stopped: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub label: String,
    pub reference: Option<f64>,
    pub repetitions: Vec<RepetitionResult>,
    pub mean: f64,
    pub std_dev: f64,
    /// `√mean((Ĉ − C)²)/C`, when a reference price is known.
    pub relative_rmse: Option<f64>,
    /// Standard deviation over the reference price (or the mean when none).
    pub relative_std: f64,
    pub seconds: f64,
    pub diagnostics: Vec<StepSummary>,
}

/// Semi-analytic straddle for European payoffs, else the configured value.
pub fn reference_price(run: &Resolved) -> Result<Option<f64>> {
    if let Some(p) = run.reference_price {
        return Ok(Some(p));
    }
    if run.payoff.kind == PayoffKind::EuropeanStraddle {
        return Ok(Some(heston_call(&run.sim.params, run.payoff.strike, run.maturity)?.straddle));
    }
    Ok(None)
}

/// Simulates repetition `repetition` of `run`.
pub fn simulate_repetition(run: &Resolved, repetition: usize) -> Result<SimOutput> {
    let seed = repetition_seed(run.sim.seed, repetition);
    let mut sim = run.sim;
    sim.seed = seed;
    simulate(&sim).map_err(|source| HarnessError::Numerical { repetition, seed, source })
}

/// Prices one simulated repetition; returns `(price, projection residual)`.
pub fn price_output(run: &Resolved, out: &SimOutput) -> branchmc_core::Result<(f64, f64)> {
    if run.payoff.kind.early_exercise() {
        let history = out.history.as_ref().ok_or_else(|| {
            branchmc_core::Error::InvalidConfig(String::from("early exercise needs recorded history"))
        })?;
        let o = sa_dp_price(history, &run.payoff, &run.basis, &run.sa)?;
        Ok((o.price, o.projection_residual))
    } else {
        Ok((weighted_price(out.system.particles(), &run.payoff)?, 0.0))
    }
}

fn run_one(run: &Resolved, repetition: usize) -> Result<(RepetitionResult, SimOutput)> {
    let mut out = simulate_repetition(run, repetition)?;
    let seed = repetition_seed(run.sim.seed, repetition);
    let (price, projection_residual) =
        price_output(run, &out).map_err(|source| HarnessError::Numerical { repetition, seed, source })?;
    // Only the diagnostics survive the repetition.
    out.history = None;
    let d = &out.diagnostics;
    let result = RepetitionResult {
        repetition,
        seed,
        price,
        final_count: out.system.len(),
        mean_weight: d.last().map_or(1.0, |s| s.mean_weight),
        min_effective_count: d.iter().map(|s| s.effective_count).fold(f64::INFINITY, f64::min),
        mean_branched_fraction: d.iter().map(|s| s.branched_fraction).sum::<f64>() / d.len().max(1) as f64,
        projection_residual,
    };
    Ok((result, out))
}

pub fn summarize(label: String, reference: Option<f64>, repetitions: Vec<RepetitionResult>) -> RunReport {
    let n = repetitions.len();
    let mean = if n == 0 { f64::NAN } else { repetitions.iter().map(|r| r.price).sum::<f64>() / n as f64 };
    let std_dev = if n < 2 {
        f64::NAN
    } else {
        (repetitions.iter().map(|r| (r.price - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    let relative_rmse = reference
        .filter(|_| n > 0)
        .map(|c| (repetitions.iter().map(|r| (r.price - c).powi(2)).sum::<f64>() / n as f64).sqrt() / c);
    let relative_std = std_dev / reference.unwrap_or(mean);
    RunReport {
        label,
        reference,
        repetitions,
        mean,
        std_dev,
        relative_rmse,
        relative_std,
        seconds: 0.0,
        diagnostics: Vec::new(),
    }
}

/// Runs all repetitions (in parallel on the current rayon pool) and
/// aggregates them in repetition order.
pub fn run_experiment(run: &Resolved) -> Result<RunReport> {
    let start = Instant::now();
    let reference = reference_price(run)?;
    let results: Vec<Result<(RepetitionResult, SimOutput)>> =
        (0..run.repetitions).into_par_iter().map(|r| run_one(run, r)).collect();

    let mut repetitions = Vec::with_capacity(run.repetitions);
    let mut diagnostics: Vec<StepSummary> = Vec::new();
    for res in results {
        let (rep, out) = res?;
        if diagnostics.is_empty() {
            diagnostics = out
                .diagnostics
                .iter()
                .map(|d| StepSummary {
                    step: d.step,
                    mean_weight: 0.0,
                    effective_count: 0.0,
                    count: 0.0,
                    branched_fraction: 0.0,
                    min_variance: f64::INFINITY,
                    stopped: 0.0,
                })
                .collect();
        }
        for (acc, d) in diagnostics.iter_mut().zip(&out.diagnostics) {
            acc.mean_weight += d.mean_weight;
            acc.effective_count += d.effective_count;
            acc.count += d.count as f64;
            acc.branched_fraction += d.branched_fraction;
            acc.min_variance = acc.min_variance.min(d.min_variance);
            acc.stopped += d.stopped as f64;
        }
        repetitions.push(rep);
    }
    let n = repetitions.len().max(1) as f64;
    for acc in &mut diagnostics {
        acc.mean_weight /= n;
        acc.effective_count /= n;
        acc.count /= n;
        acc.branched_fraction /= n;
        acc.stopped /= n;
    }
    let mut report = summarize(run.label.clone(), reference, repetitions);
    report.diagnostics = diagnostics;
    report.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Same experiment at several initial particle counts.
pub fn rmse_study(run: &Resolved, particle_counts: &[usize]) -> Result<Vec<RunReport>> {
    particle_counts
        .iter()
        .map(|&n| {
            let mut r = run.clone();
            r.sim.particles = n;
            r.label = format!("{}@N{n}", run.label);
            run_experiment(&r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentConfig, PayoffName, ResampleName};
    use crate::registry::ParameterSet;

    fn small(kind: PayoffName) -> Resolved {
        let mut c = ExperimentConfig::preset(ParameterSet::Ps2, kind);
        c.particles = 500;
        c.repetitions = 3;
        c.maturity = 0.2;
        c.resample.mode = ResampleName::Effective;
        c.seed = 5;
        c.resolve().unwrap()
    }

    #[test]
    fn repeated_runs_are_identical() {
        let run = small(PayoffName::EuropeanStraddle);
        let mut a = run_experiment(&run).unwrap();
        let mut b = run_experiment(&run).unwrap();
        a.seconds = 0.0;
        b.seconds = 0.0;
        assert_eq!(a, b);
        assert_eq!(a.repetitions.len(), 3);
        assert!(a.relative_rmse.is_some());
        assert_ne!(a.repetitions[0].price, a.repetitions[1].price);
    }

    #[test]
    fn early_exercise_runs() {
        let run = small(PayoffName::AsianCallEarly);
        let r = run_experiment(&run).unwrap();
        assert!(r.mean > 0.0);
        assert!(r.relative_rmse.is_none());
        assert!(r.repetitions.iter().all(|x| x.projection_residual > 0.0));
    }

    #[test]
    fn summary_of_nothing() {
        let r = summarize(String::from("x"), Some(1.0), Vec::new());
        assert!(r.relative_rmse.is_none());
        assert!(r.mean.is_nan());
    }

    #[test]
    fn diagnostics_stay_in_range() {
        let run = small(PayoffName::EuropeanStraddle);
        let r = run_experiment(&run).unwrap();
        for d in &r.diagnostics {
            assert!(d.effective_count >= 1.0 && d.effective_count <= 4.0 * 500.0);
            assert!(d.count >= 1.0);
        }
    }
}
