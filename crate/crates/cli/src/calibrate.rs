//! Two-stage choice of ε and the branching parameters.
//!
//! Stage one picks ε minimising `|mean(L_T) − 1|` without resampling;
//! stage two, at that ε, picks the resampler minimising
//! `|Σ(L_T S_T − e^{μT}S₀)/Σ L_T|`. Every grid point reuses the same seeds.

use branchmc_core::ResampleMode;
use serde::Serialize;

use crate::config::Resolved;
use crate::error::{HarnessError, Result};
use crate::experiment::simulate_repetition;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectivePoint<T> {
    pub value: T,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub epsilon: f64,
    pub resample: ResampleMode,
    pub epsilon_surface: Vec<ObjectivePoint<f64>>,
    pub branch_surface: Vec<ObjectivePoint<ResampleMode>>,
}

/// `r` values for combined branching, or the cartesian product of the
/// effective-branching constants when both lists are given.
pub fn branch_grid(r: &[f64], c_eff: &[f64], c_noneff: &[f64]) -> Vec<ResampleMode> {
    let mut grid: Vec<ResampleMode> = r.iter().map(|&r| ResampleMode::Combined { r }).collect();
    for &ce in c_eff {
        for &cn in c_noneff {
            grid.push(ResampleMode::Effective { c_eff: ce, c_noneff: cn });
        }
    }
    grid
}

fn argmin<T: Copy>(points: &[ObjectivePoint<T>]) -> T {
    let mut best = &points[0];
    for p in &points[1..] {
        if p.objective < best.objective {
            best = p;
        }
    }
    best.value
}

fn mean_objective(run: &Resolved, f: impl Fn(&branchmc_core::SimOutput) -> f64) -> Result<f64> {
    let reps = run.repetitions.max(1);
    let mut total = 0.0;
    for r in 0..reps {
        total += f(&simulate_repetition(run, r)?);
    }
    Ok(total / reps as f64)
}

/// Stage-one objective `|Σ L_T / N − 1|`.
pub fn likelihood_objective(out: &branchmc_core::SimOutput) -> f64 {
    (out.system.total_weight() / out.system.initial_count() as f64 - 1.0).abs()
}

/// Stage-two objective `|Σ(L_T S_T − e^{μT}S₀)/Σ L_T|`.
pub fn price_objective(out: &branchmc_core::SimOutput, forward: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for p in out.system.particles() {
        num += p.weight * (p.price - forward);
        den += p.weight;
    }
    (num / den).abs()
}

pub fn calibrate_epsilon_and_branch(
    base: &Resolved,
    epsilons: &[f64],
    branches: &[ResampleMode],
) -> Result<Calibration> {
    if epsilons.is_empty() || branches.is_empty() {
        return Err(HarnessError::Config(String::from("calibration grids must be non-empty")));
    }
    let mut run = base.clone();
    run.sim.record_history = false;
    run.sim.resample = ResampleMode::None;
    let mut epsilon_surface = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        run.sim.epsilon = eps;
        epsilon_surface.push(ObjectivePoint { value: eps, objective: mean_objective(&run, likelihood_objective)? });
    }
    let epsilon = argmin(&epsilon_surface);

    let p = &base.sim.params;
    let forward = p.spot * (p.drift * base.sim.steps as f64 * base.sim.dt).exp();
    run.sim.epsilon = epsilon;
    let mut branch_surface = Vec::with_capacity(branches.len());
    for &mode in branches {
        mode.validate()?;
        run.sim.resample = mode;
        let objective = mean_objective(&run, |o| price_objective(o, forward))?;
        branch_surface.push(ObjectivePoint { value: mode, objective });
    }
    let resample = argmin(&branch_surface);
    Ok(Calibration { epsilon, resample, epsilon_surface, branch_surface })
}
