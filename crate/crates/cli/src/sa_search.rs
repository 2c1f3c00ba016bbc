//! Grid search over the SA gain parameters on one fixed path set.

use serde::Serialize;

use branchmc_core::sa_dp_price;

use crate::config::Resolved;
use crate::error::{HarnessError, Result};
use crate::experiment::simulate_repetition;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaSearchRow {
    pub gamma: f64,
    pub chi: f64,
    pub residual: f64,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaSearch {
    pub best: (f64, f64),
    pub table: Vec<SaSearchRow>,
}

/// Evaluates every `(γ, χ)` pair on the paths of repetition 0 and returns
/// the pair with the smallest mean squared projection residual.
pub fn sa_param_search(run: &Resolved, gammas: &[f64], chis: &[f64]) -> Result<SaSearch> {
    if gammas.is_empty() || chis.is_empty() {
        return Err(HarnessError::Config(String::from("gamma and chi grids must be non-empty")));
    }
    if !run.payoff.kind.early_exercise() {
        return Err(HarnessError::Config(String::from("sa-search needs an early-exercise payoff")));
    }
    let out = simulate_repetition(run, 0)?;
    let history = out.history.as_ref().expect("early-exercise runs record history");
    let mut table = Vec::with_capacity(gammas.len() * chis.len());
    for &gamma in gammas {
        for &chi in chis {
            let mut sa = run.sa;
            sa.gamma = gamma;
            sa.chi = chi;
            // A diverging gain is a bad grid point, not a failed search.
            let row = match sa_dp_price(history, &run.payoff, &run.basis, &sa) {
                Ok(o) => SaSearchRow { gamma, chi, residual: o.projection_residual, price: o.price },
                Err(branchmc_core::Error::NonFiniteCoefficients { .. }) => {
                    SaSearchRow { gamma, chi, residual: f64::INFINITY, price: f64::NAN }
                }
                Err(e) => return Err(e.into()),
            };
            table.push(row);
        }
    }
    let mut best = table[0];
    for row in &table[1..] {
        if row.residual < best.residual {
            best = *row;
        }
    }
    Ok(SaSearch { best: (best.gamma, best.chi), table })
}
