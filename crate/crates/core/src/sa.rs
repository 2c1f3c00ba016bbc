//! Early-exercise pricing by backward dynamic programming, with the
//! continuation values fitted by one-pass stochastic approximation and
//! Polyak averaging of the iterates.
//!
//! At each exercise step `t`, walking backwards from maturity, every
//! in-the-money path `j` (`Z_t^j > 0`) moves the coefficients by
//!
//! ```text
//! α ← α + (γ·L_t^j / k^χ)·(Z^j_τ − e(X_t^j)'α)·e(X_t^j),   k = 1, 2, …
//! ᾱ ← ((k−1)·ᾱ + α)/k
//! ```
//!
//! and afterwards the path's stopping time becomes `t` wherever
//! `Z_t^j ≥ e(X_t^j)'ᾱ`. The price is `Σ L_τ Z_τ / Σ L_τ`.

use alloc::vec;
use alloc::vec::Vec;

use crate::basis::BasisSpec;
use crate::history::History;
use crate::linalg::cholesky_solve;
use crate::math::powf;
use crate::payoff::PayoffSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExerciseGrid {
    /// Every simulation step before maturity.
    #[default]
    EveryStep,
    /// Steps that are multiples of the given stride.
    Every(usize),
    /// Maturity only; the pass reduces to the direct weighted estimator.
    MaturityOnly,
}

impl ExerciseGrid {
    fn contains(self, step: usize) -> bool {
        match self {
            ExerciseGrid::EveryStep => true,
            ExerciseGrid::Every(k) => k > 0 && step.is_multiple_of(k),
            ExerciseGrid::MaturityOnly => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaConfig {
    pub gamma: f64,
    pub chi: f64,
    /// Use the Polyak average ᾱ for exercise decisions (default) instead of
    /// the last iterate.
    pub averaging: bool,
    pub grid: ExerciseGrid,
}

impl SaConfig {
    pub fn new(gamma: f64, chi: f64) -> Self {
        SaConfig { gamma, chi, averaging: true, grid: ExerciseGrid::EveryStep }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidConfig(alloc::format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.chi > 0.0 && self.chi <= 1.0) {
            return Err(Error::InvalidConfig(alloc::format!("chi must lie in (0, 1], got {}", self.chi)));
        }
        Ok(())
    }
}

/// Robbins–Monro iterate and its running average for one exercise step.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticApproximation {
    gamma: f64,
    chi: f64,
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
    k: usize,
}

impl StochasticApproximation {
    pub fn new(dim: usize, gamma: f64, chi: f64) -> Self {
        StochasticApproximation { gamma, chi, alpha: vec![0.0; dim], alpha_bar: vec![0.0; dim], k: 0 }
    }

    /// One update with sample `(weight, e, target)`.
    #[inline]
    pub fn update(&mut self, weight: f64, e: &[f64], target: f64) {
        self.k += 1;
        let k = self.k as f64;
        let prediction = dot(e, &self.alpha);
        let gain = self.gamma * weight / powf(k, self.chi) * (target - prediction);
        let keep = (k - 1.0) / k;
        for ((a, ab), &x) in self.alpha.iter_mut().zip(self.alpha_bar.iter_mut()).zip(e) {
            *a += gain * x;
            *ab = keep * *ab + *a / k;
        }
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn alpha_bar(&self) -> &[f64] {
        &self.alpha_bar
    }

    /// Number of updates so far.
    pub fn count(&self) -> usize {
        self.k
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.iter().chain(&self.alpha_bar).all(|x| x.is_finite())
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Coefficients fitted at one exercise step.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedCoefficients {
    pub step: usize,
    /// Last SA iterate.
    pub alpha: Vec<f64>,
    /// Polyak average of the iterates.
    pub alpha_bar: Vec<f64>,
    /// In-the-money paths seen at this step.
    pub in_the_money: usize,
    /// Mean of `(Z_τ − e'ᾱ)²` over the in-the-money paths.
    pub residual: f64,
    /// Paths whose stopping time moved to this step.
    pub exercised: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaOutcome {
    pub price: f64,
    /// One entry per exercise step, latest step first.
    pub coefficients: Vec<AveragedCoefficients>,
    /// Average over exercise steps (with at least one in-the-money path)
    /// of the per-step mean squared projection residual.
    pub projection_residual: f64,
    pub paths: usize,
}

/// Prices an early-exercise payoff on the recorded genealogy.
///
/// The SA gain for path `j` at step `t` uses the weight of its ancestor at
/// `t` (the post-resampling weight recorded in `history`). Payoffs that are
/// not early-exercise kinds are treated as exercisable at maturity only.
pub fn sa_dp_price(history: &History, payoff: &PayoffSpec, basis: &BasisSpec, config: &SaConfig) -> Result<SaOutcome> {
    payoff.validate()?;
    config.validate()?;
    let maturity = payoff.maturity_steps;
    if history.last_step() != maturity || history.is_empty() {
        return Err(Error::InvalidConfig(alloc::format!(
            "history ends at step {} but the payoff matures at step {maturity}",
            history.last_step()
        )));
    }
    let grid = if payoff.kind.early_exercise() { config.grid } else { ExerciseGrid::MaturityOnly };
    let ancestry = history.ancestry()?;
    let terminal = history.step(maturity);
    let paths = terminal.len();

    let mut z_tau: Vec<f64> =
        (0..paths).map(|j| payoff.value(maturity, terminal.price[j], terminal.average[j])).collect();
    let mut w_tau: Vec<f64> = terminal.weight.clone();

    let dim = basis.len();
    let mut e = vec![0.0; dim];
    let mut coefficients = Vec::new();
    let mut node_payoff: Vec<f64> = Vec::new();
    let mut node_cont: Vec<f64> = Vec::new();

    for t in (0..maturity).rev() {
        if !grid.contains(t) {
            continue;
        }
        let rec = history.step(t);
        let row = &ancestry[t];
        node_payoff.clear();
        node_payoff.extend((0..rec.len()).map(|i| payoff.value(t, rec.price[i], rec.average[i])));

        let mut sa = StochasticApproximation::new(dim, config.gamma, config.chi);
        for (j, &i) in row.iter().enumerate() {
            let i = i as usize;
            if node_payoff[i] > 0.0 {
                basis.eval_into(rec.price[i], rec.variance[i], rec.average[i], &mut e);
                sa.update(rec.weight[i], &e, z_tau[j]);
                if !sa.is_finite() {
                    return Err(Error::NonFiniteCoefficients { step: t, path: j });
                }
            }
        }
        let coef = if config.averaging { sa.alpha_bar() } else { sa.alpha() };

        node_cont.clear();
        node_cont.resize(rec.len(), f64::NAN);
        let mut residual = 0.0;
        let mut exercised = 0;
        for (j, &i) in row.iter().enumerate() {
            let i = i as usize;
            let z = node_payoff[i];
            if z > 0.0 {
                if node_cont[i].is_nan() {
                    basis.eval_into(rec.price[i], rec.variance[i], rec.average[i], &mut e);
                    node_cont[i] = dot(&e, coef);
                }
                let cont = node_cont[i];
                let r = z_tau[j] - cont;
                residual += r * r;
                if z >= cont {
                    z_tau[j] = z;
                    w_tau[j] = rec.weight[i];
                    exercised += 1;
                }
            }
        }
        let itm = sa.count();
        coefficients.push(AveragedCoefficients {
            step: t,
            alpha: sa.alpha().to_vec(),
            alpha_bar: sa.alpha_bar().to_vec(),
            in_the_money: itm,
            residual: if itm > 0 { residual / itm as f64 } else { 0.0 },
            exercised,
        });
    }

    let mut num = 0.0;
    let mut den = 0.0;
    for (w, z) in w_tau.iter().zip(&z_tau) {
        num += w * z;
        den += w;
    }
    if !(den > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    let active: Vec<&AveragedCoefficients> = coefficients.iter().filter(|c| c.in_the_money > 0).collect();
    let projection_residual =
        if active.is_empty() { 0.0 } else { active.iter().map(|c| c.residual).sum::<f64>() / active.len() as f64 };
    Ok(SaOutcome { price: num / den, coefficients, projection_residual, paths })
}

/// One exercise step's regression data: weights, basis rows (flattened,
/// `dim` per row) and targets `Z_τ` of the in-the-money paths.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CrossSection {
    pub dim: usize,
    pub weight: Vec<f64>,
    pub design: Vec<f64>,
    pub target: Vec<f64>,
}

impl CrossSection {
    pub fn new(dim: usize) -> Self {
        CrossSection { dim, ..Default::default() }
    }

    pub fn push(&mut self, weight: f64, row: &[f64], target: f64) {
        debug_assert_eq!(row.len(), self.dim);
        self.weight.push(weight);
        self.design.extend_from_slice(row);
        self.target.push(target);
    }

    pub fn len(&self) -> usize {
        self.weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weight.is_empty()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.design[j * self.dim..(j + 1) * self.dim]
    }

    /// Runs one SA pass over the rows in order.
    pub fn fit_sa(&self, gamma: f64, chi: f64) -> StochasticApproximation {
        let mut sa = StochasticApproximation::new(self.dim, gamma, chi);
        for j in 0..self.len() {
            sa.update(self.weight[j], self.row(j), self.target[j]);
        }
        sa
    }
}

/// Weighted least-squares coefficients `A⁻¹b` with `A = Σ L e e'` and
/// `b = Σ L Z_τ e`; the normalisations of the population quantities cancel.
pub fn ls_regression_oracle(cross_section: &CrossSection) -> Result<Vec<f64>> {
    let n = cross_section.dim;
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    for j in 0..cross_section.len() {
        let w = cross_section.weight[j];
        let e = cross_section.row(j);
        let z = cross_section.target[j];
        for r in 0..n {
            b[r] += w * z * e[r];
            for c in 0..=r {
                a[r * n + c] += w * e[r] * e[c];
            }
        }
    }
    for r in 0..n {
        for c in r + 1..n {
            a[r * n + c] = a[c * n + r];
        }
    }
    cholesky_solve(&a, &b)
}
