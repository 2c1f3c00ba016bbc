//! Rebalancing the weighted particle system between evolution steps.
//!
//! Branching treats particles individually: a particle whose weight stays
//! inside `[A/r, r·A]` is left alone, every other particle is replaced by
//! `⌊L/A⌋ + 1{U ≤ frac(L/A)}` copies of weight `A`, where `A` is the total
//! weight divided by the *initial* particle count. The uniforms are
//! stratified over the branched particles and assigned through a random
//! permutation. The bootstrap instead draws a full multinomial sample and
//! resets every weight to 1.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::math::{exp, floor, ln};
use crate::rng::{child_lineage, Purpose, StepKey};
use crate::sim::{Particle, ParticleSystem};
use crate::{Error, Result};

/// Population is capped at this multiple of the initial particle count.
pub const CAPACITY_FACTOR: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ResampleMode {
    #[default]
    None,
    Bootstrap,
    /// Combined branching with a fixed band parameter `r > 1`.
    Combined {
        r: f64,
    },
    /// Band parameter interpolated from the effective particle count.
    Effective {
        c_eff: f64,
        c_noneff: f64,
    },
}

impl ResampleMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ResampleMode::Combined { r } if !(r > 1.0) => {
                Err(Error::InvalidConfig(alloc::format!("combined branching needs r > 1, got {r}")))
            }
            ResampleMode::Effective { c_eff, c_noneff } if !(c_eff > 0.0 && c_noneff > 0.0) => {
                Err(Error::InvalidConfig(alloc::format!(
                    "effective branching needs positive constants, got ({c_eff}, {c_noneff})"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Applies the resampler to `system` in place. Returns `None` for
    /// [`ResampleMode::None`].
    pub fn apply(&self, system: &mut ParticleSystem, seed: u64) -> Result<Option<BranchReport>> {
        match *self {
            ResampleMode::None => Ok(None),
            ResampleMode::Bootstrap => bootstrap_step(system, seed).map(Some),
            ResampleMode::Combined { r } => branch_step(system, r, seed).map(Some),
            ResampleMode::Effective { c_eff, c_noneff } => {
                let n_eff = effective_count(system.particles().iter().map(|p| p.weight))?;
                let r = effective_r(c_eff, c_noneff, n_eff, system.len());
                branch_step(system, r, seed).map(Some)
            }
        }
    }
}

/// What one rebalancing step did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchReport {
    /// A_t, total pre-branch weight over the initial particle count.
    pub average_weight: f64,
    /// Effective count of the pre-branch weights.
    pub effective_count: f64,
    /// Band parameter used (`1` for the bootstrap, which resamples all).
    pub threshold: f64,
    /// Fraction of pre-branch particles that were branched.
    pub branched_fraction: f64,
    /// Particle count after rebalancing.
    pub count: usize,
}

/// `(Σw)²/Σw²`.
pub fn effective_count(weights: impl Iterator<Item = f64>) -> Result<f64> {
    let (mut s, mut s2) = (0.0, 0.0);
    for w in weights {
        s += w;
        s2 += w * w;
    }
    if !(s2 > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    Ok(s * s / s2)
}

/// `c_noneff + (c_eff − c_noneff)·N_eff/N`.
pub fn effective_r(c_eff: f64, c_noneff: f64, n_eff: f64, n: usize) -> f64 {
    c_noneff + (c_eff - c_noneff) * n_eff / n as f64
}

/// One uniform in each of the `k` strata `[i/k, (i+1)/k)`, then shuffled
/// (Fisher–Yates).
pub fn stratified_uniforms(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let inv = 1.0 / k as f64;
    let mut u: Vec<f64> = (0..k).map(|i| (i as f64 + rng.random::<f64>()) * inv).collect();
    for i in (1..k).rev() {
        let j = rng.random_range(0..=i);
        u.swap(i, j);
    }
    u
}

/// Whether a weight sits inside the closed keep band `[A/r, r·A]`.
#[inline]
pub fn is_kept(weight: f64, average: f64, r: f64) -> bool {
    weight >= average / r && weight <= r * average
}

/// The offspring decision for one branching step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BranchPlan {
    /// Indices of the branched particles, in population order.
    pub branched: Vec<usize>,
    /// Uniform used for each branched particle (same order).
    pub uniforms: Vec<f64>,
    /// Number of copies for each branched particle (same order).
    pub offspring: Vec<usize>,
}

/// Decides which particles branch and how many copies each one gets.
pub fn plan_branching(weights: &[f64], average: f64, r: f64, rng: &mut ChaCha8Rng) -> BranchPlan {
    let branched: Vec<usize> = (0..weights.len()).filter(|&j| !is_kept(weights[j], average, r)).collect();
    if branched.is_empty() {
        return BranchPlan::default();
    }
    let uniforms = stratified_uniforms(branched.len(), rng);
    let offspring = branched
        .iter()
        .zip(&uniforms)
        .map(|(&j, &u)| {
            let ratio = weights[j] / average;
            let whole = floor(ratio);
            let frac = ratio - whole;
            whole as usize + usize::from(frac > 0.0 && u <= frac)
        })
        .collect();
    BranchPlan { branched, uniforms, offspring }
}

/// Combined branching with band parameter `r` (use `f64::INFINITY` to
/// disable it). Kept particles come first, in order, followed by the copies.
pub fn branch_step(system: &mut ParticleSystem, r: f64, seed: u64) -> Result<BranchReport> {
    let step = system.step();
    let before = system.len();
    let weights: Vec<f64> = system.weights().collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    let n_eff = effective_count(weights.iter().copied())?;
    let average = total / system.initial_count() as f64;

    let mut rng = StepKey::new(seed, step, Purpose::Resample).stream(0);
    let plan = plan_branching(&weights, average, r, &mut rng);
    let report = |count| BranchReport {
        average_weight: average,
        effective_count: n_eff,
        threshold: r,
        branched_fraction: plan.branched.len() as f64 / before as f64,
        count,
    };
    if plan.branched.is_empty() {
        system.parents.clear();
        system.parents.extend(0..before as u32);
        return Ok(report(before));
    }

    let count = before - plan.branched.len() + plan.offspring.iter().sum::<usize>();
    if count == 0 {
        return Err(Error::ParticleExtinction { step });
    }
    let capacity = CAPACITY_FACTOR * system.initial_count();
    if count > capacity {
        return Err(Error::CapacityExceeded { step, count, capacity });
    }

    let n = system.factors();
    let mut particles = Vec::with_capacity(count);
    let mut ou = Vec::with_capacity(count * n);
    let mut parents = Vec::with_capacity(count);
    let mut next_branched = plan.branched.iter().peekable();
    for j in 0..before {
        if next_branched.peek() == Some(&&j) {
            next_branched.next();
            continue;
        }
        particles.push(system.particles[j]);
        ou.extend_from_slice(system.factors_of(j));
        parents.push(j as u32);
    }
    for (&j, &copies) in plan.branched.iter().zip(&plan.offspring) {
        let parent = system.particles[j];
        for ordinal in 0..copies {
            particles.push(Particle {
                weight: average,
                lineage: child_lineage(parent.lineage, step, ordinal),
                ..parent
            });
            ou.extend_from_slice(system.factors_of(j));
            parents.push(j as u32);
        }
    }
    system.replace(particles, ou, parents);
    Ok(report(count))
}

/// Multinomial bootstrap via the descending order-statistics sweep
/// `W_j = U_j^{1/j}·W_{j+1}`; every output weight is 1.
pub fn bootstrap_step(system: &mut ParticleSystem, seed: u64) -> Result<BranchReport> {
    let step = system.step();
    let count = system.len();
    let total = system.total_weight();
    if !(total > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    let n_eff = effective_count(system.weights())?;

    let mut cumulative = Vec::with_capacity(count);
    let mut acc = 0.0;
    for p in system.particles() {
        acc += p.weight / total;
        cumulative.push(acc);
    }

    let mut rng = StepKey::new(seed, step, Purpose::Resample).stream(0);
    let mut slots = alloc::vec![0u32; count];
    let mut w = 1.0f64;
    let mut k = count - 1;
    for j in (1..=count).rev() {
        let u: f64 = rng.random();
        // U^{1/j}; 1 − u keeps the logarithm finite.
        w *= exp(ln(1.0 - u) / j as f64);
        while k > 0 && w <= cumulative[k - 1] {
            k -= 1;
        }
        slots[j - 1] = k as u32;
    }

    let n = system.factors();
    let mut particles = Vec::with_capacity(count);
    let mut ou = Vec::with_capacity(count * n);
    let mut ordinal = 0usize;
    let mut last = u32::MAX;
    for &parent_index in &slots {
        ordinal = if parent_index == last { ordinal + 1 } else { 0 };
        last = parent_index;
        let parent = system.particles[parent_index as usize];
        particles.push(Particle { weight: 1.0, lineage: child_lineage(parent.lineage, step, ordinal), ..parent });
        ou.extend_from_slice(system.factors_of(parent_index as usize));
    }
    system.replace(particles, ou, slots);
    Ok(BranchReport {
        average_weight: total / system.initial_count() as f64,
        effective_count: n_eff,
        threshold: 1.0,
        branched_fraction: 1.0,
        count,
    })
}
