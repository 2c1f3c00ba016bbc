//! The weighted explicit Heston simulator.
//!
//! Each particle carries `n` OU factors `Y`, the variance `V = ΣY²`, the
//! price, the running average of the price and a likelihood weight. One call
//! to [`evolve_step`] advances every particle by one coarse step of length
//! `dt` using `M` OU substeps and Simpson's rule for the time integrals.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::constants::DerivedConstants;
use crate::math::{exp, ln, sqrt};
use crate::params::HestonParams;
use crate::payoff::running_average_update;
use crate::quadrature::simpson_unchecked;
use crate::rng::{Purpose, StepKey};
use crate::{Error, Result};

/// What happens to a particle's weight once its variance path has touched ε
/// (or the likelihood exponent has left the admissible range).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopPolicy {
    /// Keep the last weight; the particle continues under the closest
    /// explicit model.
    #[default]
    Freeze,
    /// Set the weight to zero, dropping the particle from every estimator.
    Kill,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub stop_policy: StopPolicy,
    /// Largest admissible magnitude of one step's log-likelihood increment.
    pub exponent_cap: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { stop_policy: StopPolicy::Freeze, exponent_cap: 700.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub price: f64,
    pub variance: f64,
    /// Running average of the price over steps `1..=t` (0 at `t = 0`).
    pub average: f64,
    pub weight: f64,
    pub lineage: u64,
    /// Set once the ε-stop (or exponent cap) has fired.
    pub stopped: bool,
}

/// The current cross-section of the particle system.
///
/// `parents[i]` is the index at the previous step of the particle that `i`
/// descends from; the identity right after evolution, rewritten by
/// resampling.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem {
    step: usize,
    factors: usize,
    initial_count: usize,
    pub(crate) particles: Vec<Particle>,
    pub(crate) ou: Vec<f64>,
    pub(crate) parents: Vec<u32>,
}

impl ParticleSystem {
    /// `count` identical particles at `(S₀, V₀)` with weight 1 and
    /// `Yⁱ₀ = √(V₀/n)` for every factor.
    pub fn new(params: &HestonParams, consts: &DerivedConstants, count: usize) -> Self {
        let n = consts.factors;
        let y0 = sqrt(params.initial_variance / n as f64);
        let v0: f64 = (0..n).map(|_| y0 * y0).sum();
        let particles = (0..count)
            .map(|j| Particle {
                price: params.spot,
                variance: v0,
                average: 0.0,
                weight: 1.0,
                lineage: j as u64,
                stopped: false,
            })
            .collect();
        ParticleSystem {
            step: 0,
            factors: n,
            initial_count: count,
            particles,
            ou: vec![y0; count * n],
            parents: (0..count as u32).collect(),
        }
    }

    /// A system with arbitrary weights at a common state; mostly for tests
    /// of the resamplers.
    pub fn from_weights(weights: &[f64], factors: usize) -> Self {
        let particles: Vec<Particle> = weights
            .iter()
            .enumerate()
            .map(|(j, &w)| Particle {
                price: 100.0 + j as f64,
                variance: 0.04,
                average: 0.0,
                weight: w,
                lineage: j as u64,
                stopped: false,
            })
            .collect();
        let count = particles.len();
        ParticleSystem {
            step: 0,
            factors,
            initial_count: count,
            ou: vec![0.2 / sqrt(factors as f64); count * factors],
            parents: (0..count as u32).collect(),
            particles,
        }
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    /// N, the particle count the system was started with.
    pub fn initial_count(&self) -> usize {
        self.initial_count
    }

    pub fn set_initial_count(&mut self, count: usize) {
        self.initial_count = count;
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn particles_mut(&mut self) -> &mut [Particle] {
        &mut self.particles
    }

    /// OU factors of particle `i`.
    pub fn factors_of(&self, i: usize) -> &[f64] {
        &self.ou[i * self.factors..(i + 1) * self.factors]
    }

    pub fn parents(&self) -> &[u32] {
        &self.parents
    }

    pub fn weights(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.particles.iter().map(|p| p.weight)
    }

    pub fn total_weight(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    /// Replace the population; `parents` maps each new particle to an index
    /// of the population being replaced.
    pub(crate) fn replace(&mut self, particles: Vec<Particle>, ou: Vec<f64>, parents: Vec<u32>) {
        debug_assert_eq!(particles.len() * self.factors, ou.len());
        debug_assert_eq!(particles.len(), parents.len());
        self.particles = particles;
        self.ou = ou;
        self.parents = parents;
    }
}

/// One OU substep, `Y'ᵢ = α_M·Yᵢ + σ_M·zᵢ`.
#[inline]
pub fn substep_volatility(y: &mut [f64], consts: &DerivedConstants, z: &[f64]) {
    debug_assert_eq!(y.len(), z.len());
    for (yi, zi) in y.iter_mut().zip(z) {
        *yi = consts.ou_decay * *yi + consts.ou_noise * zi;
    }
}

fn evolve_particle(
    p: &mut Particle,
    y: &mut [f64],
    consts: &DerivedConstants,
    options: &EvolveOptions,
    key: &StepKey,
    step: usize,
    path: &mut Vec<f64>,
) -> core::result::Result<(), &'static str> {
    let mut rng = key.stream(p.lineage);
    let m = consts.substeps;

    path.clear();
    path.push(p.variance);
    for _ in 0..m {
        let mut v = 0.0;
        for yi in y.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *yi = consts.ou_decay * *yi + consts.ou_noise * z;
            v += *yi * *yi;
        }
        path.push(v);
    }
    let v_prev = path[0];
    let v_new = path[m];
    let int_v = simpson_unchecked(path, consts.dt);

    let z: f64 = rng.sample(StandardNormal);
    let log_return = consts.price_diffusion * sqrt(int_v) * z
        + consts.price_time_drift * consts.dt
        + consts.price_int_variance * int_v
        + consts.price_variance_jump * (v_new - v_prev);
    p.price *= exp(log_return);
    if !p.price.is_finite() {
        return Err("price");
    }

    if !p.stopped && !consts.likelihood_is_trivial() {
        let min_v = path[1..].iter().copied().fold(f64::INFINITY, f64::min);
        let mut fire = min_v <= consts.epsilon;
        if !fire {
            for v in path.iter_mut() {
                *v = 1.0 / *v;
            }
            let int_inv_v = simpson_unchecked(path, consts.dt);
            let exponent = consts.weight_log_variance * (ln(v_new / v_prev) + consts.mean_reversion * consts.dt)
                + consts.weight_int_inv_variance * int_inv_v;
            if exponent.is_nan() {
                return Err("likelihood exponent");
            }
            if exponent.abs() > options.exponent_cap {
                fire = true;
            } else {
                p.weight *= exp(exponent);
            }
        }
        if fire {
            p.stopped = true;
            if options.stop_policy == StopPolicy::Kill {
                p.weight = 0.0;
            }
        }
        if !p.weight.is_finite() {
            return Err("weight");
        }
    }

    p.variance = v_new;
    p.average = running_average_update(p.average, p.price, step).map_err(|_| "average")?;
    Ok(())
}

/// Advances every particle by one coarse step.
///
/// Normals are drawn from the stream keyed by `(seed, new step, lineage)`,
/// so the result does not depend on the number of worker threads. Parent
/// indices are reset to the identity.
pub fn evolve_step(
    system: &mut ParticleSystem,
    consts: &DerivedConstants,
    options: &EvolveOptions,
    seed: u64,
) -> Result<()> {
    if system.factors != consts.factors {
        return Err(Error::LengthMismatch { expected: consts.factors, got: system.factors });
    }
    let step = system.step + 1;
    let key = StepKey::new(seed, step, Purpose::Evolve);
    let n = system.factors;
    let m = consts.substeps;

    #[cfg(feature = "std")]
    {
        use rayon::prelude::*;
        system
            .particles
            .par_iter_mut()
            .zip(system.ou.par_chunks_mut(n))
            .enumerate()
            .with_min_len(512)
            .try_for_each_init(
                || Vec::with_capacity(m + 1),
                |path, (i, (p, y))| {
                    evolve_particle(p, y, consts, options, &key, step, path).map_err(|what| Error::NonFinite {
                        what,
                        step,
                        particle: i,
                    })
                },
            )?;
    }
    #[cfg(not(feature = "std"))]
    {
        let mut path = Vec::with_capacity(m + 1);
        for (i, (p, y)) in system.particles.iter_mut().zip(system.ou.chunks_mut(n)).enumerate() {
            evolve_particle(p, y, consts, options, &key, step, &mut path).map_err(|what| Error::NonFinite {
                what,
                step,
                particle: i,
            })?;
        }
    }

    system.step = step;
    system.parents.clear();
    system.parents.extend(0..system.particles.len() as u32);
    Ok(())
}
