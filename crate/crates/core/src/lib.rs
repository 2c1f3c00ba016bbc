//! Weighted particle pricing for the Heston model.
//!
//! Particles are simulated from the explicit weak solution of the Heston
//! SDE: the variance is a sum of `n` squared Ornstein–Uhlenbeck processes
//! and every particle carries a likelihood weight that corrects the
//! "closest explicit" model back to the target one. Between steps the
//! weighted system can be rebalanced by bootstrap resampling or by
//! combined / effective-particle branching, and the resulting historical
//! paths feed either a self-normalised importance-sampling estimator
//! (European, Asian) or a stochastic-approximation dynamic-programming
//! backward pass (Bermudan / American style early exercise).
//!
//! The crate is `no_std` + `alloc` when built without the default `std`
//! feature. With `std` the per-particle evolution map runs on rayon; the
//! output is bit-identical for any worker count.

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod basis;
pub mod constants;
pub mod engine;
mod error;
pub mod history;
pub mod linalg;
mod math;
pub mod params;
pub mod payoff;
pub mod quadrature;
pub mod reference;
pub mod resample;
pub mod rng;
pub mod sa;
pub mod sim;

pub use basis::{BasisSpec, BasisVars};
pub use constants::{derive_constants, DerivedConstants};
pub use engine::{simulate, SimConfig, SimOutput, StepDiagnostics};
pub use error::Error;
pub use history::{reconstruct_paths, History, Path, StepRecord};
pub use params::HestonParams;
pub use payoff::{running_average_update, weighted_price, PayoffKind, PayoffSpec};
pub use reference::{heston_call, EuropeanQuote, QuadratureDiagnostics};
pub use resample::{BranchReport, ResampleMode};
pub use sa::{sa_dp_price, AveragedCoefficients, SaConfig, SaOutcome};
pub use sim::{evolve_step, Particle, ParticleSystem, StopPolicy};

pub type Result<T, E = Error> = core::result::Result<T, E>;
