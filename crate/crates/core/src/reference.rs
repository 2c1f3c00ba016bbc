//! Semi-analytic European prices under the Heston model.
//!
//! Characteristic function of `ln S_T` in the "little trap" form, with the
//! variance written as `dV = k(θ − V)dt + σ√V dβ`, i.e. `k = ϱ`,
//! `θ = ν/ϱ`, `σ = κ`. The call is a single combined Fourier integral
//!
//! ```text
//! C = ½(S₀ − K e^{−μT}) + e^{−μT}/π ∫₀^∞ Re[ e^{−iu ln K} (φ(u − i) − K φ(u)) / (iu) ] du
//! ```
//!
//! evaluated by adaptive Gauss–Kronrod after mapping `u = t/(1 − t)`.
//! The put follows from parity.

use core::f64::consts::PI;

use num_complex::Complex64;

use crate::math::{exp, ln, norm_cdf, sqrt};
use crate::params::HestonParams;
use crate::quadrature::integrate;
use crate::{Error, Result};

/// Absolute tolerance on the call price.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureDiagnostics {
    /// Estimated absolute error of the price.
    pub estimated_error: f64,
    pub tolerance: f64,
    pub intervals: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EuropeanQuote {
    pub call: f64,
    pub put: f64,
    pub straddle: f64,
    pub diagnostics: QuadratureDiagnostics,
}

/// Characteristic function `E[exp(iu ln S_T)]` at complex argument `u`.
pub fn characteristic_function(params: &HestonParams, maturity: f64, u: Complex64) -> Complex64 {
    let k = params.mean_reversion;
    let theta = params.variance_drift / params.mean_reversion;
    let sigma = params.vol_of_vol;
    let rho = params.correlation;
    let i = Complex64::i();
    let iu = i * u;

    let beta = k - rho * sigma * iu;
    let d = (beta * beta + sigma * sigma * (iu + u * u)).sqrt();
    let g = (beta - d) / (beta + d);
    let edt = (-d * maturity).exp();
    let one = Complex64::new(1.0, 0.0);
    let c = iu * (ln(params.spot) + params.drift * maturity)
        + k * theta / (sigma * sigma) * ((beta - d) * maturity - 2.0 * ((one - g * edt) / (one - g)).ln());
    let dd = (beta - d) / (sigma * sigma) * (one - edt) / (one - g * edt);
    (c + dd * params.initial_variance).exp()
}

/// European call, put and straddle with the default price tolerance.
pub fn heston_call(params: &HestonParams, strike: f64, maturity: f64) -> Result<EuropeanQuote> {
    heston_call_with_tolerance(params, strike, maturity, DEFAULT_TOLERANCE)
}

pub fn heston_call_with_tolerance(
    params: &HestonParams,
    strike: f64,
    maturity: f64,
    tolerance: f64,
) -> Result<EuropeanQuote> {
    params.validate()?;
    if !(params.vol_of_vol > 0.0) {
        return Err(Error::InvalidParams(alloc::string::String::from("vol_of_vol must be > 0")));
    }
    if !(strike > 0.0) || !(maturity > 0.0) || !(tolerance > 0.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "need strike > 0, maturity > 0, tolerance > 0; got {strike}, {maturity}, {tolerance}"
        )));
    }
    let discount = exp(-params.drift * maturity);
    let log_strike = ln(strike);
    let i = Complex64::i();
    let integrand = |u: f64| -> f64 {
        let uc = Complex64::new(u, 0.0);
        let shifted = characteristic_function(params, maturity, uc - i);
        let plain = characteristic_function(params, maturity, uc);
        let kernel = (-i * u * log_strike).exp() / (i * u);
        let v = (kernel * (shifted - strike * plain)).re;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mapped = |t: f64| -> f64 {
        let s = 1.0 - t;
        integrand(t / s) / (s * s)
    };
    let scale = discount / PI;
    let integral = integrate(mapped, 0.0, 1.0, tolerance / scale, MAX_INTERVALS)?;

    let call = 0.5 * (params.spot - strike * discount) + scale * integral.value;
    let put = call - params.spot + strike * discount;
    Ok(EuropeanQuote {
        call,
        put,
        straddle: call + put,
        diagnostics: QuadratureDiagnostics {
            estimated_error: scale * integral.error,
            tolerance,
            intervals: integral.intervals,
            evaluations: integral.evaluations,
        },
    })
}

/// Black–Scholes `(call, put)` with constant volatility.
pub fn black_scholes(spot: f64, strike: f64, rate: f64, volatility: f64, maturity: f64) -> (f64, f64) {
    let sd = volatility * sqrt(maturity);
    let d1 = (ln(spot / strike) + (rate + 0.5 * volatility * volatility) * maturity) / sd;
    let d2 = d1 - sd;
    let df = exp(-rate * maturity);
    let call = spot * norm_cdf(d1) - strike * df * norm_cdf(d2);
    let put = strike * df * norm_cdf(-d2) - spot * norm_cdf(-d1);
    (call, put)
}
