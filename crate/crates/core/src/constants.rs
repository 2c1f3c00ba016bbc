//! Per-run constants of the explicit weighted simulator.

use crate::math::{exp, floor, sqrt};
use crate::{Error, HestonParams, Result};

/// Ratios `4ν/κ²` within this relative distance of an integer are treated as
/// exactly that integer, so the likelihood exponent vanishes identically.
const INTEGER_SNAP: f64 = 1e-12;

/// Constants computed once per `(params, dt, M, ε)`.
///
/// The price update over one step of length `dt` is
/// `S ← S·exp(a·∫√V dB + b·dt + c·∫V + d·ΔV)` and the likelihood update is
/// `L ← L·exp(e·(ln(V_t/V_{t−1}) + ϱ·dt) + f·∫1/V)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    /// Number of OU factors `n`.
    pub factors: usize,
    /// ν_κ = nκ²/4, the variance drift of the closest explicit model.
    pub explicit_variance_drift: f64,
    /// μ_κ = μ + (ρ/κ)(ν_κ − ν).
    pub explicit_drift: f64,
    /// a = √(1−ρ²).
    pub price_diffusion: f64,
    /// b = μ − νρ/κ.
    pub price_time_drift: f64,
    /// c = ρϱ/κ − ½.
    pub price_int_variance: f64,
    /// d = ρ/κ.
    pub price_variance_jump: f64,
    /// e = (ν − ν_κ)/κ².
    pub weight_log_variance: f64,
    /// f = e(κ² − ν − ν_κ)/2.
    pub weight_int_inv_variance: f64,
    /// Per-substep OU noise scale κ√((1 − e^{−ϱ·dt/M})/(4ϱ)).
    pub ou_noise: f64,
    /// Per-substep OU decay e^{−ϱ·dt/(2M)}.
    pub ou_decay: f64,
    pub mean_reversion: f64,
    pub dt: f64,
    pub substeps: usize,
    pub epsilon: f64,
    pub feller_ratio: f64,
}

impl DerivedConstants {
    /// True when ν = ν_κ, i.e. every likelihood stays exactly 1.
    pub fn likelihood_is_trivial(&self) -> bool {
        self.weight_log_variance == 0.0 && self.weight_int_inv_variance == 0.0
    }
}

/// Builds the simulator constants.
///
/// `substeps` is the number of Simpson subintervals per step and must be even.
pub fn derive_constants(params: &HestonParams, dt: f64, substeps: usize, epsilon: f64) -> Result<DerivedConstants> {
    params.validate()?;
    if substeps < 2 || !substeps.is_multiple_of(2) {
        return Err(Error::OddSubsteps(substeps));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::NonPositiveStep(dt));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidConfig(alloc::format!("epsilon must be >= 0, got {epsilon}")));
    }

    let nu = params.variance_drift;
    let kappa = params.vol_of_vol;
    let rho = params.correlation;
    let varrho = params.mean_reversion;
    let kappa2 = kappa * kappa;

    let feller_ratio = params.feller_ratio();
    // Round half up, tolerating the representation error of ratios such as
    // 0.34/0.04 that are exact halves in decimal.
    let factors = (floor(feller_ratio + 0.5 + INTEGER_SNAP * feller_ratio.max(1.0)) as usize).max(1);
    let exact = (feller_ratio - factors as f64).abs() <= INTEGER_SNAP * feller_ratio.max(1.0);

    let explicit_variance_drift = if exact { nu } else { factors as f64 * kappa2 / 4.0 };
    let explicit_drift = params.drift + rho / kappa * (explicit_variance_drift - nu);

    let e = if exact { 0.0 } else { (nu - explicit_variance_drift) / kappa2 };
    let f = e * (kappa2 - nu - explicit_variance_drift) / 2.0;

    let h = dt / substeps as f64;
    Ok(DerivedConstants {
        factors,
        explicit_variance_drift,
        explicit_drift,
        price_diffusion: sqrt(1.0 - rho * rho),
        price_time_drift: params.drift - nu * rho / kappa,
        price_int_variance: rho * varrho / kappa - 0.5,
        price_variance_jump: rho / kappa,
        weight_log_variance: e,
        weight_int_inv_variance: f,
        ou_noise: kappa * sqrt((1.0 - exp(-varrho * h)) / (4.0 * varrho)),
        ou_decay: exp(-varrho * h / 2.0),
        mean_reversion: varrho,
        dt,
        substeps,
        epsilon,
        feller_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_counts_for_presets() {
        let c1 = derive_constants(&HestonParams::PS1, 0.02, 2, 1e-10).unwrap();
        assert_eq!(c1.factors, 9);
        assert!((c1.feller_ratio - 8.5).abs() < 1e-12);
        let c2 = derive_constants(&HestonParams::PS2, 0.02, 6, 1e-5).unwrap();
        assert_eq!(c2.factors, 3);
        assert!((c2.feller_ratio - 2.65).abs() < 1e-12);
        let c3 = derive_constants(&HestonParams::PS3, 0.02, 6, 1e-5).unwrap();
        assert_eq!(c3.factors, 3);
    }

    #[test]
    fn ps2_hand_values() {
        let c = derive_constants(&HestonParams::PS2, 0.02, 6, 1e-5).unwrap();
        assert!((c.explicit_variance_drift - 0.48).abs() < 1e-15);
        assert!((c.weight_log_variance - (-0.0875)).abs() < 1e-15);
        let p = HestonParams::PS2;
        let mu_k = p.drift + p.correlation / p.vol_of_vol * (0.48 - p.variance_drift);
        assert!((c.explicit_drift - mu_k).abs() < 1e-15);
        assert!((c.weight_int_inv_variance - (-0.0875) * (0.64 - 0.424 - 0.48) / 2.0).abs() < 1e-15);
        assert!((c.price_diffusion - (1.0f64 - 0.5625).sqrt()).abs() < 1e-15);
        assert!((c.price_variance_jump - (-0.75 / 0.8)).abs() < 1e-15);
    }

    #[test]
    fn integer_ratio_is_degenerate() {
        let mut p = HestonParams::PS1;
        p.vol_of_vol = 0.6;
        p.variance_drift = 0.09;
        let c = derive_constants(&p, 0.02, 2, 0.0).unwrap();
        assert_eq!(c.factors, 1);
        assert_eq!(c.explicit_variance_drift, p.variance_drift);
        assert_eq!(c.weight_log_variance, 0.0);
        assert_eq!(c.weight_int_inv_variance, 0.0);
        assert!(c.likelihood_is_trivial());
    }

    #[test]
    fn small_ratio_still_uses_one_factor() {
        let mut p = HestonParams::PS1;
        p.variance_drift = 0.001;
        let c = derive_constants(&p, 0.02, 2, 0.0).unwrap();
        assert_eq!(c.factors, 1);
    }

    #[test]
    fn unit_step_reduces_to_plain_ou_constants() {
        let p = HestonParams::PS3;
        let m = 6;
        let c = derive_constants(&p, 1.0, m, 1e-5).unwrap();
        let varrho = p.mean_reversion;
        let sigma = p.vol_of_vol * ((1.0 - (-varrho / m as f64).exp()) / (4.0 * varrho)).sqrt();
        assert_eq!(c.ou_noise, sigma);
        assert_eq!(c.ou_decay, (-varrho / (2.0 * m as f64)).exp());
    }

    #[test]
    fn rejects_odd_substeps_and_bad_step() {
        assert_eq!(derive_constants(&HestonParams::PS1, 0.02, 3, 0.0), Err(Error::OddSubsteps(3)));
        assert_eq!(derive_constants(&HestonParams::PS1, 0.02, 0, 0.0), Err(Error::OddSubsteps(0)));
        assert!(matches!(derive_constants(&HestonParams::PS1, 0.0, 2, 0.0), Err(Error::NonPositiveStep(_))));
        assert!(derive_constants(&HestonParams::PS1, 0.02, 2, -1.0).is_err());
    }
}
