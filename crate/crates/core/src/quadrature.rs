//! Composite Simpson weights for the per-step integrals and an adaptive
//! Gauss–Kronrod integrator for the reference pricer.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Composite Simpson ⅓ rule over one step of length `dt` split into
/// `substeps` (even) intervals: `dt·(v₀ + 4v₁ + 2v₂ + … + 4v_{M−1} + v_M)/(3M)`.
pub fn simpson(values: &[f64], substeps: usize, dt: f64) -> Result<f64> {
    if substeps < 2 || !substeps.is_multiple_of(2) {
        return Err(Error::OddSubsteps(substeps));
    }
    if values.len() != substeps + 1 {
        return Err(Error::LengthMismatch { expected: substeps + 1, got: values.len() });
    }
    Ok(simpson_unchecked(values, dt))
}

/// [`simpson`] without argument checks; `values.len()` must be odd and ≥ 3.
#[inline]
pub(crate) fn simpson_unchecked(values: &[f64], dt: f64) -> f64 {
    let m = values.len() - 1;
    let mut odd = 0.0;
    let mut even = 0.0;
    let mut k = 1;
    while k < m {
        odd += values[k];
        if k + 1 < m {
            even += values[k + 1];
        }
        k += 2;
    }
    dt * (values[0] + 4.0 * odd + 2.0 * even + values[m]) / (3.0 * m as f64)
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gauss_kronrod_15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Result of [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
    pub evaluations: usize,
}

/// Globally adaptive 7/15-point Gauss–Kronrod quadrature of `f` over `[a, b]`.
///
/// The interval with the largest error estimate is bisected until the summed
/// estimate drops below `tolerance` or `max_intervals` is reached.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tolerance: f64,
    max_intervals: usize,
) -> Result<Integral> {
    let mut pieces: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(64);
    let (v, e) = gauss_kronrod_15(&mut f, a, b);
    pieces.push((a, b, v, e));
    let mut evaluations = 15;
    loop {
        let value: f64 = pieces.iter().map(|p| p.2).sum();
        let error: f64 = pieces.iter().map(|p| p.3).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::QuadratureNonConvergence { estimated_error: error, tolerance, intervals: pieces.len() });
        }
        if error <= tolerance {
            return Ok(Integral { value, error, intervals: pieces.len(), evaluations });
        }
        if pieces.len() >= max_intervals {
            return Err(Error::QuadratureNonConvergence { estimated_error: error, tolerance, intervals: pieces.len() });
        }
        let worst = pieces.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).map(|(i, _)| i).unwrap_or(0);
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gauss_kronrod_15(&mut f, lo, mid);
        let (v2, e2) = gauss_kronrod_15(&mut f, mid, hi);
        evaluations += 30;
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}
