//! Dense symmetric positive definite solves for the regression oracle.

use alloc::vec::Vec;

use crate::math::sqrt;
use crate::{Error, Result};

/// Relative pivot size below which a design is reported as singular.
const PIVOT_FLOOR: f64 = 1e-14;

/// Solves `A x = b` for symmetric positive definite `A` (row-major, `n×n`)
/// by Cholesky factorisation.
pub fn cholesky_solve(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n * n {
        return Err(Error::LengthMismatch { expected: n * n, got: a.len() });
    }
    let max_diag = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
    let mut l = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > PIVOT_FLOOR * max_diag) {
                    return Err(Error::SingularDesign {
                        pivot: s,
                        pivot_ratio: if max_diag > 0.0 { s / max_diag } else { 0.0 },
                    });
                }
                l[i * n + i] = sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = alloc::vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = alloc::vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Ok(x)
}
