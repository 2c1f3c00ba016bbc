//! Tensor-product weighted Laguerre basis for continuation values.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{exp, floor, powf};
use crate::{Error, Result};

/// State variables entering the basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisVars {
    /// `(S, V)`.
    PriceVariance,
    /// `(S, V, R)`, for payoffs on the running average.
    PriceVarianceAverage,
}

impl BasisVars {
    pub fn count(self) -> usize {
        match self {
            BasisVars::PriceVariance => 2,
            BasisVars::PriceVarianceAverage => 3,
        }
    }
}

/// `per_variable` weighted Laguerre functions per state variable and all
/// their products, ordered lexicographically in `(k_S, k_V[, k_R])`.
///
/// Price and average are divided by `scale` (the strike); the variance is
/// used as is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    pub per_variable: usize,
    pub vars: BasisVars,
    pub scale: f64,
}

impl BasisSpec {
    pub fn new(per_variable: usize, vars: BasisVars, scale: f64) -> Result<Self> {
        if per_variable == 0 {
            return Err(Error::InvalidConfig("basis needs at least one function per variable".into()));
        }
        if !(scale > 0.0) {
            return Err(Error::InvalidConfig(alloc::format!("basis scale must be > 0, got {scale}")));
        }
        Ok(BasisSpec { per_variable, vars, scale })
    }

    /// Builds the spec from the total size `J`, which must be a perfect
    /// power of the variable count.
    pub fn from_total(total: usize, vars: BasisVars, scale: f64) -> Result<Self> {
        let root = floor(powf(total as f64, 1.0 / vars.count() as f64) + 0.5) as usize;
        if root == 0 || root.pow(vars.count() as u32) != total {
            return Err(Error::InvalidConfig(alloc::format!("basis size {total} is not a {}-th power", vars.count())));
        }
        BasisSpec::new(root, vars, scale)
    }

    /// J.
    pub fn len(&self) -> usize {
        self.per_variable.pow(self.vars.count() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Writes `e^J(state)` into `out` (length J).
    pub fn eval_into(&self, price: f64, variance: f64, average: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len());
        let p = self.per_variable;
        let mut ls = [0.0; MAX_STACK];
        let mut lv = [0.0; MAX_STACK];
        let mut lr = [0.0; MAX_STACK];
        if p <= MAX_STACK {
            weighted_laguerre(price / self.scale, &mut ls[..p]);
            weighted_laguerre(variance, &mut lv[..p]);
            if self.vars == BasisVars::PriceVarianceAverage {
                weighted_laguerre(average / self.scale, &mut lr[..p]);
            }
            self.combine(&ls[..p], &lv[..p], &lr[..p], out);
        } else {
            let mut ls = vec![0.0; p];
            let mut lv = vec![0.0; p];
            let mut lr = vec![0.0; p];
            weighted_laguerre(price / self.scale, &mut ls);
            weighted_laguerre(variance, &mut lv);
            if self.vars == BasisVars::PriceVarianceAverage {
                weighted_laguerre(average / self.scale, &mut lr);
            }
            self.combine(&ls, &lv, &lr, out);
        }
    }

    fn combine(&self, ls: &[f64], lv: &[f64], lr: &[f64], out: &mut [f64]) {
        let mut idx = 0;
        match self.vars {
            BasisVars::PriceVariance => {
                for &a in ls {
                    for &b in lv {
                        out[idx] = a * b;
                        idx += 1;
                    }
                }
            }
            BasisVars::PriceVarianceAverage => {
                for &a in ls {
                    for &b in lv {
                        let ab = a * b;
                        for &c in lr {
                            out[idx] = ab * c;
                            idx += 1;
                        }
                    }
                }
            }
        }
    }

    pub fn eval(&self, price: f64, variance: f64, average: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(price, variance, average, &mut out);
        out
    }
}

const MAX_STACK: usize = 16;

/// `ℓ_k(x) = e^{−x/2}·La_k(x)` for `k = 0..out.len()`, via the three-term
/// recurrence `(k+1)La_{k+1} = (2k+1−x)La_k − k·La_{k−1}`.
pub fn weighted_laguerre(x: f64, out: &mut [f64]) {
    let w = exp(-0.5 * x);
    let (mut prev, mut cur) = (0.0, 1.0);
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = w * cur;
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
}
