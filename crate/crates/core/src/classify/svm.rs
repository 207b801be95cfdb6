//! L2-regularized hinge-loss linear SVM trained by dual coordinate descent.
//!
//! The bias is an extra constant feature of value 1, so it is regularized
//! together with the weights. For each example `i` the dual variable
//! `alpha_i` lives in `[0, C]`; one coordinate step is
//!
//! ```text
//! G       = y_i * (w . x_i + b) - 1
//! alpha_i = clamp(alpha_i - G / (x_i . x_i + 1), 0, C)
//! ```
//!
//! followed by the matching update of `w` and `b`. Each pass visits the
//! examples in a fresh seeded permutation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::vectorize::SparseVector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    /// Stop once the largest projected-gradient magnitude of a pass is below this.
    pub tol: f64,
    /// Maximum number of passes over the data.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            tol: 1e-4,
            max_iter: 1000,
            seed: 42,
        }
    }
}

impl SvmParams {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!(
                "svm c must be positive, got {}",
                self.c
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Config(format!(
                "svm tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("svm max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Weights and bias; class 1 maps to `+1`, class 0 to `-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LinearModel {
    pub fn decision_value(&self, x: &SparseVector) -> f64 {
        x.iter()
            .filter(|&(i, _)| i < self.w.len())
            .map(|(i, v)| self.w[i] * v)
            .sum::<f64>()
            + self.b
    }
}

/// Class 1 iff `w . x + b >= 0`.
pub fn predict_linear(model: &LinearModel, x: &SparseVector) -> (usize, f64) {
    let d = model.decision_value(x);
    (usize::from(d >= 0.0), d)
}

/// Solver state handed to the observer after every coordinate update.
pub struct SvmState<'a> {
    pub alpha: &'a [f64],
    pub w: &'a [f64],
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmSummary {
    pub passes: usize,
    pub converged: bool,
    /// Largest projected-gradient magnitude seen in the final pass.
    pub max_violation: f64,
}

pub fn train_lsvm(data: &Dataset, params: &SvmParams) -> Result<LinearModel> {
    train_lsvm_observed(data, params, |_| {}).map(|(model, _)| model)
}

/// Same as [`train_lsvm`], calling `observer` after each update of a dual
/// variable.
pub fn train_lsvm_observed(
    data: &Dataset,
    params: &SvmParams,
    mut observer: impl FnMut(&SvmState<'_>),
) -> Result<(LinearModel, SvmSummary)> {
    params.validate()?;
    data.require_both_classes()?;
    if data.n_features() == 0 {
        return Err(Error::Training("no features".into()));
    }
    if data
        .x()
        .iter()
        .any(|x| x.iter().any(|(_, v)| !v.is_finite()))
    {
        return Err(Error::Data("non-finite feature weight".into()));
    }

    let n = data.len();
    let sign: Vec<f64> = data
        .y()
        .iter()
        .map(|&c| if c == 1 { 1.0 } else { -1.0 })
        .collect();
    let diag: Vec<f64> = data.x().iter().map(|x| x.norm_squared() + 1.0).collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; data.n_features()];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let c = params.c;

    let mut summary = SvmSummary {
        passes: 0,
        converged: false,
        max_violation: f64::INFINITY,
    };
    while summary.passes < params.max_iter {
        order.shuffle(&mut rng);
        let mut max_violation: f64 = 0.0;
        for &i in &order {
            let x = &data.x()[i];
            let g = sign[i] * (x.dot(&w) + b) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            max_violation = max_violation.max(pg.abs());
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / diag[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * sign[i];
                for (j, v) in x.iter() {
                    w[j] += step * v;
                }
                b += step;
                observer(&SvmState {
                    alpha: &alpha,
                    w: &w,
                    b,
                });
            }
        }
        summary.passes += 1;
        summary.max_violation = max_violation;
        if max_violation < params.tol {
            summary.converged = true;
            break;
        }
    }
    log::debug!(
        "lsvm: {} passes, converged={}, max violation {:.3e}",
        summary.passes,
        summary.converged,
        summary.max_violation
    );
    Ok((LinearModel { w, b }, summary))
}
