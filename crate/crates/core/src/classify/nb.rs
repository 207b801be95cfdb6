//! Multinomial naive Bayes with additive smoothing. Feature values are used
//! as (possibly fractional) pseudo-counts, so TF-IDF vectors are accepted.

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::vectorize::SparseVector;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub log_prior: Vec<f64>,
    /// `log_like[class][feature]`
    pub log_like: Vec<Vec<f64>>,
    pub alpha: f64,
}

impl NbModel {
    /// Unnormalized log posterior of each class.
    pub fn log_posteriors(&self, x: &SparseVector) -> [f64; 2] {
        let score = |c: usize| {
            self.log_prior[c]
                + x.iter()
                    .filter(|&(f, _)| f < self.log_like[c].len())
                    .map(|(f, v)| v * self.log_like[c][f])
                    .sum::<f64>()
        };
        [score(0), score(1)]
    }
}

pub fn train_mnb(data: &Dataset, alpha: f64) -> Result<NbModel> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!(
            "smoothing alpha must be positive, got {alpha}"
        )));
    }
    data.require_both_classes()?;
    let k = data.n_features();
    let mut mass = vec![vec![0.0; k]; 2];
    for (x, &c) in data.x().iter().zip(data.y()) {
        for (f, v) in x.iter() {
            if v < 0.0 {
                return Err(Error::Data(format!(
                    "negative feature value {v} at index {f}; naive Bayes needs non-negative masses"
                )));
            }
            mass[c][f] += v;
        }
    }
    let n = data.len() as f64;
    let log_prior = data
        .class_counts()
        .iter()
        .map(|&count| (count as f64 / n).ln())
        .collect();
    let log_like = mass
        .into_iter()
        .map(|row| {
            let denom = (alpha * k as f64 + row.iter().sum::<f64>()).ln();
            row.into_iter().map(|m| (alpha + m).ln() - denom).collect()
        })
        .collect();
    Ok(NbModel {
        log_prior,
        log_like,
        alpha,
    })
}

/// Argmax of the log posterior. Scores equal up to 1e-12 relative count as a
/// tie and resolve to class 0.
pub fn predict_mnb(model: &NbModel, x: &SparseVector) -> usize {
    let [neg, pos] = model.log_posteriors(x);
    let scale = neg.abs().max(pos.abs()).max(1.0);
    usize::from(pos - neg > 1e-12 * scale)
}
