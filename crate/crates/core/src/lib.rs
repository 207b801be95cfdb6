//! Sentiment classification over bag-of-words features.
//!
//! The pipeline runs in fixed stages:
//!
//! 1. [`corpus`] loads labeled documents (TSV, CSV, `__label__` prefixed
//!    lines or a directory tree) and produces stratified holdout splits and
//!    k-fold plans.
//! 2. [`preprocess`] lowercases and tokenizes text, optionally applies
//!    next-word negation (`not good` becomes `not_good`) and drops stopwords.
//! 3. [`vectorize`] builds a top-K vocabulary and IDF table from training
//!    documents only and turns token lists into binary or TF-IDF sparse
//!    vectors.
//! 4. [`classify`] trains a linear SVM (dual coordinate descent), a
//!    multinomial naive Bayes model or an entropy-split random forest.
//! 5. [`eval`] runs holdout, cross-validation, feature-size sweeps and
//!    comparisons, producing JSON/CSV reports.
//!
//! The [`cli`] module wires all of this behind the `nwn` binary.

pub mod classify;
pub mod cli;
pub mod corpus;
mod error;
pub mod eval;
pub mod preprocess;
pub mod vectorize;

pub use error::{Error, Result};

/// Builds a rayon pool sized by `NWN_THREADS` when set, otherwise rayon's default.
pub fn worker_pool() -> rayon::ThreadPool {
    let threads = std::env::var("NWN_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("failed to build worker pool")
}
