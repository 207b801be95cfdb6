//! Experiment runners: holdout accuracy, k-fold cross-validation,
//! feature-size sweeps and model/representation comparisons.
//!
//! Every run fits its vocabulary, IDF table and classifier on the training
//! portion only. Runs that vary one setting (sweep points, compare variants)
//! share the same split.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{Dataset, ModelKind, ModelParams, TrainedModel};
use crate::corpus::{self, Corpus, DatasetSpec, SplitSpec};
use crate::preprocess::{PreprocessOptions, Preprocessor, Stopwords, TokenList};
use crate::vectorize::{Representation, Vectorizer};
use crate::{Error, Result};

/// One fully pinned experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub representation: Representation,
    pub model: ModelKind,
    pub k_features: usize,
    pub split_ratio: f64,
    pub seed: u64,
    pub remove_stopwords: bool,
    pub keep_single_chars: bool,
    pub stopword_file: Option<PathBuf>,
    pub l2_normalize: bool,
    pub params: ModelParams,
}

impl ExperimentConfig {
    /// Defaults: TF-IDF with negation, linear SVM, 8000 features, 80/20 split,
    /// seed 42, stopwords removed, single characters dropped.
    pub fn new(dataset: DatasetSpec) -> Self {
        ExperimentConfig {
            dataset,
            representation: Representation::TfidfNwn,
            model: ModelKind::Lsvm,
            k_features: 8000,
            split_ratio: 0.8,
            seed: 42,
            remove_stopwords: true,
            keep_single_chars: false,
            stopword_file: None,
            l2_normalize: false,
            params: ModelParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_features == 0 {
            return Err(Error::Config("feature count must be at least 1".into()));
        }
        SplitSpec::new(self.split_ratio, self.seed)?;
        Ok(())
    }

    /// Preprocessing stages implied by the representation and stopword settings.
    pub fn preprocess_options(&self) -> PreprocessOptions {
        PreprocessOptions {
            remove_stopwords: self.remove_stopwords,
            keep_single_chars: self.keep_single_chars,
            apply_nwn: self.representation.uses_nwn(),
        }
    }

    pub fn preprocessor(&self) -> Result<Preprocessor> {
        let stopwords = match &self.stopword_file {
            Some(path) => Stopwords::from_file(path)?,
            None => Stopwords::builtin().clone(),
        };
        Ok(Preprocessor::with_stopwords(
            self.preprocess_options(),
            stopwords,
        ))
    }
}

/// Confusion counts with class 1 as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(predictions: &[usize], truth: &[usize]) -> Self {
        let mut c = Confusion::default();
        for (&p, &t) in predictions.iter().zip(truth) {
            match (p, t) {
                (1, 1) => c.tp += 1,
                (1, _) => c.fp += 1,
                (_, 1) => c.fn_ += 1,
                _ => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }
}

/// Fraction of matching positions.
pub fn accuracy(predictions: &[usize], truth: &[usize]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::Metric(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Metric("accuracy of an empty prediction list".into()));
    }
    let hits = predictions
        .iter()
        .zip(truth)
        .filter(|(p, t)| p == t)
        .count();
    Ok(hits as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
    /// Vocabulary size actually used (at most `k_features`).
    pub n_features: usize,
    pub confusion: Confusion,
    pub seconds: f64,
    /// Hash of the test-set document positions.
    pub test_membership: String,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (divisor k - 1) of the fold accuracies.
    pub std_dev: f64,
    pub folds: Vec<EvalReport>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k_features: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub runs: Vec<EvalReport>,
}

/// Loads the dataset of `config` and checks it is a two-class problem.
pub fn load_corpus(config: &ExperimentConfig) -> Result<Corpus> {
    let corpus = config.dataset.load()?;
    if corpus.labels().len() != 2 {
        return Err(Error::Data(format!(
            "expected exactly 2 labels, found {:?}",
            corpus.labels()
        )));
    }
    Ok(corpus)
}

fn membership_hash(indices: &[usize]) -> String {
    let mut h = DefaultHasher::new();
    indices.hash(&mut h);
    format!("{:016x}", h.finish())
}

/// Preprocessed documents of a corpus with their class indices.
struct Tokenized {
    tokens: Vec<TokenList>,
    classes: Vec<usize>,
}

impl Tokenized {
    fn new(corpus: &Corpus, pre: &Preprocessor) -> Self {
        let tokens = crate::worker_pool().install(|| {
            corpus
                .docs()
                .par_iter()
                .map(|d| pre.process(&d.text))
                .collect()
        });
        Tokenized {
            tokens,
            classes: corpus.class_indices(),
        }
    }

    fn pick(&self, indices: &[usize]) -> (Vec<TokenList>, Vec<usize>) {
        indices
            .iter()
            .map(|&i| (self.tokens[i].clone(), self.classes[i]))
            .unzip()
    }
}

/// The fitted pipeline of one run.
pub struct FittedPipeline {
    pub vectorizer: Vectorizer,
    pub model: TrainedModel,
}

fn fit_pipeline(
    tokens: &[TokenList],
    classes: Vec<usize>,
    config: &ExperimentConfig,
) -> Result<FittedPipeline> {
    let vectorizer = Vectorizer::fit(
        tokens,
        config.k_features,
        config.representation,
        config.l2_normalize,
    )?;
    let x = crate::worker_pool()
        .install(|| tokens.par_iter().map(|t| vectorizer.transform(t)).collect());
    let data = Dataset::new(x, classes, vectorizer.n_features())?;
    let model = TrainedModel::train(config.model, &data, &config.params)?;
    Ok(FittedPipeline { vectorizer, model })
}

fn score_partition(
    tokenized: &Tokenized,
    train: &[usize],
    test: &[usize],
    config: &ExperimentConfig,
) -> Result<EvalReport> {
    let start = Instant::now();
    let (train_tokens, train_y) = tokenized.pick(train);
    let fitted = fit_pipeline(&train_tokens, train_y, config)?;
    drop(train_tokens);
    let predictions: Vec<usize> = crate::worker_pool().install(|| {
        test.par_iter()
            .map(|&i| {
                let x = fitted.vectorizer.transform(&tokenized.tokens[i]);
                fitted.model.predict(&x).0
            })
            .collect()
    });
    let truth: Vec<usize> = test.iter().map(|&i| tokenized.classes[i]).collect();
    let confusion = Confusion::from_predictions(&predictions, &truth);
    let report = EvalReport {
        accuracy: accuracy(&predictions, &truth)?,
        n_train: train.len(),
        n_test: test.len(),
        n_features: fitted.vectorizer.n_features(),
        confusion,
        seconds: start.elapsed().as_secs_f64(),
        test_membership: membership_hash(test),
        config: config.clone(),
    };
    log::info!(
        "{} {} K={} acc={:.4} train={} test={} ({:.1}s)",
        config.representation,
        config.model,
        config.k_features,
        report.accuracy,
        report.n_train,
        report.n_test,
        report.seconds
    );
    Ok(report)
}

/// Holdout run on an already loaded corpus.
pub fn holdout_on(corpus: &Corpus, config: &ExperimentConfig) -> Result<EvalReport> {
    config.validate()?;
    let split =
        corpus::stratified_split_indices(corpus, SplitSpec::new(config.split_ratio, config.seed)?)?;
    let tokenized = Tokenized::new(corpus, &config.preprocessor()?);
    score_partition(&tokenized, &split.train, &split.test, config)
}

/// Split, preprocess, fit on the training side and score the test side.
pub fn run_holdout(config: &ExperimentConfig) -> Result<EvalReport> {
    config.validate()?;
    holdout_on(&load_corpus(config)?, config)
}

/// Stratified k-fold cross-validation on an already loaded corpus.
pub fn cv_on(corpus: &Corpus, config: &ExperimentConfig, k: usize) -> Result<CvReport> {
    config.validate()?;
    let start = Instant::now();
    let plan = corpus::stratified_kfold(corpus, k, config.seed)?;
    let tokenized = Tokenized::new(corpus, &config.preprocessor()?);
    let folds = (0..k)
        .map(|f| {
            score_partition(
                &tokenized,
                &plan.train_indices(f),
                &plan.test_indices(f),
                config,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let fold_accuracies: Vec<f64> = folds.iter().map(|r| r.accuracy).collect();
    let mean = fold_accuracies.iter().sum::<f64>() / k as f64;
    let var = fold_accuracies
        .iter()
        .map(|a| (a - mean).powi(2))
        .sum::<f64>()
        / (k - 1) as f64;
    Ok(CvReport {
        fold_accuracies,
        mean,
        std_dev: var.sqrt(),
        folds,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn run_cv(config: &ExperimentConfig, k: usize) -> Result<CvReport> {
    config.validate()?;
    cv_on(&load_corpus(config)?, config, k)
}

/// One holdout run per feature size, all on the same split.
pub fn sweep_on(
    corpus: &Corpus,
    config: &ExperimentConfig,
    sizes: &[usize],
) -> Result<SweepReport> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "sweep sizes must be non-empty and strictly increasing, got {sizes:?}"
        )));
    }
    config.validate()?;
    let split =
        corpus::stratified_split_indices(corpus, SplitSpec::new(config.split_ratio, config.seed)?)?;
    let tokenized = Tokenized::new(corpus, &config.preprocessor()?);
    let runs = sizes
        .iter()
        .map(|&k| {
            let cfg = ExperimentConfig {
                k_features: k,
                ..config.clone()
            };
            score_partition(&tokenized, &split.train, &split.test, &cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = runs
        .iter()
        .map(|r| SweepRow {
            k_features: r.config.k_features,
            accuracy: r.accuracy,
        })
        .collect();
    Ok(SweepReport { rows, runs })
}

pub fn run_feature_sweep(config: &ExperimentConfig, sizes: &[usize]) -> Result<SweepReport> {
    config.validate()?;
    sweep_on(&load_corpus(config)?, config, sizes)
}

/// What [`compare`] varies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Variants {
    Model(Vec<ModelKind>),
    Representation(Vec<Representation>),
}

/// One holdout run per variant, all other settings and the split fixed.
pub fn compare_on(
    corpus: &Corpus,
    config: &ExperimentConfig,
    variants: &Variants,
) -> Result<Vec<EvalReport>> {
    let configs: Vec<ExperimentConfig> = match variants {
        Variants::Model(models) => models
            .iter()
            .map(|&model| ExperimentConfig {
                model,
                ..config.clone()
            })
            .collect(),
        Variants::Representation(reprs) => reprs
            .iter()
            .map(|&representation| ExperimentConfig {
                representation,
                ..config.clone()
            })
            .collect(),
    };
    if configs.is_empty() {
        return Err(Error::Config("no variants to compare".into()));
    }
    config.validate()?;
    let split =
        corpus::stratified_split_indices(corpus, SplitSpec::new(config.split_ratio, config.seed)?)?;

    // Variants with the same preprocessing share one tokenization.
    let mut cached: Option<(PreprocessOptions, Tokenized)> = None;
    let mut reports = Vec::with_capacity(configs.len());
    for cfg in &configs {
        let options = cfg.preprocess_options();
        if cached.as_ref().is_none_or(|(o, _)| *o != options) {
            cached = Some((options, Tokenized::new(corpus, &cfg.preprocessor()?)));
        }
        let tokenized = &cached.as_ref().expect("tokenized above").1;
        reports.push(score_partition(tokenized, &split.train, &split.test, cfg)?);
    }
    Ok(reports)
}

pub fn compare(config: &ExperimentConfig, variants: &Variants) -> Result<Vec<EvalReport>> {
    config.validate()?;
    compare_on(&load_corpus(config)?, config, variants)
}

/// Fits a pipeline on the whole corpus (for `train`/`predict`).
pub fn fit_full(corpus: &Corpus, config: &ExperimentConfig) -> Result<FittedPipeline> {
    config.validate()?;
    let tokenized = Tokenized::new(corpus, &config.preprocessor()?);
    fit_pipeline(&tokenized.tokens, tokenized.classes, config)
}

/// Flat CSV row: one line per run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub dataset: String,
    pub format: String,
    pub representation: String,
    pub model: String,
    pub k_features: usize,
    pub split_ratio: f64,
    pub seed: u64,
    pub fold: Option<usize>,
    pub accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub seconds: f64,
}

impl EvalReport {
    pub fn csv_row(&self, fold: Option<usize>) -> CsvRow {
        let c = &self.config;
        CsvRow {
            dataset: c.dataset.path.display().to_string(),
            format: serde_json::to_value(c.dataset.format)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default(),
            representation: c.representation.to_string(),
            model: c.model.to_string(),
            k_features: c.k_features,
            split_ratio: c.split_ratio,
            seed: c.seed,
            fold,
            accuracy: self.accuracy,
            n_train: self.n_train,
            n_test: self.n_test,
            tp: self.confusion.tp,
            fp: self.confusion.fp,
            tn: self.confusion.tn,
            fn_: self.confusion.fn_,
            seconds: self.seconds,
        }
    }
}

/// A report that can be written as JSON or as flat CSV rows.
pub trait Report: Serialize {
    fn csv_rows(&self) -> Vec<CsvRow>;
}

impl Report for EvalReport {
    fn csv_rows(&self) -> Vec<CsvRow> {
        vec![self.csv_row(None)]
    }
}

impl Report for CvReport {
    fn csv_rows(&self) -> Vec<CsvRow> {
        self.folds
            .iter()
            .enumerate()
            .map(|(i, r)| r.csv_row(Some(i)))
            .collect()
    }
}

impl Report for SweepReport {
    fn csv_rows(&self) -> Vec<CsvRow> {
        self.runs.iter().map(|r| r.csv_row(None)).collect()
    }
}

impl Report for Vec<EvalReport> {
    fn csv_rows(&self) -> Vec<CsvRow> {
        self.iter().map(|r| r.csv_row(None)).collect()
    }
}

pub fn write_csv<R: Report + ?Sized>(report: &R, out: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in report.csv_rows() {
        writer
            .serialize(row)
            .map_err(|e| Error::Data(format!("csv output: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| Error::Data(format!("csv output: {e}")))
}

pub fn write_json<R: Report + ?Sized>(report: &R, mut out: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, report)
        .map_err(|e| Error::Data(format!("json output: {e}")))?;
    writeln!(out).map_err(|e| Error::Data(format!("json output: {e}")))
}

/// Writes to `path` (CSV when it ends in `.csv`, JSON otherwise) or to
/// standard output as JSON.
pub fn emit<R: Report + ?Sized>(report: &R, path: Option<&Path>) -> Result<()> {
    match path {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
            let out = std::io::BufWriter::new(file);
            if path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
            {
                write_csv(report, out)
            } else {
                write_json(report, out)
            }
        }
        None => write_json(report, std::io::stdout().lock()),
    }
}
