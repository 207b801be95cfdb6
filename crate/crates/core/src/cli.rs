//! `nwn` command line: train, predict, eval, cv, sweep, compare.
//!
//! Settings resolve as command-line flag, then `--config` JSON file (keys
//! named like the flags, e.g. `"features": 8000`), then built-in default.
//! Exit codes: 0 success, 1 usage error, 2 data or runtime error.

use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::classify::{self, ModelBundle, ModelKind};
use crate::corpus::{DatasetFormat, DatasetSpec};
use crate::eval::{self, ExperimentConfig, Variants};
use crate::vectorize::Representation;
use crate::Error;

#[derive(Debug, Parser)]
#[command(
    name = "nwn",
    version,
    about = "Sentiment classification with TF-IDF and next-word negation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model on the whole dataset and save it.
    Train {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Where to write the model bundle.
        #[arg(long, value_name = "PATH")]
        save: PathBuf,
    },
    /// Classify one document per input line, writing `label<TAB>decision_value`.
    Predict {
        /// Model bundle written by `train`.
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        /// Input file; standard input when omitted.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Holdout evaluation on a stratified split.
    Eval {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Stratified k-fold cross-validation.
    Cv {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long, value_name = "K")]
        folds: Option<usize>,
    },
    /// Accuracy across feature sizes on one shared split.
    Sweep {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// `start:end:step`, e.g. `2000:8000:1000`, or a comma list.
        #[arg(long, value_name = "SPEC")]
        sweep: Option<String>,
    },
    /// Holdout runs varying the model or the representation.
    Compare {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long, value_parser = ["model", "representation"])]
        axis: Option<String>,
        /// Comma-separated variants; all of the axis when omitted.
        #[arg(long, value_name = "LIST")]
        variants: Option<String>,
    },
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long, value_name = "PATH")]
    data: Option<PathBuf>,
    #[arg(long, value_parser = ["tsv", "csv", "prefix", "imdb-dir"])]
    format: Option<String>,
    #[arg(long, value_name = "NAME")]
    label_col: Option<String>,
    #[arg(long, value_name = "NAME")]
    text_col: Option<String>,
    /// Keep only the first N documents of each label.
    #[arg(long, value_name = "N")]
    per_label_cap: Option<usize>,
    #[arg(long, value_parser = ["binary", "tfidf", "tfidf-nwn"])]
    repr: Option<String>,
    #[arg(long, value_parser = ["lsvm", "mnb", "merf"])]
    model: Option<String>,
    #[arg(long, value_name = "K")]
    features: Option<usize>,
    #[arg(long, value_name = "R")]
    split: Option<f64>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_parser = ["on", "off"])]
    stopwords: Option<String>,
    #[arg(long, value_name = "PATH")]
    stopword_file: Option<PathBuf>,
    /// SVM regularization weight C.
    #[arg(long, value_name = "C")]
    svm_c: Option<f64>,
    /// Naive Bayes smoothing.
    #[arg(long, value_name = "A")]
    alpha: Option<f64>,
    #[arg(long, value_name = "N")]
    trees: Option<usize>,
    #[arg(long, value_name = "D")]
    max_depth: Option<usize>,
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

/// `--config` file contents; every key mirrors a flag.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct ConfigFile {
    data: Option<PathBuf>,
    format: Option<String>,
    label_col: Option<String>,
    text_col: Option<String>,
    per_label_cap: Option<usize>,
    repr: Option<String>,
    model: Option<String>,
    features: Option<usize>,
    split: Option<f64>,
    seed: Option<u64>,
    stopwords: Option<String>,
    stopword_file: Option<PathBuf>,
    keep_single_chars: Option<bool>,
    l2_normalize: Option<bool>,
    svm_c: Option<f64>,
    svm_tol: Option<f64>,
    svm_max_iter: Option<usize>,
    alpha: Option<f64>,
    trees: Option<usize>,
    max_depth: Option<usize>,
    min_split: Option<usize>,
    features_per_split: Option<usize>,
    folds: Option<usize>,
    sweep: Option<String>,
    axis: Option<String>,
    variants: Option<String>,
    output: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_enum<T: std::str::FromStr<Err = Error>>(value: &str) -> Result<T, CliError> {
    value.parse().map_err(|e: Error| usage(e.to_string()))
}

fn read_config(path: Option<&Path>) -> Result<ConfigFile, CliError> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let bytes = std::fs::read(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
}

/// Resolves flags over config over defaults into an experiment.
fn resolve(args: &ExperimentArgs, file: &ConfigFile) -> Result<ExperimentConfig, CliError> {
    let data = args
        .data
        .clone()
        .or_else(|| file.data.clone())
        .ok_or_else(|| usage("--data is required"))?;
    let format = match args.format.as_deref().or(file.format.as_deref()) {
        Some(f) => parse_enum::<DatasetFormat>(f)?,
        None if data.is_dir() => DatasetFormat::ImdbDir,
        None => DatasetFormat::Tsv,
    };
    let mut dataset = DatasetSpec::new(data, format);
    if let Some(col) = args.label_col.clone().or_else(|| file.label_col.clone()) {
        dataset.label_column = col;
    }
    if let Some(col) = args.text_col.clone().or_else(|| file.text_col.clone()) {
        dataset.text_column = col;
    }
    dataset.per_label_cap = args.per_label_cap.or(file.per_label_cap);

    let mut cfg = ExperimentConfig::new(dataset);
    if let Some(r) = args.repr.as_deref().or(file.repr.as_deref()) {
        cfg.representation = parse_enum::<Representation>(r)?;
    }
    if let Some(m) = args.model.as_deref().or(file.model.as_deref()) {
        cfg.model = parse_enum::<ModelKind>(m)?;
    }
    if let Some(k) = args.features.or(file.features) {
        cfg.k_features = k;
    }
    if let Some(r) = args.split.or(file.split) {
        cfg.split_ratio = r;
    }
    let seed = args.seed.or(file.seed).unwrap_or(42);
    cfg.seed = seed;
    cfg.params.svm.seed = seed;
    cfg.params.forest.seed = seed;
    match args.stopwords.as_deref().or(file.stopwords.as_deref()) {
        Some("on") | None => cfg.remove_stopwords = true,
        Some("off") => cfg.remove_stopwords = false,
        Some(other) => {
            return Err(usage(format!(
                "--stopwords must be on or off, got {other:?}"
            )))
        }
    }
    cfg.stopword_file = args
        .stopword_file
        .clone()
        .or_else(|| file.stopword_file.clone());
    if let Some(v) = file.keep_single_chars {
        cfg.keep_single_chars = v;
    }
    if let Some(v) = file.l2_normalize {
        cfg.l2_normalize = v;
    }
    if let Some(c) = args.svm_c.or(file.svm_c) {
        cfg.params.svm.c = c;
    }
    if let Some(t) = file.svm_tol {
        cfg.params.svm.tol = t;
    }
    if let Some(n) = file.svm_max_iter {
        cfg.params.svm.max_iter = n;
    }
    if let Some(a) = args.alpha.or(file.alpha) {
        cfg.params.nb_alpha = a;
    }
    if let Some(n) = args.trees.or(file.trees) {
        cfg.params.forest.n_trees = n;
    }
    if let Some(d) = args.max_depth.or(file.max_depth) {
        cfg.params.forest.max_depth = Some(d);
    }
    if let Some(m) = file.min_split {
        cfg.params.forest.min_split = m;
    }
    if let Some(m) = file.features_per_split {
        cfg.params.forest.features_per_split = Some(m);
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

/// Parses `start:end:step` or `a,b,c` into strictly increasing sizes.
fn parse_sweep(spec: &str) -> Result<Vec<usize>, CliError> {
    let bad = || usage(format!("invalid --sweep {spec:?}"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let sizes: Vec<usize> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, end, step] = parts[..] else {
            return Err(bad());
        };
        let (start, end, step) = (num(start)?, num(end)?, num(step)?);
        if step == 0 || start > end {
            return Err(bad());
        }
        (start..=end).step_by(step).collect()
    } else {
        spec.split(',').map(num).collect::<Result<_, _>>()?
    };
    if sizes.is_empty() || sizes.contains(&0) || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad());
    }
    Ok(sizes)
}

fn parse_variants(axis: &str, list: Option<&str>) -> Result<Variants, CliError> {
    let items: Vec<&str> = list
        .map(|l| {
            l.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .collect()
        })
        .unwrap_or_default();
    match axis {
        "model" if items.is_empty() => Ok(Variants::Model(ModelKind::ALL.to_vec())),
        "model" => Ok(Variants::Model(
            items
                .iter()
                .map(|s| parse_enum(s))
                .collect::<Result<_, _>>()?,
        )),
        "representation" if items.is_empty() => {
            Ok(Variants::Representation(Representation::ALL.to_vec()))
        }
        "representation" => Ok(Variants::Representation(
            items
                .iter()
                .map(|s| parse_enum(s))
                .collect::<Result<_, _>>()?,
        )),
        other => Err(usage(format!(
            "--axis must be model or representation, got {other:?}"
        ))),
    }
}

fn output_path(args: &ExperimentArgs, file: &ConfigFile) -> Option<PathBuf> {
    args.output.clone().or_else(|| file.output.clone())
}

fn run_predict(model: &Path, input: Option<&Path>, output: Option<&Path>) -> Result<(), CliError> {
    let bundle: ModelBundle = classify::load_model(model)?;
    let reader: Box<dyn BufRead> = match input {
        Some(path) => Box::new(std::io::BufReader::new(
            std::fs::File::open(path).map_err(|e| Error::io(path, e))?,
        )),
        None => Box::new(std::io::stdin().lock()),
    };
    let out_path = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("<stdout>"));
    let mut writer: Box<dyn Write> = match output {
        Some(path) => Box::new(BufWriter::new(
            std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    let mut reader = reader;
    let mut buf = Vec::new();
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::io(&out_path, e))?;
        if n == 0 {
            break;
        }
        while matches!(buf.last(), Some(b'\n' | b'\r')) {
            buf.pop();
        }
        let (label, score) = bundle.predict_text(&String::from_utf8_lossy(&buf));
        writeln!(writer, "{label}\t{score}").map_err(|e| Error::io(&out_path, e))?;
    }
    writer.flush().map_err(|e| Error::io(&out_path, e))?;
    Ok(())
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Predict {
            model,
            input,
            output,
        } => run_predict(&model, input.as_deref(), output.as_deref()),
        Command::Train { exp, save } => {
            let file = read_config(exp.config.as_deref())?;
            let cfg = resolve(&exp, &file)?;
            let corpus = eval::load_corpus(&cfg)?;
            let fitted = eval::fit_full(&corpus, &cfg)?;
            let bundle = ModelBundle {
                representation: cfg.representation,
                preprocessor: cfg.preprocessor()?,
                labels: corpus.labels().to_vec(),
                vectorizer: fitted.vectorizer,
                model: fitted.model,
            };
            classify::save_model(&bundle, &save)?;
            log::info!(
                "trained {} on {} documents, {} features -> {}",
                cfg.model,
                corpus.len(),
                bundle.vectorizer.n_features(),
                save.display()
            );
            Ok(())
        }
        Command::Eval { exp } => {
            let file = read_config(exp.config.as_deref())?;
            let cfg = resolve(&exp, &file)?;
            let report = eval::run_holdout(&cfg)?;
            eval::emit(&report, output_path(&exp, &file).as_deref())?;
            Ok(())
        }
        Command::Cv { exp, folds } => {
            let file = read_config(exp.config.as_deref())?;
            let cfg = resolve(&exp, &file)?;
            let k = folds.or(file.folds).unwrap_or(10);
            if k < 2 {
                return Err(usage("--folds must be at least 2"));
            }
            let report = eval::run_cv(&cfg, k)?;
            eval::emit(&report, output_path(&exp, &file).as_deref())?;
            Ok(())
        }
        Command::Sweep { exp, sweep } => {
            let file = read_config(exp.config.as_deref())?;
            let cfg = resolve(&exp, &file)?;
            let spec = sweep
                .or_else(|| file.sweep.clone())
                .unwrap_or_else(|| "2000:8000:1000".into());
            let sizes = parse_sweep(&spec)?;
            let report = eval::run_feature_sweep(&cfg, &sizes)?;
            eval::emit(&report, output_path(&exp, &file).as_deref())?;
            Ok(())
        }
        Command::Compare {
            exp,
            axis,
            variants,
        } => {
            let file = read_config(exp.config.as_deref())?;
            let cfg = resolve(&exp, &file)?;
            let axis = axis
                .or_else(|| file.axis.clone())
                .ok_or_else(|| usage("--axis is required"))?;
            let variants = parse_variants(&axis, variants.as_deref().or(file.variants.as_deref()))?;
            let reports = eval::compare(&cfg, &variants)?;
            eval::emit(&reports, output_path(&exp, &file).as_deref())?;
            Ok(())
        }
    }
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!(
                "usage: nwn <train|predict|eval|cv|sweep|compare> [OPTIONS]  (see nwn --help)"
            );
            1
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}
