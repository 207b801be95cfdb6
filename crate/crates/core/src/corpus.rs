//! Labeled document collections, dataset loaders and deterministic splits.
//!
//! Every loader produces the same [`Corpus`] shape. TSV (`label<TAB>text`)
//! is the interchange format; any corpus can be written back out with
//! [`write_tsv`].

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub text: String,
    pub label: String,
}

impl Document {
    pub fn new(label: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            text: text.into(),
            label: label.into(),
        }
    }
}

/// An ordered collection of documents plus its sorted label alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    docs: Vec<Document>,
    labels: Vec<String>,
}

impl Corpus {
    /// Builds a corpus whose alphabet is the sorted set of labels seen in `docs`.
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        if let Some(pos) = docs.iter().position(|d| d.label.is_empty()) {
            return Err(Error::Data(format!("document {pos} has an empty label")));
        }
        let labels: BTreeSet<&str> = docs.iter().map(|d| d.label.as_str()).collect();
        let labels = labels.into_iter().map(str::to_owned).collect();
        Ok(Corpus { docs, labels })
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    /// Sorted, distinct class labels.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Position of `label` in the alphabet, used as the class index.
    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    /// Class index of every document, in document order.
    pub fn class_indices(&self) -> Vec<usize> {
        self.docs
            .iter()
            .map(|d| self.label_index(&d.label).expect("label in alphabet"))
            .collect()
    }

    /// Document positions grouped by class, each group in load order.
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.labels.len()];
        for (i, class) in self.class_indices().into_iter().enumerate() {
            groups[class].push(i);
        }
        groups
    }

    /// Sub-corpus of the given positions. The label alphabet is inherited
    /// so class indices stay stable across partitions.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus {
            docs: indices.iter().map(|&i| self.docs[i].clone()).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Keeps the first `cap` documents of each label, preserving load order.
    pub fn cap_per_label(&self, cap: usize) -> Corpus {
        let mut seen: HashMap<&str, usize> = HashMap::new();
        let docs: Vec<Document> = self
            .docs
            .iter()
            .filter(|d| {
                let n = seen.entry(d.label.as_str()).or_default();
                *n += 1;
                *n <= cap
            })
            .cloned()
            .collect();
        Corpus::new(docs).expect("labels already validated")
    }
}

/// Reads `path` line by line with lossy UTF-8 decoding. `handle` receives the
/// 1-based line number and the line with its terminator stripped.
fn for_each_line(path: &Path, mut handle: impl FnMut(usize, &str) -> Result<()>) -> Result<()> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Ok(());
        }
        line_no += 1;
        while matches!(buf.last(), Some(b'\n' | b'\r')) {
            buf.pop();
        }
        handle(line_no, &String::from_utf8_lossy(&buf))?;
    }
}

/// Loads `label<TAB>text` lines. Empty lines are skipped; further tabs in the
/// text become spaces.
pub fn load_tsv(path: impl AsRef<Path>) -> Result<Corpus> {
    let mut docs = Vec::new();
    for_each_line(path.as_ref(), |line_no, line| {
        if line.is_empty() {
            return Ok(());
        }
        docs.push(parse_tsv_line(line_no, line)?);
        Ok(())
    })?;
    Corpus::new(docs)
}

fn parse_tsv_line(line_no: usize, line: &str) -> Result<Document> {
    let (label, text) = line.split_once('\t').ok_or_else(|| Error::Parse {
        line: line_no,
        message: "missing tab separator between label and text".into(),
    })?;
    if label.is_empty() {
        return Err(Error::Parse {
            line: line_no,
            message: "empty label".into(),
        });
    }
    Ok(Document::new(label, text.replace('\t', " ")))
}

/// Writes the corpus as TSV. Labels or texts containing tabs or line breaks
/// cannot be represented and are rejected.
pub fn write_tsv(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let forbidden = |s: &str| s.contains(['\t', '\n', '\r']);
    for (i, doc) in corpus.docs().iter().enumerate() {
        if forbidden(&doc.label) || forbidden(&doc.text) {
            return Err(Error::Data(format!(
                "document {i} contains a tab or line break and cannot be written as TSV"
            )));
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for doc in corpus.docs() {
        writeln!(out, "{}\t{}", doc.label, doc.text).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Loads an RFC 4180 CSV file with a header row, taking the label and text
/// from the named columns.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str, text_column: &str) -> Result<Corpus> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader
        .byte_headers()
        .map_err(|e| csv_error(path, e))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| String::from_utf8_lossy(h).trim() == name)
            .ok_or_else(|| {
                Error::Config(format!("column {name:?} not found in {}", path.display()))
            })
    };
    let label_col = column(label_column)?;
    let text_col = column(text_column)?;

    let mut docs = Vec::new();
    for record in reader.byte_records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let field = |col: usize| {
            record.get(col).ok_or_else(|| Error::Parse {
                line: row,
                message: format!("row has {} fields, column {col} missing", record.len()),
            })
        };
        let label = String::from_utf8_lossy(field(label_col)?).trim().to_owned();
        if label.is_empty() {
            return Err(Error::Parse {
                line: row,
                message: "empty label".into(),
            });
        }
        let text = String::from_utf8_lossy(field(text_col)?).into_owned();
        docs.push(Document::new(label, text));
    }
    Corpus::new(docs)
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line() as usize);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        kind => Error::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

const LABEL_PREFIX: &str = "__label__";

/// Loads `__label__<L> <text>` lines (fastText style).
pub fn load_prefix_labeled(path: impl AsRef<Path>) -> Result<Corpus> {
    let mut docs = Vec::new();
    for_each_line(path.as_ref(), |line_no, line| {
        if line.is_empty() {
            return Ok(());
        }
        docs.push(parse_prefix_line(line_no, line)?);
        Ok(())
    })?;
    Corpus::new(docs)
}

fn parse_prefix_line(line_no: usize, line: &str) -> Result<Document> {
    let rest = line
        .strip_prefix(LABEL_PREFIX)
        .ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("line does not start with {LABEL_PREFIX}"),
        })?;
    let (label, text) = rest.split_once(' ').unwrap_or((rest, ""));
    if label.is_empty() {
        return Err(Error::Parse {
            line: line_no,
            message: "empty label".into(),
        });
    }
    Ok(Document::new(label, text))
}

/// Loads one document per file from label-mapped subdirectories of `root`.
///
/// `subdir_to_label` maps a relative subdirectory (e.g. `train/pos`) to a
/// label. Documents are ordered by label, then file name, then subdirectory.
pub fn load_dir_tree<S, L>(root: impl AsRef<Path>, subdir_to_label: &[(S, L)]) -> Result<Corpus>
where
    S: AsRef<Path>,
    L: AsRef<str>,
{
    let root = root.as_ref();
    let mut entries: Vec<(String, String, PathBuf)> = Vec::new();
    for (subdir, label) in subdir_to_label {
        let dir = root.join(subdir.as_ref());
        let listing = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        for entry in listing {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            let path = entry.path();
            if path.is_file() {
                let name = entry.file_name().to_string_lossy().into_owned();
                entries.push((label.as_ref().to_owned(), name, path));
            }
        }
    }
    entries.sort();

    let mut docs = Vec::with_capacity(entries.len());
    for (label, _, path) in entries {
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        docs.push(Document::new(label, String::from_utf8_lossy(&bytes)));
    }
    Corpus::new(docs)
}

/// Loads an aclImdb-style tree. When `root` has `train/` or `test/`
/// directories, every present `{train,test}/{pos,neg}` is loaded; otherwise
/// `root/pos` and `root/neg` are used directly.
pub fn load_imdb_tree(root: impl AsRef<Path>) -> Result<Corpus> {
    let root = root.as_ref();
    let mut mapping: Vec<(PathBuf, &str)> = Vec::new();
    for part in ["train", "test"] {
        if root.join(part).is_dir() {
            mapping.push((Path::new(part).join("neg"), "neg"));
            mapping.push((Path::new(part).join("pos"), "pos"));
        }
    }
    if mapping.is_empty() {
        mapping.push((PathBuf::from("neg"), "neg"));
        mapping.push((PathBuf::from("pos"), "pos"));
    }
    load_dir_tree(root, &mapping)
}

/// Holdout ratio and shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    ratio: f64,
    seed: u64,
}

impl SplitSpec {
    pub fn new(ratio: f64, seed: u64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::Config(format!(
                "split ratio {ratio} is not in (0, 1)"
            )));
        }
        Ok(SplitSpec { ratio, seed })
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Train/test document positions, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoldoutSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per class, shuffles with `spec.seed` and sends `round(ratio * n)` documents
/// (clamped to leave at least one on each side) to the training side.
pub fn stratified_split_indices(corpus: &Corpus, spec: SplitSpec) -> Result<HoldoutSplit> {
    if corpus.is_empty() {
        return Err(Error::Split("cannot split an empty corpus".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, mut members) in corpus.indices_by_class().into_iter().enumerate() {
        let n = members.len();
        if n < 2 {
            return Err(Error::Split(format!(
                "class {:?} has {n} document(s); at least 2 are required",
                corpus.labels()[class]
            )));
        }
        members.shuffle(&mut rng);
        let n_train = ((spec.ratio * n as f64).round() as usize).clamp(1, n - 1);
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(HoldoutSplit { train, test })
}

pub fn stratified_split(corpus: &Corpus, spec: SplitSpec) -> Result<(Corpus, Corpus)> {
    let split = stratified_split_indices(corpus, spec)?;
    Ok((corpus.subset(&split.train), corpus.subset(&split.test)))
}

/// Fold assignment for every document of a corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    k: usize,
    assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }
}

/// Shuffles each class under `seed` and deals its members round-robin over
/// the folds. The dealing position carries over between classes so total
/// fold sizes also differ by at most one.
pub fn stratified_kfold(corpus: &Corpus, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Fold(format!("k must be at least 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![usize::MAX; corpus.len()];
    let mut next = 0;
    for (class, mut members) in corpus.indices_by_class().into_iter().enumerate() {
        if members.len() < k {
            return Err(Error::Fold(format!(
                "class {:?} has {} document(s), fewer than k = {k}",
                corpus.labels()[class],
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for doc in members {
            assignments[doc] = next;
            next = (next + 1) % k;
        }
    }
    if corpus.is_empty() {
        return Err(Error::Fold("cannot fold an empty corpus".into()));
    }
    Ok(FoldPlan { k, assignments })
}

/// Supported on-disk dataset layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    Tsv,
    Csv,
    Prefix,
    ImdbDir,
}

impl std::str::FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(DatasetFormat::Tsv),
            "csv" => Ok(DatasetFormat::Csv),
            "prefix" => Ok(DatasetFormat::Prefix),
            "imdb-dir" => Ok(DatasetFormat::ImdbDir),
            other => Err(Error::Config(format!("unknown dataset format {other:?}"))),
        }
    }
}

/// Where a dataset lives and how to read it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub format: DatasetFormat,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    #[serde(default = "default_text_column")]
    pub text_column: String,
    /// Keep only the first N documents of each label.
    #[serde(default)]
    pub per_label_cap: Option<usize>,
}

fn default_label_column() -> String {
    "v1".into()
}

fn default_text_column() -> String {
    "v2".into()
}

impl DatasetSpec {
    pub fn new(path: impl Into<PathBuf>, format: DatasetFormat) -> Self {
        DatasetSpec {
            path: path.into(),
            format,
            label_column: default_label_column(),
            text_column: default_text_column(),
            per_label_cap: None,
        }
    }

    pub fn load(&self) -> Result<Corpus> {
        let corpus = match self.format {
            DatasetFormat::Tsv => load_tsv(&self.path)?,
            DatasetFormat::Csv => load_csv(&self.path, &self.label_column, &self.text_column)?,
            DatasetFormat::Prefix => load_prefix_labeled(&self.path)?,
            DatasetFormat::ImdbDir => load_imdb_tree(&self.path)?,
        };
        Ok(match self.per_label_cap {
            Some(cap) => corpus.cap_per_label(cap),
            None => corpus,
        })
    }
}
