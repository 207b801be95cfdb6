//! Versioned JSON model bundles: preprocessing setup, fitted feature space
//! and classifier in one file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ForestModel, LinearModel, ModelKind, NbModel, Node, TrainedModel};
use crate::preprocess::{PreprocessOptions, Preprocessor, Stopwords};
use crate::vectorize::{FeatureSpaceDoc, Representation, SparseVector, Vectorizer};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Everything needed to classify raw text.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub representation: Representation,
    pub preprocessor: Preprocessor,
    /// Class labels; position is the class index.
    pub labels: Vec<String>,
    pub vectorizer: Vectorizer,
    pub model: TrainedModel,
}

impl ModelBundle {
    pub fn featurize(&self, text: &str) -> SparseVector {
        self.vectorizer.transform(&self.preprocessor.process(text))
    }

    /// Predicted label and signed decision value for one raw document.
    pub fn predict_text(&self, text: &str) -> (&str, f64) {
        let (class, score) = self.model.predict(&self.featurize(text));
        (&self.labels[class], score)
    }
}

#[derive(Serialize, Deserialize)]
struct BundleDoc {
    format_version: u32,
    representation: Representation,
    preprocess_options: PreprocessOptions,
    /// Present only when a custom stopword list was used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stopwords: Option<Vec<String>>,
    labels: Vec<String>,
    #[serde(default)]
    l2_normalize: bool,
    vocabulary: FeatureSpaceDoc,
    /// Derived from `vocabulary.df`; checked on load.
    idf: Vec<f64>,
    model_kind: ModelKind,
    model_payload: Value,
}

pub fn save_model(bundle: &ModelBundle, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let stopwords = bundle.preprocessor.stopwords();
    let payload = match &bundle.model {
        TrainedModel::Linear(m) => serde_json::to_value(m),
        TrainedModel::NaiveBayes(m) => serde_json::to_value(m),
        TrainedModel::Forest(m) => serde_json::to_value(m),
    }
    .map_err(|e| Error::ModelFormat(e.to_string()))?;
    let doc = BundleDoc {
        format_version: FORMAT_VERSION,
        representation: bundle.representation,
        preprocess_options: bundle.preprocessor.options(),
        stopwords: (stopwords != Stopwords::builtin()).then(|| stopwords.sorted_words()),
        labels: bundle.labels.clone(),
        l2_normalize: bundle.vectorizer.l2_normalize(),
        vocabulary: bundle.vectorizer.to_doc(),
        idf: bundle.vectorizer.idf_table().idf().to_vec(),
        model_kind: bundle.model.kind(),
        model_payload: payload,
    };
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    serde_json::to_writer(&mut out, &doc).map_err(|e| Error::ModelFormat(e.to_string()))?;
    std::io::Write::flush(&mut out).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelBundle> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let value: Value = serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
        line: e.line(),
        message: format!("model file {}: {e}", path.display()),
    })?;
    let version = value
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::ModelFormat("missing format_version".into()))?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(Error::Version {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            expected: FORMAT_VERSION,
        });
    }
    let doc: BundleDoc =
        serde_json::from_value(value).map_err(|e| Error::ModelFormat(e.to_string()))?;

    let vectorizer = Vectorizer::from_doc(doc.vocabulary, doc.representation, doc.l2_normalize)?;
    let derived = vectorizer.idf_table().idf();
    if derived.len() != doc.idf.len()
        || derived
            .iter()
            .zip(&doc.idf)
            .any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(Error::ModelFormat(
            "stored idf does not match df counts".into(),
        ));
    }
    if doc.labels.len() != 2 {
        return Err(Error::ModelFormat(format!(
            "expected 2 class labels, found {}",
            doc.labels.len()
        )));
    }

    let k = vectorizer.n_features();
    let payload = doc.model_payload;
    let bad = |what: &str| Error::ModelFormat(format!("{what} does not match {k} features"));
    let model = match doc.model_kind {
        ModelKind::Lsvm => {
            let m: LinearModel = from_payload(payload)?;
            if m.w.len() != k {
                return Err(bad("linear weight vector"));
            }
            TrainedModel::Linear(m)
        }
        ModelKind::Mnb => {
            let m: NbModel = from_payload(payload)?;
            if m.log_prior.len() != 2 || m.log_like.iter().any(|row| row.len() != k) {
                return Err(bad("naive Bayes tables"));
            }
            TrainedModel::NaiveBayes(m)
        }
        ModelKind::Merf => {
            let m: ForestModel = from_payload(payload)?;
            let valid_node = |tree_len: usize, node: &Node| match *node {
                Node::Leaf { class } => class < 2,
                Node::Split {
                    feature,
                    left,
                    right,
                    ..
                } => feature < k && left < tree_len && right < tree_len,
            };
            if m.n_features != k
                || m.trees.iter().any(|t| {
                    t.nodes.is_empty() || !t.nodes.iter().all(|n| valid_node(t.nodes.len(), n))
                })
            {
                return Err(bad("forest"));
            }
            TrainedModel::Forest(m)
        }
    };

    let stopwords = match doc.stopwords {
        Some(words) => Stopwords::parse(&words.join("\n")),
        None => Stopwords::builtin().clone(),
    };
    Ok(ModelBundle {
        representation: doc.representation,
        preprocessor: Preprocessor::with_stopwords(doc.preprocess_options, stopwords),
        labels: doc.labels,
        vectorizer,
        model,
    })
}

fn from_payload<T: serde::de::DeserializeOwned>(payload: Value) -> Result<T> {
    serde_json::from_value(payload).map_err(|e| Error::ModelFormat(format!("model payload: {e}")))
}
