//! Vocabulary selection, IDF fitting and sparse document vectors.
//!
//! All statistics are fitted on training token lists only; test documents
//! are transformed against the frozen [`Vocabulary`] and [`IdfTable`].
//!
//! ```text
//! tf(t, d)     = count(t, d) / |d|          (|d| counts every token of d)
//! idf(t)       = ln(1 + N / df(t))
//! tfidf(t, d)  = tf(t, d) * idf(t)
//! ```

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::preprocess::TokenList;
use crate::{Error, Result};

/// Sorted `(feature index, weight)` pairs; absent indices are zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Sorts by index and rejects duplicate indices or non-finite weights.
    pub fn new(mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|&(i, _)| i);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Data(
                "duplicate feature index in sparse vector".into(),
            ));
        }
        if entries.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::Data("non-finite feature weight".into()));
        }
        Ok(SparseVector { entries })
    }

    /// Builds a vector from a dense slice, keeping nonzero entries.
    pub fn from_dense(values: &[f64]) -> Result<Self> {
        SparseVector::new(
            values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
        )
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }

    /// Value at `index`, zero when absent.
    pub fn get(&self, index: usize) -> f64 {
        match self.entries.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|&(i, _)| i)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        for (_, v) in &mut self.entries {
            *v *= factor;
        }
    }
}

/// The top-K terms of the training data, most frequent first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Wraps an ordered term list, rejecting duplicates.
    pub fn from_terms(terms: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(terms.len());
        for (i, term) in terms.iter().enumerate() {
            if index.insert(term.clone(), i).is_some() {
                return Err(Error::Vocabulary(format!("duplicate term {term:?}")));
            }
        }
        Ok(Vocabulary { terms, index })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }
}

/// Selects the `k` terms with the highest total occurrence count across
/// `token_lists`, ties broken by ascending term.
pub fn build_vocabulary(token_lists: &[TokenList], k: usize) -> Result<Vocabulary> {
    if k == 0 {
        return Err(Error::Vocabulary(
            "requested vocabulary size must be at least 1".into(),
        ));
    }
    if token_lists.is_empty() {
        return Err(Error::Vocabulary("no training documents".into()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for tokens in token_lists {
        for token in tokens {
            *counts.entry(token.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(k);
    Vocabulary::from_terms(ranked.into_iter().map(|(t, _)| t.to_owned()).collect())
}

/// Document frequencies and IDF values for each vocabulary term.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    n_docs: usize,
    df: Vec<usize>,
    idf: Vec<f64>,
}

impl IdfTable {
    /// Derives `idf = ln(1 + n_docs / df)`; requires `1 <= df <= n_docs`.
    pub fn from_counts(n_docs: usize, df: Vec<usize>) -> Result<Self> {
        if let Some(pos) = df.iter().position(|&d| d == 0 || d > n_docs) {
            return Err(Error::Fit(format!(
                "document frequency {} of feature {pos} is outside 1..={n_docs}",
                df[pos]
            )));
        }
        let idf = df
            .iter()
            .map(|&d| (1.0 + n_docs as f64 / d as f64).ln())
            .collect();
        Ok(IdfTable { n_docs, df, idf })
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn df(&self) -> &[usize] {
        &self.df
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }
}

/// Counts, for each vocabulary term, the training documents containing it.
pub fn fit_idf(token_lists: &[TokenList], vocab: &Vocabulary) -> Result<IdfTable> {
    let mut df = vec![0usize; vocab.len()];
    let mut last_seen = vec![usize::MAX; vocab.len()];
    for (doc, tokens) in token_lists.iter().enumerate() {
        for token in tokens {
            if let Some(i) = vocab.index_of(token) {
                if last_seen[i] != doc {
                    last_seen[i] = doc;
                    df[i] += 1;
                }
            }
        }
    }
    if let Some(pos) = df.iter().position(|&d| d == 0) {
        return Err(Error::Fit(format!(
            "vocabulary term {:?} occurs in no training document",
            vocab.terms()[pos]
        )));
    }
    IdfTable::from_counts(token_lists.len(), df)
}

/// Sorted `(index, count)` for the in-vocabulary tokens of a document.
fn term_counts(tokens: &TokenList, vocab: &Vocabulary) -> Vec<(usize, usize)> {
    let mut hits: Vec<usize> = tokens.iter().filter_map(|t| vocab.index_of(t)).collect();
    hits.sort_unstable();
    let mut counts: Vec<(usize, usize)> = Vec::new();
    for i in hits {
        match counts.last_mut() {
            Some((last, n)) if *last == i => *n += 1,
            _ => counts.push((i, 1)),
        }
    }
    counts
}

/// Presence vector: 1.0 for each vocabulary term occurring in `tokens`.
pub fn vectorize_binary(tokens: &TokenList, vocab: &Vocabulary) -> SparseVector {
    SparseVector {
        entries: term_counts(tokens, vocab)
            .into_iter()
            .map(|(i, _)| (i, 1.0))
            .collect(),
    }
}

/// TF-IDF vector. The TF denominator is the full token count, so
/// out-of-vocabulary tokens dilute the in-vocabulary weights.
pub fn vectorize_tfidf(tokens: &TokenList, vocab: &Vocabulary, idf: &IdfTable) -> SparseVector {
    if tokens.is_empty() {
        return SparseVector::default();
    }
    let len = tokens.len() as f64;
    SparseVector {
        entries: term_counts(tokens, vocab)
            .into_iter()
            .map(|(i, n)| (i, n as f64 / len * idf.idf[i]))
            .collect(),
    }
}

/// Text representation used for an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Binary,
    Tfidf,
    TfidfNwn,
}

impl Representation {
    pub const ALL: [Representation; 3] = [
        Representation::Binary,
        Representation::Tfidf,
        Representation::TfidfNwn,
    ];

    /// Whether documents go through next-word negation.
    pub fn uses_nwn(self) -> bool {
        self == Representation::TfidfNwn
    }

    pub fn uses_idf(self) -> bool {
        self != Representation::Binary
    }

    pub fn name(self) -> &'static str {
        match self {
            Representation::Binary => "binary",
            Representation::Tfidf => "tfidf",
            Representation::TfidfNwn => "tfidf-nwn",
        }
    }
}

impl std::fmt::Display for Representation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Representation::Binary),
            "tfidf" => Ok(Representation::Tfidf),
            "tfidf-nwn" | "tfidf_nwn" => Ok(Representation::TfidfNwn),
            other => Err(Error::Config(format!("unknown representation {other:?}"))),
        }
    }
}

/// Serialized form of a fitted vocabulary and IDF table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpaceDoc {
    pub terms: Vec<String>,
    pub df: Vec<usize>,
    pub n_docs: usize,
}

/// A fitted vocabulary with its IDF table, ready to transform documents.
#[derive(Debug, Clone, PartialEq)]
pub struct Vectorizer {
    vocab: Vocabulary,
    idf: IdfTable,
    tfidf: bool,
    l2_normalize: bool,
}

impl Vectorizer {
    pub fn fit(
        token_lists: &[TokenList],
        k: usize,
        representation: Representation,
        l2_normalize: bool,
    ) -> Result<Self> {
        let vocab = build_vocabulary(token_lists, k)?;
        let idf = fit_idf(token_lists, &vocab)?;
        Ok(Vectorizer {
            vocab,
            idf,
            tfidf: representation.uses_idf(),
            l2_normalize,
        })
    }

    pub fn from_parts(
        vocab: Vocabulary,
        idf: IdfTable,
        representation: Representation,
        l2_normalize: bool,
    ) -> Result<Self> {
        if vocab.len() != idf.df.len() {
            return Err(Error::Fit(format!(
                "vocabulary has {} terms but the idf table has {}",
                vocab.len(),
                idf.df.len()
            )));
        }
        Ok(Vectorizer {
            vocab,
            idf,
            tfidf: representation.uses_idf(),
            l2_normalize,
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn idf_table(&self) -> &IdfTable {
        &self.idf
    }

    pub fn n_features(&self) -> usize {
        self.vocab.len()
    }

    pub fn l2_normalize(&self) -> bool {
        self.l2_normalize
    }

    pub fn transform(&self, tokens: &TokenList) -> SparseVector {
        let mut v = if self.tfidf {
            vectorize_tfidf(tokens, &self.vocab, &self.idf)
        } else {
            vectorize_binary(tokens, &self.vocab)
        };
        if self.l2_normalize {
            let norm = v.norm_squared().sqrt();
            if norm > 0.0 {
                v.scale(1.0 / norm);
            }
        }
        v
    }

    pub fn to_doc(&self) -> FeatureSpaceDoc {
        FeatureSpaceDoc {
            terms: self.vocab.terms.clone(),
            df: self.idf.df.clone(),
            n_docs: self.idf.n_docs,
        }
    }

    pub fn from_doc(
        doc: FeatureSpaceDoc,
        representation: Representation,
        l2_normalize: bool,
    ) -> Result<Self> {
        let vocab = Vocabulary::from_terms(doc.terms)?;
        let idf = IdfTable::from_counts(doc.n_docs, doc.df)?;
        Vectorizer::from_parts(vocab, idf, representation, l2_normalize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lists(docs: &[&str]) -> Vec<TokenList> {
        docs.iter()
            .map(|d| TokenList::new(d.split_whitespace().map(str::to_owned).collect()))
            .collect()
    }

    #[test]
    fn vocabulary_tie_break() {
        let docs = lists(&["the movie good", "movie the", "the movie"]);
        let vocab = build_vocabulary(&docs, 2).unwrap();
        assert_eq!(vocab.terms(), ["movie", "the"]);
        assert_eq!(vocab.index_of("the"), Some(1));
        assert_eq!(vocab.index_of("good"), None);
    }

    #[test]
    fn vocabulary_smaller_than_k_and_errors() {
        let vocab = build_vocabulary(&lists(&["a a a", "a a"]), 10).unwrap();
        assert_eq!(vocab.terms(), ["a"]);
        assert!(matches!(
            build_vocabulary(&[], 3),
            Err(Error::Vocabulary(_))
        ));
        assert!(matches!(
            build_vocabulary(&lists(&["a"]), 0),
            Err(Error::Vocabulary(_))
        ));
        assert!(Vocabulary::from_terms(vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn idf_values() {
        const LN_5: f64 = 1.609_437_912_434_100_3;
        const LN_2: f64 = std::f64::consts::LN_2;
        let docs = lists(&["rare x", "x", "x", "x"]);
        let vocab = Vocabulary::from_terms(vec!["rare".into(), "x".into()]).unwrap();
        let idf = fit_idf(&docs, &vocab).unwrap();
        assert_eq!(idf.df(), [1, 4]);
        assert!((idf.idf()[0] - LN_5).abs() < 1e-15);
        assert!((idf.idf()[1] - LN_2).abs() < 1e-15);

        let single = fit_idf(
            &lists(&["x"]),
            &Vocabulary::from_terms(vec!["x".into()]).unwrap(),
        )
        .unwrap();
        assert_eq!(single.idf()[0], LN_2);
    }

    #[test]
    fn idf_rejects_unseen_term() {
        let vocab = Vocabulary::from_terms(vec!["ghost".into()]).unwrap();
        assert!(matches!(
            fit_idf(&lists(&["a b"]), &vocab),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn tfidf_weights() {
        let docs = lists(&["t a b c d e f g", "x", "x", "x"]);
        let vocab = Vocabulary::from_terms(vec!["t".into()]).unwrap();
        let idf = fit_idf(&docs, &vocab).unwrap();
        let v = vectorize_tfidf(&docs[0], &vocab, &idf);
        assert_eq!(v.len(), 1);
        assert!((v.get(0) - 0.201_179_739_054_262_55).abs() < 1e-12);

        let docs = lists(&["t a b c d e f g", "t", "t", "t"]);
        let idf = fit_idf(&docs, &vocab).unwrap();
        let v = vectorize_tfidf(&docs[0], &vocab, &idf);
        assert!((v.get(0) - 0.086_643_397_569_993_16).abs() < 1e-12);

        assert!(vectorize_tfidf(&lists(&["zzz"])[0], &vocab, &idf).is_empty());
        assert!(vectorize_tfidf(&TokenList::default(), &vocab, &idf).is_empty());
    }

    #[test]
    fn binary_table_one_row() {
        let vocab = Vocabulary::from_terms(
            ["the", "movie", "of", "pair", "was", "a", "wont", "mind"]
                .map(String::from)
                .to_vec(),
        )
        .unwrap();
        let d1 = crate::preprocess::normalize(
            "the movie was a very indulging cinematic experience.",
            true,
        );
        let v = vectorize_binary(&d1, &vocab);
        let ones: Vec<&str> = v.indices().map(|i| vocab.terms()[i].as_str()).collect();
        assert_eq!(ones, ["the", "movie", "was", "a"]);
        assert!(v.iter().all(|(_, w)| w == 1.0));
        assert!(vectorize_binary(&TokenList::default(), &vocab).is_empty());
        assert!(vectorize_binary(&lists(&["zzz yyy"])[0], &vocab).is_empty());
    }

    #[test]
    fn vectorizer_l2_and_doc_roundtrip() {
        let docs = lists(&["a b b c", "a c", "b d"]);
        let vec = Vectorizer::fit(&docs, 3, Representation::Tfidf, true).unwrap();
        let v = vec.transform(&docs[0]);
        assert!((v.norm_squared() - 1.0).abs() < 1e-12);
        let doc = vec.to_doc();
        let back = Vectorizer::from_doc(doc, Representation::Tfidf, true).unwrap();
        assert_eq!(back, vec);
    }

    #[test]
    fn sparse_vector_validation() {
        assert!(SparseVector::new(vec![(1, 1.0), (1, 2.0)]).is_err());
        assert!(SparseVector::new(vec![(0, f64::NAN)]).is_err());
        let v = SparseVector::new(vec![(3, 2.0), (1, 1.0)]).unwrap();
        assert_eq!(v.entries(), [(1, 1.0), (3, 2.0)]);
        assert_eq!(v.get(2), 0.0);
        assert_eq!(v.dot(&[1.0, 1.0, 1.0, 0.5]), 2.0);
    }
}
