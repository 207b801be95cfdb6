//! Text normalization, next-word negation and stopword filtering.

use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Prefix attached to the token following a negation cue.
pub const NEGATION_PREFIX: &str = "not_";

/// Tokens that trigger next-word negation. Contractions appear in their
/// apostrophe-stripped form since [`normalize`] deletes apostrophes.
pub const NEGATION_CUES: &[&str] = &[
    "not", "no", "never", "none", "nobody", "nothing", "nowhere", "neither", "nor", "cannot",
    "dont", "doesnt", "didnt", "wont", "wouldnt", "couldnt", "shouldnt", "isnt", "arent", "wasnt",
    "werent", "hasnt", "havent", "hadnt", "cant", "aint", "neednt", "mustnt", "shant",
];

const BUILTIN_STOPWORDS: &str = include_str!("../resources/stopwords.txt");

pub fn is_negation_cue(token: &str) -> bool {
    NEGATION_CUES.contains(&token)
}

/// Ordered tokens of one preprocessed document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenList(Vec<String>);

impl TokenList {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenList(tokens)
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// Space-joined form of the tokens.
    pub fn join(&self) -> String {
        self.0.join(" ")
    }
}

impl<S: Into<String>, const N: usize> From<[S; N]> for TokenList {
    fn from(tokens: [S; N]) -> Self {
        TokenList(tokens.into_iter().map(Into::into).collect())
    }
}

impl From<Vec<String>> for TokenList {
    fn from(tokens: Vec<String>) -> Self {
        TokenList(tokens)
    }
}

impl<'a> IntoIterator for &'a TokenList {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Which preprocessing stages run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PreprocessOptions {
    pub remove_stopwords: bool,
    pub keep_single_chars: bool,
    pub apply_nwn: bool,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            remove_stopwords: true,
            keep_single_chars: false,
            apply_nwn: true,
        }
    }
}

/// Lowercases, deletes apostrophes, turns every other non-alphanumeric
/// character into a separator and splits. Single-character tokens are dropped
/// unless `keep_single_chars` is set.
pub fn normalize(text: &str, keep_single_chars: bool) -> TokenList {
    let mut cleaned = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '\'' | '\u{2019}' => {}
            c if c.is_ascii_alphanumeric() => cleaned.push(c.to_ascii_lowercase()),
            _ => cleaned.push(' '),
        }
    }
    cleaned
        .split_ascii_whitespace()
        .filter(|t| keep_single_chars || t.len() > 1)
        .map(str::to_owned)
        .collect::<Vec<_>>()
        .into()
}

/// Next-word negation: each cue is dropped and the first following non-cue
/// token gets the `not_` prefix. A cue at the end of the document is
/// discarded.
pub fn apply_nwn(tokens: &TokenList) -> TokenList {
    let mut out = Vec::with_capacity(tokens.len());
    let mut pending = false;
    for token in tokens {
        if is_negation_cue(token) {
            pending = true;
        } else if pending {
            out.push(format!("{NEGATION_PREFIX}{token}"));
            pending = false;
        } else {
            out.push(token.clone());
        }
    }
    TokenList(out)
}

/// A stopword set. Negation cues are never members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords {
    words: HashSet<String>,
}

impl Stopwords {
    /// The shipped English list (`resources/stopwords.txt`).
    pub fn builtin() -> &'static Stopwords {
        static LIST: OnceLock<Stopwords> = OnceLock::new();
        LIST.get_or_init(|| Stopwords::parse(BUILTIN_STOPWORDS))
    }

    /// Parses one word per line; blank lines and `#` comments are ignored.
    pub fn parse(contents: &str) -> Stopwords {
        let words = contents
            .lines()
            .map(str::trim)
            .filter(|w| !w.is_empty() && !w.starts_with('#'))
            .map(str::to_lowercase)
            .filter(|w| !is_negation_cue(w))
            .collect();
        Stopwords { words }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Stopwords> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Stopwords::parse(&String::from_utf8_lossy(&bytes)))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    /// Members in ascending order.
    pub fn sorted_words(&self) -> Vec<String> {
        let mut words: Vec<String> = self.words.iter().cloned().collect();
        words.sort();
        words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Drops stopwords. Negated tokens always survive.
    pub fn remove_from(&self, tokens: &TokenList) -> TokenList {
        TokenList(
            tokens
                .iter()
                .filter(|t| t.starts_with(NEGATION_PREFIX) || !self.contains(t))
                .cloned()
                .collect(),
        )
    }
}

/// Filters `tokens` against the built-in stopword list.
pub fn remove_stopwords(tokens: &TokenList) -> TokenList {
    Stopwords::builtin().remove_from(tokens)
}

/// A configured preprocessing pipeline: normalize, then next-word negation,
/// then stopword removal, each stage subject to its option.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    options: PreprocessOptions,
    stopwords: Stopwords,
}

impl Preprocessor {
    pub fn new(options: PreprocessOptions) -> Self {
        Preprocessor {
            options,
            stopwords: Stopwords::builtin().clone(),
        }
    }

    pub fn with_stopwords(options: PreprocessOptions, stopwords: Stopwords) -> Self {
        Preprocessor { options, stopwords }
    }

    pub fn options(&self) -> PreprocessOptions {
        self.options
    }

    pub fn stopwords(&self) -> &Stopwords {
        &self.stopwords
    }

    pub fn process(&self, text: &str) -> TokenList {
        let mut tokens = normalize(text, self.options.keep_single_chars);
        if self.options.apply_nwn {
            tokens = apply_nwn(&tokens);
        }
        if self.options.remove_stopwords {
            tokens = self.stopwords.remove_from(&tokens);
        }
        tokens
    }
}

/// Runs the pipeline with the built-in stopword list.
pub fn preprocess_document(text: &str, options: PreprocessOptions) -> TokenList {
    let mut tokens = normalize(text, options.keep_single_chars);
    if options.apply_nwn {
        tokens = apply_nwn(&tokens);
    }
    if options.remove_stopwords {
        tokens = remove_stopwords(&tokens);
    }
    tokens
}
