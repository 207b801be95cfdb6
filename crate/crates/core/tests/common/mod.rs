//! Generators and independent reference implementations shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nwn_sentiment::corpus::{Corpus, Document};

const POSITIVE: &[&str] = &[
    "good",
    "great",
    "excellent",
    "wonderful",
    "superb",
    "brilliant",
    "enjoyable",
    "moving",
    "charming",
    "delightful",
    "fun",
    "beautiful",
];
const NEGATIVE: &[&str] = &[
    "bad", "awful", "terrible", "boring", "dull", "poor", "weak", "horrible", "clumsy", "tedious",
    "bland", "messy",
];
const NEUTRAL: &[&str] = &[
    "movie",
    "film",
    "plot",
    "actor",
    "story",
    "scene",
    "director",
    "music",
    "ending",
    "camera",
    "script",
    "dialogue",
    "character",
    "cast",
    "score",
    "pacing",
    "setting",
    "theme",
    "studio",
    "sequel",
];

/// Review-like two-class corpus. Negated polar words ("not good") carry the
/// opposite sentiment, so negation-aware features help.
pub fn synthetic_reviews(per_class: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(per_class * 2);
    for i in 0..per_class * 2 {
        let positive = i % 2 == 0;
        let len = rng.gen_range(8..24);
        let mut words: Vec<String> = Vec::with_capacity(len + 4);
        for _ in 0..len {
            let roll: f64 = rng.gen();
            let word = if roll < 0.55 {
                NEUTRAL.choose(&mut rng).unwrap().to_string()
            } else {
                // Polar word, sometimes negated, sometimes noise.
                let agree = rng.gen_bool(0.8);
                let negate = rng.gen_bool(0.3);
                let want_positive = positive == agree;
                let lexicon = if want_positive != negate {
                    POSITIVE
                } else {
                    NEGATIVE
                };
                let w = lexicon.choose(&mut rng).unwrap();
                if negate {
                    format!("not {w}")
                } else {
                    w.to_string()
                }
            };
            words.push(word);
        }
        let label = if positive { "pos" } else { "neg" };
        docs.push(Document::new(label, words.join(" ") + "."));
    }
    Corpus::new(docs).unwrap()
}

/// Vocabulary selection by brute force: every term with its count, ordered
/// by count descending then term ascending, first `k` kept.
pub fn oracle_vocabulary(docs: &[Vec<String>], k: usize) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        for t in doc {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked
        .into_iter()
        .take(k)
        .map(|(t, _)| t.to_string())
        .collect()
}

/// Dense TF-IDF rows computed with exact rationals for TF and N/df.
pub fn oracle_tfidf(
    train: &[Vec<String>],
    vocab: &[String],
    docs: &[Vec<String>],
) -> Vec<Vec<f64>> {
    let n = BigInt::from(train.len());
    let idf: Vec<f64> = vocab
        .iter()
        .map(|term| {
            let df = train.iter().filter(|d| d.contains(term)).count();
            let ratio = BigRational::one() + BigRational::new(n.clone(), BigInt::from(df));
            ratio.to_f64().unwrap().ln()
        })
        .collect();
    docs.iter()
        .map(|doc| {
            vocab
                .iter()
                .zip(&idf)
                .map(|(term, &idf)| {
                    let count = doc.iter().filter(|t| *t == term).count();
                    if count == 0 {
                        return 0.0;
                    }
                    let tf = BigRational::new(BigInt::from(count), BigInt::from(doc.len()));
                    tf.to_f64().unwrap() * idf
                })
                .collect()
        })
        .collect()
}

/// Exact multinomial naive Bayes posterior ratio P(1|x) / P(0|x) with
/// rational smoothing `alpha`. `counts` holds one row of integer feature
/// counts per training document.
pub fn oracle_nb_ratio(
    counts: &[Vec<u32>],
    labels: &[usize],
    alpha: &BigRational,
    probe: &[u32],
) -> BigRational {
    let k = probe.len();
    let score: Vec<BigRational> = (0..2)
        .map(|class| {
            let rows: Vec<&Vec<u32>> = counts
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == class)
                .map(|(r, _)| r)
                .collect();
            let prior = BigRational::new(BigInt::from(rows.len()), BigInt::from(counts.len()));
            let total: u32 = rows.iter().map(|r| r.iter().sum::<u32>()).sum();
            let denom = alpha * BigRational::from_integer(BigInt::from(k))
                + BigRational::from_integer(BigInt::from(total));
            let mut s = prior;
            for f in 0..k {
                let mass: u32 = rows.iter().map(|r| r[f]).sum();
                let theta = (alpha + BigRational::from_integer(BigInt::from(mass))) / &denom;
                for _ in 0..probe[f] {
                    s *= &theta;
                }
            }
            s
        })
        .collect();
    &score[1] / &score[0]
}

/// Random labeled corpus with every class holding at least `min_per_class`
/// documents. Texts are unique per document.
pub fn random_corpus(rng: &mut ChaCha8Rng, min_per_class: usize) -> Corpus {
    let n_labels = rng.gen_range(2..=4);
    let mut docs = Vec::new();
    for l in 0..n_labels {
        let n = rng.gen_range(min_per_class..min_per_class + 30);
        for i in 0..n {
            docs.push(Document::new(format!("c{l}"), format!("doc {l} {i}")));
        }
    }
    docs.shuffle(rng);
    Corpus::new(docs).unwrap()
}

pub fn distinct(items: &[usize]) -> bool {
    items.iter().collect::<BTreeSet<_>>().len() == items.len()
}
