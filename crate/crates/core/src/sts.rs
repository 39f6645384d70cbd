//! Semantic quality of a space: cosine of averaged word vectors against gold
//! sentence-similarity ratings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{EmbeddingSpace, NormalizationPolicy};
use crate::linalg::cosine;
use crate::stats::pearson;

#[derive(Debug, Error)]
pub enum StsError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("need at least 3 sentence pairs, found {0}")]
    TooFewPairs(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StsPair {
    pub sent_a: String,
    pub sent_b: String,
    /// Gold similarity on the 0–5 scale.
    pub gold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StsResult {
    /// `None` when the predictions are constant.
    pub pearson: Option<f64>,
    pub n_pairs: usize,
    /// Pairs where at least one sentence had no in-vocabulary token.
    pub n_empty: usize,
}

/// Parse `gold<TAB>sentence_a<TAB>sentence_b` lines; `#` lines and blank
/// lines are skipped.
pub fn parse_pairs(src: &str) -> Result<Vec<StsPair>, StsError> {
    let mut pairs = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: String| StsError::Parse { line: i + 1, reason };
        let mut fields = line.splitn(3, '\t');
        let (Some(gold), Some(a), Some(b)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(err("expected three tab-separated fields".into()));
        };
        let gold: f64 = gold
            .trim()
            .parse()
            .map_err(|_| err(format!("gold score {gold:?} is not a number")))?;
        if !(0.0..=5.0).contains(&gold) {
            return Err(err(format!("gold score {gold} outside [0, 5]")));
        }
        pairs.push(StsPair {
            sent_a: a.to_owned(),
            sent_b: b.to_owned(),
            gold,
        });
    }
    Ok(pairs)
}

pub fn load_pairs(path: &Path) -> Result<Vec<StsPair>, StsError> {
    let src = std::fs::read_to_string(path).map_err(|source| StsError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_pairs(&src)
}

/// Mean vector of the in-vocabulary tokens; the zero vector when none
/// resolve.
pub fn sentence_embed(sentence: &str, space: &EmbeddingSpace, policy: &NormalizationPolicy) -> Vec<f64> {
    let normalized = policy.normalize(sentence);
    let mut acc = vec![0.0; space.dim()];
    let mut n = 0usize;
    for token in normalized.split_whitespace() {
        let row = space.get(token).or_else(|| space.get(&policy.normalize(token)));
        if let Some(row) = row {
            acc.iter_mut().zip(row).for_each(|(a, &v)| *a += v as f64);
            n += 1;
        }
    }
    if n > 0 {
        acc.iter_mut().for_each(|a| *a /= n as f64);
    }
    acc
}

/// Pearson correlation of `predictions` with the pairs' gold scores.
pub fn score_predictions(predictions: &[f64], pairs: &[StsPair]) -> Option<f64> {
    let gold: Vec<f64> = pairs.iter().map(|p| p.gold).collect();
    pearson(predictions, &gold)
}

pub fn sts_pearson(
    pairs: &[StsPair],
    space: &EmbeddingSpace,
    policy: &NormalizationPolicy,
) -> Result<StsResult, StsError> {
    if pairs.len() < 3 {
        return Err(StsError::TooFewPairs(pairs.len()));
    }
    let mut n_empty = 0;
    let predictions: Vec<f64> = pairs
        .iter()
        .map(|p| {
            let a = sentence_embed(&p.sent_a, space, policy);
            let b = sentence_embed(&p.sent_b, space, policy);
            let zero = |v: &[f64]| v.iter().all(|&x| x == 0.0);
            if zero(&a) || zero(&b) {
                n_empty += 1;
            }
            cosine(&a, &b)
        })
        .collect();
    Ok(StsResult {
        pearson: score_predictions(&predictions, pairs),
        n_pairs: pairs.len(),
        n_empty,
    })
}
