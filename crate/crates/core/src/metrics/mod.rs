//! Bias scores over a [`ResolvedSpec`](crate::specs::ResolvedSpec).

mod bat;
mod ect;
mod km;
mod kmeans;
mod weat;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bat::{bat_counts, bat_score, BatCounts};
pub use ect::ect_score;
pub use km::{km_accuracy, KmOptions, DEFAULT_KM_RUNS};
pub use kmeans::{kmeans_pp, Clustering, DEFAULT_MAX_ITERS};
pub use weat::{
    association, is_significant, weat, weat_effect_size, weat_p_value, weat_p_value_sampled, weat_statistic, PValue,
    WeatResult, DEFAULT_ALPHA, DEFAULT_MAX_PERMUTATIONS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("{0} requires an explicit specification")]
    RequiresExplicit(Metric),
    #[error("{metric} needs at least {needed} {what}, found {found}")]
    TooFew {
        metric: Metric,
        what: &'static str,
        needed: usize,
        found: usize,
    },
    #[error("target sets differ in size ({0} vs {1})")]
    Unbalanced(usize, usize),
    #[error("kmeans: {points} points cannot form {k} clusters")]
    TooFewPoints { points: usize, k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    W,
    #[serde(rename = "ECT")]
    Ect,
    #[serde(rename = "BAT")]
    Bat,
    #[serde(rename = "KM")]
    Km,
    #[serde(rename = "STS")]
    Sts,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::W, Metric::Ect, Metric::Bat, Metric::Km, Metric::Sts];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::W => "W",
            Metric::Ect => "ECT",
            Metric::Bat => "BAT",
            Metric::Km => "KM",
            Metric::Sts => "STS",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

/// One metric value. `value` is `None` when the metric is undefined for the
/// input (zero deviation, constant similarity vector).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub metric: Metric,
    pub value: Option<f64>,
    pub significance: Option<f64>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub aux: serde_json::Value,
}

impl MetricScore {
    pub fn new(metric: Metric, value: Option<f64>) -> Self {
        Self {
            metric,
            value,
            significance: None,
            aux: serde_json::Value::Null,
        }
    }
}

pub(crate) fn check_dims(vectors: &[&[f64]], dim: usize) -> Result<(), MetricError> {
    match vectors.iter().find(|v| v.len() != dim) {
        Some(v) => Err(MetricError::DimensionMismatch(dim, v.len())),
        None => Ok(()),
    }
}
