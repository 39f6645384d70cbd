//! Embedding Coherence Test.

use std::collections::HashSet;

use super::{check_dims, Metric, MetricError, MetricScore};
use crate::linalg::{cosine, mean};
use crate::specs::{ResolvedSpec, SetLabel};
use crate::stats::spearman;

/// Spearman correlation between the similarities of every attribute term to
/// the T1 centroid and to the T2 centroid. Higher means less bias.
pub fn ect_score(rs: &ResolvedSpec) -> Result<MetricScore, MetricError> {
    if !rs.is_explicit() {
        return Err(MetricError::RequiresExplicit(Metric::Ect));
    }
    let mut seen = HashSet::new();
    let attrs: Vec<&[f64]> = rs
        .a1v
        .iter()
        .chain(&rs.a2v)
        .filter(|t| seen.insert(t.term.as_str()))
        .map(|t| t.vector.as_slice())
        .collect();
    if attrs.len() < 3 {
        return Err(MetricError::TooFew {
            metric: Metric::Ect,
            what: "distinct attribute terms",
            needed: 3,
            found: attrs.len(),
        });
    }
    let too_few_targets = || MetricError::TooFew {
        metric: Metric::Ect,
        what: "terms per target set",
        needed: 1,
        found: 0,
    };
    let t1 = rs.vectors(SetLabel::T1);
    let t2 = rs.vectors(SetLabel::T2);
    let dim = attrs[0].len();
    for set in [&attrs, &t1, &t2] {
        check_dims(set, dim)?;
    }
    let c1 = mean(t1.iter().copied()).ok_or_else(too_few_targets)?;
    let c2 = mean(t2.iter().copied()).ok_or_else(too_few_targets)?;
    let sims1: Vec<f64> = attrs.iter().map(|a| cosine(a, &c1)).collect();
    let sims2: Vec<f64> = attrs.iter().map(|a| cosine(a, &c2)).collect();
    let mut score = MetricScore::new(Metric::Ect, spearman(&sims1, &sims2));
    score.aux = serde_json::json!({ "attributes": attrs.len() });
    Ok(score)
}
