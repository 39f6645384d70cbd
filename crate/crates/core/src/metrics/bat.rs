//! Bias Analogy Test.
//!
//! For every (t1, t2, a1, a2) the queries `q1 = t1 − t2 + a2` and
//! `q2 = a1 − t1 + t2` are formed. A comparison is biased when `a1` is
//! strictly closer to `q1` than an opposing `a2' ∈ A2 \ {a2}`, or `a2` is
//! strictly closer to `q2` than an opposing `a1' ∈ A1 \ {a1}`. Only the two
//! candidate distances decide a comparison, so no vocabulary-wide ranking is
//! needed.
//!
//! Distances are compared through the expansion
//! `|u + v|² − |u + w|² = |v|² − |w|² + 2u·(v − w)` with `u = t1 − t2`, which
//! reduces each comparison to precomputed dot products. Comparisons whose
//! margin falls inside the rounding envelope are recomputed directly from the
//! query vectors.

use serde::{Deserialize, Serialize};

use super::{check_dims, Metric, MetricError, MetricScore};
use crate::linalg::{dot, euclidean, norm, squared_distance};
use crate::specs::{ResolvedSpec, SetLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatCounts {
    pub biased: u64,
    pub total: u64,
}

impl BatCounts {
    pub fn fraction(&self) -> f64 {
        self.biased as f64 / self.total as f64
    }
}

const MARGIN_REL_TOL: f64 = 1e-9;

/// Exact distance comparison `d(q, closer) < d(q, other)` for
/// `q = base + sign·(t1 − t2)`.
fn direct_closer(t1: &[f64], t2: &[f64], base: &[f64], sign: f64, closer: &[f64], other: &[f64]) -> bool {
    let q: Vec<f64> = base
        .iter()
        .zip(t1.iter().zip(t2))
        .map(|(b, (x, y))| b + sign * (x - y))
        .collect();
    euclidean(&q, closer) < euclidean(&q, other)
}

pub fn bat_counts(rs: &ResolvedSpec) -> Result<BatCounts, MetricError> {
    if !rs.is_explicit() {
        return Err(MetricError::RequiresExplicit(Metric::Bat));
    }
    let t1 = rs.vectors(SetLabel::T1);
    let t2 = rs.vectors(SetLabel::T2);
    let a1 = rs.vectors(SetLabel::A1);
    let a2 = rs.vectors(SetLabel::A2);
    for (set, n) in [(&a1, a1.len()), (&a2, a2.len())] {
        if n < 2 {
            return Err(MetricError::TooFew {
                metric: Metric::Bat,
                what: "terms per attribute set",
                needed: 2,
                found: set.len(),
            });
        }
    }
    if t1.is_empty() || t2.is_empty() {
        return Err(MetricError::TooFew {
            metric: Metric::Bat,
            what: "terms per target set",
            needed: 1,
            found: 0,
        });
    }
    let dim = t1[0].len();
    for set in [&t1, &t2, &a1, &a2] {
        check_dims(set, dim)?;
    }

    // dot products of every target with every attribute
    let dots = |ts: &[&[f64]], attrs: &[&[f64]]| -> Vec<Vec<f64>> {
        ts.iter().map(|t| attrs.iter().map(|a| dot(t, a)).collect()).collect()
    };
    let t1a1 = dots(&t1, &a1);
    let t1a2 = dots(&t1, &a2);
    let t2a1 = dots(&t2, &a1);
    let t2a2 = dots(&t2, &a2);
    let sq = |xs: &[&[f64]], ys: &[&[f64]]| -> Vec<Vec<f64>> {
        xs.iter()
            .map(|x| ys.iter().map(|y| squared_distance(x, y)).collect())
            .collect()
    };
    let d_a2a1 = sq(&a2, &a1);
    let d_a2a2 = sq(&a2, &a2);
    let d_a1a1 = sq(&a1, &a1);
    let max_attr = a1.iter().chain(&a2).map(|a| norm(a)).fold(0.0, f64::max);

    let mut biased = 0u64;
    let mut total = 0u64;
    for (i, ti) in t1.iter().enumerate() {
        for (j, tj) in t2.iter().enumerate() {
            let u_norm = t1[i]
                .iter()
                .zip(tj.iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            let scale = (u_norm + 2.0 * max_attr).powi(2);
            let tol = MARGIN_REL_TOL * scale;
            // u·a for the attributes
            let ua1: Vec<f64> = (0..a1.len()).map(|k| t1a1[i][k] - t2a1[j][k]).collect();
            let ua2: Vec<f64> = (0..a2.len()).map(|l| t1a2[i][l] - t2a2[j][l]).collect();
            for l in 0..a2.len() {
                for k in 0..a1.len() {
                    // q1 = u + a2[l]: is a1[k] closer than a2[m]?
                    for m in (0..a2.len()).filter(|&m| m != l) {
                        let margin = d_a2a1[l][k] - d_a2a2[l][m] + 2.0 * (ua2[m] - ua1[k]);
                        let hit = if margin.abs() <= tol {
                            direct_closer(ti, tj, a2[l], 1.0, a1[k], a2[m])
                        } else {
                            margin < 0.0
                        };
                        biased += hit as u64;
                        total += 1;
                    }
                    // q2 = a1[k] − u: is a2[l] closer than a1[m]?
                    for m in (0..a1.len()).filter(|&m| m != k) {
                        let margin = d_a2a1[l][k] - d_a1a1[k][m] - 2.0 * (ua1[m] - ua2[l]);
                        let hit = if margin.abs() <= tol {
                            direct_closer(ti, tj, a1[k], -1.0, a2[l], a1[m])
                        } else {
                            margin < 0.0
                        };
                        biased += hit as u64;
                        total += 1;
                    }
                }
            }
        }
    }
    Ok(BatCounts { biased, total })
}

/// Fraction of biased analogy comparisons. Ties count as unbiased.
pub fn bat_score(rs: &ResolvedSpec) -> Result<MetricScore, MetricError> {
    let counts = bat_counts(rs)?;
    let mut score = MetricScore::new(Metric::Bat, Some(counts.fraction()));
    score.aux = serde_json::to_value(counts).expect("counts serialize");
    Ok(score)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_attributes_are_all_ties() {
        let a = vec![vec![0.3, -0.2]; 3];
        let rs = ResolvedSpec::from_vectors(
            "ties",
            vec![vec![1.0, 0.0], vec![0.5, 0.5]],
            vec![vec![0.0, 1.0], vec![-0.2, 0.4]],
            a.clone(),
            a,
        );
        let c = bat_counts(&rs).unwrap();
        assert_eq!(c.biased, 0);
        // |T1||T2||A1||A2| · ((|A2|−1) + (|A1|−1)) = 2·2·3·3·4
        assert_eq!(c.total, 144);
        assert_eq!(bat_score(&rs).unwrap().value, Some(0.0));
    }

    #[test]
    fn stereotypical_layout_is_fully_biased() {
        // T1 and A1 share a direction, T2 and A2 the opposite one
        let rs = ResolvedSpec::from_vectors(
            "b",
            vec![vec![1.0, 0.0]],
            vec![vec![-1.0, 0.0]],
            vec![vec![1.0, 0.1], vec![1.0, -0.1]],
            vec![vec![-1.0, 0.1], vec![-1.0, -0.1]],
        );
        let c = bat_counts(&rs).unwrap();
        assert_eq!(c.total, 8);
        assert_eq!(c.biased, 8);
    }

    #[test]
    fn attribute_set_too_small() {
        let rs = ResolvedSpec::from_vectors(
            "s",
            vec![vec![1.0, 0.0]],
            vec![vec![0.0, 1.0]],
            vec![vec![1.0, 0.0]],
            vec![vec![0.0, 1.0], vec![1.0, 1.0]],
        );
        assert!(matches!(
            bat_counts(&rs),
            Err(MetricError::TooFew {
                needed: 2,
                found: 1,
                ..
            })
        ));
    }
}
