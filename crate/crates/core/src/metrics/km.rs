//! Implicit bias as KMeans++ separability of the two target sets.

use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans_pp, DEFAULT_MAX_ITERS};
use super::{Metric, MetricError, MetricScore};
use crate::linalg::norm;
use crate::specs::{ResolvedSpec, SetLabel};

pub const DEFAULT_KM_RUNS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct KmOptions {
    pub runs: u32,
    pub max_iters: usize,
    /// Unit-normalize target vectors before clustering.
    pub normalize: bool,
}

impl Default for KmOptions {
    fn default() -> Self {
        Self {
            runs: DEFAULT_KM_RUNS,
            max_iters: DEFAULT_MAX_ITERS,
            normalize: false,
        }
    }
}

/// Mean two-cluster accuracy over `opts.runs` seeded runs; run `r` uses seed
/// `base_seed + r`. Each run scores the better of the two cluster-to-set
/// alignments, so accuracy never drops below 0.5 for balanced sets.
pub fn km_accuracy(rs: &ResolvedSpec, base_seed: u64, opts: &KmOptions) -> Result<MetricScore, MetricError> {
    let t1 = rs.vectors(SetLabel::T1);
    let t2 = rs.vectors(SetLabel::T2);
    let owned: Vec<Vec<f64>> = t1
        .iter()
        .chain(&t2)
        .map(|v| {
            let n = norm(v);
            if opts.normalize && n > 0.0 {
                v.iter().map(|x| x / n).collect()
            } else {
                v.to_vec()
            }
        })
        .collect();
    let points: Vec<&[f64]> = owned.iter().map(Vec::as_slice).collect();
    if points.len() < 2 || opts.runs == 0 {
        return Err(MetricError::TooFew {
            metric: Metric::Km,
            what: "target terms",
            needed: 2,
            found: points.len(),
        });
    }
    let labels: Vec<usize> = std::iter::repeat_n(0, t1.len())
        .chain(std::iter::repeat_n(1, t2.len()))
        .collect();
    let mut per_run = Vec::with_capacity(opts.runs as usize);
    for r in 0..opts.runs {
        let clustering = kmeans_pp(&points, 2, base_seed.wrapping_add(r as u64), opts.max_iters)?;
        let agree = clustering
            .assignments
            .iter()
            .zip(&labels)
            .filter(|(a, l)| a == l)
            .count();
        let best = agree.max(points.len() - agree);
        per_run.push(best as f64 / points.len() as f64);
    }
    let mean = per_run.iter().sum::<f64>() / per_run.len() as f64;
    let mut score = MetricScore::new(Metric::Km, Some(mean));
    score.aux = serde_json::json!({ "runs": per_run });
    Ok(score)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfectly_separated_targets() {
        let t1: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, 0.01 * i as f64, 0.0]).collect();
        let t2: Vec<Vec<f64>> = (0..6).map(|i| vec![-1.0, 0.0, 0.01 * i as f64]).collect();
        let rs = ResolvedSpec::from_vectors("km", t1, t2, vec![], vec![]);
        let s = km_accuracy(&rs, 0, &KmOptions::default()).unwrap();
        assert_eq!(s.value, Some(1.0));
        let runs = s.aux["runs"].as_array().unwrap();
        assert_eq!(runs.len(), 20);
        assert!(runs.iter().all(|r| r.as_f64() == Some(1.0)));
    }

    #[test]
    fn accuracy_never_below_half_for_balanced_sets() {
        let t1: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let t2: Vec<Vec<f64>> = (0..4).map(|i| vec![(3 - i) as f64, (i + 1) as f64]).collect();
        let rs = ResolvedSpec::from_vectors("h", t1, t2, vec![], vec![]);
        let s = km_accuracy(&rs, 9, &KmOptions::default()).unwrap();
        for r in s.aux["runs"].as_array().unwrap() {
            assert!(r.as_f64().unwrap() >= 0.5);
        }
    }

    #[test]
    fn normalize_option_changes_geometry() {
        // same directions, different lengths: separable only by norm
        let t1 = vec![vec![1.0, 1.0], vec![1.1, 0.9]];
        let t2 = vec![vec![10.0, 10.0], vec![11.0, 9.0]];
        let rs = ResolvedSpec::from_vectors("n", t1, t2, vec![], vec![]);
        let raw = km_accuracy(&rs, 0, &KmOptions::default()).unwrap();
        assert_eq!(raw.value, Some(1.0));
        let opts = KmOptions {
            normalize: true,
            ..KmOptions::default()
        };
        let unit = km_accuracy(&rs, 0, &opts).unwrap();
        assert!(unit.value.unwrap() < 1.0);
    }
}
