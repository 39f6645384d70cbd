//! Word Embedding Association Test: statistic, effect size and one-sided
//! permutation p-value.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dims, Metric, MetricError};
use crate::linalg::cosine;
use crate::specs::{ResolvedSpec, SetLabel};

pub const DEFAULT_MAX_PERMUTATIONS: u64 = 100_000;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Mean cosine of `t` with `a1v` minus mean cosine with `a2v`.
pub fn association(t: &[f64], a1v: &[&[f64]], a2v: &[&[f64]]) -> Result<f64, MetricError> {
    if a1v.is_empty() || a2v.is_empty() {
        return Err(MetricError::TooFew {
            metric: Metric::W,
            what: "attribute terms per set",
            needed: 1,
            found: 0,
        });
    }
    check_dims(a1v, t.len())?;
    check_dims(a2v, t.len())?;
    let mean_cos = |set: &[&[f64]]| set.iter().map(|a| cosine(t, a)).sum::<f64>() / set.len() as f64;
    Ok(mean_cos(a1v) - mean_cos(a2v))
}

/// Per-target associations for T1 and T2.
fn target_associations(rs: &ResolvedSpec) -> Result<(Vec<f64>, Vec<f64>), MetricError> {
    if !rs.is_explicit() {
        return Err(MetricError::RequiresExplicit(Metric::W));
    }
    let a1 = rs.vectors(SetLabel::A1);
    let a2 = rs.vectors(SetLabel::A2);
    let assoc = |label| {
        rs.vectors(label)
            .into_iter()
            .map(|t| association(t, &a1, &a2))
            .collect::<Result<Vec<f64>, _>>()
    };
    let s1 = assoc(SetLabel::T1)?;
    let s2 = assoc(SetLabel::T2)?;
    if s1.is_empty() || s2.is_empty() {
        return Err(MetricError::TooFew {
            metric: Metric::W,
            what: "terms per target set",
            needed: 1,
            found: 0,
        });
    }
    Ok((s1, s2))
}

pub fn weat_statistic(rs: &ResolvedSpec) -> Result<f64, MetricError> {
    let (s1, s2) = target_associations(rs)?;
    Ok(s1.iter().sum::<f64>() - s2.iter().sum::<f64>())
}

fn effect_size_from(s1: &[f64], s2: &[f64]) -> Option<f64> {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    // magnitude order, ties negative first
    let mut all: Vec<f64> = s1.iter().chain(s2).copied().collect();
    all.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    let mu = mean(&all);
    let var = all.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / all.len() as f64;
    let sd = var.sqrt();
    if sd == 0.0 || !sd.is_finite() {
        return None;
    }
    Some((mean(s1) - mean(s2)) / sd)
}

/// Difference of mean target associations over their population standard
/// deviation; `None` when every target has the same association.
pub fn weat_effect_size(rs: &ResolvedSpec) -> Result<Option<f64>, MetricError> {
    let (s1, s2) = target_associations(rs)?;
    Ok(effect_size_from(&s1, &s2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValue {
    pub p: f64,
    /// True when every equal-size split was enumerated.
    pub exact: bool,
    pub permutations_used: u64,
}

/// `C(n, k)`, saturating at `u64::MAX`.
fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Sum of `assoc` over `idx`, visiting indices in ascending order so equal
/// subsets always produce bit-identical sums.
fn subset_sum(assoc: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| assoc[i]).sum()
}

/// Advance `c` (ascending, values < n) to the next k-combination in
/// lexicographic order. Returns false after the last one.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

struct Splits {
    assoc: Vec<f64>,
    n: usize,
    observed: f64,
    slack: f64,
}

impl Splits {
    fn new(s1: &[f64], s2: &[f64]) -> Result<Self, MetricError> {
        let n = s1.len();
        if n != s2.len() {
            return Err(MetricError::Unbalanced(n, s2.len()));
        }
        let assoc: Vec<f64> = s1.iter().chain(s2).copied().collect();
        let first: Vec<usize> = (0..n).collect();
        let observed = subset_sum(&assoc, &first);
        // s(X1, X2) = 2·Σ_{X1} − Σ_all is monotone in Σ_{X1}. Differences at
        // the level of summation rounding are treated as ties.
        let slack = 1e-12 * assoc.iter().map(|a| a.abs()).sum::<f64>();
        Ok(Self {
            assoc,
            n,
            observed,
            slack,
        })
    }

    fn exceeds(&self, idx: &[usize]) -> bool {
        subset_sum(&self.assoc, idx) > self.observed + self.slack
    }

    fn exhaustive(&self) -> PValue {
        let total = self.assoc.len();
        let splits = binomial(total as u64, self.n as u64);
        let mut combo: Vec<usize> = (0..self.n).collect();
        let mut hits = 0u64;
        loop {
            if self.exceeds(&combo) {
                hits += 1;
            }
            if !next_combination(&mut combo, total) {
                break;
            }
        }
        PValue {
            p: hits as f64 / splits as f64,
            exact: true,
            permutations_used: splits,
        }
    }

    fn sampled(&self, samples: u64, seed: u64) -> PValue {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hits = 0u64;
        let mut idx = Vec::with_capacity(self.n);
        for _ in 0..samples {
            idx.clear();
            idx.extend(index::sample(&mut rng, self.assoc.len(), self.n).iter());
            idx.sort_unstable();
            if self.exceeds(&idx) {
                hits += 1;
            }
        }
        PValue {
            p: hits as f64 / samples.max(1) as f64,
            exact: false,
            permutations_used: samples,
        }
    }
}

fn p_value_from(s1: &[f64], s2: &[f64], max_permutations: u64, seed: u64) -> Result<PValue, MetricError> {
    let splits = Splits::new(s1, s2)?;
    if binomial(2 * splits.n as u64, splits.n as u64) <= max_permutations {
        Ok(splits.exhaustive())
    } else {
        Ok(splits.sampled(max_permutations, seed))
    }
}

/// One-sided permutation test over equal-size re-splits of T1 ∪ T2.
/// Enumerates every split when there are at most `max_permutations` of them,
/// otherwise samples `max_permutations` splits with a seeded generator.
pub fn weat_p_value(rs: &ResolvedSpec, max_permutations: u64, seed: u64) -> Result<PValue, MetricError> {
    let (s1, s2) = target_associations(rs)?;
    p_value_from(&s1, &s2, max_permutations, seed)
}

/// Monte Carlo p-value from `samples` random splits, regardless of how many
/// splits exist.
pub fn weat_p_value_sampled(rs: &ResolvedSpec, samples: u64, seed: u64) -> Result<PValue, MetricError> {
    let (s1, s2) = target_associations(rs)?;
    Ok(Splits::new(&s1, &s2)?.sampled(samples, seed))
}

pub fn is_significant(p: f64, alpha: f64) -> bool {
    p < alpha
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatResult {
    pub statistic: f64,
    pub effect_size: Option<f64>,
    pub p_value: f64,
    pub permutations_used: u64,
    pub exact: bool,
}

impl WeatResult {
    pub fn is_significant(&self, alpha: f64) -> bool {
        is_significant(self.p_value, alpha)
    }
}

/// Statistic, effect size and p-value in one pass over the associations.
pub fn weat(rs: &ResolvedSpec, max_permutations: u64, seed: u64) -> Result<WeatResult, MetricError> {
    let (s1, s2) = target_associations(rs)?;
    let p = p_value_from(&s1, &s2, max_permutations, seed)?;
    Ok(WeatResult {
        statistic: s1.iter().sum::<f64>() - s2.iter().sum::<f64>(),
        effect_size: effect_size_from(&s1, &s2),
        p_value: p.p,
        permutations_used: p.permutations_used,
        exact: p.exact,
    })
}
