//! Naive reference implementations and fixture generators shared by the
//! integration tests. Nothing here calls into the metric code under test.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Vecs = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vecs(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vecs {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

/// Explicit fixture: equal-size target sets of `n`, attribute sets of the
/// given sizes.
pub struct Fixture {
    pub t1: Vecs,
    pub t2: Vecs,
    pub a1: Vecs,
    pub a2: Vecs,
}

pub fn random_fixture(seed: u64, n: usize, na1: usize, na2: usize, dim: usize) -> Fixture {
    let mut r = rng(seed);
    Fixture {
        t1: random_vecs(&mut r, n, dim),
        t2: random_vecs(&mut r, n, dim),
        a1: random_vecs(&mut r, na1, dim),
        a2: random_vecs(&mut r, na2, dim),
    }
}

pub fn naive_cos(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for i in 0..a.len() {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        ab / (aa.sqrt() * bb.sqrt())
    }
}

pub fn naive_assoc(t: &[f64], a1: &Vecs, a2: &Vecs) -> f64 {
    let mut m1 = 0.0;
    for a in a1 {
        m1 += naive_cos(t, a);
    }
    let mut m2 = 0.0;
    for a in a2 {
        m2 += naive_cos(t, a);
    }
    m1 / a1.len() as f64 - m2 / a2.len() as f64
}

pub fn naive_stat(x1: &Vecs, x2: &Vecs, a1: &Vecs, a2: &Vecs) -> f64 {
    let mut s = 0.0;
    for t in x1 {
        s += naive_assoc(t, a1, a2);
    }
    for t in x2 {
        s -= naive_assoc(t, a1, a2);
    }
    s
}

pub fn naive_effect(f: &Fixture) -> Option<f64> {
    let s1: Vec<f64> = f.t1.iter().map(|t| naive_assoc(t, &f.a1, &f.a2)).collect();
    let s2: Vec<f64> = f.t2.iter().map(|t| naive_assoc(t, &f.a1, &f.a2)).collect();
    let all: Vec<f64> = s1.iter().chain(&s2).copied().collect();
    let n = all.len() as f64;
    let mu = all.iter().sum::<f64>() / n;
    let sd = (all.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n).sqrt();
    if sd == 0.0 {
        return None;
    }
    let m1 = s1.iter().sum::<f64>() / s1.len() as f64;
    let m2 = s2.iter().sum::<f64>() / s2.len() as f64;
    Some((m1 - m2) / sd)
}

/// Exhaustive one-sided p over every equal-size split, by bitmask.
pub fn naive_p(f: &Fixture) -> f64 {
    let pool: Vecs = f.t1.iter().chain(&f.t2).cloned().collect();
    let n = f.t1.len();
    let observed = naive_stat(&f.t1, &f.t2, &f.a1, &f.a2);
    let mut splits = 0u64;
    let mut hits = 0u64;
    for mask in 0u32..(1 << pool.len()) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let mut x1 = Vec::new();
        let mut x2 = Vec::new();
        for (i, v) in pool.iter().enumerate() {
            if mask & (1 << i) != 0 {
                x1.push(v.clone());
            } else {
                x2.push(v.clone());
            }
        }
        splits += 1;
        if naive_stat(&x1, &x2, &f.a1, &f.a2) > observed {
            hits += 1;
        }
    }
    hits as f64 / splits as f64
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Quadruple loop over (t1, t2, a1, a2) with explicit query vectors.
pub fn naive_bat(f: &Fixture) -> (u64, u64) {
    let mut biased = 0;
    let mut total = 0;
    for t1 in &f.t1 {
        for t2 in &f.t2 {
            for (k, a1) in f.a1.iter().enumerate() {
                for (l, a2) in f.a2.iter().enumerate() {
                    let q1: Vec<f64> = (0..t1.len()).map(|d| t1[d] - t2[d] + a2[d]).collect();
                    let q2: Vec<f64> = (0..t1.len()).map(|d| a1[d] - t1[d] + t2[d]).collect();
                    for (m, other) in f.a2.iter().enumerate() {
                        if m == l {
                            continue;
                        }
                        total += 1;
                        if dist(&q1, a1) < dist(&q1, other) {
                            biased += 1;
                        }
                    }
                    for (m, other) in f.a1.iter().enumerate() {
                        if m == k {
                            continue;
                        }
                        total += 1;
                        if dist(&q2, a2) < dist(&q2, other) {
                            biased += 1;
                        }
                    }
                }
            }
        }
    }
    (biased, total)
}

/// Smallest within-cluster sum of squares over every 2-way assignment with
/// both clusters non-empty.
pub fn best_two_cluster_wcss(points: &Vecs) -> f64 {
    let n = points.len();
    let dim = points[0].len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) - 1 {
        let mut wcss = 0.0;
        for side in [true, false] {
            let members: Vec<&Vec<f64>> = (0..n)
                .filter(|&i| ((mask >> i) & 1 == 1) == side)
                .map(|i| &points[i])
                .collect();
            let mut c = vec![0.0; dim];
            for p in &members {
                for d in 0..dim {
                    c[d] += p[d] / members.len() as f64;
                }
            }
            for p in &members {
                wcss += p.iter().zip(&c).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
            }
        }
        best = best.min(wcss);
    }
    best
}

/// Random orthogonal matrix by Gram-Schmidt.
pub fn random_rotation(rng: &mut ChaCha8Rng, dim: usize) -> Vecs {
    let mut basis: Vecs = Vec::new();
    while basis.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        for b in &basis {
            let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for d in 0..dim {
                v[d] -= p * b[d];
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    basis
}

pub fn apply(m: &Vecs, v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}
