//! Seeded KMeans++ with Lloyd refinement.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_dims, MetricError};
use crate::linalg::squared_distance;

pub const DEFAULT_MAX_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Within-cluster sum of squared distances.
    pub inertia: f64,
    pub iterations: usize,
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    // strict < keeps the lower index on ties
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = squared_distance(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn init_plus_plus(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..points.len())].to_vec());
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p, &centers[0])).collect();
    while centers.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(rng),
            // every point coincides with a center
            Err(_) => rng.random_range(0..points.len()),
        };
        centers.push(points[next].to_vec());
        let newest = centers.last().expect("just pushed");
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, newest));
        }
    }
    centers
}

fn update_centers(points: &[&[f64]], assignments: &[usize], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignments) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(p.iter()) {
            *s += x;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        s.iter_mut().for_each(|v| *v /= n as f64);
    }
    sums
}

/// Move the point farthest from its center into each empty cluster.
fn repair_empty(points: &[&[f64]], assignments: &mut [usize], centers: &mut [Vec<f64>]) {
    let k = centers.len();
    loop {
        let mut counts = vec![0usize; k];
        assignments.iter().for_each(|&c| counts[c] += 1);
        let Some(empty) = counts.iter().position(|&n| n == 0) else {
            return;
        };
        let donor = (0..points.len())
            .filter(|&i| counts[assignments[i]] > 1)
            .map(|i| (i, squared_distance(points[i], &centers[assignments[i]])))
            .fold(None, |best: Option<(usize, f64)>, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            });
        let Some((i, _)) = donor else { return };
        assignments[i] = empty;
        centers[empty] = points[i].to_vec();
    }
}

/// Cluster `points` into `k` groups. Deterministic for a given seed.
pub fn kmeans_pp(points: &[&[f64]], k: usize, seed: u64, max_iters: usize) -> Result<Clustering, MetricError> {
    if k == 0 || points.len() < k {
        return Err(MetricError::TooFewPoints {
            points: points.len(),
            k,
        });
    }
    let dim = points[0].len();
    check_dims(points, dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = init_plus_plus(points, k, &mut rng);
    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        repair_empty(points, &mut assignments, &mut centers);
        centers = update_centers(points, &assignments, k, dim);
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
        if next == assignments {
            break;
        }
        assignments = next;
    }
    repair_empty(points, &mut assignments, &mut centers);
    centers = update_centers(points, &assignments, k, dim);
    let inertia = points
        .iter()
        .zip(&assignments)
        .map(|(p, &c)| squared_distance(p, &centers[c]))
        .sum();
    Ok(Clustering {
        assignments,
        centers,
        inertia,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn as_slices(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(Vec::as_slice).collect()
    }

    #[test]
    fn separates_two_blobs() {
        let pts: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                let off = if i < 5 { 0.0 } else { 100.0 };
                vec![off + (i % 5) as f64 * 0.1, off - (i % 3) as f64 * 0.1]
            })
            .collect();
        for seed in 0..20 {
            let c = kmeans_pp(&as_slices(&pts), 2, seed, DEFAULT_MAX_ITERS).unwrap();
            let first = c.assignments[0];
            assert!(c.assignments[..5].iter().all(|&a| a == first));
            assert!(c.assignments[5..].iter().all(|&a| a != first));
        }
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 5.0], vec![3.0, 3.0]];
        let c = kmeans_pp(&as_slices(&pts), 4, 3, DEFAULT_MAX_ITERS).unwrap();
        let mut seen = c.assignments.clone();
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2, 3]);
        assert_eq!(c.inertia, 0.0);
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let pts = vec![vec![1.0, 1.0]; 5];
        let c = kmeans_pp(&as_slices(&pts), 3, 0, DEFAULT_MAX_ITERS).unwrap();
        for cluster in 0..3 {
            assert!(c.assignments.contains(&cluster));
        }
    }

    #[test]
    fn too_few_points() {
        let pts = vec![vec![0.0]];
        assert!(matches!(
            kmeans_pp(&as_slices(&pts), 2, 0, 10),
            Err(MetricError::TooFewPoints { points: 1, k: 2 })
        ));
    }

    #[test]
    fn deterministic_for_seed() {
        let pts: Vec<Vec<f64>> = (0..30).map(|i| vec![(i * 7 % 11) as f64, (i * 3 % 5) as f64]).collect();
        let a = kmeans_pp(&as_slices(&pts), 3, 42, DEFAULT_MAX_ITERS).unwrap();
        let b = kmeans_pp(&as_slices(&pts), 3, 42, DEFAULT_MAX_ITERS).unwrap();
        assert_eq!(a, b);
    }
}
