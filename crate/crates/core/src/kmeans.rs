//! Seeded k-means (plus-plus initialization, Lloyd refinement) used
//! to place rule centers on the training inputs.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

const MAX_LLOYD_ITERS: usize = 100;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Runs k-means with `k` clusters over `points` (each a row of equal
/// length). Deterministic given the RNG state. `k <= points.len()`
/// must hold (caller-checked).
pub fn kmeans(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    assert!(k >= 1 && k <= points.len());
    let mut centers = plus_plus_init(points, k, rng);

    let mut assignment = vec![usize::MAX; points.len()];
    for _ in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(p, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[assignment[i]] += 1;
            for (s, &v) in sums[assignment[i]].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            // empty clusters keep their previous center
            if counts[c] > 0 {
                for (dst, s) in centers[c].iter_mut().zip(&sums[c]) {
                    *dst = s / counts[c] as f64;
                }
            }
        }
    }
    centers
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..points.len())].clone());

    let mut weights = vec![0.0f64; points.len()];
    while centers.len() < k {
        let mut total = 0.0;
        for (w, p) in weights.iter_mut().zip(points) {
            let mut min = f64::INFINITY;
            for c in &centers {
                min = min.min(sq_dist(p, c));
            }
            *w = min;
            total += min;
        }
        if total <= 0.0 || !total.is_finite() {
            // all remaining points coincide with a chosen center;
            // duplicate deterministically
            centers.push(centers[centers.len() - 1].clone());
            continue;
        }
        let sampler = WeightedIndex::new(&weights).expect("non-negative finite weights");
        centers.push(points[sampler.sample(rng)].clone());
    }
    centers
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream_rng;

    #[test]
    fn single_cluster_is_column_mean() {
        let pts = vec![vec![1.0, 2.0], vec![3.0, 6.0], vec![5.0, 4.0]];
        let mut rng = stream_rng(1, "init");
        let centers = kmeans(&pts, 1, &mut rng);
        assert!((centers[0][0] - 3.0).abs() < 1e-12);
        assert!((centers[0][1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn separates_obvious_clusters() {
        let mut pts = Vec::new();
        for i in 0..10 {
            pts.push(vec![0.0 + 0.01 * i as f64]);
            pts.push(vec![10.0 + 0.01 * i as f64]);
        }
        let mut rng = stream_rng(3, "init");
        let mut centers = kmeans(&pts, 2, &mut rng);
        centers.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert!((centers[0][0] - 0.045).abs() < 1e-9);
        assert!((centers[1][0] - 10.045).abs() < 1e-9);
    }

    #[test]
    fn deterministic_per_seed() {
        let pts: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 7) as f64, (i % 3) as f64]).collect();
        let a = kmeans(&pts, 4, &mut stream_rng(9, "init"));
        let b = kmeans(&pts, 4, &mut stream_rng(9, "init"));
        assert_eq!(a, b);
    }

    #[test]
    fn duplicate_points_do_not_panic() {
        let pts = vec![vec![1.0, 1.0]; 5];
        let centers = kmeans(&pts, 3, &mut stream_rng(2, "init"));
        assert_eq!(centers.len(), 3);
        for c in centers {
            assert_eq!(c, vec![1.0, 1.0]);
        }
    }
}
