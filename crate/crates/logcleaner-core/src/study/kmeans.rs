//! Seeded k-means with k-means++ initialization.
//!
//! Used by the clustering-based reduction to split per-event score triples
//! into a relevant and an irrelevant cluster. Determinism matters more than
//! speed here: a fixed seed must yield bit-identical centroids, assignments,
//! and inertia, so all sampling flows through one [`ChaCha8Rng`] and every
//! tie-break is by lowest index.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Number of independent restarts; the lowest-inertia fit wins.
pub const DEFAULT_RESTARTS: usize = 50;

/// Iteration cap per restart; Lloyd's loop usually converges far earlier.
pub const DEFAULT_MAX_ITERS: usize = 100;

/// Result of one k-means fit.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    /// `k` centroids, each with the input dimensionality.
    pub centroids: Vec<Vec<f64>>,
    /// Cluster index per input point (nearest centroid, lowest index on ties).
    pub assignment: Vec<usize>,
    /// Sum of squared distances from each point to its assigned centroid.
    pub inertia: f64,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: first centroid uniform, subsequent centroids sampled
/// proportionally to squared distance from the nearest chosen centroid.
/// When every remaining point coincides with a centroid the draw falls back
/// to uniform.
fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)].clone());
    let mut best_d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = best_d2.iter().sum();
        let idx = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in best_d2.iter().enumerate() {
                acc += w;
                if target < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points[idx].clone();
        for (i, p) in points.iter().enumerate() {
            let d = dist2(p, &c);
            if d < best_d2[i] {
                best_d2[i] = d;
            }
        }
        centroids.push(c);
    }
    centroids
}

/// Nearest-centroid assignment; ties keep the lowest centroid index.
fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let assignment = points
        .iter()
        .map(|p| {
            let mut best = 0usize;
            let mut best_d = dist2(p, &centroids[0]);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let d = dist2(p, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            inertia += best_d;
            best
        })
        .collect();
    (assignment, inertia)
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iters: usize) -> KMeansFit {
    let dim = points[0].len();
    let k = centroids.len();
    let (mut assignment, mut inertia) = assign(points, &centroids);
    for _ in 0..max_iters {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            // An empty cluster keeps its previous centroid; it may capture
            // points again on a later iteration.
            if counts[c] > 0 {
                for s in sums[c].iter_mut() {
                    *s /= counts[c] as f64;
                }
                centroids[c] = std::mem::take(&mut sums[c]);
            }
        }
        let (next, next_inertia) = assign(points, &centroids);
        let converged = next == assignment;
        assignment = next;
        inertia = next_inertia;
        if converged {
            break;
        }
    }
    KMeansFit {
        centroids,
        assignment,
        inertia,
    }
}

/// Runs `restarts` independent k-means++ fits and returns the one with the
/// strictly lowest inertia (earlier restart wins ties). Fails when `k` is 0
/// or exceeds the number of points, or when point dimensions disagree.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    restarts: usize,
    max_iters: usize,
    seed: u64,
) -> Result<KMeansFit> {
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            message: "k-means needs at least one cluster".into(),
        });
    }
    if points.len() < k {
        return Err(Error::InvalidParameter {
            name: "k",
            message: format!("cannot place {k} clusters over {} points", points.len()),
        });
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidParameter {
            name: "points",
            message: "all points must share one dimensionality".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..restarts.max(1) {
        let init = plus_plus_init(points, k, &mut rng);
        let fit = lloyd(points, init, max_iters);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart runs"))
}

/// [`kmeans`] with the default restart and iteration budgets.
pub fn kmeans_default(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansFit> {
    kmeans(points, k, DEFAULT_RESTARTS, DEFAULT_MAX_ITERS, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_pair_square_reaches_optimal_inertia() {
        // Pairs at x=0 and x=10; optimum is one centroid per pair with
        // within-pair spread 2 * 0.5^2 each, 1.0 total, exact in binary.
        let points = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![10.0, 0.0],
            vec![10.0, 1.0],
        ];
        let fit = kmeans_default(&points, 2, 7).unwrap();
        assert_eq!(fit.inertia, 1.0);
        assert_eq!(fit.assignment[0], fit.assignment[1]);
        assert_eq!(fit.assignment[2], fit.assignment[3]);
        assert_ne!(fit.assignment[0], fit.assignment[2]);
        let mut ys: Vec<f64> = fit.centroids.iter().map(|c| c[1]).collect();
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(ys, vec![0.5, 0.5]);
    }

    #[test]
    fn separated_blobs_split_cleanly() {
        let mut points = Vec::new();
        for i in 0..8 {
            points.push(vec![0.9, 0.9, 0.9 + 0.001 * i as f64]);
        }
        for i in 0..8 {
            points.push(vec![0.0, 0.0, 0.001 * i as f64]);
        }
        let fit = kmeans_default(&points, 2, 11).unwrap();
        let high = fit.assignment[0];
        assert!(fit.assignment[..8].iter().all(|&a| a == high));
        assert!(fit.assignment[8..].iter().all(|&a| a != high));
        // The high blob's centroid keeps a higher final component.
        let low = fit.assignment[8];
        assert!(fit.centroids[high][2] > fit.centroids[low][2]);
    }

    #[test]
    fn fixed_seed_is_bit_reproducible() {
        let points: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i * 37 % 11) as f64, (i * 13 % 7) as f64])
            .collect();
        let a = kmeans_default(&points, 3, 123).unwrap();
        let b = kmeans_default(&points, 3, 123).unwrap();
        assert_eq!(a, b);
        let c = kmeans_default(&points, 3, 124).unwrap();
        assert_eq!(a.assignment.len(), c.assignment.len());
    }

    #[test]
    fn k_equals_n_zeroes_inertia() {
        let points = vec![vec![1.0], vec![2.0], vec![5.0]];
        let fit = kmeans_default(&points, 3, 1).unwrap();
        assert_eq!(fit.inertia, 0.0);
        let mut seen: Vec<usize> = fit.assignment.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 3);
    }

    #[test]
    fn identical_points_collapse_to_one_cluster() {
        let points = vec![vec![0.25, 0.5]; 6];
        let fit = kmeans_default(&points, 2, 3).unwrap();
        assert_eq!(fit.inertia, 0.0);
        assert!(fit.assignment.iter().all(|&a| a == fit.assignment[0]));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(kmeans_default(&[vec![1.0]], 0, 1).is_err());
        assert!(kmeans_default(&[vec![1.0]], 2, 1).is_err());
        assert!(kmeans_default(&[vec![1.0], vec![1.0, 2.0]], 1, 1).is_err());
    }

    #[test]
    fn more_restarts_never_worsen_inertia() {
        let points: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                vec![
                    ((i * 29 + 7) % 23) as f64 / 23.0,
                    ((i * 31 + 3) % 19) as f64 / 19.0,
                ]
            })
            .collect();
        let one = kmeans(&points, 4, 1, DEFAULT_MAX_ITERS, 99).unwrap();
        let many = kmeans(&points, 4, 50, DEFAULT_MAX_ITERS, 99).unwrap();
        assert!(many.inertia <= one.inertia);
    }
}
