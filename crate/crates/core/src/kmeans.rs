//! Lloyd's k-means with k-means++ seeding over z-score standardized
//! features, plus seeded per-cluster sampling for candidate selection.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::rng::stream;

#[derive(Debug, Error, PartialEq)]
pub enum KmeansError {
    #[error("k = {k} exceeds the number of points ({points})")]
    KTooLarge { k: usize, points: usize },
    #[error("k must be >= 1")]
    KZero,
    #[error("points have inconsistent dimensions")]
    DimensionMismatch,
    #[error("no points")]
    Empty,
}

/// Clustering result. Centroids live in the standardized (z-score) feature
/// space; `feature_mean`/`feature_std` give the affine map back to raw
/// units.
#[derive(Debug, Clone, Serialize)]
pub struct KmeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Total within-cluster squared distance after each Lloyd iteration.
    pub inertia_trace: Vec<f64>,
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn standardize(points: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let n = points.len() as f64;
    let dim = points[0].len();
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v / n;
        }
    }
    let mut std = vec![0.0; dim];
    for p in points {
        for d in 0..dim {
            std[d] += (p[d] - mean[d]) * (p[d] - mean[d]) / n;
        }
    }
    for s in &mut std {
        *s = s.sqrt();
        if *s == 0.0 {
            *s = 1.0; // constant feature carries no signal
        }
    }
    let z = points
        .iter()
        .map(|p| {
            p.iter()
                .zip(mean.iter().zip(&std))
                .map(|(v, (m, s))| (v - m) / s)
                .collect()
        })
        .collect();
    (z, mean, std)
}

/// Deterministic k-means: z-score standardization, k-means++ seeding from
/// the seeded stream, Lloyd iterations with farthest-point repair for empty
/// clusters.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<KmeansResult, KmeansError> {
    if points.is_empty() {
        return Err(KmeansError::Empty);
    }
    if k == 0 {
        return Err(KmeansError::KZero);
    }
    if k > points.len() {
        return Err(KmeansError::KTooLarge {
            k,
            points: points.len(),
        });
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(KmeansError::DimensionMismatch);
    }

    let (z, feature_mean, feature_std) = standardize(points);
    let mut rng = stream(seed, "kmeans");

    // k-means++ seeding
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(z[rng.random_range(0..z.len())].clone());
    let mut d2: Vec<f64> = z.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // All remaining mass at existing centroids; pick uniformly.
            rng.random_range(0..z.len())
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = z.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.push(z[next].clone());
        for (di, p) in d2.iter_mut().zip(&z) {
            *di = di.min(dist2(p, centroids.last().unwrap()));
        }
    }

    let mut assignments = vec![0usize; z.len()];
    let mut inertia_trace = Vec::new();
    let mut inertia = f64::INFINITY;
    for _ in 0..max_iter {
        // assignment step
        let mut new_inertia = 0.0;
        for (i, p) in z.iter().enumerate() {
            let (mut best, mut best_d) = (0usize, f64::INFINITY);
            for (c, centroid) in centroids.iter().enumerate() {
                let d = dist2(p, centroid);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            assignments[i] = best;
            new_inertia += best_d;
        }

        // empty-cluster repair: reseed to the point farthest from its
        // centroid
        let mut counts = vec![0usize; k];
        for &a in &assignments {
            counts[a] += 1;
        }
        let mut repaired = false;
        for c in 0..k {
            if counts[c] == 0 {
                let (far, _) = z
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, dist2(p, &centroids[assignments[i]])))
                    .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                    .unwrap();
                centroids[c] = z[far].clone();
                counts[assignments[far]] -= 1;
                assignments[far] = c;
                counts[c] = 1;
                repaired = true;
            }
        }
        if repaired {
            new_inertia = z
                .iter()
                .zip(&assignments)
                .map(|(p, &a)| dist2(p, &centroids[a]))
                .sum();
        }

        inertia_trace.push(new_inertia);
        let converged = (inertia - new_inertia).abs() <= 1e-12 * inertia.max(1.0);
        inertia = new_inertia;

        // update step
        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &a) in z.iter().zip(&assignments) {
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for s in &mut sums[c] {
                    *s /= counts[c] as f64;
                }
                centroids[c] = sums[c].clone();
            }
        }
        if converged {
            break;
        }
    }

    // final inertia with the updated centroids
    inertia = z
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| dist2(p, &centroids[a]))
        .sum();
    inertia_trace.push(inertia);

    Ok(KmeansResult {
        assignments,
        centroids,
        inertia,
        inertia_trace,
        feature_mean,
        feature_std,
    })
}

/// Up to `per_cluster` indices sampled uniformly without replacement from
/// every non-empty cluster, deterministic per seed. Indices are returned
/// sorted within each cluster.
pub fn sample_per_cluster(
    assignments: &[usize],
    per_cluster: usize,
    seed: u64,
) -> Vec<Vec<usize>> {
    let k = assignments.iter().copied().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &a) in assignments.iter().enumerate() {
        members[a].push(i);
    }
    let mut rng = stream(seed, "kmeans.sample");
    members
        .into_iter()
        .map(|mut pool| {
            if pool.len() <= per_cluster {
                return pool;
            }
            // partial Fisher-Yates: the first per_cluster slots are a
            // uniform sample without replacement
            for i in 0..per_cluster {
                let j = rng.random_range(i..pool.len());
                pool.swap(i, j);
            }
            let mut sample = pool[..per_cluster].to_vec();
            sample.sort_unstable();
            sample
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn k_equal_to_points_gives_zero_inertia() {
        let points = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 0.5]];
        let res = kmeans(&points, 3, 0, 100).unwrap();
        assert!(res.inertia < 1e-12);
        let mut seen = res.assignments.clone();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2]);
    }

    #[test]
    fn k_one_centroid_is_mean_of_standardized_points() {
        let points = vec![vec![1.0, 5.0], vec![3.0, 9.0], vec![5.0, 1.0]];
        let res = kmeans(&points, 1, 0, 100).unwrap();
        for &c in &res.centroids[0] {
            assert!(c.abs() < 1e-12); // mean of z-scores is 0
        }
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let mut rng = crate::rng::stream(42, "test.blobs");
        let mut points = Vec::new();
        for _ in 0..30 {
            points.push(vec![
                rng.random::<f64>() * 0.5,
                rng.random::<f64>() * 0.5,
            ]);
        }
        for _ in 0..30 {
            points.push(vec![
                10.0 + rng.random::<f64>() * 0.5,
                10.0 + rng.random::<f64>() * 0.5,
            ]);
        }
        let res = kmeans(&points, 2, 1, 200).unwrap();
        let first = res.assignments[0];
        assert!(res.assignments[..30].iter().all(|&a| a == first));
        assert!(res.assignments[30..].iter().all(|&a| a != first));
    }

    #[test]
    fn inertia_is_non_increasing() {
        let mut rng = crate::rng::stream(7, "test.inertia");
        let points: Vec<Vec<f64>> = (0..200)
            .map(|_| vec![rng.random::<f64>() * 10.0, rng.random::<f64>() * 10.0])
            .collect();
        let res = kmeans(&points, 8, 3, 100).unwrap();
        for w in res.inertia_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "inertia increased: {:?}", w);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let points: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i % 7) as f64, (i % 11) as f64])
            .collect();
        let a = kmeans(&points, 4, 9, 100).unwrap();
        let b = kmeans(&points, 4, 9, 100).unwrap();
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.centroids, b.centroids);
    }

    #[test]
    fn k_too_large_rejected() {
        let points = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            kmeans(&points, 3, 0, 10),
            Err(KmeansError::KTooLarge { k: 3, points: 2 })
        ));
    }

    #[test]
    fn sampling_respects_up_to_semantics() {
        let assignments = vec![0, 0, 0, 1, 1, 1, 1, 1];
        let samples = sample_per_cluster(&assignments, 10, 0);
        assert_eq!(samples[0], vec![0, 1, 2]);
        assert_eq!(samples[1].len(), 5);

        let one = sample_per_cluster(&assignments, 1, 5);
        assert_eq!(one[0].len(), 1);
        assert_eq!(one[1].len(), 1);

        let again = sample_per_cluster(&assignments, 1, 5);
        assert_eq!(one, again);
    }
}
