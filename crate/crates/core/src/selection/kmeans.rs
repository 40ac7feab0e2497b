//! K-means over feature columns with correlation distance
//! (1 - |pearson|), plus the matching silhouette score.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::dataset::pearson;

const MAX_ITERS: usize = 100;

/// 1 - |pearson| between a feature column and a centroid vector.
fn corr_distance(a: &[f64], b: &[f64]) -> f64 {
    1.0 - pearson(a, b).abs()
}

/// Lloyd iterations with k-means++ seeding. Points are feature columns;
/// centroids are element-wise means of member columns. Returns one cluster
/// index per feature; every cluster is non-empty.
pub(crate) fn kmeans(columns: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    let n = columns.len();
    debug_assert!(k >= 1 && k <= n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding under the correlation distance
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(columns[rng.gen_range(0..n)].clone());
    while centroids.len() < k {
        let weights: Vec<f64> = columns
            .iter()
            .map(|col| {
                centroids
                    .iter()
                    .map(|c| corr_distance(col, c))
                    .fold(f64::INFINITY, f64::min)
                    .powi(2)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in weights.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centroids.push(columns[next].clone());
    }

    let mut assignments = vec![0usize; n];
    for _ in 0..MAX_ITERS {
        let mut next: Vec<usize> = columns
            .iter()
            .map(|col| {
                let mut best = (f64::INFINITY, 0usize);
                for (ci, c) in centroids.iter().enumerate() {
                    let d = corr_distance(col, c);
                    if d < best.0 {
                        best = (d, ci);
                    }
                }
                best.1
            })
            .collect();

        // re-seed empty clusters with the feature farthest from its centroid
        for empty in 0..k {
            if next.iter().any(|&a| a == empty) {
                continue;
            }
            let farthest = (0..n)
                .filter(|&i| {
                    let members = next.iter().filter(|&&a| a == next[i]).count();
                    members > 1
                })
                .max_by(|&i, &j| {
                    let di = corr_distance(&columns[i], &centroids[next[i]]);
                    let dj = corr_distance(&columns[j], &centroids[next[j]]);
                    di.partial_cmp(&dj).unwrap().then(j.cmp(&i))
                });
            if let Some(i) = farthest {
                next[i] = empty;
            }
        }

        let converged = next == assignments;
        assignments = next;
        for (ci, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = columns
                .iter()
                .zip(&assignments)
                .filter(|(_, &a)| a == ci)
                .map(|(c, _)| c)
                .collect();
            if members.is_empty() {
                continue;
            }
            // sign-align members to the current centroid so anticorrelated
            // columns (distance 0 under 1 - |corr|) reinforce instead of
            // cancelling in the mean
            let signs: Vec<f64> = members
                .iter()
                .map(|m| if pearson(m, centroid) < 0.0 { -1.0 } else { 1.0 })
                .collect();
            for (d, v) in centroid.iter_mut().enumerate() {
                *v = members
                    .iter()
                    .zip(&signs)
                    .map(|(m, s)| s * m[d])
                    .sum::<f64>()
                    / members.len() as f64;
            }
        }
        if converged {
            break;
        }
    }
    assignments
}

/// Mean silhouette of the clustering under the correlation distance.
/// Singleton clusters and zero-distance neighborhoods contribute 0.
pub(crate) fn silhouette(columns: &[Vec<f64>], assignments: &[usize], k: usize) -> f64 {
    let n = columns.len();
    if n == 0 {
        return 0.0;
    }
    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = corr_distance(&columns[i], &columns[j]);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let mut total = 0.0;
    for i in 0..n {
        let own = assignments[i];
        let own_size = assignments.iter().filter(|&&a| a == own).count();
        if own_size <= 1 {
            continue; // silhouette of a singleton is 0
        }
        let a: f64 = (0..n)
            .filter(|&j| j != i && assignments[j] == own)
            .map(|j| dist[i][j])
            .sum::<f64>()
            / (own_size - 1) as f64;
        let mut b = f64::INFINITY;
        for other in 0..k {
            if other == own {
                continue;
            }
            let members: Vec<usize> = (0..n).filter(|&j| assignments[j] == other).collect();
            if members.is_empty() {
                continue;
            }
            let mean = members.iter().map(|&j| dist[i][j]).sum::<f64>() / members.len() as f64;
            b = b.min(mean);
        }
        if !b.is_finite() {
            continue;
        }
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    total / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn copies_cluster_together() {
        // f0 == f1 and f2 == f3, the two groups independent
        let f0 = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let f2 = vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0];
        let columns = vec![f0.clone(), f0, f2.clone(), f2];
        let assignments = kmeans(&columns, 2, 0);
        assert_eq!(assignments[0], assignments[1]);
        assert_eq!(assignments[2], assignments[3]);
        assert_ne!(assignments[0], assignments[2]);
        let s = silhouette(&columns, &assignments, 2);
        assert!(s > 0.9, "silhouette {s}");
    }

    #[test]
    fn anticorrelated_columns_cluster_together() {
        let f0 = vec![1.0, 2.0, 3.0, 4.0];
        let f1: Vec<f64> = f0.iter().map(|v| -v).collect();
        let f2 = vec![2.0, -1.0, 3.0, -2.0];
        let columns = vec![f0, f1, f2];
        let assignments = kmeans(&columns, 2, 0);
        assert_eq!(assignments[0], assignments[1]);
    }

    #[test]
    fn silhouette_is_bounded() {
        let columns: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..10).map(|j| ((i * j) as f64).sin()).collect())
            .collect();
        for k in 2..5 {
            let assignments = kmeans(&columns, k, 3);
            let s = silhouette(&columns, &assignments, k);
            assert!((-1.0..=1.0).contains(&s));
        }
    }

    #[test]
    fn identical_columns_give_zero_silhouette() {
        let col = vec![1.0, 5.0, 2.0, 7.0];
        let columns = vec![col.clone(), col.clone(), col.clone(), col];
        let assignments = kmeans(&columns, 2, 1);
        let s = silhouette(&columns, &assignments, 2);
        assert_eq!(s, 0.0);
    }
}
