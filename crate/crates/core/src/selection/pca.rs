//! Principal-component projection of z-scored columns onto the top two
//! components of the covariance matrix.

use nalgebra::{DMatrix, SymmetricEigen};

/// Z-score each column; constant columns become all zeros.
pub(crate) fn zscore_columns(matrix: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = matrix.clone();
    for mut col in out.column_iter_mut() {
        let vals: Vec<f64> = col.iter().copied().collect();
        let (mean, std) = crate::dataset::column_mean_std(&vals);
        if std > 0.0 {
            for v in col.iter_mut() {
                *v = (*v - mean) / std;
            }
        } else {
            col.fill(0.0);
        }
    }
    out
}

/// Project rows onto the top-2 principal components. The sign of each
/// component is fixed by making its largest-magnitude loading positive.
pub(crate) fn project_2d(matrix: &DMatrix<f64>) -> Vec<[f64; 2]> {
    let x = zscore_columns(matrix);
    let n = x.nrows() as f64;
    let cov = x.transpose() * &x / (n - 1.0).max(1.0);
    let eigen = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..eigen.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut components = [vec![0.0; x.ncols()], vec![0.0; x.ncols()]];
    for (slot, &col) in order.iter().take(2).enumerate() {
        let mut w: Vec<f64> = eigen.eigenvectors.column(col).iter().copied().collect();
        let lead = (0..w.len())
            .max_by(|&a, &b| {
                w[a].abs()
                    .partial_cmp(&w[b].abs())
                    .unwrap()
                    .then(b.cmp(&a))
            })
            .unwrap_or(0);
        if w[lead] < 0.0 {
            for v in w.iter_mut() {
                *v = -*v;
            }
        }
        components[slot] = w;
    }
    (0..x.nrows())
        .map(|r| {
            let mut p = [0.0f64; 2];
            for c in 0..x.ncols() {
                p[0] += x[(r, c)] * components[0][c];
                p[1] += x[(r, c)] * components[1][c];
            }
            p
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_feature_projection_preserves_variance_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = DMatrix::from_fn(200, 2, |_, c| {
            if c == 0 {
                rng.gen_range(-1.0..1.0)
            } else {
                rng.gen_range(-1.0..1.0)
            }
        });
        let coords = project_2d(&m);
        assert_eq!(coords.len(), 200);
        let var = |sel: fn(&[f64; 2]) -> f64| {
            let vals: Vec<f64> = coords.iter().map(|p| sel(p)).collect();
            crate::dataset::column_mean_std(&vals).1.powi(2)
        };
        assert!(var(|p| p[0]) >= var(|p| p[1]) - 1e-9);
    }

    #[test]
    fn projection_is_affine_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = DMatrix::from_fn(60, 3, |_, _| rng.gen_range(-2.0..2.0));
        let mut scaled = m.clone();
        for r in 0..60 {
            scaled[(r, 1)] = scaled[(r, 1)] * 12.0 - 5.0;
        }
        let a = project_2d(&m);
        let b = project_2d(&scaled);
        for (p, q) in a.iter().zip(&b) {
            assert!((p[0] - q[0]).abs() < 1e-9 && (p[1] - q[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_sign_convention() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = DMatrix::from_fn(40, 4, |_, _| rng.gen_range(-1.0..1.0));
        assert_eq!(project_2d(&m), project_2d(&m));
    }
}
