//! Mathematical boundary of the reachable instance space: hypercube
//! vertices from feature bounds, correlation-based pruning of infeasible
//! vertices, projection, convex hull, and the coverage ratio.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{CorrelationMatrix, FeatureBounds};
use crate::geometry::{convex_hull, polygon_area, Point};
use crate::pilot::{project, PilotError, ProjectionModel};

/// Exact 2^n vertex enumeration refuses beyond this many features.
pub const MAX_BOUNDED_FEATURES: usize = 20;

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error("{0} bounded features exceed the exact-enumeration cap of {MAX_BOUNDED_FEATURES}")]
    TooManyFeatures(usize),
    #[error("bounds cover {bounds} features but the model expects {model}")]
    DimensionMismatch { bounds: usize, model: usize },
    #[error("correlation threshold must be in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error(
        "only {kept} vertices remain after pruning; responsible feature pairs: {pairs:?}"
    )]
    AllPruned {
        kept: usize,
        pairs: Vec<(usize, usize)>,
    },
    #[error("projected vertices are collinear; no 2D boundary exists")]
    CollinearProjection,
    #[error("bounded area is zero")]
    ZeroBoundedArea,
    #[error(transparent)]
    Projection(#[from] PilotError),
}

/// Convex hull of the projected, correlation-pruned hypercube vertices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryHull {
    /// Hull vertices in instance-space units, counter-clockwise.
    pub vertices_2d: Vec<Point>,
    pub area_bound: f64,
    pub kept_vertex_count: usize,
    pub pruned_vertex_count: usize,
}

impl BoundaryHull {
    /// Fraction of the given points lying inside the hull; instances are not
    /// guaranteed to be enclosed, so this is a diagnostic, not an invariant.
    pub fn fraction_inside(&self, coords: &[Point]) -> f64 {
        if coords.is_empty() {
            return 0.0;
        }
        let inside = coords
            .iter()
            .filter(|p| crate::geometry::point_in_convex(**p, &self.vertices_2d))
            .count();
        inside as f64 / coords.len() as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("hull serialization")
    }
}

/// All 2^n vertices mixing per-feature upper and lower bounds. Vertex `v`
/// takes the upper bound of feature `i` exactly when bit `i` of `v` is set.
pub fn build_vertices(bounds: &FeatureBounds) -> Result<Vec<Vec<f64>>, BoundaryError> {
    let n = bounds.n_features();
    if n > MAX_BOUNDED_FEATURES {
        return Err(BoundaryError::TooManyFeatures(n));
    }
    let count = 1usize << n;
    let mut vertices = Vec::with_capacity(count);
    for v in 0..count {
        let vertex: Vec<f64> = (0..n)
            .map(|i| {
                if v & (1 << i) != 0 {
                    bounds.upper[i]
                } else {
                    bounds.lower[i]
                }
            })
            .collect();
        vertices.push(vertex);
    }
    Ok(vertices)
}

/// Outcome of correlation pruning.
#[derive(Debug, Clone)]
pub struct PrunedVertices {
    pub kept: Vec<Vec<f64>>,
    pub pruned_count: usize,
    /// Feature pairs whose correlation actually removed vertices.
    pub active_pairs: Vec<(usize, usize)>,
}

/// Remove vertices whose bound combinations contradict strong correlations:
/// a strongly positive pair cannot mix one upper with one lower bound, and a
/// strongly negative pair cannot take both uppers or both lowers.
pub fn prune_vertices(
    vertices: &[Vec<f64>],
    bounds: &FeatureBounds,
    corr: &CorrelationMatrix,
    threshold: f64,
) -> Result<PrunedVertices, BoundaryError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(BoundaryError::InvalidThreshold(threshold));
    }
    let n = bounds.n_features();
    let mut active_pairs = Vec::new();
    let mut keep = vec![true; vertices.len()];
    for i in 0..n {
        for j in (i + 1)..n {
            let r = corr.get(i, j);
            if r.abs() < threshold {
                continue;
            }
            let mut fired = false;
            for (v, vertex) in vertices.iter().enumerate() {
                let hi_i = vertex[i] == bounds.upper[i] && bounds.upper[i] != bounds.lower[i];
                let hi_j = vertex[j] == bounds.upper[j] && bounds.upper[j] != bounds.lower[j];
                let lo_i = !hi_i;
                let lo_j = !hi_j;
                let contradiction = if r >= threshold {
                    (hi_i && lo_j) || (lo_i && hi_j)
                } else {
                    (hi_i && hi_j) || (lo_i && lo_j)
                };
                if contradiction && keep[v] {
                    keep[v] = false;
                    fired = true;
                }
            }
            if fired {
                active_pairs.push((i, j));
            }
        }
    }
    let kept: Vec<Vec<f64>> = vertices
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(v, _)| v.clone())
        .collect();
    Ok(PrunedVertices {
        pruned_count: vertices.len() - kept.len(),
        kept,
        active_pairs,
    })
}

/// Build the boundary: enumerate, prune, project through the fitted model,
/// and take the convex hull of the projected vertices.
pub fn boundary_hull(
    model: &ProjectionModel,
    bounds: &FeatureBounds,
    corr: &CorrelationMatrix,
    threshold: f64,
) -> Result<BoundaryHull, BoundaryError> {
    if bounds.n_features() != model.input_dim() {
        return Err(BoundaryError::DimensionMismatch {
            bounds: bounds.n_features(),
            model: model.input_dim(),
        });
    }
    let vertices = build_vertices(bounds)?;
    let total = vertices.len();
    let pruned = prune_vertices(&vertices, bounds, corr, threshold)?;
    if pruned.kept.len() < 3 {
        return Err(BoundaryError::AllPruned {
            kept: pruned.kept.len(),
            pairs: pruned.active_pairs,
        });
    }
    let n = bounds.n_features();
    let matrix = DMatrix::from_fn(pruned.kept.len(), n, |r, c| pruned.kept[r][c]);
    let projected = project(model, &matrix)?;
    let hull = convex_hull(&projected);
    if hull.len() < 3 {
        return Err(BoundaryError::CollinearProjection);
    }
    let area_bound = polygon_area(&hull);
    Ok(BoundaryHull {
        vertices_2d: hull,
        area_bound,
        kept_vertex_count: pruned.kept.len(),
        pruned_vertex_count: total - pruned.kept.len(),
    })
}

/// Coverage of the instance space as a percentage of the bounded area.
pub fn coverage(area_is: f64, hull: &BoundaryHull) -> Result<f64, BoundaryError> {
    if hull.area_bound <= 0.0 {
        return Err(BoundaryError::ZeroBoundedArea);
    }
    Ok(100.0 * area_is / hull.area_bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::pearson_correlation;
    use crate::pilot::fit_pilot;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn unit_bounds(n: usize) -> FeatureBounds {
        FeatureBounds::new(vec![0.0; n], vec![1.0; n]).unwrap()
    }

    fn corr_of(values: Vec<f64>, n: usize) -> CorrelationMatrix {
        // build a correlation matrix via a tiny synthetic dataset is
        // overkill here; use pearson_correlation on constructed columns
        let _ = values;
        let m = DMatrix::from_fn(4, n, |r, c| ((r * (c + 1)) as f64).sin());
        pearson_correlation(&m).unwrap()
    }

    #[test]
    fn vertex_enumeration_counts() {
        let v2 = build_vertices(&unit_bounds(2)).unwrap();
        assert_eq!(v2.len(), 4);
        let expected: std::collections::HashSet<Vec<u64>> = [
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ]
        .into_iter()
        .map(|v| v.into_iter().map(f64::to_bits).collect())
        .collect();
        let got: std::collections::HashSet<Vec<u64>> = v2
            .into_iter()
            .map(|v| v.into_iter().map(f64::to_bits).collect())
            .collect();
        assert_eq!(got, expected);
        assert_eq!(build_vertices(&unit_bounds(3)).unwrap().len(), 8);
        assert!(matches!(
            build_vertices(&unit_bounds(21)),
            Err(BoundaryError::TooManyFeatures(21))
        ));
    }

    fn two_feature_corr(r: f64) -> CorrelationMatrix {
        // columns engineered to have the exact requested correlation sign
        let m = if r > 0.0 {
            DMatrix::from_vec(4, 2, vec![0.0, 1.0, 2.0, 3.0, 0.0, 1.0, 2.0, 3.0])
        } else if r < 0.0 {
            DMatrix::from_vec(4, 2, vec![0.0, 1.0, 2.0, 3.0, 3.0, 2.0, 1.0, 0.0])
        } else {
            DMatrix::from_vec(4, 2, vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0])
        };
        pearson_correlation(&m).unwrap()
    }

    #[test]
    fn pruning_positive_correlation() {
        let bounds = unit_bounds(2);
        let vertices = build_vertices(&bounds).unwrap();
        let corr = two_feature_corr(1.0);
        let pruned = prune_vertices(&vertices, &bounds, &corr, 0.7).unwrap();
        assert_eq!(pruned.kept.len(), 2);
        for v in &pruned.kept {
            assert_eq!(v[0], v[1]); // only (L,L) and (U,U) survive
        }
        assert_eq!(pruned.active_pairs, vec![(0, 1)]);
    }

    #[test]
    fn pruning_negative_correlation() {
        let bounds = unit_bounds(2);
        let vertices = build_vertices(&bounds).unwrap();
        let corr = two_feature_corr(-1.0);
        let pruned = prune_vertices(&vertices, &bounds, &corr, 0.7).unwrap();
        assert_eq!(pruned.kept.len(), 2);
        for v in &pruned.kept {
            assert_ne!(v[0], v[1]); // only the mixed vertices survive
        }
    }

    #[test]
    fn pruning_below_threshold_keeps_all() {
        let bounds = unit_bounds(2);
        let vertices = build_vertices(&bounds).unwrap();
        let corr = two_feature_corr(0.0);
        let pruned = prune_vertices(&vertices, &bounds, &corr, 0.7).unwrap();
        assert_eq!(pruned.kept.len(), 4);
        assert_eq!(pruned.pruned_count, 0);
    }

    #[test]
    fn threshold_one_without_perfect_correlation_keeps_all() {
        let n = 4;
        let corr = corr_of(vec![], n);
        let bounds = unit_bounds(n);
        let vertices = build_vertices(&bounds).unwrap();
        let mut perfect = false;
        for i in 0..n {
            for j in (i + 1)..n {
                if corr.get(i, j).abs() >= 1.0 {
                    perfect = true;
                }
            }
        }
        let pruned = prune_vertices(&vertices, &bounds, &corr, 1.0).unwrap();
        if !perfect {
            assert_eq!(pruned.kept.len(), 16);
        }
    }

    fn fitted_model(seed: u64, n_features: usize, rows: usize) -> (ProjectionModel, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features = DMatrix::from_fn(rows, n_features, |_, _| rng.gen_range(0.0..1.0));
        let outcomes: Vec<u8> = (0..rows).map(|i| u8::from(i % 2 == 0)).collect();
        let model = fit_pilot(&features, &outcomes, 3, seed).unwrap();
        (model, features)
    }

    #[test]
    fn hull_of_identity_like_model_is_projected_square() {
        let (model, features) = fitted_model(3, 2, 50);
        let bounds = crate::dataset::TestSuite::new(
            (0..50).map(|i| format!("s{i}")).collect(),
            features.clone(),
            vec![0; 50],
            vec!["a".into(), "b".into()],
        )
        .unwrap()
        .observed_bounds();
        let corr = two_feature_corr(0.0);
        let hull = boundary_hull(&model, &bounds, &corr, 0.7).unwrap();
        assert_eq!(hull.kept_vertex_count, 4);
        // the projected bounding box encloses every projected instance
        let coords = project(&model, &features).unwrap();
        assert_eq!(hull.fraction_inside(&coords), 1.0);
        // area equals |det(A_s)| * area of the standardized bounding box
        let s = &model.standardization;
        let w0 = (bounds.upper[0] - bounds.lower[0]) / s.stds[0];
        let w1 = (bounds.upper[1] - bounds.lower[1]) / s.stds[1];
        let det = model.a[(0, 0)] * model.a[(1, 1)] - model.a[(0, 1)] * model.a[(1, 0)];
        let expected = det.abs() * w0 * w1;
        assert!(
            (hull.area_bound - expected).abs() < 1e-9 * expected.max(1.0),
            "{} vs {expected}",
            hull.area_bound
        );
    }

    #[test]
    fn all_pruned_reports_pairs() {
        let (model, _) = fitted_model(5, 2, 30);
        let bounds = unit_bounds(2);
        let corr = two_feature_corr(1.0);
        // threshold 0.7 with perfect correlation leaves only 2 vertices
        let err = boundary_hull(&model, &bounds, &corr, 0.7).unwrap_err();
        match err {
            BoundaryError::AllPruned { kept, pairs } => {
                assert_eq!(kept, 2);
                assert_eq!(pairs, vec![(0, 1)]);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn hull_dominates_vertex_subsets() {
        let (model, features) = fitted_model(7, 5, 80);
        let suite = crate::dataset::TestSuite::new(
            (0..80).map(|i| format!("s{i}")).collect(),
            features.clone(),
            vec![0; 80],
            (0..5).map(|c| format!("f{c}")).collect(),
        )
        .unwrap();
        let bounds = suite.observed_bounds();
        let corr = pearson_correlation(&features).unwrap();
        let hull = boundary_hull(&model, &bounds, &corr, 0.99).unwrap();
        let vertices = build_vertices(&bounds).unwrap();
        let matrix = DMatrix::from_fn(vertices.len(), 5, |r, c| vertices[r][c]);
        let projected = project(&model, &matrix).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let take = rng.gen_range(3..projected.len());
            let mut subset = projected.clone();
            subset.shuffle(&mut rng);
            subset.truncate(take);
            let sub_hull = convex_hull(&subset);
            assert!(polygon_area(&sub_hull) <= hull.area_bound + 1e-9);
        }
    }

    #[test]
    fn coverage_percentages() {
        let hull = BoundaryHull {
            vertices_2d: vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]],
            area_bound: 4.0,
            kept_vertex_count: 4,
            pruned_vertex_count: 0,
        };
        assert_eq!(coverage(4.0, &hull).unwrap(), 100.0);
        assert_eq!(coverage(2.0, &hull).unwrap(), 50.0);
        assert_eq!(coverage(0.0, &hull).unwrap(), 0.0);
        let degenerate = BoundaryHull {
            vertices_2d: vec![],
            area_bound: 0.0,
            kept_vertex_count: 0,
            pruned_vertex_count: 0,
        };
        assert!(coverage(1.0, &degenerate).is_err());
    }
}
