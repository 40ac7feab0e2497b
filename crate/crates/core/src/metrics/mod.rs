//! Baseline diversity metrics computed directly on the feature matrix:
//! normalized Shannon evenness, pairwise Euclidean diversity, multiset
//! compression distance, and the norm of per-feature standard deviations.

pub mod ncd;

pub use ncd::{ncd_with_deadline, Bzip2Compressor, Compressor};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dataset::{column_mean_std, minmax_normalize, TestSuite};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metric requires a non-empty suite")]
    EmptySuite,
    #[error("shannon binning requires at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("compressor '{name}' failed: {reason}")]
    CompressorFailure { name: String, reason: String },
    #[error("computation exceeded its deadline")]
    DeadlineExceeded,
}

/// Which diversity measure a value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Shannon,
    Euclidean,
    Ncd,
    Std,
}

/// A computed diversity value, optionally with per-feature contributions.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DiversityValue {
    pub metric: MetricKind,
    pub value: f64,
    pub per_feature: Option<Vec<f64>>,
    /// True when a greedy approximation produced the value (NCD only).
    pub approximate: bool,
}

/// Normalized Shannon diversity: every feature is histogrammed (exact value
/// counts when it has at most `bins` distinct values, equal-width bins over
/// the observed range otherwise), H = -sum p ln p over occupied bins, and
/// evenness = H / ln(occupied). The suite value is the mean over features.
pub fn shannon_evenness(suite: &TestSuite, bins: usize) -> Result<DiversityValue, MetricError> {
    if suite.is_empty() {
        return Err(MetricError::EmptySuite);
    }
    if bins < 2 {
        return Err(MetricError::TooFewBins(bins));
    }
    let mut per_feature = Vec::with_capacity(suite.n_features());
    for c in 0..suite.n_features() {
        let col = suite.column(c);
        let counts = histogram(&col, bins);
        per_feature.push(evenness(&counts));
    }
    let value = per_feature.iter().sum::<f64>() / per_feature.len().max(1) as f64;
    Ok(DiversityValue {
        metric: MetricKind::Shannon,
        value,
        per_feature: Some(per_feature),
        approximate: false,
    })
}

fn histogram(col: &[f64], bins: usize) -> Vec<usize> {
    let mut distinct: BTreeMap<u64, usize> = BTreeMap::new();
    for &v in col {
        *distinct.entry(v.to_bits()).or_insert(0) += 1;
        if distinct.len() > bins {
            break;
        }
    }
    if distinct.len() <= bins && distinct.iter().map(|(_, &c)| c).sum::<usize>() == col.len() {
        return distinct.into_values().collect();
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in col {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let width = hi - lo;
    let mut counts = vec![0usize; bins];
    for &v in col {
        let bin = (((v - lo) / width * bins as f64) as usize).min(bins - 1);
        counts[bin] += 1;
    }
    counts.retain(|&c| c > 0);
    counts
}

fn evenness(counts: &[usize]) -> f64 {
    let occupied: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
    let s = occupied.len();
    if s <= 1 {
        return 0.0;
    }
    let total: usize = occupied.iter().sum();
    let h: f64 = occupied
        .iter()
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.ln()
        })
        .sum();
    h / (s as f64).ln()
}

/// Pairwise Euclidean diversity on min-max normalized features: the per-pair
/// diversity is the mean absolute feature difference, each scenario
/// accumulates its diversity against all others, and the suite value is the
/// mean of those per-scenario totals.
pub fn euclidean_diversity(suite: &TestSuite) -> Result<DiversityValue, MetricError> {
    if suite.is_empty() {
        return Err(MetricError::EmptySuite);
    }
    let normalized = minmax_normalize(suite.features());
    let n = suite.len();
    let m = suite.n_features();
    let mut div_s = vec![0.0f64; n];
    let mut per_feature = vec![0.0f64; m];
    let data = normalized.as_slice(); // column-major
    let cols: Vec<&[f64]> = (0..m).map(|c| &data[c * n..(c + 1) * n]).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = 0.0;
            for (k, col) in cols.iter().enumerate() {
                let d = (col[i] - col[j]).abs();
                per_feature[k] += d;
                acc += d;
            }
            let pair = acc / m as f64;
            div_s[i] += pair;
            div_s[j] += pair;
        }
    }
    let pairs = (n * (n - 1) / 2).max(1) as f64;
    for v in per_feature.iter_mut() {
        *v /= pairs;
    }
    let value = div_s.iter().sum::<f64>() / n as f64;
    Ok(DiversityValue {
        metric: MetricKind::Euclidean,
        value,
        per_feature: Some(per_feature),
        approximate: false,
    })
}

/// Norm of the per-feature population standard deviations after min-max
/// normalization.
pub fn std_metric(suite: &TestSuite) -> Result<DiversityValue, MetricError> {
    if suite.is_empty() {
        return Err(MetricError::EmptySuite);
    }
    let normalized = minmax_normalize(suite.features());
    let per_feature: Vec<f64> = (0..suite.n_features())
        .map(|c| {
            let col: Vec<f64> = normalized.column(c).iter().copied().collect();
            column_mean_std(&col).1
        })
        .collect();
    let value = per_feature.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(DiversityValue {
        metric: MetricKind::Std,
        value,
        per_feature: Some(per_feature),
        approximate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn suite_of(columns: Vec<Vec<f64>>) -> TestSuite {
        let n = columns[0].len();
        let m = columns.len();
        let mut data = Vec::new();
        for col in &columns {
            data.extend(col);
        }
        TestSuite::new(
            (0..n).map(|i| format!("s{i}")).collect(),
            DMatrix::from_vec(n, m, data),
            vec![0; n],
            (0..m).map(|c| format!("f{c}")).collect(),
        )
        .unwrap()
    }

    #[test]
    fn shannon_uniform_is_one() {
        let suite = suite_of(vec![vec![1.0, 2.0, 3.0, 4.0]]);
        let v = shannon_evenness(&suite, 10).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shannon_constant_is_zero() {
        let suite = suite_of(vec![vec![5.0; 6]]);
        let v = shannon_evenness(&suite, 10).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn shannon_hand_computed_counts() {
        // counts [2, 1, 1]: H = 0.5 ln 2 + 2 * 0.25 ln 4, evenness = H / ln 3
        let suite = suite_of(vec![vec![7.0, 7.0, 8.0, 9.0]]);
        let v = shannon_evenness(&suite, 10).unwrap();
        let h = 0.5 * 2.0f64.ln() + 2.0 * 0.25 * 4.0f64.ln();
        assert!((h - 1.0397207708399179).abs() < 1e-12);
        let expected = h / 3.0f64.ln();
        assert!((v.value - expected).abs() < 1e-9, "{} vs {expected}", v.value);
        assert!((v.value - 0.94639).abs() < 1e-5);
    }

    #[test]
    fn shannon_bins_continuous_features() {
        // 20 distinct values forced into 10 equal-width bins, 2 per bin
        let col: Vec<f64> = (0..20).map(|i| i as f64 + 0.13).collect();
        let suite = suite_of(vec![col]);
        let v = shannon_evenness(&suite, 10).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shannon_is_permutation_invariant() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let col: Vec<f64> = (0..30).map(|_| rng.gen_range(0.0..4.0)).collect();
            let mut shuffled = col.clone();
            shuffled.shuffle(&mut rng);
            let a = shannon_evenness(&suite_of(vec![col]), 10).unwrap().value;
            let b = shannon_evenness(&suite_of(vec![shuffled]), 10).unwrap().value;
            assert_eq!(a, b);
            assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn euclidean_identical_scenarios_is_zero() {
        let suite = suite_of(vec![vec![2.0, 2.0], vec![3.0, 3.0]]);
        assert_eq!(euclidean_diversity(&suite).unwrap().value, 0.0);
    }

    #[test]
    fn euclidean_hand_computed_pair() {
        // normalized features (0,0) and (1,1): div = (1+1)/2 = 1 each
        let suite = suite_of(vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
        let v = euclidean_diversity(&suite).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn euclidean_single_scenario_is_zero() {
        let suite = suite_of(vec![vec![4.0], vec![9.0]]);
        assert_eq!(euclidean_diversity(&suite).unwrap().value, 0.0);
    }

    #[test]
    fn euclidean_invariant_under_reorder_and_affine() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let n = 12;
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let base = euclidean_diversity(&suite_of(vec![a.clone(), b.clone()]))
                .unwrap()
                .value;
            // positive affine transform per feature
            let a2: Vec<f64> = a.iter().map(|v| 13.0 * v - 4.0).collect();
            let b2: Vec<f64> = b.iter().map(|v| 0.2 * v + 11.0).collect();
            let affine = euclidean_diversity(&suite_of(vec![a2, b2])).unwrap().value;
            assert!((base - affine).abs() < 1e-9);
            // scenario reorder
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let ar: Vec<f64> = order.iter().map(|&i| a[i]).collect();
            let br: Vec<f64> = order.iter().map(|&i| b[i]).collect();
            let reordered = euclidean_diversity(&suite_of(vec![ar, br])).unwrap().value;
            assert!((base - reordered).abs() < 1e-9);
        }
    }

    #[test]
    fn std_of_identical_scenarios_is_zero() {
        let suite = suite_of(vec![vec![3.0; 5], vec![1.0; 5]]);
        assert_eq!(std_metric(&suite).unwrap().value, 0.0);
    }

    #[test]
    fn std_alternating_feature() {
        let suite = suite_of(vec![vec![0.0, 10.0, 0.0, 10.0]]);
        let v = std_metric(&suite).unwrap();
        assert!((v.value - 0.5).abs() < 1e-12);
        let two = suite_of(vec![vec![0.0, 10.0, 0.0, 10.0], vec![5.0, 0.0, 5.0, 0.0]]);
        let v2 = std_metric(&two).unwrap();
        assert!((v2.value - 0.7071067811865476).abs() < 1e-9);
    }

    #[test]
    fn std_bounded_by_half_sqrt_m() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let m = rng.gen_range(1..6);
            let n = rng.gen_range(2..20);
            let cols: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect())
                .collect();
            let v = std_metric(&suite_of(cols)).unwrap().value;
            assert!(v <= (m as f64).sqrt() / 2.0 + 1e-12);
        }
    }
}
