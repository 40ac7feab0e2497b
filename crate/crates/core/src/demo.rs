//! Seeded generator for the bundled demo suite: two signal features drive
//! the failure probability, the remaining features are noise correlated
//! with one signal each so the feature blocks cluster naturally.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::dataset::TestSuite;

const FEATURE_NAMES: [&str; 10] = [
    "avg_speed",
    "total_angle",
    "num_right_turns",
    "num_left_turns",
    "road_length",
    "max_throttle",
    "min_obstacle_distance",
    "traffic_density",
    "curvature_mean",
    "weather_severity",
];

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Snap a unit-interval value onto a grid of `levels` distinct values.
fn quantize(v: f64, levels: usize) -> f64 {
    (v * (levels - 1) as f64).round() / (levels - 1) as f64
}

/// Distinct-value counts per feature; scenario attributes like turn counts
/// and binned angles are coarse, so features repeat across scenarios.
const SIGNAL_LEVELS: usize = 25;
const NOISE_LEVELS: [usize; 4] = [9, 13, 17, 21];

/// Generate a synthetic suite of `rows` scenarios with `n_features` features
/// (at least 2). Features 0 and 1 are the signals; scenario failure is a
/// Bernoulli draw with probability monotone in their sum. Noise feature j
/// mixes 35% of signal j % 2 with fresh uniform noise. All features are
/// quantized, so scenarios repeat feature values the way discrete scenario
/// attributes do.
pub fn demo_suite(rows: usize, n_features: usize, seed: u64) -> TestSuite {
    assert!(n_features >= 2, "demo suite needs at least the 2 signals");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(rows); n_features];
    let mut outcomes = Vec::with_capacity(rows);
    for _ in 0..rows {
        let s1 = quantize(rng.gen(), SIGNAL_LEVELS);
        let s2 = quantize(rng.gen(), SIGNAL_LEVELS);
        columns[0].push(s1);
        columns[1].push(s2);
        for (j, col) in columns.iter_mut().enumerate().skip(2) {
            let tie = if j % 2 == 0 { s1 } else { s2 };
            let raw = 0.35 * tie + 0.65 * rng.gen::<f64>();
            col.push(quantize(raw, NOISE_LEVELS[j % NOISE_LEVELS.len()]));
        }
        let p_fail = sigmoid(12.0 * (s1 + s2 - 1.0));
        outcomes.push(u8::from(rng.gen::<f64>() < p_fail));
    }
    let mut data = Vec::with_capacity(rows * n_features);
    for col in &columns {
        data.extend(col);
    }
    let names: Vec<String> = (0..n_features)
        .map(|i| {
            FEATURE_NAMES
                .get(i)
                .map_or_else(|| format!("feature_{i}"), |n| n.to_string())
        })
        .collect();
    let ids = (0..rows).map(|i| format!("scn{i:05}")).collect();
    TestSuite::new(ids, DMatrix::from_vec(rows, n_features, data), outcomes, names)
        .expect("generated suite is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic() {
        let a = demo_suite(100, 10, 42);
        let b = demo_suite(100, 10, 42);
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        let c = demo_suite(100, 10, 43);
        assert_ne!(a.to_csv_string(), c.to_csv_string());
    }

    #[test]
    fn failure_rate_is_near_half_and_monotone_in_signals() {
        let suite = demo_suite(4000, 10, 1);
        let rate = suite.bug_count() as f64 / suite.len() as f64;
        assert!((0.35..0.65).contains(&rate), "bug rate {rate}");
        // failure frequency in the high-signal quadrant dominates the low one
        let mut high = (0usize, 0usize);
        let mut low = (0usize, 0usize);
        for i in 0..suite.len() {
            let s = suite.features()[(i, 0)] + suite.features()[(i, 1)];
            if s > 1.4 {
                high.0 += suite.outcomes()[i] as usize;
                high.1 += 1;
            } else if s < 0.6 {
                low.0 += suite.outcomes()[i] as usize;
                low.1 += 1;
            }
        }
        let high_rate = high.0 as f64 / high.1 as f64;
        let low_rate = low.0 as f64 / low.1 as f64;
        assert!(high_rate > 0.8, "high quadrant rate {high_rate}");
        assert!(low_rate < 0.2, "low quadrant rate {low_rate}");
    }

    #[test]
    fn noise_features_correlate_with_their_signal() {
        let suite = demo_suite(3000, 10, 2);
        let corr = crate::dataset::pearson_correlation(suite.features()).unwrap();
        // feature 2 ties to signal 0, feature 3 to signal 1
        assert!(corr.get(0, 2) > 0.3);
        assert!(corr.get(1, 3) > 0.3);
        assert!(corr.get(0, 1).abs() < 0.1);
    }
}
