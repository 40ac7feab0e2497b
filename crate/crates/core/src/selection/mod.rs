//! Identification of the feature subset with maximum impact on the test
//! outcome: cluster similar features, enumerate one-per-cluster
//! combinations, and score each by the cross-validated error of a random
//! forest over a temporary 2D principal-component space.

mod forest;
mod kmeans;
mod pca;

pub(crate) use pca::zscore_columns;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::TestSuite;
use crate::seeding::derive_seed;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("feature clustering requires at least 3 features, got {0}")]
    TooFewFeatures(usize),
    #[error("k candidate list is empty")]
    EmptyKCandidates,
    #[error("k candidate {k} outside valid range 2..{max}")]
    InvalidKCandidate { k: usize, max: usize },
    #[error("combination must contain at least 2 features, got {0}")]
    CombinationTooSmall(usize),
    #[error("cross-validation requires at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("outcome vector contains a single class; selection needs both")]
    SingleClassOutcome,
    #[error("feature index {0} out of range")]
    FeatureIndexOutOfRange(usize),
}

/// Result of clustering the feature columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureClustering {
    pub k: usize,
    /// Cluster index per feature, each in `0..k`.
    pub assignments: Vec<usize>,
    /// Mean silhouette of the winning k, in [-1, 1].
    pub silhouette: f64,
}

/// One scored feature combination.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationScore {
    /// Selected feature indices, one per cluster, sorted ascending.
    pub feature_set: Vec<usize>,
    /// Mean misclassification rate under stratified cross-validation.
    pub cv_error: f64,
}

/// Tuning knobs for [`select_features`].
#[derive(Debug, Clone)]
pub struct SelectionConfig {
    /// Candidate cluster counts; `None` means 2..=min(10, n_features - 1).
    pub k_candidates: Option<Vec<usize>>,
    pub rf_trees: usize,
    pub cv_folds: usize,
    pub combo_cap: usize,
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            k_candidates: None,
            rf_trees: 100,
            cv_folds: 5,
            combo_cap: 10_000,
            seed: 0,
        }
    }
}

fn standardized_columns(suite: &TestSuite) -> Vec<Vec<f64>> {
    let z = zscore_columns(suite.features());
    (0..z.ncols())
        .map(|c| z.column(c).iter().copied().collect())
        .collect()
}

/// Cluster features by embedding each as its standardized column and running
/// k-means under the 1 - |pearson| distance for every candidate k; the k
/// with the highest mean silhouette wins, smallest k breaking ties.
pub fn cluster_features(
    suite: &TestSuite,
    k_candidates: &[usize],
    seed: u64,
) -> Result<FeatureClustering, SelectionError> {
    let m = suite.n_features();
    if m < 3 {
        return Err(SelectionError::TooFewFeatures(m));
    }
    if k_candidates.is_empty() {
        return Err(SelectionError::EmptyKCandidates);
    }
    for &k in k_candidates {
        if k < 2 || k >= m {
            return Err(SelectionError::InvalidKCandidate { k, max: m });
        }
    }
    let columns = standardized_columns(suite);
    let mut best: Option<FeatureClustering> = None;
    let mut candidates = k_candidates.to_vec();
    candidates.sort_unstable();
    candidates.dedup();
    for &k in &candidates {
        let assignments = kmeans::kmeans(&columns, k, derive_seed(seed, k as u64));
        let silhouette = kmeans::silhouette(&columns, &assignments, k);
        let better = match &best {
            None => true,
            Some(b) => silhouette > b.silhouette, // ties keep the smaller k
        };
        if better {
            best = Some(FeatureClustering {
                k,
                assignments,
                silhouette,
            });
        }
    }
    Ok(best.expect("at least one candidate"))
}

/// Cartesian product of clusters, one feature from each. When the product
/// exceeds `cap`, a seeded uniform sample of `cap` distinct combinations is
/// drawn instead. Output order is lexicographic either way.
pub fn enumerate_combinations(
    clustering: &FeatureClustering,
    cap: usize,
    seed: u64,
) -> Vec<Vec<usize>> {
    assert!(cap >= 1, "combination cap must be at least 1");
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); clustering.k];
    for (feature, &cluster) in clustering.assignments.iter().enumerate() {
        groups[cluster].push(feature);
    }
    groups.retain(|g| !g.is_empty());
    let product: u128 = groups.iter().map(|g| g.len() as u128).product();

    let mut combos: Vec<Vec<usize>> = Vec::new();
    if product <= cap as u128 {
        let mut cursor = vec![0usize; groups.len()];
        loop {
            let mut combo: Vec<usize> = cursor
                .iter()
                .zip(&groups)
                .map(|(&i, g)| g[i])
                .collect();
            combo.sort_unstable();
            combos.push(combo);
            let mut level = groups.len();
            loop {
                if level == 0 {
                    break;
                }
                level -= 1;
                cursor[level] += 1;
                if cursor[level] < groups[level].len() {
                    break;
                }
                cursor[level] = 0;
                if level == 0 {
                    cursor.clear();
                    break;
                }
            }
            if cursor.is_empty() {
                break;
            }
        }
    } else {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut seen = std::collections::BTreeSet::new();
        while seen.len() < cap {
            let mut combo: Vec<usize> = groups.iter().map(|g| g[rng.gen_range(0..g.len())]).collect();
            combo.sort_unstable();
            seen.insert(combo);
        }
        combos = seen.into_iter().collect();
    }
    combos.sort();
    combos
}

/// Score one combination: z-score the selected columns, project to the top-2
/// principal components, and cross-validate a random forest predicting the
/// outcome from the 2D coordinates.
pub fn score_combination(
    suite: &TestSuite,
    feature_set: &[usize],
    folds: usize,
    trees: usize,
    seed: u64,
) -> Result<CombinationScore, SelectionError> {
    if feature_set.len() < 2 {
        return Err(SelectionError::CombinationTooSmall(feature_set.len()));
    }
    if folds < 2 {
        return Err(SelectionError::TooFewFolds(folds));
    }
    for &f in feature_set {
        if f >= suite.n_features() {
            return Err(SelectionError::FeatureIndexOutOfRange(f));
        }
    }
    let bugs = suite.bug_count();
    if bugs == 0 || bugs == suite.len() {
        return Err(SelectionError::SingleClassOutcome);
    }
    let sub = suite.select_features(feature_set);
    let coords = pca::project_2d(sub.features());
    let cv_error = forest::cv_error(&coords, suite.outcomes(), folds, trees, seed);
    let mut feature_set = feature_set.to_vec();
    feature_set.sort_unstable();
    Ok(CombinationScore {
        feature_set,
        cv_error,
    })
}

/// Full selection pipeline: cluster, enumerate, score every combination and
/// return the set with minimal cv_error (ties broken lexicographically).
pub fn select_features(
    suite: &TestSuite,
    config: &SelectionConfig,
) -> Result<Vec<usize>, SelectionError> {
    let bugs = suite.bug_count();
    if bugs == 0 || bugs == suite.len() {
        return Err(SelectionError::SingleClassOutcome);
    }
    let default_candidates: Vec<usize> =
        (2..=10.min(suite.n_features().saturating_sub(1))).collect();
    let candidates = config
        .k_candidates
        .clone()
        .unwrap_or(default_candidates);
    let clustering = cluster_features(suite, &candidates, config.seed)?;
    let combos = enumerate_combinations(&clustering, config.combo_cap, derive_seed(config.seed, 1));
    let scores: Vec<Result<CombinationScore, SelectionError>> = combos
        .par_iter()
        .map(|combo| {
            score_combination(
                suite,
                combo,
                config.cv_folds,
                config.rf_trees,
                derive_seed(config.seed, 2),
            )
        })
        .collect();
    let mut best: Option<CombinationScore> = None;
    for score in scores {
        let score = score?;
        let better = match &best {
            None => true,
            Some(b) => {
                score.cv_error < b.cv_error
                    || (score.cv_error == b.cv_error && score.feature_set < b.feature_set)
            }
        };
        if better {
            best = Some(score);
        }
    }
    Ok(best.expect("at least one combination").feature_set)
}
