//! End-to-end instance-space analysis: select impactful features, fit the
//! projection, compute both area metrics and the boundary coverage.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::{boundary_hull, coverage, BoundaryError, BoundaryHull};
use crate::dataset::{pearson_correlation, DatasetError, FeatureBounds, TestSuite};
use crate::footprints::{
    area_bugs_detail, area_is_footprint, BugArea, EpsFormula, Footprint, FootprintError,
};
use crate::metrics::MetricError;
use crate::pilot::{fit_pilot, PilotError, ProjectionModel};
use crate::selection::{select_features, SelectionConfig, SelectionError};

/// Stage-tagged error for the whole pipeline.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("[dataset] {0}")]
    Dataset(#[from] DatasetError),
    #[error("[feature_selection] {0}")]
    Selection(#[from] SelectionError),
    #[error("[pilot_projection] {0}")]
    Pilot(#[from] PilotError),
    #[error("[footprints] {0}")]
    Footprint(#[from] FootprintError),
    #[error("[boundary_coverage] {0}")]
    Boundary(#[from] BoundaryError),
    #[error("[baseline_metrics] {0}")]
    Metric(#[from] MetricError),
    #[error("[experiments] {0}")]
    Experiment(String),
}

impl PipelineError {
    pub fn stage(&self) -> &'static str {
        match self {
            Self::Dataset(_) => "dataset",
            Self::Selection(_) => "feature_selection",
            Self::Pilot(_) => "pilot_projection",
            Self::Footprint(_) => "footprints",
            Self::Boundary(_) => "boundary_coverage",
            Self::Metric(_) => "baseline_metrics",
            Self::Experiment(_) => "experiments",
        }
    }
}

/// Resolved configuration for an analysis run; every field has a default so
/// a report can echo the exact values in effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct AnalysisConfig {
    pub seed: u64,
    /// Candidate cluster counts for feature clustering; empty means the
    /// default range 2..=min(10, n_features - 1).
    pub k_candidates: Vec<usize>,
    pub rf_trees: usize,
    pub cv_folds: usize,
    pub combo_cap: usize,
    pub pilot_restarts: usize,
    pub shannon_bins: usize,
    pub eps_formula: EpsFormula,
    pub boundary_corr_threshold: f64,
    pub ncd_exact_limit: usize,
    /// Per-feature bound overrides by feature name: [lower, upper].
    pub bounds: BTreeMap<String, [f64; 2]>,
    /// Allow timing-study sizes beyond the suite via resampling.
    pub augment: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            k_candidates: Vec::new(),
            rf_trees: 100,
            cv_folds: 5,
            combo_cap: 10_000,
            pilot_restarts: 5,
            shannon_bins: 10,
            eps_formula: EpsFormula::default(),
            boundary_corr_threshold: 0.7,
            ncd_exact_limit: 12,
            bounds: BTreeMap::new(),
            augment: false,
        }
    }
}

impl AnalysisConfig {
    pub fn selection(&self) -> SelectionConfig {
        SelectionConfig {
            k_candidates: if self.k_candidates.is_empty() {
                None
            } else {
                Some(self.k_candidates.clone())
            },
            rf_trees: self.rf_trees,
            cv_folds: self.cv_folds,
            combo_cap: self.combo_cap,
            seed: self.seed,
        }
    }
}

/// Everything the instance-space pipeline produces for one suite.
#[derive(Debug, Clone)]
pub struct InstanceSpace {
    pub selected: Vec<usize>,
    pub selected_names: Vec<String>,
    pub model: ProjectionModel,
    pub coords: Vec<[f64; 2]>,
    pub footprint: Footprint,
    pub bug_area: BugArea,
    pub hull: BoundaryHull,
    pub area_is: f64,
    pub area_bugs: f64,
    pub cov_is: f64,
    pub fraction_inside_hull: f64,
}

/// Run the full pipeline on one suite.
pub fn analyze_instance_space(
    suite: &TestSuite,
    config: &AnalysisConfig,
) -> Result<InstanceSpace, PipelineError> {
    let selected = select_features(suite, &config.selection())?;
    let selected_names: Vec<String> = selected
        .iter()
        .map(|&i| suite.feature_names()[i].clone())
        .collect();
    let sub = suite.select_features(&selected);

    let model = fit_pilot(
        sub.features(),
        suite.outcomes(),
        config.pilot_restarts,
        config.seed,
    )?;
    let coords = model.z.clone();

    let footprint = area_is_footprint(&coords, config.eps_formula)?;
    let bug_area = area_bugs_detail(&coords, suite.outcomes(), config.eps_formula)?;

    let observed = sub.observed_bounds();
    let mut lower = observed.lower.clone();
    let mut upper = observed.upper.clone();
    for (i, name) in selected_names.iter().enumerate() {
        if let Some(&[lo, hi]) = config.bounds.get(name) {
            lower[i] = lo;
            upper[i] = hi;
        }
    }
    let bounds = FeatureBounds::new(lower, upper)?;
    let corr = pearson_correlation(sub.features())?;
    let hull = boundary_hull(&model, &bounds, &corr, config.boundary_corr_threshold)?;
    let area_is = footprint.area;
    let cov_is = coverage(area_is, &hull)?;
    let fraction_inside_hull = hull.fraction_inside(&coords);

    Ok(InstanceSpace {
        selected,
        selected_names,
        model,
        coords,
        area_is,
        area_bugs: bug_area.area,
        cov_is,
        footprint,
        bug_area,
        hull,
        fraction_inside_hull,
    })
}
