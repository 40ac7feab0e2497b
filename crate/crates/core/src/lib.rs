//! Black-box test-suite adequacy measurement. The library ingests scenario
//! suites with pass/fail outcomes, computes four baseline diversity metrics
//! (Shannon evenness, Euclidean diversity, multiset compression distance,
//! and the standard-deviation norm), and builds a 2D instance space -
//! impactful-feature selection, a linear projection fit by alternating
//! least squares, density-based footprints and a correlation-pruned
//! boundary - from which it derives the instance-space adequacy metrics
//! area_is, area_bugs and cov_is, plus sampling, correlation and timing
//! experiment harnesses.

pub mod analysis;
pub mod boundary;
pub mod dataset;
pub mod demo;
pub mod experiments;
pub mod footprints;
pub mod geometry;
pub mod metrics;
pub mod pilot;
pub mod report;
pub mod seeding;
pub mod selection;
pub mod svg;

pub use analysis::{analyze_instance_space, AnalysisConfig, InstanceSpace, PipelineError};
pub use dataset::{
    load_suite, minmax_normalize, pearson_correlation, CorrelationMatrix, DatasetError,
    FeatureBounds, TestSuite,
};
pub use experiments::{
    run_correlation_study, run_timing_study, spearman, stratified_samples, CorrelationResult,
    ExperimentPlan, MetricId, StudyReport,
};
pub use footprints::{
    area_bugs, area_is, dbscan, dbscan_params, footprint, DbscanParams, EpsFormula, Footprint,
};
pub use pilot::{fit_pilot, pilot_objective, project, ProjectionModel};
pub use report::MetricReport;
pub use selection::{
    cluster_features, enumerate_combinations, score_combination, select_features,
    CombinationScore, FeatureClustering, SelectionConfig,
};
