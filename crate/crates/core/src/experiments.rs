//! Experiment machinery: stratified bug-ratio sampling, Spearman rank
//! correlation with significance, and the correlation/timing studies that
//! exercise every metric over sampled suites.

use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::analysis::{analyze_instance_space, AnalysisConfig, PipelineError};
use crate::dataset::TestSuite;
use crate::metrics::{
    euclidean_diversity, ncd_with_deadline, shannon_evenness, std_metric, Bzip2Compressor,
};
use crate::seeding::derive_seed;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error(
        "insufficient {stratum} scenarios for bug fraction {fraction}%: need {needed}, have {available}"
    )]
    InsufficientStratum {
        stratum: &'static str,
        fraction: f64,
        needed: usize,
        available: usize,
    },
    #[error("input lengths differ: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("correlation requires at least 3 observations, got {0}")]
    TooFewObservations(usize),
    #[error("correlation undefined: input vector is constant")]
    ConstantInput,
}

/// Sampling plan: `n_samples` suites of `sample_size` scenarios whose bug
/// fraction sweeps start..=stop by step (percent), wrapping back to start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub sample_size: usize,
    pub n_samples: usize,
    pub bug_fraction_start: f64,
    pub bug_fraction_stop: f64,
    pub bug_fraction_step: f64,
    pub seed: u64,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            sample_size: 2500,
            n_samples: 30,
            bug_fraction_start: 5.0,
            bug_fraction_stop: 75.0,
            bug_fraction_step: 5.0,
            seed: 0,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let (start, stop, step) = (
            self.bug_fraction_start,
            self.bug_fraction_stop,
            self.bug_fraction_step,
        );
        if !(start > 0.0 && start <= stop && stop <= 100.0) {
            return Err(ExperimentError::InvalidPlan(format!(
                "bug fractions must satisfy 0 < start <= stop <= 100, got {start}..{stop}"
            )));
        }
        if step <= 0.0 {
            return Err(ExperimentError::InvalidPlan(format!(
                "step must be positive, got {step}"
            )));
        }
        if self.sample_size < 1 || self.n_samples < 1 {
            return Err(ExperimentError::InvalidPlan(
                "sample_size and n_samples must be at least 1".to_string(),
            ));
        }
        Ok(())
    }

    /// The bug-fraction sweep, one entry per sample.
    pub fn bug_fractions(&self) -> Vec<f64> {
        let sweep_len = ((self.bug_fraction_stop - self.bug_fraction_start)
            / self.bug_fraction_step
            + 1e-9)
            .floor() as usize
            + 1;
        (0..self.n_samples)
            .map(|i| self.bug_fraction_start + (i % sweep_len) as f64 * self.bug_fraction_step)
            .collect()
    }
}

/// Draw the stratified samples: each sample takes round(n% of size) failing
/// scenarios and the rest safe ones, without replacement within a sample and
/// with fresh seeded draws across samples.
pub fn stratified_samples(
    suite: &TestSuite,
    plan: &ExperimentPlan,
) -> Result<Vec<TestSuite>, ExperimentError> {
    plan.validate()?;
    let failed: Vec<usize> = (0..suite.len())
        .filter(|&i| suite.outcomes()[i] == 1)
        .collect();
    let safe: Vec<usize> = (0..suite.len())
        .filter(|&i| suite.outcomes()[i] == 0)
        .collect();
    let fractions = plan.bug_fractions();
    // validate every fraction up front so the error names the first bad one
    for &fraction in &fractions {
        let n_buggy = (fraction * plan.sample_size as f64 / 100.0).round() as usize;
        let n_safe = plan.sample_size - n_buggy;
        if n_buggy > failed.len() {
            return Err(ExperimentError::InsufficientStratum {
                stratum: "failing",
                fraction,
                needed: n_buggy,
                available: failed.len(),
            });
        }
        if n_safe > safe.len() {
            return Err(ExperimentError::InsufficientStratum {
                stratum: "safe",
                fraction,
                needed: n_safe,
                available: safe.len(),
            });
        }
    }
    let samples = fractions
        .iter()
        .enumerate()
        .map(|(idx, &fraction)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(plan.seed, idx as u64));
            let n_buggy = (fraction * plan.sample_size as f64 / 100.0).round() as usize;
            let n_safe = plan.sample_size - n_buggy;
            let mut rows = draw_without_replacement(&failed, n_buggy, &mut rng);
            rows.extend(draw_without_replacement(&safe, n_safe, &mut rng));
            suite.select_rows(&rows)
        })
        .collect();
    Ok(samples)
}

fn draw_without_replacement(pool: &[usize], count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut indices: Vec<usize> = pool.to_vec();
    // partial Fisher-Yates: only the first `count` positions are needed
    for i in 0..count {
        let j = rng.gen_range(i..indices.len());
        indices.swap(i, j);
    }
    indices.truncate(count);
    indices
}

/// Spearman rank correlation with a two-sided t-approximation p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
    pub significant: bool,
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Ties receive average ranks; rho is the Pearson coefficient of the rank
/// vectors. A constant input leaves rho undefined and is reported as an
/// error rather than NaN.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult, ExperimentError> {
    if x.len() != y.len() {
        return Err(ExperimentError::LengthMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(ExperimentError::TooFewObservations(n));
    }
    if x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]) {
        return Err(ExperimentError::ConstantInput);
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let rho = crate::dataset::pearson(&rx, &ry).clamp(-1.0, 1.0);
    let p_value = if rho.abs() >= 1.0 - 1e-12 {
        0.0
    } else {
        let dof = (n - 2) as f64;
        let t = rho * (dof / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, dof).expect("valid dof");
        2.0 * (1.0 - dist.cdf(t.abs()))
    };
    Ok(CorrelationResult {
        rho,
        p_value,
        n,
        significant: p_value <= 0.05,
    })
}

/// Metrics the studies can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    Shannon,
    Euclidean,
    Ncd,
    Std,
    AreaIs,
    AreaBugs,
    CovIs,
}

impl MetricId {
    pub const ALL: [MetricId; 7] = [
        MetricId::Shannon,
        MetricId::Euclidean,
        MetricId::Ncd,
        MetricId::Std,
        MetricId::AreaIs,
        MetricId::AreaBugs,
        MetricId::CovIs,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MetricId::Shannon => "shannon",
            MetricId::Euclidean => "euclidean",
            MetricId::Ncd => "ncd",
            MetricId::Std => "std",
            MetricId::AreaIs => "area_is",
            MetricId::AreaBugs => "area_bugs",
            MetricId::CovIs => "cov_is",
        }
    }

    pub fn parse(name: &str) -> Option<Vec<MetricId>> {
        match name {
            "shannon" => Some(vec![MetricId::Shannon]),
            "euclidean" => Some(vec![MetricId::Euclidean]),
            "ncd" => Some(vec![MetricId::Ncd]),
            "std" => Some(vec![MetricId::Std]),
            "area_is" => Some(vec![MetricId::AreaIs]),
            "area_bugs" => Some(vec![MetricId::AreaBugs]),
            "cov_is" => Some(vec![MetricId::CovIs]),
            "tisa" => Some(vec![MetricId::AreaIs, MetricId::AreaBugs, MetricId::CovIs]),
            _ => None,
        }
    }

    pub fn is_tisa(&self) -> bool {
        matches!(self, MetricId::AreaIs | MetricId::AreaBugs | MetricId::CovIs)
    }
}

/// Per-sample metric values for one study run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_index: usize,
    pub bug_fraction: f64,
    pub bug_count: usize,
    /// Metric name -> value; a metric that failed on this sample is absent.
    pub values: std::collections::BTreeMap<String, f64>,
}

/// One correlation row: either a defined result or "undefined" when the
/// metric was constant across samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricCorrelation {
    pub metric: String,
    pub against: String,
    pub result: Option<CorrelationResult>,
    pub undefined_reason: Option<String>,
}

/// Deterministic study outcome plus per-metric timings (reported separately
/// because wall-clock readings are not reproducible).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyReport {
    pub plan: ExperimentPlan,
    pub samples: Vec<SampleRecord>,
    /// Spearman of each metric against the sample bug count.
    pub vs_bug_count: Vec<MetricCorrelation>,
    /// Spearman of area_bugs against each baseline metric.
    pub area_bugs_vs_baselines: Vec<MetricCorrelation>,
    #[serde(skip)]
    pub timings: Vec<MetricTiming>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricTiming {
    pub metric: String,
    pub median_seconds: f64,
    pub mean_seconds: f64,
}

fn compute_metric_values(
    sample: &TestSuite,
    metrics: &[MetricId],
    config: &AnalysisConfig,
    deadline: Option<Duration>,
) -> (std::collections::BTreeMap<String, f64>, Vec<(String, f64)>) {
    let mut values = std::collections::BTreeMap::new();
    let mut timings = Vec::new();
    let wants_tisa = metrics.iter().any(MetricId::is_tisa);
    if wants_tisa {
        let start = Instant::now();
        match analyze_instance_space(sample, config) {
            Ok(space) => {
                let elapsed = start.elapsed().as_secs_f64();
                for metric in metrics.iter().filter(|m| m.is_tisa()) {
                    let value = match metric {
                        MetricId::AreaIs => space.area_is,
                        MetricId::AreaBugs => space.area_bugs,
                        MetricId::CovIs => space.cov_is,
                        _ => unreachable!(),
                    };
                    values.insert(metric.name().to_string(), value);
                    // the pipeline is shared; each TISA metric reports it
                    timings.push((metric.name().to_string(), elapsed));
                }
            }
            Err(err) => {
                log::warn!("instance-space pipeline failed on a sample: {err}");
            }
        }
    }
    for metric in metrics.iter().filter(|m| !m.is_tisa()) {
        let start = Instant::now();
        let result = match metric {
            MetricId::Shannon => shannon_evenness(sample, config.shannon_bins).map(|v| v.value),
            MetricId::Euclidean => euclidean_diversity(sample).map(|v| v.value),
            MetricId::Std => std_metric(sample).map(|v| v.value),
            MetricId::Ncd => ncd_with_deadline(
                sample,
                &Bzip2Compressor,
                config.ncd_exact_limit,
                deadline,
            )
            .map(|v| v.value),
            _ => unreachable!(),
        };
        match result {
            Ok(value) => {
                values.insert(metric.name().to_string(), value);
                timings.push((metric.name().to_string(), start.elapsed().as_secs_f64()));
            }
            Err(err) => log::warn!("metric {} failed on a sample: {err}", metric.name()),
        }
    }
    (values, timings)
}

fn correlate(
    metric: &str,
    against: &str,
    pairs: &[(f64, f64)],
) -> MetricCorrelation {
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    match spearman(&xs, &ys) {
        Ok(result) => MetricCorrelation {
            metric: metric.to_string(),
            against: against.to_string(),
            result: Some(result),
            undefined_reason: None,
        },
        Err(err) => MetricCorrelation {
            metric: metric.to_string(),
            against: against.to_string(),
            result: None,
            undefined_reason: Some(err.to_string()),
        },
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Run the sampling plan, compute every requested metric per sample, and
/// correlate metrics against bug counts and area_bugs against baselines.
/// A metric failing on one sample is recorded as missing, not fatal.
pub fn run_correlation_study(
    suite: &TestSuite,
    plan: &ExperimentPlan,
    metrics: &[MetricId],
    config: &AnalysisConfig,
) -> Result<StudyReport, PipelineError> {
    let samples = stratified_samples(suite, plan)
        .map_err(|e| PipelineError::Experiment(e.to_string()))?;
    let fractions = plan.bug_fractions();
    let per_sample: Vec<(SampleRecord, Vec<(String, f64)>)> = samples
        .par_iter()
        .enumerate()
        .map(|(idx, sample)| {
            let mut sample_config = config.clone();
            sample_config.seed = derive_seed(config.seed, idx as u64);
            let (values, timings) = compute_metric_values(sample, metrics, &sample_config, None);
            (
                SampleRecord {
                    sample_index: idx,
                    bug_fraction: fractions[idx],
                    bug_count: sample.bug_count(),
                    values,
                },
                timings,
            )
        })
        .collect();

    let mut records = Vec::with_capacity(per_sample.len());
    let mut timing_map: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    for (record, timings) in per_sample {
        for (name, secs) in timings {
            timing_map.entry(name).or_default().push(secs);
        }
        records.push(record);
    }

    let mut vs_bug_count = Vec::new();
    for metric in metrics {
        let pairs: Vec<(f64, f64)> = records
            .iter()
            .filter_map(|r| {
                r.values
                    .get(metric.name())
                    .map(|&v| (v, r.bug_count as f64))
            })
            .collect();
        vs_bug_count.push(correlate(metric.name(), "bug_count", &pairs));
    }

    let mut area_bugs_vs_baselines = Vec::new();
    if metrics.contains(&MetricId::AreaBugs) {
        for baseline in metrics.iter().filter(|m| !m.is_tisa()) {
            let pairs: Vec<(f64, f64)> = records
                .iter()
                .filter_map(|r| {
                    match (r.values.get("area_bugs"), r.values.get(baseline.name())) {
                        (Some(&a), Some(&b)) => Some((a, b)),
                        _ => None,
                    }
                })
                .collect();
            area_bugs_vs_baselines.push(correlate("area_bugs", baseline.name(), &pairs));
        }
    }

    let timings = timing_map
        .into_iter()
        .map(|(metric, secs)| MetricTiming {
            metric,
            mean_seconds: secs.iter().sum::<f64>() / secs.len() as f64,
            median_seconds: median(secs),
        })
        .collect();

    Ok(StudyReport {
        plan: plan.clone(),
        samples: records,
        vs_bug_count,
        area_bugs_vs_baselines,
        timings,
    })
}

/// One cell of the timing table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingCell {
    pub metric: String,
    pub size: usize,
    /// Median of 3 runs, absent when the cell timed out.
    pub median_seconds: Option<f64>,
    pub timed_out: bool,
}

/// Measure median wall-clock of 3 runs per metric and sample size. Cells run
/// serially so measurements do not contend. TISA timing covers instance-space
/// generation, metric computation, and plot rendering. NCD cells abort at
/// `cell_timeout` and are recorded as timed out.
pub fn run_timing_study(
    suite: &TestSuite,
    sizes: &[usize],
    metrics: &[MetricId],
    seed: u64,
    config: &AnalysisConfig,
    cell_timeout: Duration,
) -> Result<Vec<TimingCell>, PipelineError> {
    let mut cells = Vec::new();
    for (size_idx, &size) in sizes.iter().enumerate() {
        if size > suite.len() && !config.augment {
            return Err(PipelineError::Experiment(format!(
                "size {size} exceeds the suite ({} scenarios); enable augment to resample",
                suite.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, size_idx as u64));
        let rows: Vec<usize> = if size <= suite.len() {
            let all: Vec<usize> = (0..suite.len()).collect();
            draw_without_replacement(&all, size, &mut rng)
        } else {
            (0..size).map(|_| rng.gen_range(0..suite.len())).collect()
        };
        let sample = suite.select_rows(&rows);
        let mut tisa_done = false;
        for metric in metrics {
            // the pipeline produces all three instance-space metrics at
            // once, so they share a single timing cell labelled "tisa"
            if metric.is_tisa() {
                if tisa_done {
                    continue;
                }
                tisa_done = true;
            }
            let label = if metric.is_tisa() { "tisa" } else { metric.name() };
            let mut runs = Vec::new();
            let mut timed_out = false;
            for run in 0..3 {
                let mut run_config = config.clone();
                run_config.seed = derive_seed(seed, (size_idx * 101 + run) as u64);
                let start = Instant::now();
                let outcome: Result<(), ()> = if metric.is_tisa() {
                    match analyze_instance_space(&sample, &run_config) {
                        Ok(space) => {
                            // plot generation is part of the measured work
                            let _plots = crate::svg::render_standard_plots(&sample, &space);
                            Ok(())
                        }
                        Err(_) => Err(()),
                    }
                } else {
                    let r = match metric {
                        MetricId::Shannon => {
                            shannon_evenness(&sample, run_config.shannon_bins).map(|_| ())
                        }
                        MetricId::Euclidean => euclidean_diversity(&sample).map(|_| ()),
                        MetricId::Std => std_metric(&sample).map(|_| ()),
                        MetricId::Ncd => ncd_with_deadline(
                            &sample,
                            &Bzip2Compressor,
                            run_config.ncd_exact_limit,
                            Some(cell_timeout),
                        )
                        .map(|_| ()),
                        _ => unreachable!(),
                    };
                    r.map_err(|e| {
                        if matches!(e, crate::metrics::MetricError::DeadlineExceeded) {
                            timed_out = true;
                        }
                    })
                };
                if outcome.is_err() {
                    break;
                }
                runs.push(start.elapsed().as_secs_f64());
                if start.elapsed() > cell_timeout {
                    timed_out = true;
                    break;
                }
            }
            cells.push(TimingCell {
                metric: label.to_string(),
                size,
                median_seconds: if runs.len() == 3 { Some(median(runs)) } else { None },
                timed_out,
            });
        }
    }
    Ok(cells)
}
