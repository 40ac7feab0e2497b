//! Machine-readable analysis reports and the CSV summaries emitted next to
//! them. Report JSON is fully deterministic for a fixed seed: wall-clock
//! timings are written to separate artifacts, never into the report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::{AnalysisConfig, InstanceSpace};
use crate::dataset::TestSuite;
use crate::experiments::{MetricCorrelation, StudyReport, TimingCell};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteDescriptor {
    pub path: String,
    pub scenarios: usize,
    pub features: usize,
    pub bug_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TisaValues {
    pub area_is: f64,
    pub area_bugs: f64,
    pub cov_is: f64,
    /// Diagnostic: share of projected instances inside the boundary hull.
    pub fraction_inside_hull: f64,
}

/// Self-describing analysis report: every value is traceable to the echoed
/// config and master seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub tool: String,
    pub tool_version: String,
    pub seed: u64,
    pub suite: SuiteDescriptor,
    pub config: AnalysisConfig,
    pub selected_features: Vec<String>,
    pub tisa: TisaValues,
    /// Baseline metric values by name.
    pub baselines: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlations: Option<StudyReport>,
}

impl MetricReport {
    pub fn new(
        path: &str,
        suite: &TestSuite,
        config: &AnalysisConfig,
        space: &InstanceSpace,
        baselines: BTreeMap<String, f64>,
    ) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            suite: SuiteDescriptor {
                path: path.to_string(),
                scenarios: suite.len(),
                features: suite.n_features(),
                bug_count: suite.bug_count(),
            },
            config: config.clone(),
            selected_features: space.selected_names.clone(),
            tisa: TisaValues {
                area_is: space.area_is,
                area_bugs: space.area_bugs,
                cov_is: space.cov_is,
                fraction_inside_hull: space.fraction_inside_hull,
            },
            baselines,
            correlations: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x}"))
}

/// One row per metric and question: rho, p, significance, sample count,
/// and the median per-sample seconds for that metric.
pub fn correlations_csv(report: &StudyReport) -> String {
    let mut timing: BTreeMap<&str, f64> = BTreeMap::new();
    for t in &report.timings {
        timing.insert(t.metric.as_str(), t.median_seconds);
    }
    let mut out = String::from("question,metric,against,rho,p_value,significant,n,median_seconds\n");
    let push_rows = |question: &str, rows: &[MetricCorrelation], out: &mut String| {
        for row in rows {
            let (rho, p, sig, n) = match &row.result {
                Some(r) => (
                    Some(r.rho),
                    Some(r.p_value),
                    r.significant.to_string(),
                    r.n.to_string(),
                ),
                None => (None, None, "false".to_string(), "0".to_string()),
            };
            let _ = writeln!(
                out,
                "{question},{},{},{},{},{sig},{n},{}",
                row.metric,
                row.against,
                fmt_opt(rho),
                fmt_opt(p),
                timing.get(row.metric.as_str()).map_or_else(
                    || "".to_string(),
                    |s| format!("{s:.6}")
                ),
            );
        }
    };
    push_rows("rq1", &report.vs_bug_count, &mut out);
    push_rows("rq2", &report.area_bugs_vs_baselines, &mut out);
    out
}

/// Long-form timing table: metric, size, median seconds or timeout marker.
pub fn timings_csv(cells: &[TimingCell]) -> String {
    let mut out = String::from("metric,size,median_seconds,status\n");
    for cell in cells {
        let (value, status) = match (cell.median_seconds, cell.timed_out) {
            (Some(s), false) => (format!("{s:.6}"), "ok"),
            (Some(s), true) => (format!("{s:.6}"), "timeout"),
            (None, true) => (String::new(), "timeout"),
            (None, false) => (String::new(), "failed"),
        };
        let _ = writeln!(out, "{},{},{value},{status}", cell.metric, cell.size);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{CorrelationResult, ExperimentPlan, MetricTiming};

    #[test]
    fn report_json_is_deterministic_and_self_describing() {
        let suite = crate::demo::demo_suite(300, 6, 5);
        let config = AnalysisConfig {
            rf_trees: 20,
            cv_folds: 3,
            seed: 7,
            ..AnalysisConfig::default()
        };
        let space = crate::analysis::analyze_instance_space(&suite, &config).unwrap();
        let report = MetricReport::new("demo.csv", &suite, &config, &space, BTreeMap::new());
        let json = report.to_json();
        assert_eq!(json, report.to_json());
        assert!(json.contains("\"seed\": 7"));
        assert!(json.contains("\"rf-trees\": 20"));
        assert!(json.contains("area_is"));
        let parsed: MetricReport = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed.tisa.area_is, report.tisa.area_is);
    }

    #[test]
    fn correlation_csv_marks_undefined() {
        let report = StudyReport {
            plan: ExperimentPlan::default(),
            samples: vec![],
            vs_bug_count: vec![
                MetricCorrelation {
                    metric: "std".into(),
                    against: "bug_count".into(),
                    result: Some(CorrelationResult {
                        rho: 0.5,
                        p_value: 0.01,
                        n: 30,
                        significant: true,
                    }),
                    undefined_reason: None,
                },
                MetricCorrelation {
                    metric: "cov_is".into(),
                    against: "bug_count".into(),
                    result: None,
                    undefined_reason: Some("constant".into()),
                },
            ],
            area_bugs_vs_baselines: vec![],
            timings: vec![MetricTiming {
                metric: "std".into(),
                median_seconds: 0.001,
                mean_seconds: 0.001,
            }],
        };
        let csv = correlations_csv(&report);
        assert!(csv.contains("rq1,std,bug_count,0.5,0.01,true,30,0.001000"));
        assert!(csv.contains("rq1,cov_is,bug_count,undefined,undefined,false,0,"));
    }

    #[test]
    fn timings_csv_rows() {
        let cells = vec![
            TimingCell {
                metric: "std".into(),
                size: 500,
                median_seconds: Some(0.25),
                timed_out: false,
            },
            TimingCell {
                metric: "ncd".into(),
                size: 500,
                median_seconds: None,
                timed_out: true,
            },
        ];
        let csv = timings_csv(&cells);
        assert!(csv.contains("std,500,0.250000,ok"));
        assert!(csv.contains("ncd,500,,timeout"));
    }
}
