//! Implementations of the CLI commands.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use adequacy::boundary::BoundaryHull;
use adequacy::metrics::{
    euclidean_diversity, ncd_with_deadline, shannon_evenness, std_metric, Bzip2Compressor,
};
use adequacy::report::{correlations_csv, timings_csv};
use adequacy::svg::{render_standard_plots, scatter_svg, Coloring};
use adequacy::{
    analyze_instance_space, load_suite, run_correlation_study, run_timing_study, stratified_samples,
    AnalysisConfig, ExperimentPlan, MetricId, MetricReport, ProjectionModel, TestSuite,
};

use crate::{config, AppError, Cli, Command, Format, PlanArgs, Question};

/// Suites larger than this skip NCD during `analyze`: the greedy subset
/// descent costs on the order of n^3 compressions, which the timing study
/// demonstrates instead of the analysis path.
const NCD_ANALYZE_LIMIT: usize = 64;

const VALID_METRICS: &str = "shannon, euclidean, ncd, std, area_is, area_bugs, cov_is, tisa";

pub fn run(cli: Cli) -> Result<(), AppError> {
    fs::create_dir_all(&cli.out_dir)?;
    match &cli.command {
        Command::Analyze {
            suite,
            outcome_column,
            overrides,
        } => {
            let config = config::apply_overrides(
                config::load(cli.config.as_deref())?,
                cli.seed,
                overrides,
            )?;
            config::echo(&config);
            cmd_analyze(suite, outcome_column, &config, &cli)
        }
        Command::Metrics {
            suite,
            metric,
            outcome_column,
            overrides,
        } => {
            let config = config::apply_overrides(
                config::load(cli.config.as_deref())?,
                cli.seed,
                overrides,
            )?;
            config::echo(&config);
            cmd_metrics(suite, metric, outcome_column, &config, &cli)
        }
        Command::Sample {
            suite,
            outcome_column,
            plan,
        } => {
            let config = config::apply_overrides(
                config::load(cli.config.as_deref())?,
                cli.seed,
                &Default::default(),
            )?;
            config::echo(&config);
            cmd_sample(suite, outcome_column, plan, &config, &cli)
        }
        Command::Experiment {
            suite,
            question,
            outcome_column,
            plan,
            metrics,
            sizes,
            timeout,
            overrides,
        } => {
            let config = config::apply_overrides(
                config::load(cli.config.as_deref())?,
                cli.seed,
                overrides,
            )?;
            config::echo(&config);
            match question {
                Question::Rq1 | Question::Rq2 => cmd_correlation(
                    suite,
                    outcome_column,
                    plan,
                    metrics.as_deref(),
                    *question,
                    &config,
                    &cli,
                ),
                Question::Rq3 => cmd_timing(
                    suite,
                    outcome_column,
                    sizes.as_deref(),
                    metrics.as_deref(),
                    *timeout,
                    &config,
                    &cli,
                ),
            }
        }
        Command::Bench {
            suite,
            sizes,
            metrics,
            outcome_column,
            timeout,
            overrides,
        } => {
            let config = config::apply_overrides(
                config::load(cli.config.as_deref())?,
                cli.seed,
                overrides,
            )?;
            config::echo(&config);
            cmd_timing(
                suite,
                outcome_column,
                Some(sizes),
                metrics.as_deref(),
                *timeout,
                &config,
                &cli,
            )
        }
        Command::Plot {
            suite,
            model,
            color,
            features,
            hull,
            outcome_column,
            out,
        } => cmd_plot(
            suite,
            model,
            color,
            features.as_deref(),
            hull.as_deref(),
            outcome_column,
            out.as_deref(),
            &cli,
        ),
    }
}

fn parse_metric_names(names: &[String]) -> Result<Vec<MetricId>, AppError> {
    let mut out: Vec<MetricId> = Vec::new();
    for name in names {
        let Some(ids) = MetricId::parse(name) else {
            return Err(AppError::Usage(format!(
                "unknown metric '{name}'; valid names: {VALID_METRICS}"
            )));
        };
        for id in ids {
            if !out.contains(&id) {
                out.push(id);
            }
        }
    }
    Ok(out)
}

fn plan_from_args(args: &PlanArgs, seed: u64) -> Result<ExperimentPlan, AppError> {
    let plan = ExperimentPlan {
        sample_size: args.sample_size,
        n_samples: args.n_samples,
        bug_fraction_start: args.bug_start,
        bug_fraction_stop: args.bug_stop,
        bug_fraction_step: args.bug_step,
        seed,
    };
    plan.validate()
        .map_err(|e| AppError::Usage(e.to_string()))?;
    Ok(plan)
}

fn write_artifact(out_dir: &Path, name: &str, contents: &str) -> Result<PathBuf, AppError> {
    let path = out_dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn compute_baselines(
    suite: &TestSuite,
    config: &AnalysisConfig,
    include_ncd: bool,
) -> Result<BTreeMap<String, f64>, AppError> {
    let mut baselines = BTreeMap::new();
    let shannon =
        shannon_evenness(suite, config.shannon_bins).map_err(adequacy::PipelineError::from)?;
    baselines.insert("shannon".to_string(), shannon.value);
    let euclid = euclidean_diversity(suite).map_err(adequacy::PipelineError::from)?;
    baselines.insert("euclidean".to_string(), euclid.value);
    let std = std_metric(suite).map_err(adequacy::PipelineError::from)?;
    baselines.insert("std".to_string(), std.value);
    if include_ncd {
        if suite.len() <= NCD_ANALYZE_LIMIT {
            let ncd = ncd_with_deadline(suite, &Bzip2Compressor, config.ncd_exact_limit, None)
                .map_err(adequacy::PipelineError::from)?;
            baselines.insert("ncd".to_string(), ncd.value);
        } else {
            log::warn!(
                "skipping ncd for {} scenarios (> {NCD_ANALYZE_LIMIT}); request it explicitly via `metrics --metric ncd`",
                suite.len()
            );
        }
    }
    Ok(baselines)
}

fn cmd_analyze(
    suite_path: &Path,
    outcome_column: &str,
    config: &AnalysisConfig,
    cli: &Cli,
) -> Result<(), AppError> {
    let suite = load_suite(suite_path, outcome_column)?;
    let space = analyze_instance_space(&suite, config)?;
    let baselines = compute_baselines(&suite, config, true)?;
    let report = MetricReport::new(
        &suite_path.display().to_string(),
        &suite,
        config,
        &space,
        baselines,
    );

    let mut written = Vec::new();
    written.push(write_artifact(&cli.out_dir, "report.json", &report.to_json())?);
    written.push(write_artifact(&cli.out_dir, "model.json", &space.model.to_json())?);
    written.push(write_artifact(&cli.out_dir, "hull.json", &space.hull.to_json())?);
    let footprints = serde_json::json!({
        "instance_space": space.footprint,
        "bugs": space.bug_area.bug_footprint,
        "bugs_removed_area": space.bug_area.removed_area,
    });
    written.push(write_artifact(
        &cli.out_dir,
        "footprints.json",
        &serde_json::to_string_pretty(&footprints).expect("footprint serialization"),
    )?);
    for (name, svg) in render_standard_plots(&suite, &space) {
        written.push(write_artifact(&cli.out_dir, &name, &svg)?);
    }

    match cli.format {
        Format::Json => println!("{}", report.to_json()),
        _ => {
            println!("selected features: {}", report.selected_features.join(", "));
            println!("area_is   = {}", report.tisa.area_is);
            println!("area_bugs = {}", report.tisa.area_bugs);
            println!("cov_is    = {}%", report.tisa.cov_is);
            println!(
                "fraction of instances inside boundary hull: {}",
                report.tisa.fraction_inside_hull
            );
            for (name, value) in &report.baselines {
                println!("{name} = {value}");
            }
        }
    }
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_metrics(
    suite_path: &Path,
    metric_names: &[String],
    outcome_column: &str,
    config: &AnalysisConfig,
    cli: &Cli,
) -> Result<(), AppError> {
    let metrics = parse_metric_names(metric_names)?;
    let suite = load_suite(suite_path, outcome_column)?;
    let mut values: BTreeMap<String, f64> = BTreeMap::new();
    if metrics.iter().any(MetricId::is_tisa) {
        let space = analyze_instance_space(&suite, config)?;
        for id in metrics.iter().filter(|m| m.is_tisa()) {
            let value = match id {
                MetricId::AreaIs => space.area_is,
                MetricId::AreaBugs => space.area_bugs,
                MetricId::CovIs => space.cov_is,
                _ => unreachable!(),
            };
            values.insert(id.name().to_string(), value);
        }
    }
    for id in metrics.iter().filter(|m| !m.is_tisa()) {
        let value = match id {
            MetricId::Shannon => shannon_evenness(&suite, config.shannon_bins)
                .map_err(adequacy::PipelineError::from)?
                .value,
            MetricId::Euclidean => euclidean_diversity(&suite)
                .map_err(adequacy::PipelineError::from)?
                .value,
            MetricId::Std => std_metric(&suite)
                .map_err(adequacy::PipelineError::from)?
                .value,
            MetricId::Ncd => {
                ncd_with_deadline(&suite, &Bzip2Compressor, config.ncd_exact_limit, None)
                    .map_err(adequacy::PipelineError::from)?
                    .value
            }
            _ => unreachable!(),
        };
        values.insert(id.name().to_string(), value);
    }
    match cli.format {
        Format::Json => {
            println!(
                "{}",
                serde_json::to_string_pretty(&values).expect("metric serialization")
            );
        }
        _ => {
            // preserve the requested order in the printout
            for id in &metrics {
                println!("{} = {}", id.name(), values[id.name()]);
            }
        }
    }
    Ok(())
}

fn cmd_sample(
    suite_path: &Path,
    outcome_column: &str,
    plan_args: &PlanArgs,
    config: &AnalysisConfig,
    cli: &Cli,
) -> Result<(), AppError> {
    let plan = plan_from_args(plan_args, config.seed)?;
    let suite = load_suite(suite_path, outcome_column)?;
    let samples = stratified_samples(&suite, &plan).map_err(|e| AppError::Stage {
        stage: "experiments",
        message: e.to_string(),
    })?;
    for (i, sample) in samples.iter().enumerate() {
        let name = format!("sample_{i:03}.csv");
        let path = cli.out_dir.join(&name);
        sample.write_csv(&path)?;
        println!(
            "{}: {} scenarios, {} buggy",
            path.display(),
            sample.len(),
            sample.bug_count()
        );
    }
    Ok(())
}

fn default_study_metrics() -> Vec<MetricId> {
    vec![
        MetricId::Shannon,
        MetricId::Euclidean,
        MetricId::Std,
        MetricId::AreaIs,
        MetricId::AreaBugs,
        MetricId::CovIs,
    ]
}

fn cmd_correlation(
    suite_path: &Path,
    outcome_column: &str,
    plan_args: &PlanArgs,
    metric_names: Option<&[String]>,
    question: Question,
    config: &AnalysisConfig,
    cli: &Cli,
) -> Result<(), AppError> {
    let plan = plan_from_args(plan_args, config.seed)?;
    let metrics = match metric_names {
        Some(names) => parse_metric_names(names)?,
        None => default_study_metrics(),
    };
    let suite = load_suite(suite_path, outcome_column)?;
    let report = run_correlation_study(&suite, &plan, &metrics, config)?;

    let json = serde_json::to_string_pretty(&report).expect("study serialization");
    write_artifact(&cli.out_dir, "report.json", &json)?;
    let csv = correlations_csv(&report);
    write_artifact(&cli.out_dir, "correlations.csv", &csv)?;

    let rows = match question {
        Question::Rq1 => &report.vs_bug_count,
        _ => &report.area_bugs_vs_baselines,
    };
    match cli.format {
        Format::Csv => print!("{csv}"),
        Format::Json => println!("{json}"),
        Format::Text => {
            for row in rows {
                match &row.result {
                    Some(r) => println!(
                        "{} vs {}: rho = {:.4}, p = {:.4}, significant = {}",
                        row.metric, row.against, r.rho, r.p_value, r.significant
                    ),
                    None => println!(
                        "{} vs {}: undefined ({})",
                        row.metric,
                        row.against,
                        row.undefined_reason.as_deref().unwrap_or("")
                    ),
                }
            }
        }
    }
    eprintln!("wrote {}", cli.out_dir.join("report.json").display());
    eprintln!("wrote {}", cli.out_dir.join("correlations.csv").display());
    Ok(())
}

const DEFAULT_SIZES: [usize; 8] = [500, 1000, 1500, 2000, 2500, 3000, 5000, 10000];

fn cmd_timing(
    suite_path: &Path,
    outcome_column: &str,
    sizes: Option<&[usize]>,
    metric_names: Option<&[String]>,
    timeout_secs: u64,
    config: &AnalysisConfig,
    cli: &Cli,
) -> Result<(), AppError> {
    let metrics = match metric_names {
        Some(names) => parse_metric_names(names)?,
        None => default_study_metrics(),
    };
    let sizes: Vec<usize> = sizes.map_or_else(|| DEFAULT_SIZES.to_vec(), <[usize]>::to_vec);
    let suite = load_suite(suite_path, outcome_column)?;
    let cells = run_timing_study(
        &suite,
        &sizes,
        &metrics,
        config.seed,
        config,
        Duration::from_secs(timeout_secs),
    )?;
    let csv = timings_csv(&cells);
    write_artifact(&cli.out_dir, "timings.csv", &csv)?;
    match cli.format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&cells).expect("timing serialization")
        ),
        _ => print!("{csv}"),
    }
    eprintln!("wrote {}", cli.out_dir.join("timings.csv").display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_plot(
    suite_path: &Path,
    model_path: &Path,
    color: &str,
    features: Option<&[String]>,
    hull_path: Option<&Path>,
    outcome_column: &str,
    out: Option<&Path>,
    cli: &Cli,
) -> Result<(), AppError> {
    let suite = load_suite(suite_path, outcome_column)?;
    let model_text = fs::read_to_string(model_path)?;
    let model = ProjectionModel::from_json(&model_text).map_err(|e| AppError::Stage {
        stage: "pilot_projection",
        message: format!("invalid model file: {e}"),
    })?;

    let feature_indices: Vec<usize> = match features {
        Some(names) => names
            .iter()
            .map(|n| {
                suite
                    .feature_names()
                    .iter()
                    .position(|f| f == n)
                    .ok_or_else(|| AppError::Usage(format!("unknown feature '{n}'")))
            })
            .collect::<Result<_, _>>()?,
        None => (0..suite.n_features()).collect(),
    };
    let sub = suite.select_features(&feature_indices);
    let coords = adequacy::project(&model, sub.features())
        .map_err(|e| AppError::Stage {
            stage: "pilot_projection",
            message: e.to_string(),
        })?;

    let hull: Option<BoundaryHull> = match hull_path {
        Some(path) => Some(
            serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| AppError::Stage {
                stage: "boundary_coverage",
                message: format!("invalid hull file: {e}"),
            })?,
        ),
        None => None,
    };

    let feature_values;
    let coloring = if color == "outcome" {
        Coloring::Outcome(suite.outcomes())
    } else if let Some(name) = color.strip_prefix("feature:") {
        let idx = suite
            .feature_names()
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| AppError::Usage(format!("unknown feature '{name}'")))?;
        feature_values = suite.column(idx);
        Coloring::Feature {
            name,
            values: &feature_values,
        }
    } else {
        return Err(AppError::Usage(format!(
            "unknown coloring '{color}' (expected outcome or feature:<name>)"
        )));
    };

    let svg = scatter_svg(&coords, &coloring, hull.as_ref(), None, "Instance space");
    let out_path = out.map_or_else(|| cli.out_dir.join("plot.svg"), Path::to_path_buf);
    fs::write(&out_path, svg)?;
    eprintln!("wrote {}", out_path.display());
    Ok(())
}
