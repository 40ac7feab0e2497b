//! Probe the correlation-study outcome on the demo suite: Spearman rho of
//! area_bugs (and friends) against bug count for a few master seeds.

use std::time::Instant;

use adequacy::{
    run_correlation_study, AnalysisConfig, EpsFormula, ExperimentPlan, MetricId,
};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seeds: Vec<u64> = args
        .first()
        .map_or_else(|| vec![0], |v| v.split(',').map(|s| s.parse().unwrap()).collect());
    let formula = match args.get(1).map(String::as_str) {
        Some("dimension-root") => EpsFormula::DimensionRoot,
        _ => EpsFormula::Paper,
    };
    let n_samples = args.get(2).map_or(30, |v| v.parse().unwrap());
    let sample_size = args.get(3).map_or(2500, |v| v.parse().unwrap());

    let suite = adequacy::demo::demo_suite(10_000, 10, 42);
    for seed in seeds {
        let plan = ExperimentPlan {
            sample_size,
            n_samples,
            seed,
            ..ExperimentPlan::default()
        };
        let config = AnalysisConfig {
            seed,
            rf_trees: 50,
            cv_folds: 3,
            eps_formula: formula,
            ..AnalysisConfig::default()
        };
        let metrics = [MetricId::AreaIs, MetricId::AreaBugs, MetricId::CovIs];
        let t = Instant::now();
        let report = run_correlation_study(&suite, &plan, &metrics, &config).unwrap();
        println!("seed {seed} ({formula:?}, {:?}):", t.elapsed());
        for row in &report.vs_bug_count {
            match &row.result {
                Some(r) => println!(
                    "  {} vs bug_count: rho={:.4} p={:.2e} sig={}",
                    row.metric, r.rho, r.p_value, r.significant
                ),
                None => println!("  {} vs bug_count: undefined", row.metric),
            }
        }
        print!("  bug counts: ");
        for s in report.samples.iter().take(8) {
            print!("{} ", s.bug_count);
        }
        println!();
        print!("  area_bugs:  ");
        for s in report.samples.iter().take(8) {
            print!("{:.3} ", s.values.get("area_bugs").copied().unwrap_or(f64::NAN));
        }
        println!();
    }
}
