//! Stage-by-stage timing of the instance-space pipeline on the demo suite.

use std::time::Instant;

use adequacy::selection::{cluster_features, enumerate_combinations, score_combination};
use adequacy::{AnalysisConfig, EpsFormula};

fn main() {
    let rows: usize = std::env::args()
        .nth(1)
        .map_or(10_000, |v| v.parse().expect("rows"));
    let suite = adequacy::demo::demo_suite(rows, 10, 42);
    let config = AnalysisConfig::default();

    let t = Instant::now();
    let clustering = cluster_features(&suite, &(2..=9).collect::<Vec<_>>(), 0).unwrap();
    println!("clustering: {:?} (k = {})", t.elapsed(), clustering.k);

    let combos = enumerate_combinations(&clustering, 10_000, 1);
    println!("combos: {}", combos.len());

    let t = Instant::now();
    let score = score_combination(&suite, &combos[0], 5, 100, 2).unwrap();
    println!(
        "one combo score: {:?} (cv_error {:.3})",
        t.elapsed(),
        score.cv_error
    );

    let t = Instant::now();
    let selected = adequacy::select_features(&suite, &config.selection()).unwrap();
    println!("full selection: {:?} ({selected:?})", t.elapsed());

    let sub = suite.select_features(&selected);
    let t = Instant::now();
    let model = adequacy::fit_pilot(sub.features(), suite.outcomes(), 5, 0).unwrap();
    println!("pilot: {:?} (objective {:.1})", t.elapsed(), model.objective);

    let coords = model.z.clone();
    let t = Instant::now();
    let a_is = adequacy::area_is(&coords, EpsFormula::Paper).unwrap();
    println!("area_is: {:?} ({a_is:.4})", t.elapsed());

    let t = Instant::now();
    let a_bugs = adequacy::area_bugs(&coords, suite.outcomes(), EpsFormula::Paper).unwrap();
    println!("area_bugs: {:?} ({a_bugs:.4})", t.elapsed());

    let t = Instant::now();
    let space = adequacy::analyze_instance_space(&suite, &config).unwrap();
    println!("whole pipeline: {:?}", t.elapsed());

    let t = Instant::now();
    let plots = adequacy::svg::render_standard_plots(&suite, &space);
    println!("plots: {:?} ({} files)", t.elapsed(), plots.len());

    let t = Instant::now();
    let _ = adequacy::metrics::euclidean_diversity(&suite).unwrap();
    println!("euclidean baseline: {:?}", t.elapsed());
}
