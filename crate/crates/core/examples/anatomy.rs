//! Dissect area_bugs on individual stratified samples of the demo suite.

use adequacy::footprints::{area_bugs_detail, dbscan, dbscan_params};
use adequacy::{AnalysisConfig, EpsFormula, ExperimentPlan};

fn main() {
    let formula = match std::env::args().nth(1).as_deref() {
        Some("dimension-root") => EpsFormula::DimensionRoot,
        _ => EpsFormula::Paper,
    };
    let suite = adequacy::demo::demo_suite(10_000, 10, 42);
    let plan = ExperimentPlan {
        n_samples: 9,
        seed: 0,
        ..ExperimentPlan::default()
    };
    let config = AnalysisConfig {
        rf_trees: 50,
        cv_folds: 3,
        eps_formula: formula,
        ..AnalysisConfig::default()
    };
    let samples = adequacy::stratified_samples(&suite, &plan).unwrap();
    for (i, sample) in samples.iter().enumerate() {
        let mut cfg = config.clone();
        cfg.seed = adequacy::seeding::derive_seed(config.seed, i as u64);
        let space = adequacy::analyze_instance_space(sample, &cfg).unwrap();
        let detail = area_bugs_detail(&space.coords, sample.outcomes(), formula).unwrap();

        let bug_pts: Vec<[f64; 2]> = space
            .coords
            .iter()
            .zip(sample.outcomes())
            .filter(|(_, &y)| y == 1)
            .map(|(p, _)| *p)
            .collect();
        let (lo, hi) = adequacy::geometry::bounding_box(&bug_pts);
        let params = dbscan_params(bug_pts.len(), hi[0] - lo[0], hi[1] - lo[1], formula).unwrap();
        let labels = dbscan(&bug_pts, &params);
        let n_clusters = labels.iter().flatten().copied().max().map_or(0, |m| m + 1);
        let noise = labels.iter().filter(|l| l.is_none()).count();

        let svd = space.model.a.clone().svd(false, false);
        let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
        let (zlo, zhi) = adequacy::geometry::bounding_box(&space.coords);
        println!(
            "sample {i}: bugs={} selected={:?} | bug_fp={:.3} removed={:.3} area_bugs={:.3} | clusters={} noise={} eps={:.3} | area_is={:.3} | obj={:.1} sv=[{:.3},{:.3}] zrange=[{:.2},{:.2}] iters={}",
            sample.bug_count(),
            space.selected,
            detail.bug_footprint.area,
            detail.removed_area,
            detail.area,
            n_clusters,
            noise,
            params.eps,
            space.area_is,
            space.model.objective,
            sv[0],
            sv.get(1).copied().unwrap_or(0.0),
            zhi[0] - zlo[0],
            zhi[1] - zlo[1],
            space.model.objective_trace.len() / 2,
        );
    }
}
