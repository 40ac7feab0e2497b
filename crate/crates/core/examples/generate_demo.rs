//! Regenerate the bundled demo suite CSV.
//!
//! Usage: cargo run -p adequacy --example generate_demo -- [rows] [features] [seed] [path]

use adequacy::demo::demo_suite;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let rows: usize = args.first().map_or(10_000, |v| v.parse().expect("rows"));
    let features: usize = args.get(1).map_or(10, |v| v.parse().expect("features"));
    let seed: u64 = args.get(2).map_or(42, |v| v.parse().expect("seed"));
    let path = args
        .get(3)
        .map_or_else(|| "data/demo_suite.csv".to_string(), Clone::clone);
    let suite = demo_suite(rows, features, seed);
    suite.write_csv(std::path::Path::new(&path)).expect("write csv");
    println!(
        "wrote {path}: {} scenarios, {} features, {} buggy",
        suite.len(),
        suite.n_features(),
        suite.bug_count()
    );
}
