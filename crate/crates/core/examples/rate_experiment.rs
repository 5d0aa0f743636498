//! Run the three-term experiment from a JSON configuration.
//!
//! `cargo run --example rate_experiment -- configs/mm1.json`

use std::path::PathBuf;

use stein_queues::harness::{run_experiment, ExperimentConfig};

fn main() -> stein_queues::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/mm1.json")));
    let mut config = ExperimentConfig::from_file(&path)?;
    config.output = None;
    let report = run_experiment(&config)?;
    println!("{}", report.route);
    for r in &report.rows {
        println!(
            "n = {:4}: gap {:.4}, panel {:.4} ± {:.4}, stein {:.4}, total {:.4}",
            r.n, r.term1.mean, r.term2.distance, r.term2.se, r.stein_bound, r.total
        );
    }
    for v in &report.verdicts {
        println!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    println!("hash {}", report.hash);
    Ok(())
}
