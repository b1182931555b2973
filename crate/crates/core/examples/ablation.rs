//! Retrain without each feature in turn and report the accuracy change.
//!
//!     cargo run --release --example ablation

use income_panel::harness::{largest_drop, prepare, run_ablation, write_synthetic, ExperimentConfig, SynthSpec};

fn main() -> income_panel::Result<()> {
    let dir = tempfile::tempdir()?;
    write_synthetic(&SynthSpec { individuals: 1500, ..SynthSpec::default() }, 5, dir.path())?;
    let mut config = ExperimentConfig::default();
    config.set("codebook", dir.path().join("codebook.csv").to_str().unwrap())?;
    config.set("data", dir.path().join("data.csv").to_str().unwrap())?;
    config.set("seed", "5")?;
    config.set("forest.trees", "40")?;

    let bundle = run_ablation(&config)?;
    let full = bundle.results[0].report.accuracy;
    for r in &bundle.results {
        println!("{:<36} {:6.2}%  ({:+.2})", r.label, r.report.accuracy, r.report.accuracy - full);
    }
    let features = prepare(&config)?.features;
    println!("largest drop: {}", largest_drop(&bundle, &features, &config).unwrap_or_default());
    Ok(())
}
