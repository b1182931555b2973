//! Majority baseline and the three learners on one shared split.
//!
//!     cargo run --release --example compare_models

use income_panel::harness::{run_baseline, run_model_comparison, write_synthetic, ExperimentConfig, SynthSpec};

fn main() -> income_panel::Result<()> {
    let dir = tempfile::tempdir()?;
    write_synthetic(&SynthSpec { individuals: 1500, ..SynthSpec::default() }, 1, dir.path())?;
    let mut config = ExperimentConfig::default();
    for (k, v) in [
        ("codebook", dir.path().join("codebook.csv").display().to_string()),
        ("data", dir.path().join("data.csv").display().to_string()),
        ("seed", "1".into()),
        ("mlp.epochs", "100".into()),
    ] {
        config.set(k, &v)?;
    }

    let baseline = run_baseline(&config)?;
    let compare = run_model_comparison(&config)?;
    for r in baseline.results.iter().chain(&compare.results) {
        println!("{:<14} accuracy {:6.2}%  weighted AUC {:.3}", r.label, r.report.accuracy, r.report.weighted_auc);
    }
    println!();
    print!("{}", compare.markdown());
    Ok(())
}
