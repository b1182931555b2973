//! Latest survey year alone versus an equal-size sample spread over all years.
//!
//!     cargo run --release --example longitudinal

use income_panel::harness::{run_longitudinal_compare, write_synthetic, ExperimentConfig, SynthSpec};

fn main() -> income_panel::Result<()> {
    let dir = tempfile::tempdir()?;
    write_synthetic(&SynthSpec { individuals: 3000, ..SynthSpec::default() }, 2, dir.path())?;
    let mut config = ExperimentConfig::default();
    config.set("codebook", dir.path().join("codebook.csv").to_str().unwrap())?;
    config.set("data", dir.path().join("data.csv").to_str().unwrap())?;
    config.set("seed", "4")?;

    let bundle = run_longitudinal_compare(&config)?;
    for r in &bundle.results {
        println!("{:<34} {:6.2}% on {} test rows", r.label, r.report.accuracy, r.report.test_size);
    }
    for note in &bundle.notes {
        println!("- {note}");
    }
    Ok(())
}
