//! Exact TreeSHAP attributions for a random forest and the mean |SHAP| ranking.
//!
//!     cargo run --release --example explain_forest

use income_panel::eval::split_rows;
use income_panel::explain::{explain_forest, mean_abs_ranking, ShapTarget};
use income_panel::harness::{prepare, write_synthetic, ExperimentConfig, SynthSpec};
use income_panel::learners::fit_forest;

fn main() -> income_panel::Result<()> {
    let dir = tempfile::tempdir()?;
    write_synthetic(&SynthSpec { individuals: 1200, ..SynthSpec::default() }, 8, dir.path())?;
    let mut config = ExperimentConfig::default();
    config.set("codebook", dir.path().join("codebook.csv").to_str().unwrap())?;
    config.set("data", dir.path().join("data.csv").to_str().unwrap())?;
    config.set("seed", "8")?;

    let m = prepare(&config)?.design(&config)?;
    let split = split_rows(&m, &config.split_spec()?)?;
    let forest = fit_forest(&m.select_rows(&split.train), &config.forest, 8)?;

    let rows: Vec<usize> = split.test.iter().copied().take(100).collect();
    let shap = explain_forest(&forest, &m, &rows, ShapTarget::Predicted)?;
    let worst = shap
        .rows
        .iter()
        .zip(&rows)
        .map(|(r, &i)| (r.reconstructed() - forest.scores(m.row(i))[r.class.index()]).abs())
        .fold(0.0, f64::max);
    println!("{} instances, max |base + sum(phi) - score| = {worst:.1e}", shap.len());
    for (name, v) in mean_abs_ranking(&shap)?.entries {
        println!("{name:>18} {v:.4}");
    }
    Ok(())
}
