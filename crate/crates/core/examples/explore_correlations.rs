//! Spearman correlations between features and correlation pruning.
//!
//!     cargo run --example explore_correlations

use income_panel::features::{correlation_matrix, prune_correlated};
use income_panel::harness::{load_cleaned, ExperimentConfig};

fn main() -> income_panel::Result<()> {
    let dir = tempfile::tempdir()?;
    income_panel::harness::write_synthetic(&Default::default(), 3, dir.path())?;
    let mut config = ExperimentConfig::default();
    config.set("codebook", dir.path().join("codebook.csv").to_str().unwrap())?;
    config.set("data", dir.path().join("data.csv").to_str().unwrap())?;

    let cleaned = load_cleaned(&config)?;
    let all = correlation_matrix(&cleaned.long);
    let names = all.names().to_vec();
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            if let Some(r) = all.get(i, j).filter(|r| r.abs() >= 0.5) {
                println!("{:>18} ~ {:<18} {r:+.3}", names[i], names[j]);
            }
        }
    }
    let features: Vec<String> = cleaned.codebook.features().map(|v| v.name.clone()).collect();
    let kept = prune_correlated(&all.restrict(&features), 0.8, &["degree".into()])?;
    let dropped: Vec<&String> = features.iter().filter(|f| !kept.contains(f)).collect();
    println!("pruning at |rho| >= 0.8 drops {dropped:?}");
    Ok(())
}
