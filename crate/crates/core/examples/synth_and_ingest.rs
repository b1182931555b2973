//! Generate a synthetic panel, then unroll and clean it the way every experiment does.
//!
//!     cargo run --example synth_and_ingest

use std::sync::Arc;

use income_panel::dataset::{filter_invalid_target, ingest_wide_csv, load_codebook, mark_missing, unroll_longitudinal};
use income_panel::features::{binned_targets, class_distribution};
use income_panel::harness::{write_synthetic, SynthSpec};

fn main() -> income_panel::Result<()> {
    let dir = tempfile::tempdir()?;
    let spec = SynthSpec { individuals: 1000, ..SynthSpec::default() };
    write_synthetic(&spec, 7, dir.path())?;

    let codebook = Arc::new(load_codebook(dir.path().join("codebook.csv"))?);
    let wide = ingest_wide_csv(dir.path().join("data.csv"), codebook)?;
    let long = unroll_longitudinal(&wide)?;
    let (valid, removed) = filter_invalid_target(&long);
    let clean = mark_missing(&valid);

    println!("{} individuals -> {} person-year rows", wide.len(), long.len());
    println!("dropped {removed} rows with an invalid income, {} remain", clean.len());
    let dist = class_distribution(&binned_targets(&clean)?)?;
    println!("income classes: {:.1}% / {:.1}% / {:.1}%", 100.0 * dist[0], 100.0 * dist[1], 100.0 * dist[2]);
    for row in clean.rows().iter().take(4) {
        let cells: Vec<String> = row.cells.iter().map(|c| c.render()).collect();
        println!("  {} {} [{}]", row.id, row.year, cells.join(","));
    }
    Ok(())
}
