//! Train each learner, write it to a text model file and reload it.
//!
//!     cargo run --release --example save_load_model

use income_panel::features::{ClassLabel, DesignMatrix};
use income_panel::learners::{load_model, predict_matrix, save_model, ForestConfig, MlpConfig, ModelSpec, SvmConfig};

fn main() -> income_panel::Result<()> {
    let rows: Vec<Vec<f64>> = (0..120).map(|i| vec![(i % 12) as f64, (i / 12) as f64, ((i * 7) % 5) as f64]).collect();
    let targets = rows.iter().map(|r| ClassLabel::from_index(((r[0] + r[1]) / 8.0) as usize % 3)).collect();
    let m = DesignMatrix::from_rows(&rows, targets)?;
    let dir = tempfile::tempdir()?;

    for spec in [
        ModelSpec::Majority,
        ModelSpec::Forest(ForestConfig { trees: 20, ..Default::default() }),
        ModelSpec::Svm(SvmConfig::default()),
        ModelSpec::Mlp(MlpConfig { epochs: 200, ..Default::default() }),
    ] {
        let model = spec.fit(&m, 3)?;
        let path = dir.path().join(format!("{}.model", spec.name().replace(' ', "_")));
        save_model(&model, &path)?;
        let back = load_model(&path)?;
        let same = predict_matrix(&back, &m)? == predict_matrix(&model, &m)?;
        let size = std::fs::metadata(&path)?.len();
        println!("{:<14} {size:>7} bytes, identical predictions after reload: {same}", spec.name());
    }
    Ok(())
}
