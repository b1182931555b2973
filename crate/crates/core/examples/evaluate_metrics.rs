//! Accuracy from a confusion matrix and one-vs-rest AUC from scores.
//!
//!     cargo run --example evaluate_metrics

use income_panel::eval::{accuracy, confusion_markdown, roc_auc_ovr, weighted_auc, ConfusionMatrix};

fn main() -> income_panel::Result<()> {
    let cm = ConfusionMatrix::from_counts([[2064, 299, 19], [473, 749, 75], [87, 180, 192]]);
    print!("{}", confusion_markdown(&cm, &["<50K", "50K-100K", ">=100K"]));
    println!("accuracy {:.4}% over {} rows", accuracy(&cm)?, cm.total());

    let scores = [0.9, 0.8, 0.8, 0.6, 0.4, 0.3, 0.2, 0.1];
    let positive = [true, true, false, true, false, false, true, false];
    let auc = roc_auc_ovr(&scores, &positive);
    println!("AUC with one tied pair: {auc:?}");
    let w = weighted_auc(&[auc, Some(0.7), None], &[0.5, 0.5, 0.0])?;
    println!("prevalence-weighted AUC: {w:.4}");
    Ok(())
}
