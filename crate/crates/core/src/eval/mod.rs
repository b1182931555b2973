//! Train/test splitting and scoring: accuracy, confusion matrix and ROC AUC.

mod metrics;
mod report;
mod split;

pub use metrics::{accuracy, confusion, roc_auc_ovr, weighted_auc, ConfusionMatrix};
pub use report::{
    confusion_markdown, evaluate, evaluate_fitted, markdown_table, score_predictions, EvalReport,
};
pub use split::{percentage_split, percentage_split_grouped, split_rows, Split, SplitSpec};
