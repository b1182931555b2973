//! SHAP attributions: exact TreeSHAP for forests, permutation sampling for
//! any model, one-hot aggregation, rankings and CSV export.

mod attribution;
mod matrix;
mod treeshap;

pub use attribution::{aggregate_onehot, column_players, sampling_shap, tree_shap, variable_players, ShapRow};
pub use matrix::{
    explain_forest, explain_forest_all_classes, explain_sampling, instance_id, mean_abs_ranking, read_shap_matrix,
    write_shap_base, write_shap_summary, FeatureRanking, ShapMatrix, ShapTarget,
};
pub use treeshap::{tree_expected_value, tree_shap_forest, tree_shap_single, ClassAttributions};
