//! Feature engineering: target binning, nominal recoding, Spearman
//! correlation analysis, correlation pruning and design-matrix encoding.

mod correlation;
mod design;
mod recode;
mod target;

pub use correlation::{average_ranks, correlation_matrix, prune_correlated, spearman, CorrelationMatrix};
pub use design::{encode_design_matrix, ColumnDescriptor, DesignEncoder, DesignMatrix, EncodeOptions, Encoding};
pub use recode::{
    apply_recodes, load_recode_map, read_recode_map, recode_nominal, resolve_maps, RecodeMap, RecodeRange,
    INDUSTRY_MAP, OCCUPATION_MAP,
};
pub use target::{
    bin_target, bin_target_with, binned_targets, class_counts, class_distribution, ClassLabel, NUM_CLASSES,
};
