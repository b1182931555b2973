//! Codebook-driven ingestion of longitudinal survey extracts.
//!
//! The flow is `load_codebook` → `ingest_wide_csv` → `unroll_longitudinal`
//! → `filter_invalid_target` → `mark_missing`. All tables are immutable;
//! each step returns a new table.

mod codebook;
mod ingest;
mod reshape;
mod table;

pub use codebook::{
    load_codebook, read_codebook, Codebook, Kind, Role, ValidValues, VariableSpec, CODEBOOK_HEADER,
    DEFAULT_CLASS_EDGES,
};
pub use ingest::{ingest_wide_csv, read_wide_csv};
pub use reshape::{balanced_year_sample, filter_invalid_target, mark_missing, unroll_longitudinal};
pub use table::{
    long_layout, wide_column_name, wide_layout, Cell, LongRow, LongTable, WideColumn, WideRow,
    WideTable,
};
