//! Config-driven data preparation shared by every experiment.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use crate::dataset::{
    filter_invalid_target, ingest_wide_csv, load_codebook, mark_missing, unroll_longitudinal, Codebook, LongTable,
    Role,
};
use crate::error::{Error, Result};
use crate::features::{
    apply_recodes, correlation_matrix, encode_design_matrix, prune_correlated, resolve_maps, CorrelationMatrix,
    DesignMatrix,
};

use super::config::ExperimentConfig;

/// Cleaned long table plus ingestion counts.
#[derive(Debug, Clone)]
pub struct Cleaned {
    pub codebook: Arc<Codebook>,
    pub wide_rows: usize,
    pub long_rows: usize,
    pub removed_invalid: usize,
    /// Present codes outside the recode map, per recoded variable.
    pub uncovered: BTreeMap<String, usize>,
    pub long: LongTable,
}

/// [`Cleaned`] data with the feature set chosen.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub cleaned: Cleaned,
    /// Spearman matrix over every long column, target included.
    pub correlation: CorrelationMatrix,
    /// Surviving features in codebook order.
    pub features: Vec<String>,
    /// Features removed by correlation pruning.
    pub pruned: Vec<String>,
}

impl Prepared {
    pub fn long(&self) -> &LongTable {
        &self.cleaned.long
    }

    /// Design matrix over the surviving features.
    pub fn design(&self, config: &ExperimentConfig) -> Result<DesignMatrix> {
        self.design_for(self.long(), config)
    }

    /// Design matrix of another table (a subsample of this one) over the same features.
    pub fn design_for(&self, long: &LongTable, config: &ExperimentConfig) -> Result<DesignMatrix> {
        encode_design_matrix(long, &self.features, config.encode)
    }
}

fn required(p: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    p.clone()
        .ok_or_else(|| Error::Config(format!("no {what} given (`{what} = PATH` or --{what})")))
}

/// Ingest, unroll, drop invalid targets, mark missing values and recode.
pub fn load_cleaned(config: &ExperimentConfig) -> Result<Cleaned> {
    let codebook = Arc::new(load_codebook(required(&config.codebook, "codebook")?)?);
    let wide = ingest_wide_csv(required(&config.data, "data")?, codebook.clone())?;
    let long = unroll_longitudinal(&wide)?;
    let long_rows = long.len();
    let (long, removed_invalid) = filter_invalid_target(&long);
    let long = mark_missing(&long);
    let maps = resolve_maps(&long, &config.recode_files)?;
    let (long, uncovered) = apply_recodes(&long, &maps)?;
    Ok(Cleaned { codebook, wide_rows: wide.len(), long_rows, removed_invalid, uncovered, long })
}

/// Feature selection on cleaned data: exclusions first, then correlation pruning.
pub fn select_features(cleaned: Cleaned, config: &ExperimentConfig) -> Result<Prepared> {
    let cb = &cleaned.codebook;
    for name in config.exclude.iter().chain(&config.keep) {
        match cb.get(name) {
            Some(v) if v.role == Role::Feature => {}
            _ => return Err(Error::Config(format!("`{name}` is not a feature variable of the codebook"))),
        }
    }
    let correlation = correlation_matrix(&cleaned.long);
    let candidates: Vec<String> = cleaned
        .long
        .variable_names()
        .into_iter()
        .filter(|n| cb.get(n).is_some_and(|v| v.role == Role::Feature) && !config.exclude.contains(n))
        .collect();
    let features = match config.prune_threshold {
        Some(t) => prune_correlated(&correlation.restrict(&candidates), t, &config.keep)?,
        None => candidates.clone(),
    };
    if features.is_empty() {
        return Err(Error::Config("no features left after exclusion".into()));
    }
    let pruned = candidates.into_iter().filter(|n| !features.contains(n)).collect();
    Ok(Prepared { cleaned, correlation, features, pruned })
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    select_features(load_cleaned(config)?, config)
}
