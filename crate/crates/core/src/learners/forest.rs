use rand::Rng;
use rayon::prelude::*;

use super::tree::{grow_tree, DecisionTree, TreeConfig};
use crate::error::{Error, Result};
use crate::features::{ColumnDescriptor, DesignMatrix, NUM_CLASSES};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestConfig {
    pub trees: usize,
    /// `None` means floor(sqrt(columns)).
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig { trees: 100, mtry: None, min_leaf: 1, max_depth: None, bootstrap: true }
    }
}

impl ForestConfig {
    pub fn resolved_mtry(&self, columns: usize) -> usize {
        self.mtry.unwrap_or_else(|| ((columns as f64).sqrt().floor() as usize).max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub mtry: usize,
    pub seed: u64,
    pub columns: Vec<ColumnDescriptor>,
}

impl ForestModel {
    /// Mean of per-tree leaf class distributions.
    pub fn scores(&self, row: &[f64]) -> [f64; NUM_CLASSES] {
        let mut acc = [0.0; NUM_CLASSES];
        for t in &self.trees {
            let d = t.distribution(row);
            for k in 0..NUM_CLASSES {
                acc[k] += d[k];
            }
        }
        let n = self.trees.len() as f64;
        acc.map(|v| v / n)
    }
}

pub fn fit_forest(m: &DesignMatrix, config: &ForestConfig, seed: u64) -> Result<ForestModel> {
    if m.n_rows() == 0 || m.n_cols() == 0 {
        return Err(Error::Data("cannot fit a forest on an empty matrix".into()));
    }
    if config.trees == 0 {
        return Err(Error::Config("forest needs at least one tree".into()));
    }
    let mtry = config.resolved_mtry(m.n_cols());
    if mtry == 0 || mtry > m.n_cols() {
        return Err(Error::Config(format!("mtry {mtry} outside 1..={}", m.n_cols())));
    }
    if config.min_leaf == 0 {
        return Err(Error::Config("min_leaf must be at least 1".into()));
    }
    let tree_config = TreeConfig { mtry, min_leaf: config.min_leaf, max_depth: config.max_depth };
    let n = m.n_rows();
    let trees = (0..config.trees)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::indexed(seed, t as u64);
            let rows: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| r.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_tree(m, &rows, tree_config, &mut r)
        })
        .collect();
    Ok(ForestModel { trees, mtry, seed, columns: m.columns().to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ClassLabel;

    #[test]
    fn pure_data_gives_single_leaves() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect();
        let m = DesignMatrix::from_rows(&rows, vec![ClassLabel::ALL[1]; 20]).unwrap();
        let f = fit_forest(&m, &ForestConfig { trees: 7, ..Default::default() }, 3).unwrap();
        assert!(f.trees.iter().all(|t| t.nodes.len() == 1));
        assert_eq!(f.scores(&[1.0, 1.0]), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn default_mtry_is_floor_sqrt() {
        assert_eq!(ForestConfig::default().resolved_mtry(72), 8);
        assert_eq!(ForestConfig::default().resolved_mtry(3), 1);
    }

    #[test]
    fn empty_matrix_is_an_error() {
        let m = DesignMatrix::from_rows(&[], vec![]).unwrap_or_else(|_| {
            DesignMatrix::from_rows(&[vec![1.0]], vec![ClassLabel::ALL[0]]).unwrap().select_rows(&[])
        });
        assert!(fit_forest(&m, &ForestConfig::default(), 1).is_err());
    }
}
