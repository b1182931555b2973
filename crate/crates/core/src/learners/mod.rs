//! The four classifiers: majority baseline, random forest, one-vs-one SVM and MLP.

mod forest;
mod majority;
mod mlp;
mod persist;
mod preprocess;
mod smo;
mod svm;
mod tree;

pub use forest::{fit_forest, ForestConfig, ForestModel};
pub use majority::{fit_majority, MajorityModel};
pub use mlp::{fit_mlp, MlpConfig, MlpModel, Network};
pub use persist::{load_model, read_model, save_model, write_model, FORMAT_VERSION};
pub use preprocess::{handle_missing, Imputation, MinMaxScaler, MissingPlan, ModelFamily, Preprocessor};
pub use smo::{smo_solve, Kernel, SmoConfig, SmoSolution, SmoSolver};
pub use svm::{class_pairs, fit_svm_multiclass, smo_solve_binary, BinarySvm, MultiSvm, SvmConfig};
pub use tree::{grow_tree, DecisionTree, Node, NodeKind, TreeConfig};

use crate::error::{Error, Result};
use crate::features::{ClassLabel, ColumnDescriptor, DesignMatrix, NUM_CLASSES};

/// Which learner to train, with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    Majority,
    Forest(ForestConfig),
    Svm(SvmConfig),
    Mlp(MlpConfig),
}

impl ModelSpec {
    pub fn family(&self) -> ModelFamily {
        match self {
            ModelSpec::Majority => ModelFamily::Majority,
            ModelSpec::Forest(_) => ModelFamily::Forest,
            ModelSpec::Svm(_) => ModelFamily::Svm,
            ModelSpec::Mlp(_) => ModelFamily::Mlp,
        }
    }

    /// Display name used in reports.
    pub fn name(&self) -> &'static str {
        family_name(self.family())
    }

    pub fn fit(&self, m: &DesignMatrix, seed: u64) -> Result<FittedModel> {
        Ok(match self {
            ModelSpec::Majority => FittedModel::Majority(fit_majority(m.targets(), m.columns().to_vec())?),
            ModelSpec::Forest(c) => FittedModel::Forest(fit_forest(m, c, seed)?),
            ModelSpec::Svm(c) => FittedModel::Svm(fit_svm_multiclass(m, c)?),
            ModelSpec::Mlp(c) => FittedModel::Mlp(fit_mlp(m, c, seed)?),
        })
    }
}

pub fn family_name(f: ModelFamily) -> &'static str {
    match f {
        ModelFamily::Majority => "vote majority",
        ModelFamily::Forest => "random forest",
        ModelFamily::Svm => "SVM",
        ModelFamily::Mlp => "MLP",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Majority(MajorityModel),
    Forest(ForestModel),
    Svm(MultiSvm),
    Mlp(MlpModel),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: ClassLabel,
    pub scores: [f64; NUM_CLASSES],
}

impl FittedModel {
    pub fn family(&self) -> ModelFamily {
        match self {
            FittedModel::Majority(_) => ModelFamily::Majority,
            FittedModel::Forest(_) => ModelFamily::Forest,
            FittedModel::Svm(_) => ModelFamily::Svm,
            FittedModel::Mlp(_) => ModelFamily::Mlp,
        }
    }

    pub fn name(&self) -> &'static str {
        family_name(self.family())
    }

    pub fn columns(&self) -> &[ColumnDescriptor] {
        match self {
            FittedModel::Majority(m) => &m.columns,
            FittedModel::Forest(m) => &m.columns,
            FittedModel::Svm(m) => &m.columns,
            FittedModel::Mlp(m) => &m.columns,
        }
    }

    pub fn n_features(&self) -> usize {
        self.columns().len()
    }

    /// Class scores for a row of the training layout; they sum to 1.
    pub fn scores(&self, row: &[f64]) -> Result<[f64; NUM_CLASSES]> {
        if row.len() != self.n_features() {
            return Err(Error::Layout { expected: self.n_features(), found: row.len() });
        }
        Ok(match self {
            FittedModel::Majority(m) => m.priors,
            FittedModel::Forest(m) => m.scores(row),
            FittedModel::Svm(m) => m.scores(row),
            FittedModel::Mlp(m) => m.scores(row),
        })
    }

    pub fn predict(&self, row: &[f64]) -> Result<Prediction> {
        let scores = self.scores(row)?;
        Ok(Prediction { label: ClassLabel::argmax(&scores), scores })
    }

    /// Missing-value plan the model carries.
    pub fn missing_plan(&self) -> MissingPlan {
        match self {
            FittedModel::Majority(_) => MissingPlan::Ignored,
            FittedModel::Forest(_) => MissingPlan::LearnedRouting,
            FittedModel::Svm(m) => MissingPlan::Impute(m.preprocessor.imputation.clone()),
            FittedModel::Mlp(m) => MissingPlan::Impute(m.preprocessor.imputation.clone()),
        }
    }
}

/// Predicts one encoded row, checking it against the model's column layout.
pub fn predict(model: &FittedModel, row: &[f64]) -> Result<Prediction> {
    model.predict(row)
}

/// Predicts every row of a matrix whose columns must match the model's.
pub fn predict_matrix(model: &FittedModel, m: &DesignMatrix) -> Result<Vec<Prediction>> {
    if m.columns() != model.columns() {
        return Err(Error::Layout { expected: model.n_features(), found: m.n_cols() });
    }
    (0..m.n_rows()).map(|i| model.predict(m.row(i))).collect()
}
