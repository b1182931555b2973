//! Missing-value handling plans stored alongside fitted models.

use crate::features::DesignMatrix;

/// Learner family, as far as missing-value handling is concerned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFamily {
    Majority,
    Forest,
    Svm,
    Mlp,
}

/// Per-column mean imputation from training statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Imputation {
    means: Vec<f64>,
    imputed: Vec<bool>,
}

impl Imputation {
    pub fn fit(m: &DesignMatrix) -> Self {
        let mut means = vec![0.0; m.n_cols()];
        let mut imputed = vec![false; m.n_cols()];
        for j in 0..m.n_cols() {
            let (mut sum, mut n) = (0.0, 0usize);
            for i in 0..m.n_rows() {
                if m.is_missing(i, j) {
                    imputed[j] = true;
                } else {
                    sum += m.value(i, j);
                    n += 1;
                }
            }
            means[j] = if n > 0 { sum / n as f64 } else { 0.0 };
        }
        Imputation { means, imputed }
    }

    pub(crate) fn from_parts(means: Vec<f64>, imputed: Vec<bool>) -> Self {
        Imputation { means, imputed }
    }

    /// True when column `j` had no missing training values.
    pub fn is_identity(&self, j: usize) -> bool {
        !self.imputed[j]
    }

    pub fn fill_value(&self, j: usize) -> f64 {
        self.means[j]
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn imputed(&self) -> &[bool] {
        &self.imputed
    }

    pub fn apply(&self, row: &mut [f64]) {
        for (v, &m) in row.iter_mut().zip(&self.means) {
            if v.is_nan() {
                *v = m;
            }
        }
    }
}

/// Min-max scaling to [0, 1] with training bounds; constant columns map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    min: Vec<f64>,
    range: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let width = rows.first().map_or(0, Vec::len);
        let mut min = vec![f64::INFINITY; width];
        let mut max = vec![f64::NEG_INFINITY; width];
        for r in rows {
            for (j, &v) in r.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        let range = min.iter().zip(&max).map(|(lo, hi)| hi - lo).collect();
        MinMaxScaler { min, range }
    }

    pub(crate) fn from_parts(min: Vec<f64>, range: Vec<f64>) -> Self {
        MinMaxScaler { min, range }
    }

    pub fn min(&self) -> &[f64] {
        &self.min
    }

    pub fn range(&self) -> &[f64] {
        &self.range
    }

    pub fn apply(&self, row: &mut [f64]) {
        for ((v, lo), r) in row.iter_mut().zip(&self.min).zip(&self.range) {
            *v = if *r > 0.0 { (*v - lo) / r } else { 0.0 };
        }
    }
}

/// Imputation followed by optional scaling, fitted on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessor {
    pub imputation: Imputation,
    pub scaler: Option<MinMaxScaler>,
}

impl Preprocessor {
    pub fn fit(m: &DesignMatrix, scale: bool) -> Self {
        let imputation = Imputation::fit(m);
        let scaler = scale.then(|| {
            let rows: Vec<Vec<f64>> = (0..m.n_rows())
                .map(|i| {
                    let mut r = m.row(i).to_vec();
                    imputation.apply(&mut r);
                    r
                })
                .collect();
            MinMaxScaler::fit(&rows)
        });
        Preprocessor { imputation, scaler }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        let mut r = row.to_vec();
        self.imputation.apply(&mut r);
        if let Some(s) = &self.scaler {
            s.apply(&mut r);
        }
        r
    }

    pub fn transform_matrix(&self, m: &DesignMatrix) -> Vec<Vec<f64>> {
        (0..m.n_rows()).map(|i| self.transform(m.row(i))).collect()
    }
}

/// How a model family deals with absent values.
#[derive(Debug, Clone, PartialEq)]
pub enum MissingPlan {
    /// Scores ignore the row entirely.
    Ignored,
    /// Trees send absent values down the child with the larger training cover.
    LearnedRouting,
    /// Numeric columns take training means; nominal absence already has its own level.
    Impute(Imputation),
}

pub fn handle_missing(family: ModelFamily, m: &DesignMatrix) -> MissingPlan {
    match family {
        ModelFamily::Majority => MissingPlan::Ignored,
        ModelFamily::Forest => MissingPlan::LearnedRouting,
        ModelFamily::Svm | ModelFamily::Mlp => MissingPlan::Impute(Imputation::fit(m)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ClassLabel;

    #[test]
    fn identity_and_mean_fill() {
        let c = ClassLabel::ALL[0];
        let m = DesignMatrix::from_rows(
            &[vec![1.0, 5.0], vec![2.0, f64::NAN], vec![3.0, 15.0]],
            vec![c; 3],
        )
        .unwrap();
        let MissingPlan::Impute(plan) = handle_missing(ModelFamily::Svm, &m) else { panic!() };
        assert!(plan.is_identity(0));
        assert!(!plan.is_identity(1));
        assert_eq!(plan.fill_value(1), 10.0);
        let mut test_row = [f64::NAN, f64::NAN];
        plan.apply(&mut test_row);
        assert_eq!(test_row, [2.0, 10.0]);
        assert_eq!(handle_missing(ModelFamily::Forest, &m), MissingPlan::LearnedRouting);
    }

    #[test]
    fn scaling_uses_training_bounds() {
        let s = MinMaxScaler::fit(&[vec![0.0, 4.0], vec![10.0, 4.0]]);
        let mut r = [5.0, 9.0];
        s.apply(&mut r);
        assert_eq!(r, [0.5, 0.0]);
    }
}
