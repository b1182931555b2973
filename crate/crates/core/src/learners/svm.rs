//! One-vs-one multi-class SVM built from binary SMO machines.

use super::preprocess::Preprocessor;
use super::smo::{smo_solve, Kernel, SmoConfig};
use crate::error::{Error, Result};
use crate::features::{class_counts, ClassLabel, ColumnDescriptor, DesignMatrix, NUM_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    pub kernel: Kernel,
    pub smo: SmoConfig,
    /// Min-max scale features (after mean imputation) before training.
    pub scale: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { kernel: Kernel::Linear, smo: SmoConfig::default(), scale: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    /// Class voted for when the decision value is non-negative.
    pub positive: ClassLabel,
    pub negative: ClassLabel,
    pub kernel: Kernel,
    pub support_vectors: Vec<Vec<f64>>,
    /// α_k of each support vector, all in (0, C].
    pub alpha: Vec<f64>,
    /// ±1 label of each support vector.
    pub labels: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Collapsed primal weights, linear kernel only.
    weights: Option<Vec<f64>>,
}

impl BinarySvm {
    pub fn new(
        positive: ClassLabel,
        negative: ClassLabel,
        kernel: Kernel,
        support_vectors: Vec<Vec<f64>>,
        alpha: Vec<f64>,
        labels: Vec<f64>,
        bias: f64,
        iterations: usize,
    ) -> Self {
        let weights = (kernel == Kernel::Linear).then(|| {
            let dim = support_vectors.first().map_or(0, Vec::len);
            let mut w = vec![0.0; dim];
            for ((sv, a), y) in support_vectors.iter().zip(&alpha).zip(&labels) {
                for (wj, xj) in w.iter_mut().zip(sv) {
                    *wj += a * y * xj;
                }
            }
            w
        });
        BinarySvm { positive, negative, kernel, support_vectors, alpha, labels, bias, iterations, weights }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        match &self.weights {
            Some(w) if !w.is_empty() => w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.bias,
            _ => {
                self.support_vectors
                    .iter()
                    .zip(&self.alpha)
                    .zip(&self.labels)
                    .map(|((sv, a), y)| a * y * self.kernel.eval(sv, x))
                    .sum::<f64>()
                    + self.bias
            }
        }
    }

    pub fn vote(&self, x: &[f64]) -> ClassLabel {
        if self.decision(x) >= 0.0 { self.positive } else { self.negative }
    }
}

/// Trains one binary machine on a matrix holding only the two given classes.
/// `positive` rows get label +1. The matrix must not contain absent values.
pub fn smo_solve_binary(
    m: &DesignMatrix,
    positive: ClassLabel,
    negative: ClassLabel,
    kernel: Kernel,
    config: &SmoConfig,
) -> Result<BinarySvm> {
    if positive == negative {
        return Err(Error::Config("binary SVM needs two distinct classes".into()));
    }
    let mut x = Vec::with_capacity(m.n_rows());
    let mut y = Vec::with_capacity(m.n_rows());
    for i in 0..m.n_rows() {
        let t = m.targets()[i];
        let label = if t == positive {
            1.0
        } else if t == negative {
            -1.0
        } else {
            return Err(Error::Data(format!("row {i} has class {t}, outside pair ({positive}, {negative})")));
        };
        if m.row(i).iter().any(|v| v.is_nan()) {
            return Err(Error::Data(format!("row {i} has absent values; impute before SMO")));
        }
        x.push(m.row(i).to_vec());
        y.push(label);
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(Error::Data(format!("class pair ({positive}, {negative}) needs rows of both classes")));
    }
    let sol = smo_solve(&x, &y, kernel, config)?;
    let mut svs = Vec::new();
    let mut alpha = Vec::new();
    let mut labels = Vec::new();
    for (k, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            svs.push(std::mem::take(&mut x[k]));
            alpha.push(a);
            labels.push(y[k]);
        }
    }
    Ok(BinarySvm::new(positive, negative, kernel, svs, alpha, labels, sol.bias, sol.iterations))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiSvm {
    pub preprocessor: Preprocessor,
    /// Pairs (1,2), (1,3), (2,3) in that order.
    pub machines: Vec<BinarySvm>,
    pub classes: usize,
    pub columns: Vec<ColumnDescriptor>,
}

impl MultiSvm {
    pub fn votes(&self, row: &[f64]) -> [usize; NUM_CLASSES] {
        let x = self.preprocessor.transform(row);
        let mut v = [0; NUM_CLASSES];
        for m in &self.machines {
            v[m.vote(&x).index()] += 1;
        }
        v
    }

    pub fn scores(&self, row: &[f64]) -> [f64; NUM_CLASSES] {
        let total = self.machines.len() as f64;
        self.votes(row).map(|v| v as f64 / total)
    }
}

pub fn class_pairs() -> Vec<(ClassLabel, ClassLabel)> {
    let mut out = Vec::new();
    for a in 0..NUM_CLASSES {
        for b in a + 1..NUM_CLASSES {
            out.push((ClassLabel::from_index(a), ClassLabel::from_index(b)));
        }
    }
    out
}

/// Imputes and scales with training statistics, then trains every class pair.
pub fn fit_svm_multiclass(m: &DesignMatrix, config: &SvmConfig) -> Result<MultiSvm> {
    let counts = class_counts(m.targets());
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Data(format!("class {} absent from SVM training data", ClassLabel::from_index(k))));
    }
    let preprocessor = Preprocessor::fit(m, config.scale);
    let prepared = DesignMatrix::from_rows(&preprocessor.transform_matrix(m), m.targets().to_vec())?;
    let mut machines = Vec::new();
    for (a, b) in class_pairs() {
        let rows: Vec<usize> = (0..prepared.n_rows())
            .filter(|&i| matches!(prepared.targets()[i], t if t == a || t == b))
            .collect();
        let pair = prepared.select_rows(&rows);
        let machine = smo_solve_binary(&pair, a, b, config.kernel, &config.smo).map_err(|e| match e {
            Error::NonConvergence { iterations, .. } => {
                Error::NonConvergence { what: format!("SMO for class pair ({a}, {b})"), iterations }
            }
            other => other,
        })?;
        machines.push(machine);
    }
    Ok(MultiSvm { preprocessor, machines, classes: NUM_CLASSES, columns: m.columns().to_vec() })
}
