//! One-hidden-layer perceptron: sigmoid hidden units, softmax output,
//! cross-entropy loss, mini-batch gradient descent with momentum.

use rand::seq::SliceRandom;
use rand::Rng;

use super::preprocess::Preprocessor;
use crate::error::{Error, Result};
use crate::features::{ClassLabel, ColumnDescriptor, DesignMatrix, NUM_CLASSES};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpConfig {
    /// `None` means ceil((features + classes) / 2).
    pub hidden: Option<usize>,
    pub rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub scale: bool,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig { hidden: None, rate: 0.3, momentum: 0.2, epochs: 500, batch_size: 32, scale: true }
    }
}

impl MlpConfig {
    pub fn resolved_hidden(&self, features: usize) -> usize {
        self.hidden.unwrap_or((features + NUM_CLASSES).div_ceil(2))
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn softmax(z: &[f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e = z.map(|v| (v - max).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

/// Weights flattened as [W1 (hidden×inputs), b1, W2 (classes×hidden), b2].
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub inputs: usize,
    pub hidden: usize,
    pub params: Vec<f64>,
}

impl Network {
    pub fn param_count(inputs: usize, hidden: usize) -> usize {
        hidden * inputs + hidden + NUM_CLASSES * hidden + NUM_CLASSES
    }

    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        Network { inputs, hidden, params: vec![0.0; Self::param_count(inputs, hidden)] }
    }

    pub fn random<R: Rng>(inputs: usize, hidden: usize, rng: &mut R) -> Self {
        let params = (0..Self::param_count(inputs, hidden)).map(|_| rng.random_range(-0.5..0.5)).collect();
        Network { inputs, hidden, params }
    }

    pub fn from_params(inputs: usize, hidden: usize, params: Vec<f64>) -> Result<Self> {
        if params.len() != Self::param_count(inputs, hidden) {
            return Err(Error::ModelFormat(format!(
                "network {inputs}x{hidden} needs {} weights, got {}",
                Self::param_count(inputs, hidden),
                params.len()
            )));
        }
        Ok(Network { inputs, hidden, params })
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.inputs;
        let w2 = b1 + self.hidden;
        let b2 = w2 + NUM_CLASSES * self.hidden;
        (b1, w2, b2)
    }

    fn hidden_activations(&self, x: &[f64]) -> Vec<f64> {
        let (b1, _, _) = self.offsets();
        (0..self.hidden)
            .map(|h| {
                let w = &self.params[h * self.inputs..(h + 1) * self.inputs];
                sigmoid(w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.params[b1 + h])
            })
            .collect()
    }

    fn output(&self, a: &[f64]) -> [f64; NUM_CLASSES] {
        let (_, w2, b2) = self.offsets();
        let mut z = [0.0; NUM_CLASSES];
        for (k, zk) in z.iter_mut().enumerate() {
            let w = &self.params[w2 + k * self.hidden..w2 + (k + 1) * self.hidden];
            *zk = w.iter().zip(a).map(|(p, q)| p * q).sum::<f64>() + self.params[b2 + k];
        }
        softmax(&z)
    }

    pub fn forward(&self, x: &[f64]) -> [f64; NUM_CLASSES] {
        self.output(&self.hidden_activations(x))
    }

    /// Mean cross-entropy over the batch and its gradient with respect to `params`.
    pub fn loss_and_gradient(&self, xs: &[&[f64]], ys: &[ClassLabel]) -> (f64, Vec<f64>) {
        let (b1, w2, b2) = self.offsets();
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let mut d1 = vec![0.0; self.hidden];
        for (x, y) in xs.iter().zip(ys) {
            let a = self.hidden_activations(x);
            let p = self.output(&a);
            loss -= p[y.index()].max(f64::MIN_POSITIVE).ln();
            let mut d2 = p;
            d2[y.index()] -= 1.0;
            d1.iter_mut().for_each(|v| *v = 0.0);
            for k in 0..NUM_CLASSES {
                for h in 0..self.hidden {
                    grad[w2 + k * self.hidden + h] += d2[k] * a[h];
                    d1[h] += self.params[w2 + k * self.hidden + h] * d2[k];
                }
                grad[b2 + k] += d2[k];
            }
            for h in 0..self.hidden {
                let d = d1[h] * a[h] * (1.0 - a[h]);
                for (i, xi) in x.iter().enumerate() {
                    grad[h * self.inputs + i] += d * xi;
                }
                grad[b1 + h] += d;
            }
        }
        let n = xs.len().max(1) as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        (loss / n, grad)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub preprocessor: Preprocessor,
    pub network: Network,
    pub config: MlpConfig,
    pub seed: u64,
    /// Mean training loss after each epoch.
    pub loss_history: Vec<f64>,
    pub columns: Vec<ColumnDescriptor>,
}

impl MlpModel {
    pub fn scores(&self, row: &[f64]) -> [f64; NUM_CLASSES] {
        self.network.forward(&self.preprocessor.transform(row))
    }
}

pub fn fit_mlp(m: &DesignMatrix, config: &MlpConfig, seed: u64) -> Result<MlpModel> {
    if m.n_rows() == 0 {
        return Err(Error::Data("cannot fit an MLP on an empty matrix".into()));
    }
    let hidden = config.resolved_hidden(m.n_cols());
    if hidden == 0 {
        return Err(Error::Config("MLP needs at least one hidden unit".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::Config("MLP batch size must be positive".into()));
    }
    let preprocessor = Preprocessor::fit(m, config.scale);
    let xs = preprocessor.transform_matrix(m);
    let ys = m.targets();
    let mut init_rng = rng::substream(seed, "mlp-init");
    let mut order_rng = rng::substream(seed, "mlp-order");
    let mut net = Network::random(m.n_cols(), hidden, &mut init_rng);
    let mut velocity = vec![0.0; net.params.len()];
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let all_x: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let mut loss_history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut order_rng);
        for batch in order.chunks(config.batch_size) {
            let bx: Vec<&[f64]> = batch.iter().map(|&i| xs[i].as_slice()).collect();
            let by: Vec<ClassLabel> = batch.iter().map(|&i| ys[i]).collect();
            let (_, g) = net.loss_and_gradient(&bx, &by);
            for ((p, v), g) in net.params.iter_mut().zip(velocity.iter_mut()).zip(&g) {
                *v = config.momentum * *v - config.rate * g;
                *p += *v;
            }
        }
        let (loss, _) = net.loss_and_gradient(&all_x, ys);
        if !loss.is_finite() || net.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch });
        }
        loss_history.push(loss);
    }
    Ok(MlpModel { preprocessor, network: net, config: *config, seed, loss_history, columns: m.columns().to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cls(v: u8) -> ClassLabel {
        ClassLabel::new(v).unwrap()
    }

    #[test]
    fn zero_weights_are_uniform() {
        let n = Network::zeros(4, 3);
        for s in n.forward(&[1.0, -2.0, 0.5, 3.0]) {
            assert!((s - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn default_hidden_width() {
        assert_eq!(MlpConfig::default().resolved_hidden(72), 38);
        assert_eq!(MlpConfig::default().resolved_hidden(2), 3);
    }

    #[test]
    fn xor_is_learned() {
        let rows = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let m = DesignMatrix::from_rows(&rows, vec![cls(1), cls(2), cls(2), cls(1)]).unwrap();
        let cfg = MlpConfig { hidden: Some(4), epochs: 2000, ..Default::default() };
        let mut solved = 0;
        for seed in 0..10 {
            let model = fit_mlp(&m, &cfg, seed).unwrap();
            let ok = (0..4).all(|i| ClassLabel::argmax(&model.scores(m.row(i))) == m.targets()[i]);
            solved += ok as usize;
        }
        assert!(solved >= 8, "solved {solved}/10");
    }

    #[test]
    fn separable_toy_loss_never_rises() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let t = (0..20).map(|i| if i < 10 { cls(1) } else { cls(3) }).collect();
        let m = DesignMatrix::from_rows(&rows, t).unwrap();
        let cfg = MlpConfig { hidden: Some(2), epochs: 200, batch_size: 20, rate: 0.1, momentum: 0.0, ..Default::default() };
        let model = fit_mlp(&m, &cfg, 5).unwrap();
        for w in model.loss_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }
}
