//! Exact path-dependent TreeSHAP for the forest's class scores.
//!
//! Features outside the coalition are integrated out by following both
//! children in proportion to their training cover. Along a root-to-leaf path
//! each distinct feature j carries a cover fraction z_j (product of the
//! ratios of its splits) and an indicator o_j (whether the instance takes
//! every one of those splits). A leaf with value v and d distinct features
//! adds to feature i
//!
//!   v (o_i - z_i) sum over S of |S|!(d-|S|-1)!/d! prod_{S} o_j prod_{rest} z_j
//!
//! where S ranges over the other features and "rest" is the remainder. Since
//! o_j is 0 or 1 the sum only runs over subsets of the indicator-1 features,
//! which reduces to elementary symmetric polynomials of their z values.
//! Everything below is sums of products of non-negative numbers, with no
//! division, which keeps trees 50+ levels deep exact to rounding.

use crate::error::{Error, Result};
use crate::features::NUM_CLASSES;
use crate::learners::{DecisionTree, ForestModel, NodeKind};

#[derive(Debug, Clone, Copy)]
struct PathFeature {
    column: usize,
    zero: f64,
    one: bool,
}

struct Walk<'a> {
    tree: &'a DecisionTree,
    row: &'a [f64],
    phi: &'a mut [[f64; NUM_CLASSES]],
    path: Vec<PathFeature>,
    weights: Vec<f64>,
    suffix: Vec<f64>,
}

impl Walk<'_> {
    fn leaf(&mut self, value: [f64; NUM_CLASSES]) {
        let d = self.path.len();
        if d == 0 {
            return;
        }
        // w[s] = s!(d-s-1)!/d!
        self.weights.clear();
        self.weights.push(1.0 / d as f64);
        for s in 0..d - 1 {
            let w = self.weights[s] * (s + 1) as f64 / (d - 1 - s) as f64;
            self.weights.push(w);
        }
        let ones: Vec<PathFeature> = self.path.iter().copied().filter(|f| f.one).collect();
        let zeros: Vec<usize> = (0..d).filter(|&i| !self.path[i].one).collect();
        let m = ones.len();
        let zero_product = |skip: Option<usize>| {
            zeros.iter().filter(|&&i| Some(i) != skip).map(|&i| self.path[i].zero).product::<f64>()
        };
        let add = |phi: &mut [[f64; NUM_CLASSES]], column: usize, coef: f64| {
            for k in 0..NUM_CLASSES {
                phi[column][k] += coef * value[k];
            }
        };

        // For indicator-1 feature i the subset sum is sum_a P_i[a] T_{i+1}[a],
        // P_i the polynomials of the features before i and
        // T_j[a] = sum_b S_j[b] w[m-1-a-b] with S_j those of the features from j on.
        // T_m[a] = w[m-1-a] and T_j[a] = T_{j+1}[a] + z_j T_{j+1}[a+1].
        let width = m + 1;
        self.suffix.clear();
        self.suffix.resize(width * width, 0.0);
        let t = &mut self.suffix;
        for a in 0..m {
            t[m * width + a] = self.weights[m - 1 - a];
        }
        for j in (0..m).rev() {
            for a in 0..m {
                t[j * width + a] = t[(j + 1) * width + a] + ones[j].zero * t[(j + 1) * width + a + 1];
            }
        }
        let all_zero = zero_product(None);
        let mut prefix = vec![0.0; width];
        prefix[0] = 1.0;
        for (i, f) in ones.iter().enumerate() {
            let row = &t[(i + 1) * width..(i + 2) * width];
            let sum: f64 = (0..=i).map(|a| prefix[a] * row[a]).sum();
            add(self.phi, f.column, (1.0 - f.zero) * all_zero * sum);
            for a in (1..=i + 1).rev() {
                prefix[a] += f.zero * prefix[a - 1];
            }
        }
        // prefix now holds the polynomials of all indicator-1 features
        let e = prefix;
        if zeros.is_empty() {
            return;
        }
        let full: f64 = (0..=m).map(|s| self.weights[s] * e[m - s]).sum();
        for &i in &zeros {
            let f = self.path[i];
            add(self.phi, f.column, -f.zero * zero_product(Some(i)) * full);
        }
    }

    fn recurse(&mut self, node: usize) {
        let n = &self.tree.nodes[node];
        match n.kind {
            NodeKind::Leaf => self.leaf(n.distribution()),
            NodeKind::Split { column, threshold, missing_left, left, right } => {
                let v = self.row[column];
                let go_left = if v.is_nan() { missing_left } else { v <= threshold };
                let cover = n.cover();
                let existing = self.path.iter().position(|f| f.column == column);
                for (child, hot) in [(left, go_left), (right, !go_left)] {
                    let ratio = self.tree.nodes[child].cover() / cover;
                    match existing {
                        Some(q) => {
                            let saved = self.path[q];
                            self.path[q] = PathFeature { column, zero: saved.zero * ratio, one: saved.one && hot };
                            self.recurse(child);
                            self.path[q] = saved;
                        }
                        None => {
                            self.path.push(PathFeature { column, zero: ratio, one: hot });
                            self.recurse(child);
                            self.path.pop();
                        }
                    }
                }
            }
        }
    }
}

/// Cover-weighted mean leaf distribution: the tree's expected score.
pub fn tree_expected_value(tree: &DecisionTree) -> [f64; NUM_CLASSES] {
    let root = tree.nodes[0].cover();
    let mut acc = [0.0; NUM_CLASSES];
    for n in tree.nodes.iter().filter(|n| n.is_leaf()) {
        for k in 0..NUM_CLASSES {
            acc[k] += n.counts[k] / root;
        }
    }
    acc
}

/// Per-column attributions for all classes of one tree, added into `phi`.
pub fn tree_shap_single(tree: &DecisionTree, row: &[f64], phi: &mut [[f64; NUM_CLASSES]]) {
    let mut w = Walk { tree, row, phi, path: Vec::new(), weights: Vec::new(), suffix: Vec::new() };
    w.recurse(0);
}

/// Attributions of every class score at once.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassAttributions {
    pub base: [f64; NUM_CLASSES],
    /// One entry per encoded column.
    pub phi: Vec<[f64; NUM_CLASSES]>,
}

impl ClassAttributions {
    pub fn class_values(&self, class: usize) -> Vec<f64> {
        self.phi.iter().map(|p| p[class]).collect()
    }
}

/// Exact Shapley values of the forest's class scores on one encoded row.
pub fn tree_shap_forest(forest: &ForestModel, row: &[f64]) -> Result<ClassAttributions> {
    if row.len() != forest.columns.len() {
        return Err(Error::Layout { expected: forest.columns.len(), found: row.len() });
    }
    let p = row.len();
    let mut phi = vec![[0.0; NUM_CLASSES]; p];
    let mut base = [0.0; NUM_CLASSES];
    for t in &forest.trees {
        tree_shap_single(t, row, &mut phi);
        let e = tree_expected_value(t);
        for k in 0..NUM_CLASSES {
            base[k] += e[k];
        }
    }
    let n = forest.trees.len() as f64;
    for v in phi.iter_mut() {
        *v = v.map(|x| x / n);
    }
    Ok(ClassAttributions { base: base.map(|b| b / n), phi })
}
