//! CART-style classification trees with Gini splits and learned missing routing.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::features::{DesignMatrix, NUM_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConfig {
    /// Candidate columns evaluated per node before falling back to the rest.
    pub mtry: usize,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    Leaf,
    Split { column: usize, threshold: f64, missing_left: bool, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    /// Training class counts reaching this node (bootstrap multiplicity included).
    pub counts: [f64; NUM_CLASSES],
}

impl Node {
    pub fn cover(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn distribution(&self) -> [f64; NUM_CLASSES] {
        let c = self.cover();
        self.counts.map(|k| k / c)
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf)
    }
}

/// Nodes stored in pre-order; the root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
}

impl DecisionTree {
    pub fn leaf_for(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at].kind {
                NodeKind::Leaf => return at,
                NodeKind::Split { column, threshold, missing_left, left, right } => {
                    let v = row[column];
                    let go_left = if v.is_nan() { missing_left } else { v <= threshold };
                    at = if go_left { left } else { right };
                }
            }
        }
    }

    pub fn distribution(&self, row: &[f64]) -> [f64; NUM_CLASSES] {
        self.nodes[self.leaf_for(row)].distribution()
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &DecisionTree, at: usize) -> usize {
            match t.nodes[at].kind {
                NodeKind::Leaf => 0,
                NodeKind::Split { left, right, .. } => 1 + walk(t, left).max(walk(t, right)),
            }
        }
        walk(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }
}

#[derive(Debug, Clone, Copy)]
struct Split {
    column: usize,
    threshold: f64,
    missing_left: bool,
    score: f64,
}

struct Grower<'a> {
    m: &'a DesignMatrix,
    config: TreeConfig,
    nodes: Vec<Node>,
    // scratch
    present: Vec<(f64, usize)>,
}

fn counts_of(m: &DesignMatrix, rows: &[usize]) -> [f64; NUM_CLASSES] {
    let mut c = [0.0; NUM_CLASSES];
    for &r in rows {
        c[m.targets()[r].index()] += 1.0;
    }
    c
}

fn purity_score(c: &[f64; NUM_CLASSES], n: f64) -> f64 {
    c.iter().map(|k| k * k).sum::<f64>() / n
}

impl Grower<'_> {
    /// Best split on one column, or None when no threshold leaves both sides at least `min_leaf`.
    fn best_on_column(&mut self, rows: &[usize], column: usize) -> Option<Split> {
        let m = self.m;
        self.present.clear();
        let mut miss = [0.0; NUM_CLASSES];
        for &r in rows {
            let v = m.value(r, column);
            let class = m.targets()[r].index();
            if v.is_nan() {
                miss[class] += 1.0;
            } else {
                self.present.push((v, class));
            }
        }
        let n_present = self.present.len();
        if n_present < 2 {
            return None;
        }
        self.present.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let n_miss: f64 = miss.iter().sum();
        let mut total = [0.0; NUM_CLASSES];
        for &(_, c) in &self.present {
            total[c] += 1.0;
        }
        let min_leaf = self.config.min_leaf as f64;
        let mut left = [0.0; NUM_CLASSES];
        let mut best: Option<Split> = None;
        for t in 1..n_present {
            left[self.present[t - 1].1] += 1.0;
            let (lo, hi) = (self.present[t - 1].0, self.present[t].0);
            if lo == hi {
                continue;
            }
            let n_l = t as f64;
            let n_r = (n_present - t) as f64;
            let missing_left = n_l >= n_r;
            let mut fl = left;
            let mut fr = [0.0; NUM_CLASSES];
            for k in 0..NUM_CLASSES {
                fr[k] = total[k] - left[k];
                if missing_left {
                    fl[k] += miss[k];
                } else {
                    fr[k] += miss[k];
                }
            }
            let (size_l, size_r) = if missing_left { (n_l + n_miss, n_r) } else { (n_l, n_r + n_miss) };
            if size_l < min_leaf || size_r < min_leaf {
                continue;
            }
            let score = purity_score(&fl, size_l) + purity_score(&fr, size_r);
            if best.is_none_or(|b| score > b.score) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(Split { column, threshold, missing_left, score });
            }
        }
        best
    }

    fn find_split<R: Rng>(&mut self, rows: &[usize], rng: &mut R) -> Option<Split> {
        let p = self.m.n_cols();
        let mut order: Vec<usize> = (0..p).collect();
        order.shuffle(rng);
        let mtry = self.config.mtry.clamp(1, p);
        let mut first: Vec<usize> = order[..mtry].to_vec();
        first.sort_unstable();
        let mut best: Option<Split> = None;
        for c in first {
            if let Some(s) = self.best_on_column(rows, c) {
                if best.is_none_or(|b| s.score > b.score) {
                    best = Some(s);
                }
            }
        }
        if best.is_some() {
            return best;
        }
        // No valid split among the drawn candidates: keep drawing one at a time.
        for &c in &order[mtry..] {
            if let Some(s) = self.best_on_column(rows, c) {
                return Some(s);
            }
        }
        None
    }

    fn grow<R: Rng>(&mut self, rows: &mut [usize], depth: usize, rng: &mut R) -> usize {
        let counts = counts_of(self.m, rows);
        let id = self.nodes.len();
        self.nodes.push(Node { kind: NodeKind::Leaf, counts });
        let n = rows.len();
        let pure = counts.iter().filter(|&&k| k > 0.0).count() <= 1;
        let depth_capped = self.config.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || n < 2 * self.config.min_leaf.max(1) {
            return id;
        }
        let Some(split) = self.find_split(rows, rng) else { return id };
        let m = self.m;
        let goes_left = |r: usize| {
            let v = m.value(r, split.column);
            if v.is_nan() { split.missing_left } else { v <= split.threshold }
        };
        // stable partition keeps bootstrap order within each child
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| goes_left(r));
        let n_left = l.len();
        rows[..n_left].copy_from_slice(&l);
        rows[n_left..].copy_from_slice(&r);
        let (lrows, rrows) = rows.split_at_mut(n_left);
        let left = self.grow(lrows, depth + 1, rng);
        let right = self.grow(rrows, depth + 1, rng);
        self.nodes[id].kind = NodeKind::Split {
            column: split.column,
            threshold: split.threshold,
            missing_left: split.missing_left,
            left,
            right,
        };
        id
    }
}

/// Grows one tree on `rows` (indices into `m`, repeats allowed).
///
/// Candidate columns are visited in a random order drawn from `rng`; the first
/// `mtry` are evaluated together (in ascending column order, first best wins on
/// ties) and, if none admits a split, further columns are tried one at a time.
/// Absent values follow the child holding more of the node's non-missing rows.
pub fn grow_tree<R: Rng>(m: &DesignMatrix, rows: &[usize], config: TreeConfig, rng: &mut R) -> DecisionTree {
    let mut g = Grower { m, config, nodes: Vec::new(), present: Vec::with_capacity(rows.len()) };
    let mut rows = rows.to_vec();
    g.grow(&mut rows, 0, rng);
    DecisionTree { nodes: g.nodes, n_features: m.n_cols() }
}
