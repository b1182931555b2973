//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use income_panel::harness::{write_synthetic, ExperimentConfig, SynthSpec};
use income_panel::learners::{DecisionTree, ForestModel, NodeKind};

// ---------------------------------------------------------------- SHAP

/// E[tree(x) | x_S] with absent features integrated out by cover.
fn conditional_expectation(tree: &DecisionTree, node: usize, x: &[f64], in_s: &[bool]) -> [f64; 3] {
    let n = &tree.nodes[node];
    match n.kind {
        NodeKind::Leaf => n.distribution(),
        NodeKind::Split { column, threshold, missing_left, left, right } => {
            if in_s[column] {
                let v = x[column];
                let go_left = if v.is_nan() { missing_left } else { v <= threshold };
                conditional_expectation(tree, if go_left { left } else { right }, x, in_s)
            } else {
                let l = conditional_expectation(tree, left, x, in_s);
                let r = conditional_expectation(tree, right, x, in_s);
                let (cl, cr) = (tree.nodes[left].cover(), tree.nodes[right].cover());
                let c = n.cover();
                [0, 1, 2].map(|k| (cl * l[k] + cr * r[k]) / c)
            }
        }
    }
}

/// Shapley values of every class score by enumerating all 2^p coalitions.
/// Returns (base, phi[column][class]).
pub fn brute_force_shapley(forest: &ForestModel, x: &[f64]) -> ([f64; 3], Vec<[f64; 3]>) {
    let p = x.len();
    assert!(p <= 16, "enumeration over {p} columns");
    let value = |mask: usize| {
        let in_s: Vec<bool> = (0..p).map(|j| mask >> j & 1 == 1).collect();
        let mut acc = [0.0; 3];
        for t in &forest.trees {
            let e = conditional_expectation(t, 0, x, &in_s);
            for k in 0..3 {
                acc[k] += e[k];
            }
        }
        acc.map(|a| a / forest.trees.len() as f64)
    };
    let values: Vec<[f64; 3]> = (0..1usize << p).map(value).collect();
    let mut fact = vec![1.0f64; p + 1];
    for i in 1..=p {
        fact[i] = fact[i - 1] * i as f64;
    }
    let mut phi = vec![[0.0; 3]; p];
    for (i, phi_i) in phi.iter_mut().enumerate() {
        for mask in 0..1usize << p {
            if mask >> i & 1 == 1 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let w = fact[s] * fact[p - s - 1] / fact[p];
            for k in 0..3 {
                phi_i[k] += w * (values[mask | 1 << i][k] - values[mask][k]);
            }
        }
    }
    (values[0], phi)
}

// ---------------------------------------------------------------- SVM dual

pub fn dual_objective(alpha: &[f64], q: &[Vec<f64>]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * q[i][j] * alpha[j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Euclidean projection onto {0 <= a <= c, y'a = 0} by bisection on the multiplier.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |nu: f64| -> Vec<f64> { v.iter().zip(y).map(|(&vi, &yi)| (vi - nu * yi).clamp(0.0, c)).collect() };
    let g = |nu: f64| -> f64 { at(nu).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let span = v.iter().map(|x| x.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 { lo = mid } else { hi = mid }
        if hi - lo <= f64::EPSILON * span {
            break;
        }
    }
    at(0.5 * (lo + hi))
}

/// Solves a dense linear system in place by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for k in col..n {
                a[r][k] -= f * a[col][k];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Optimal dual objective of max 1'a - a'Qa/2 s.t. 0 <= a <= c, y'a = 0.
///
/// Accelerated projected gradient ascent, then the active set it finds is
/// solved exactly as an equality-constrained system; the exact point is used
/// when it is feasible and satisfies the optimality conditions.
pub fn qp_oracle(q: &[Vec<f64>], y: &[f64], c: f64) -> f64 {
    let n = y.len();
    let lipschitz = q.iter().flatten().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    let grad = |a: &[f64]| -> Vec<f64> { (0..n).map(|i| 1.0 - (0..n).map(|j| q[i][j] * a[j]).sum::<f64>()).collect() };
    let mut a = vec![0.0; n];
    let mut b = a.clone();
    let mut t = 1.0f64;
    let mut best = dual_objective(&a, q);
    for _ in 0..40_000 {
        let g = grad(&b);
        let step: Vec<f64> = b.iter().zip(&g).map(|(bi, gi)| bi + gi / lipschitz).collect();
        let next = project(&step, y, c);
        let obj = dual_objective(&next, q);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        if obj < dual_objective(&a, q) {
            // adaptive restart
            t = 1.0;
            b = a.clone();
            continue;
        }
        b = next.iter().zip(&a).map(|(nx, ax)| nx + (t - 1.0) / t_next * (nx - ax)).collect();
        a = next;
        t = t_next;
        best = best.max(obj);
    }

    // polish on the detected active set
    let eps = 1e-7 * c;
    let free: Vec<usize> = (0..n).filter(|&i| a[i] > eps && a[i] < c - eps).collect();
    let fixed: Vec<(usize, f64)> =
        (0..n).filter(|&i| a[i] <= eps || a[i] >= c - eps).map(|i| (i, if a[i] >= c - eps { c } else { 0.0 })).collect();
    let k = free.len();
    let mut mat = vec![vec![0.0; k + 1]; k + 1];
    let mut rhs = vec![0.0; k + 1];
    for (r, &i) in free.iter().enumerate() {
        for (s, &j) in free.iter().enumerate() {
            mat[r][s] = q[i][j];
        }
        mat[r][k] = y[i];
        mat[k][r] = y[i];
        rhs[r] = 1.0 - fixed.iter().map(|&(j, v)| q[i][j] * v).sum::<f64>();
    }
    rhs[k] = -fixed.iter().map(|&(j, v)| y[j] * v).sum::<f64>();
    if let Some(sol) = solve(mat, rhs) {
        let mut exact = vec![0.0; n];
        for &(j, v) in &fixed {
            exact[j] = v;
        }
        for (r, &i) in free.iter().enumerate() {
            exact[i] = sol[r];
        }
        let nu = sol[k];
        let feasible = exact.iter().all(|&v| (-1e-12..=c + 1e-12).contains(&v));
        let g = grad(&exact);
        // optimality: g_i - nu y_i = 0 on free, <= 0 at 0, >= 0 at c
        let optimal = (0..n).all(|i| {
            let r = g[i] - nu * y[i];
            if free.contains(&i) {
                r.abs() < 1e-9
            } else if exact[i] == 0.0 {
                r <= 1e-9
            } else {
                r >= -1e-9
            }
        });
        if feasible && optimal {
            return dual_objective(&exact, q);
        }
    }
    best
}

/// Largest violation of the soft-margin optimality conditions in terms of
/// y f(x): at 0 it must be >= 1, at C <= 1, free points = 1.
pub fn kkt_violation(alpha: &[f64], y: &[f64], f: &[f64], c: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..alpha.len() {
        let m = y[i] * f[i];
        let v = if alpha[i] <= 0.0 {
            (1.0 - m).max(0.0)
        } else if alpha[i] >= c {
            (m - 1.0).max(0.0)
        } else {
            (m - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}

// ---------------------------------------------------------------- metrics

/// AUC by counting concordant pairs: (2 * wins + ties) / (2 * P * N).
pub fn pair_count_auc(scores: &[f64], positives: &[bool]) -> Option<f64> {
    let (mut twice, mut p, mut n) = (0u64, 0u64, 0u64);
    for (i, &si) in scores.iter().enumerate() {
        if positives[i] {
            p += 1;
            for (j, &sj) in scores.iter().enumerate() {
                if !positives[j] {
                    twice += if si > sj { 2 } else if si == sj { 1 } else { 0 };
                }
            }
        } else {
            n += 1;
        }
    }
    (p > 0 && n > 0).then(|| twice as f64 / (2 * p * n) as f64)
}

/// Average ranks by counting: rank = #smaller + (#equal + 1) / 2.
pub fn counting_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let less = v.iter().filter(|&&y| y < x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

// ---------------------------------------------------------------- harness

/// Writes a synthetic panel into `dir` and returns a config pointing at it.
pub fn synthetic_config(dir: &Path, individuals: usize, data_seed: u64, run_seed: u64) -> ExperimentConfig {
    let spec = SynthSpec { individuals, ..SynthSpec::default() };
    write_synthetic(&spec, data_seed, dir).expect("synthetic data");
    let mut c = ExperimentConfig::default();
    c.set("codebook", path_str(&dir.join("codebook.csv"))).unwrap();
    c.set("data", path_str(&dir.join("data.csv"))).unwrap();
    c.set("seed", &run_seed.to_string()).unwrap();
    c.set("out", path_str(&dir.join("reports"))).unwrap();
    c
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Every regular file under `dir` with its bytes, sorted by name.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out: Vec<(PathBuf, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            let bytes = std::fs::read(&p).unwrap();
            (p.file_name().unwrap().into(), bytes)
        })
        .collect();
    out.sort();
    out
}
