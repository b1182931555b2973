//! Binary soft-margin SVM dual solved by sequential minimal optimization.
//!
//! Minimizes ½αᵀQα − Σα subject to 0 ≤ α ≤ C and yᵀα = 0, where
//! Q_ij = y_i y_j K(x_i, x_j). Each step picks a maximal-violating pair with
//! second-order working-set selection and solves the two-variable subproblem
//! analytically, keeping the gradient G = Qα − 1 up to date.

use std::collections::{HashMap, VecDeque};
use std::rc::Rc;

use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoConfig {
    pub c: f64,
    /// Stop once the maximal KKT violation m(α) − M(α) drops below this.
    pub tol: f64,
    /// `None` means max(10⁷, 100·n).
    pub max_iter: Option<usize>,
    /// Memory budget for cached kernel columns.
    pub cache_mb: usize,
}

impl Default for SmoConfig {
    fn default() -> Self {
        SmoConfig { c: 1.0, tol: 1e-3, max_iter: None, cache_mb: 256 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Decision function is f(x) = Σ α_k y_k K(x_k, x) + bias.
    pub bias: f64,
    pub iterations: usize,
    /// Dual objective Σα − ½αᵀQα at termination.
    pub objective: f64,
}

struct QColumns<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    kernel: Kernel,
    cache: HashMap<usize, Rc<[f64]>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl QColumns<'_> {
    fn column(&mut self, i: usize) -> Rc<[f64]> {
        if let Some(c) = self.cache.get(&i) {
            return Rc::clone(c);
        }
        let xi = &self.x[i];
        let yi = self.y[i];
        let col: Rc<[f64]> = self
            .x
            .iter()
            .zip(self.y)
            .map(|(xk, &yk)| yi * yk * self.kernel.eval(xi, xk))
            .collect();
        if self.order.len() >= self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.cache.remove(&old);
            }
        }
        self.order.push_back(i);
        self.cache.insert(i, Rc::clone(&col));
        col
    }
}

/// Stateful solver, exposed so callers can observe every iterate.
pub struct SmoSolver<'a> {
    q: QColumns<'a>,
    y: &'a [f64],
    c: f64,
    tol: f64,
    max_iter: usize,
    diag: Vec<f64>,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    iterations: usize,
}

impl<'a> SmoSolver<'a> {
    pub fn new(x: &'a [Vec<f64>], y: &'a [f64], kernel: Kernel, config: &SmoConfig) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(Error::Data(format!("{n} points but {} labels", y.len())));
        }
        if !(config.c > 0.0) || !config.c.is_finite() {
            return Err(Error::Config(format!("SVM cost C must be positive, got {}", config.c)));
        }
        if !(config.tol > 0.0) {
            return Err(Error::Config(format!("SMO tolerance must be positive, got {}", config.tol)));
        }
        if y.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::Data("SMO labels must be +1 or -1".into()));
        }
        if !y.contains(&1.0) || !y.contains(&-1.0) {
            return Err(Error::Data("SMO needs points from both classes".into()));
        }
        if x.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Data("SMO input contains non-finite values".into()));
        }
        let diag = x.iter().map(|xi| kernel.eval(xi, xi)).collect();
        let capacity = ((config.cache_mb << 20) / (8 * n.max(1))).max(2);
        Ok(SmoSolver {
            q: QColumns { x, y, kernel, cache: HashMap::new(), order: VecDeque::new(), capacity },
            y,
            c: config.c,
            tol: config.tol,
            max_iter: config.max_iter.unwrap_or_else(|| (100 * n).max(10_000_000)),
            diag,
            alpha: vec![0.0; n],
            grad: vec![-1.0; n],
            iterations: 0,
        })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    fn in_up(&self, t: usize) -> bool {
        if self.y[t] > 0.0 { self.alpha[t] < self.c } else { self.alpha[t] > 0.0 }
    }

    fn in_low(&self, t: usize) -> bool {
        if self.y[t] > 0.0 { self.alpha[t] > 0.0 } else { self.alpha[t] < self.c }
    }

    /// Pair to optimize next, or None when the violation is below tolerance.
    fn select(&mut self) -> Option<(usize, usize)> {
        let n = self.alpha.len();
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if self.in_up(t) {
                let v = -self.y[t] * self.grad[t];
                if v >= gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        if i == usize::MAX {
            return None;
        }
        let qi = self.q.column(i);
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !self.in_low(t) {
                continue;
            }
            let v = self.y[t] * self.grad[t];
            if v >= gmax2 {
                gmax2 = v;
            }
            let diff = gmax + v;
            if diff > 0.0 {
                // K_ii + K_tt − 2 K_it
                let mut quad = self.diag[i] + self.diag[t] - 2.0 * self.y[i] * self.y[t] * qi[t];
                if quad <= 0.0 {
                    quad = TAU;
                }
                let obj = -diff * diff / quad;
                if obj <= best {
                    best = obj;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < self.tol || j == usize::MAX {
            return None;
        }
        Some((i, j))
    }

    /// One pair update. Returns false once optimal within tolerance.
    pub fn step(&mut self) -> Result<bool> {
        let Some((i, j)) = self.select() else { return Ok(false) };
        if self.iterations >= self.max_iter {
            return Err(Error::NonConvergence { what: "SMO".into(), iterations: self.iterations });
        }
        self.iterations += 1;
        let qi = self.q.column(i);
        let qj = self.q.column(j);
        let c = self.c;
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if self.y[i] != self.y[j] {
            let mut quad = self.diag[i] + self.diag[j] + 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = self.diag[i] + self.diag[j] - 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for (k, g) in self.grad.iter_mut().enumerate() {
            *g += qi[k] * di + qj[k] * dj;
        }
        Ok(true)
    }

    fn bias(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free_sum, mut free_n) = (0.0, 0usize);
        for t in 0..self.alpha.len() {
            let yg = self.y[t] * self.grad[t];
            let at_upper = self.alpha[t] >= self.c;
            let at_lower = self.alpha[t] <= 0.0;
            if at_upper {
                if self.y[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
            } else if at_lower {
                if self.y[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
            } else {
                free_n += 1;
                free_sum += yg;
            }
        }
        let rho = if free_n > 0 { free_sum / free_n as f64 } else { (ub + lb) / 2.0 };
        // 0.0 - rho rather than -rho, so rho = 0 gives +0
        0.0 - rho
    }

    pub fn finish(self) -> SmoSolution {
        let objective = -0.5 * self.alpha.iter().zip(&self.grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>();
        SmoSolution { bias: self.bias(), iterations: self.iterations, objective, alpha: self.alpha }
    }
}

/// Solves the dual to tolerance on raw points with ±1 labels.
pub fn smo_solve(x: &[Vec<f64>], y: &[f64], kernel: Kernel, config: &SmoConfig) -> Result<SmoSolution> {
    let mut s = SmoSolver::new(x, y, kernel, config)?;
    while s.step()? {}
    Ok(s.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_instance() {
        let x = vec![vec![-1.0], vec![1.0]];
        let y = vec![-1.0, 1.0];
        let cfg = SmoConfig { c: 10.0, ..Default::default() };
        let s = smo_solve(&x, &y, Kernel::Linear, &cfg).unwrap();
        assert!((s.alpha[0] - 0.5).abs() < 1e-12);
        assert!((s.alpha[1] - 0.5).abs() < 1e-12);
        assert!(s.bias.abs() < 1e-12);
        assert!((s.objective - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_single_class_and_bad_cost() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(smo_solve(&x, &[1.0, 1.0], Kernel::Linear, &SmoConfig::default()).is_err());
        let cfg = SmoConfig { c: 0.0, ..Default::default() };
        assert!(smo_solve(&x, &[1.0, -1.0], Kernel::Linear, &cfg).is_err());
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
        let y: Vec<f64> = (0..40).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let cfg = SmoConfig { max_iter: Some(1), ..Default::default() };
        let err = smo_solve(&x, &y, Kernel::Rbf { gamma: 1.0 }, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }
}
