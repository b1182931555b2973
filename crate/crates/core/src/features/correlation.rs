//! Spearman rank correlation and correlation-based variable pruning.
//!
//! Nominal variables enter through their integer codes. That is a heuristic
//! for unordered categories, kept so that every variable pair gets a value.

use std::io::Write;

use rayon::prelude::*;

use crate::dataset::LongTable;
use crate::error::{Error, Result};

/// 1-based ranks, tied values sharing the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho over the pairs where both values are finite.
///
/// Non-finite entries (NaN marks an absent value) drop their pair. Returns
/// `None` when fewer than two complete pairs remain or either side is
/// constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "spearman needs equal-length inputs");
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| (*a, *b))
        .unzip();
    if xs.len() < 2 {
        return None;
    }
    pearson(&average_ranks(&xs), &average_ranks(&ys))
}

/// Symmetric matrix of pairwise-complete Spearman coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    names: Vec<String>,
    rho: Vec<Option<f64>>,
}

impl CorrelationMatrix {
    pub fn from_columns(names: Vec<String>, columns: &[Vec<f64>]) -> Self {
        let n = names.len();
        assert_eq!(n, columns.len());
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        // each pair is computed independently, so the result does not depend on scheduling
        let values: Vec<Option<f64>> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let r = spearman(&columns[i], &columns[j]);
                if i == j {
                    r.map(|_| 1.0)
                } else {
                    r
                }
            })
            .collect();
        let mut rho = vec![None; n * n];
        for (&(i, j), v) in pairs.iter().zip(values) {
            rho[i * n + j] = v;
            rho[j * n + i] = v;
        }
        CorrelationMatrix { names, rho }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.rho[i * self.names.len() + j]
    }

    pub fn get_by_name(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        self.get(i, j)
    }

    /// Sub-matrix over `keep`, in this matrix's order.
    pub fn restrict(&self, keep: &[String]) -> CorrelationMatrix {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep.contains(&self.names[i])).collect();
        let n = idx.len();
        let mut rho = vec![None; n * n];
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                rho[a * n + b] = self.get(i, j);
            }
        }
        CorrelationMatrix { names: idx.iter().map(|&i| self.names[i].clone()).collect(), rho }
    }

    /// Square CSV with a leading `variable` column; undefined cells are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["variable".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (i, name) in self.names.iter().enumerate() {
            let mut rec = vec![name.clone()];
            rec.extend((0..self.len()).map(|j| self.get(i, j).map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Spearman matrix over every table column (target included).
pub fn correlation_matrix(long: &LongTable) -> CorrelationMatrix {
    let names = long.variable_names();
    let columns: Vec<Vec<f64>> = (0..names.len())
        .map(|p| {
            long.rows()
                .iter()
                .map(|r| r.cells[p].as_f64().unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    CorrelationMatrix::from_columns(names, &columns)
}

/// Keep one variable from each group linked by |rho| >= `threshold`.
///
/// Groups are connected components of the "highly correlated" graph. The
/// survivor is the member listed first in `keep_policy`, else the member
/// first in matrix order. Returns survivors in matrix order.
pub fn prune_correlated(m: &CorrelationMatrix, threshold: f64, keep_policy: &[String]) -> Result<Vec<String>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Config(format!("pruning threshold {threshold} must lie in (0, 1]")));
    }
    let n = m.len();
    let mut component = vec![usize::MAX; n];
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        component[start] = start;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if component[j] == usize::MAX && i != j && m.get(i, j).is_some_and(|r| r.abs() >= threshold) {
                    component[j] = start;
                    stack.push(j);
                }
            }
        }
    }

    let priority = |i: usize| {
        keep_policy
            .iter()
            .position(|k| *k == m.names[i])
            .unwrap_or(usize::MAX)
    };
    let mut survivors = Vec::new();
    for root in 0..n {
        let members: Vec<usize> = (0..n).filter(|&i| component[i] == root).collect();
        if let Some(&best) = members.iter().min_by_key(|&&i| (priority(i), i)) {
            survivors.push(best);
        }
    }
    survivors.sort_unstable();
    Ok(survivors.into_iter().map(|i| m.names[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman(&x, &x), Some(1.0));
        assert_eq!(spearman(&x, &[4.0, 3.0, 2.0, 1.0]), Some(-1.0));
        let r = spearman(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-15, "{r}");
    }

    #[test]
    fn spearman_undefined_cases() {
        assert_eq!(spearman(&[1.0], &[2.0]), None);
        assert_eq!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), None);
        assert_eq!(spearman(&[1.0, f64::NAN, 3.0], &[2.0, 5.0, f64::NAN]), None);
        // NaN pairs are dropped, the rest is perfectly monotone
        assert_eq!(spearman(&[1.0, f64::NAN, 3.0, 4.0], &[1.0, 0.0, 5.0, 9.0]), Some(1.0));
    }

    #[test]
    fn average_ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
    }

    fn matrix(names: &[&str], pairs: &[(usize, usize, f64)]) -> CorrelationMatrix {
        let n = names.len();
        let mut rho = vec![Some(0.1); n * n];
        for i in 0..n {
            rho[i * n + i] = Some(1.0);
        }
        for &(i, j, r) in pairs {
            rho[i * n + j] = Some(r);
            rho[j * n + i] = Some(r);
        }
        CorrelationMatrix { names: names.iter().map(|s| s.to_string()).collect(), rho }
    }

    #[test]
    fn prune_drops_one_of_each_high_pair() {
        let names = [
            "sex", "race", "degree", "bio_father_grade", "bio_mother_grade", "res_father_grade",
            "res_mother_grade", "parental_income", "highest_grade", "age", "industry", "occupation",
            "work_weeks", "work_hours",
        ];
        let m = matrix(&names, &[(2, 8, 0.86), (3, 5, 0.91), (4, 6, -0.88)]);
        let keep: Vec<String> = ["degree", "res_father_grade", "res_mother_grade"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let kept = prune_correlated(&m, 0.7, &keep).unwrap();
        assert_eq!(kept.len(), 11);
        for dropped in ["highest_grade", "bio_father_grade", "bio_mother_grade"] {
            assert!(!kept.iter().any(|k| k == dropped), "{dropped} survived");
        }
        // without a keep list the first in matrix order survives
        let kept = prune_correlated(&m, 0.7, &[]).unwrap();
        assert!(kept.contains(&"bio_father_grade".to_string()));
        assert!(!kept.contains(&"res_father_grade".to_string()));
    }

    #[test]
    fn prune_identity_and_bad_threshold() {
        let m = matrix(&["a", "b", "c"], &[]);
        assert_eq!(prune_correlated(&m, 0.7, &[]).unwrap(), vec!["a", "b", "c"]);
        assert!(prune_correlated(&m, 0.0, &[]).is_err());
        assert!(prune_correlated(&m, 1.5, &[]).is_err());
    }

    #[test]
    fn prune_mutually_correlated_triple_keeps_one_component_member() {
        let m = matrix(&["a", "b", "c", "d"], &[(0, 1, 0.9), (1, 2, 0.8), (0, 2, 0.75)]);
        let kept = prune_correlated(&m, 0.7, &[]).unwrap();
        // brute force: the largest subset without a linked pair, containing "d"
        let mut best = 0;
        for mask in 0u32..16 {
            let members: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
            let independent = members.iter().all(|&i| {
                members.iter().all(|&j| i == j || m.get(i, j).unwrap().abs() < 0.7)
            });
            if independent {
                best = best.max(members.len());
            }
        }
        assert_eq!(kept.len(), best);
        assert_eq!(kept, vec!["a", "d"]);
    }

    proptest! {
        #[test]
        fn spearman_symmetric_bounded_and_rank_invariant(
            pairs in prop::collection::vec((0i32..8, -50.0f64..50.0), 2..40)
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let a = spearman(&x, &y);
            prop_assert_eq!(a, spearman(&y, &x));
            if let Some(r) = a {
                prop_assert!((-1.0..=1.0).contains(&r));
                let tx: Vec<f64> = x.iter().map(|v| v.exp() * 3.0 + 1.0).collect();
                let b = spearman(&tx, &y).unwrap();
                prop_assert!((r - b).abs() < 1e-12);
            }
        }

        #[test]
        fn pruned_set_has_no_linked_pair(rs in prop::collection::vec(-1.0f64..1.0, 15), t in 0.3f64..1.0) {
            let names = ["a", "b", "c", "d", "e", "f"];
            let mut pairs = Vec::new();
            let mut k = 0;
            for i in 0..6 {
                for j in (i + 1)..6 {
                    pairs.push((i, j, rs[k]));
                    k += 1;
                }
            }
            let m = matrix(&names, &pairs);
            let kept = prune_correlated(&m, t, &[]).unwrap();
            for a in &kept {
                for b in &kept {
                    if a != b {
                        prop_assert!(m.get_by_name(a, b).unwrap().abs() < t);
                    }
                }
            }
        }
    }
}
