//! Seeded percentage splits, optionally keeping each individual on one side.
//!
//! Rows produced by unrolling share an individual id across years. A plain
//! row-level split lets one person's rows land on both sides, so the test set
//! contains near-copies of training rows and scores run optimistic. Set
//! `group_by_individual` for an honest estimate.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::features::DesignMatrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub group_by_individual: bool,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Config(format!("train fraction must lie in (0, 1), got {train_fraction}")));
        }
        Ok(SplitSpec { train_fraction, seed, group_by_individual: false })
    }

    pub fn grouped(mut self, on: bool) -> Self {
        self.group_by_individual = on;
        self
    }
}

/// Train and test row indices, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn finish(mut train: Vec<usize>, mut test: Vec<usize>) -> Result<Split> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::Data(format!("split leaves {} train and {} test rows", train.len(), test.len())));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

/// Shuffles 0..n with the seed and cuts after round(n·fraction) rows.
pub fn percentage_split(n: usize, spec: &SplitSpec) -> Result<Split> {
    if n < 2 {
        return Err(Error::Data(format!("cannot split {n} rows")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::substream(spec.seed, "split"));
    let cut = ((n as f64 * spec.train_fraction).round() as usize).clamp(1, n - 1);
    let test = idx.split_off(cut);
    finish(idx, test)
}

/// Shuffles individuals and cuts where the running row count comes closest to
/// round(n·fraction); every row of one individual lands on the same side.
pub fn percentage_split_grouped(groups: &[i64], spec: &SplitSpec) -> Result<Split> {
    let n = groups.len();
    let mut members: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        members.entry(*g).or_default().push(i);
    }
    if members.len() < 2 {
        return Err(Error::Data("grouped split needs at least two individuals".into()));
    }
    let mut order: Vec<&Vec<usize>> = members.values().collect();
    order.shuffle(&mut rng::substream(spec.seed, "split"));
    let target = (n as f64 * spec.train_fraction).round() as usize;
    let mut cum = 0;
    let mut best = (usize::MAX, 1);
    for (k, g) in order.iter().enumerate().take(order.len() - 1) {
        cum += g.len();
        let gap = cum.abs_diff(target);
        if gap < best.0 {
            best = (gap, k + 1);
        }
    }
    let (head, tail) = order.split_at(best.1);
    finish(head.iter().flat_map(|g| g.iter().copied()).collect(), tail.iter().flat_map(|g| g.iter().copied()).collect())
}

/// Splits a design matrix's rows, grouping by individual id when requested.
pub fn split_rows(m: &DesignMatrix, spec: &SplitSpec) -> Result<Split> {
    if spec.group_by_individual {
        let ids: Vec<i64> = m.row_ids().iter().map(|&(id, _)| id).collect();
        percentage_split_grouped(&ids, spec)
    } else {
        percentage_split(m.n_rows(), spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ten_rows_eighty_percent() {
        let spec = SplitSpec::new(0.8, 1).unwrap();
        let s = percentage_split(10, &spec).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (8, 2));
        assert_eq!(s, percentage_split(10, &spec).unwrap());
    }

    #[test]
    fn bad_fraction_and_tiny_inputs() {
        assert!(SplitSpec::new(1.0, 0).is_err());
        assert!(SplitSpec::new(0.0, 0).is_err());
        let spec = SplitSpec::new(0.5, 0).unwrap();
        assert!(percentage_split(1, &spec).is_err());
        assert!(percentage_split_grouped(&[7, 7, 7], &spec).is_err());
    }

    #[test]
    fn grouped_split_never_straddles() {
        let groups: Vec<i64> = (0..400).map(|i| i / 4).collect();
        let spec = SplitSpec::new(0.8, 9).unwrap().grouped(true);
        let s = percentage_split_grouped(&groups, &spec).unwrap();
        assert_eq!(s.train.len(), 320);
        let train_ids: std::collections::HashSet<i64> = s.train.iter().map(|&i| groups[i]).collect();
        assert!(s.test.iter().all(|&i| !train_ids.contains(&groups[i])));
    }

    proptest! {
        #[test]
        fn split_partitions(n in 2usize..300, frac in 0.05f64..0.95, seed in any::<u64>()) {
            let s = percentage_split(n, &SplitSpec::new(frac, seed).unwrap()).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let expected = ((n as f64 * frac).round() as usize).clamp(1, n - 1);
            prop_assert_eq!(s.train.len(), expected);
        }
    }
}
