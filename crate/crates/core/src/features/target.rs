use std::fmt;

use crate::dataset::{Cell, LongTable, DEFAULT_CLASS_EDGES};
use crate::error::{Error, Result};

pub const NUM_CLASSES: usize = 3;

/// Income class: 1 = below the first edge, 2 = between, 3 = at or above the second edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassLabel(u8);

impl ClassLabel {
    pub const ALL: [ClassLabel; NUM_CLASSES] = [ClassLabel(1), ClassLabel(2), ClassLabel(3)];

    pub fn new(value: u8) -> Option<Self> {
        (1..=NUM_CLASSES as u8).contains(&value).then_some(ClassLabel(value))
    }

    /// Zero-based index, for score and count arrays.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < NUM_CLASSES, "class index {index} out of range");
        ClassLabel(index as u8 + 1)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Argmax over class scores; ties go to the smallest class id.
    pub fn argmax(scores: &[f64; NUM_CLASSES]) -> Self {
        let mut best = 0;
        for k in 1..NUM_CLASSES {
            if scores[k] > scores[best] {
                best = k;
            }
        }
        ClassLabel::from_index(best)
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn bin_target(income: f64) -> Result<ClassLabel> {
    bin_target_with(income, DEFAULT_CLASS_EDGES)
}

pub fn bin_target_with(income: f64, edges: [f64; 2]) -> Result<ClassLabel> {
    if income.is_nan() || income < 0.0 {
        return Err(Error::Data(format!("cannot bin negative income {income}")));
    }
    let class = 1 + edges.iter().filter(|&&e| income >= e).count();
    Ok(ClassLabel(class as u8))
}

/// Class labels of every row, using the codebook's target edges.
pub fn binned_targets(long: &LongTable) -> Result<Vec<ClassLabel>> {
    let t = long.target_position();
    let edges = long.codebook().class_edges();
    long.rows()
        .iter()
        .map(|r| match r.cells[t] {
            Cell::Num(v) => bin_target_with(v, edges),
            other => Err(Error::Data(format!(
                "row ({}, {}) has unusable target {other:?}",
                r.id, r.year
            ))),
        })
        .collect()
}

pub fn class_counts(targets: &[ClassLabel]) -> [usize; NUM_CLASSES] {
    let mut counts = [0; NUM_CLASSES];
    for t in targets {
        counts[t.index()] += 1;
    }
    counts
}

/// Share of each class.
pub fn class_distribution(targets: &[ClassLabel]) -> Result<[f64; NUM_CLASSES]> {
    if targets.is_empty() {
        return Err(Error::Data("class distribution of an empty label set".into()));
    }
    let n = targets.len() as f64;
    Ok(class_counts(targets).map(|c| c as f64 / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bins_examples() {
        assert_eq!(bin_target(128_400.0).unwrap().value(), 3);
        assert_eq!(bin_target(0.0).unwrap().value(), 1);
        assert_eq!(bin_target(49_999.99).unwrap().value(), 1);
        assert_eq!(bin_target(50_000.0).unwrap().value(), 2);
        assert_eq!(bin_target(99_999.0).unwrap().value(), 2);
        assert_eq!(bin_target(100_000.0).unwrap().value(), 3);
        assert!(bin_target(-1.0).is_err());
    }

    #[test]
    fn distribution_examples() {
        let ones = vec![ClassLabel::ALL[0]; 4];
        assert_eq!(class_distribution(&ones).unwrap(), [1.0, 0.0, 0.0]);
        assert!(class_distribution(&[]).is_err());
    }

    #[test]
    fn argmax_ties_pick_smallest() {
        assert_eq!(ClassLabel::argmax(&[0.4, 0.4, 0.2]).value(), 1);
        assert_eq!(ClassLabel::argmax(&[0.2, 0.4, 0.4]).value(), 2);
        assert_eq!(ClassLabel::argmax(&[1.0 / 3.0; 3]).value(), 1);
    }

    proptest! {
        #[test]
        fn binning_is_monotone(a in 0.0f64..400_000.0, b in 0.0f64..400_000.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(bin_target(lo).unwrap() <= bin_target(hi).unwrap());
        }

        #[test]
        fn distribution_matches_counting(labels in prop::collection::vec(1u8..=3, 1..200)) {
            let labels: Vec<ClassLabel> = labels.into_iter().map(|v| ClassLabel::new(v).unwrap()).collect();
            let p = class_distribution(&labels).unwrap();
            for (k, share) in p.iter().enumerate() {
                let mut count = 0;
                for l in &labels {
                    if l.index() == k {
                        count += 1;
                    }
                }
                prop_assert_eq!(*share, count as f64 / labels.len() as f64);
            }
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}
