use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::features::{ClassLabel, NUM_CLASSES};

/// Rows are actual classes, columns predicted classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; NUM_CLASSES]; NUM_CLASSES]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..NUM_CLASSES).map(|k| self.counts[k][k]).sum()
    }

    pub fn get(&self, actual: ClassLabel, predicted: ClassLabel) -> u64 {
        self.counts[actual.index()][predicted.index()]
    }

    /// Actual-class counts (row sums).
    pub fn actual_counts(&self) -> [u64; NUM_CLASSES] {
        self.counts.map(|r| r.iter().sum())
    }
}

pub fn confusion(actual: &[ClassLabel], predicted: &[ClassLabel]) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(Error::Data(format!("{} actual labels but {} predictions", actual.len(), predicted.len())));
    }
    if actual.is_empty() {
        return Err(Error::Data("confusion matrix of no rows".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (a, p) in actual.iter().zip(predicted) {
        cm.counts[a.index()][p.index()] += 1;
    }
    Ok(cm)
}

/// Percentage of correctly classified instances.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Data("accuracy of an empty confusion matrix".into()));
    }
    Ok(100.0 * cm.correct() as f64 / total as f64)
}

/// One-vs-rest AUC as the Mann–Whitney statistic, ties counting one half.
/// `None` when either side is empty.
pub fn roc_auc_ovr(scores: &[f64], positives: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), positives.len(), "scores and labels differ in length");
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));
    let (mut neg_below, mut concordant, mut tied) = (0u128, 0u128, 0u128);
    let mut start = 0;
    while start < idx.len() {
        let mut end = start;
        while end < idx.len() && scores[idx[end]] == scores[idx[start]] {
            end += 1;
        }
        let pos = idx[start..end].iter().filter(|&&i| positives[i]).count() as u128;
        let neg = (end - start) as u128 - pos;
        concordant += pos * neg_below;
        tied += pos * neg;
        neg_below += neg;
        start = end;
    }
    let p = positives.iter().filter(|&&b| b).count() as u128;
    let n = positives.len() as u128 - p;
    if p == 0 || n == 0 {
        return None;
    }
    Some((2 * concordant + tied) as f64 / (2 * p * n) as f64)
}

/// Prevalence-weighted mean of per-class AUCs.
pub fn weighted_auc(aucs: &[Option<f64>; NUM_CLASSES], prevalence: &[f64; NUM_CLASSES]) -> Result<f64> {
    let sum: f64 = prevalence.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || prevalence.iter().any(|&p| p < 0.0) {
        return Err(Error::Data(format!("prevalence {prevalence:?} is not a distribution")));
    }
    let mut acc = 0.0;
    for k in 0..NUM_CLASSES {
        if prevalence[k] > 0.0 {
            let a = aucs[k].ok_or_else(|| {
                Error::Data(format!("AUC of class {} undefined but its prevalence is {}", k + 1, prevalence[k]))
            })?;
            acc += prevalence[k] * a;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(v: &[u8]) -> Vec<ClassLabel> {
        v.iter().map(|&c| ClassLabel::new(c).unwrap()).collect()
    }

    #[test]
    fn table_eight_accuracy() {
        let cm = ConfusionMatrix::from_counts([[2064, 299, 19], [473, 749, 75], [87, 180, 192]]);
        assert_eq!(cm.total(), 4138);
        assert!((accuracy(&cm).unwrap() - 72.6196).abs() < 5e-5);
    }

    #[test]
    fn confusion_shapes() {
        let cm = confusion(&labels(&[1, 2, 3]), &labels(&[1, 2, 3])).unwrap();
        assert_eq!(accuracy(&cm).unwrap(), 100.0);
        let cm = confusion(&labels(&[1, 1]), &labels(&[2, 2])).unwrap();
        assert_eq!(cm.counts[0][1], 2);
        assert_eq!(cm.total(), 2);
        assert!(confusion(&labels(&[1]), &[]).is_err());
        assert!(accuracy(&ConfusionMatrix::default()).is_err());
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc_ovr(&[0.9, 0.8, 0.3, 0.2], &[true, false, true, false]), Some(0.75));
        assert_eq!(roc_auc_ovr(&[0.9, 0.8, 0.3, 0.2], &[true, true, false, false]), Some(1.0));
        assert_eq!(roc_auc_ovr(&[0.4; 5], &[true, false, true, false, false]), Some(0.5));
        assert_eq!(roc_auc_ovr(&[0.1, 0.2], &[true, true]), None);
    }

    #[test]
    fn weighted_auc_rules() {
        let a = [Some(0.8); 3];
        assert!((weighted_auc(&a, &[0.2, 0.5, 0.3]).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(weighted_auc(&[Some(0.7), None, None], &[1.0, 0.0, 0.0]).unwrap(), 0.7);
        assert!(weighted_auc(&[Some(0.7), None, None], &[0.5, 0.5, 0.0]).is_err());
    }

    fn brute_auc(s: &[f64], pos: &[bool]) -> Option<f64> {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..s.len() {
            for j in 0..s.len() {
                if pos[i] && !pos[j] {
                    den += 1.0;
                    num += if s[i] > s[j] { 1.0 } else if s[i] == s[j] { 0.5 } else { 0.0 };
                }
            }
        }
        (den > 0.0).then(|| num / den)
    }

    proptest! {
        #[test]
        fn auc_matches_pair_count(v in prop::collection::vec((0u8..6, any::<bool>()), 1..60)) {
            let s: Vec<f64> = v.iter().map(|p| p.0 as f64 / 5.0).collect();
            let pos: Vec<bool> = v.iter().map(|p| p.1).collect();
            let got = roc_auc_ovr(&s, &pos);
            let want = brute_auc(&s, &pos);
            prop_assert_eq!(got.is_some(), want.is_some());
            if let (Some(g), Some(w)) = (got, want) {
                prop_assert!((g - w).abs() < 1e-12);
                // strictly increasing transform leaves AUC unchanged
                let t: Vec<f64> = s.iter().map(|x| (3.0 * x).exp()).collect();
                prop_assert_eq!(roc_auc_ovr(&t, &pos), got);
            }
        }

        #[test]
        fn sign_flip_complements_without_ties(v in prop::collection::btree_set(0u32..10_000, 2..40), seed in any::<u64>()) {
            let s: Vec<f64> = v.iter().map(|&x| x as f64).collect();
            let pos: Vec<bool> = (0..s.len()).map(|i| (seed >> (i % 64)) & 1 == 1).collect();
            if let Some(a) = roc_auc_ovr(&s, &pos) {
                let neg: Vec<f64> = s.iter().map(|x| -x).collect();
                prop_assert!((roc_auc_ovr(&neg, &pos).unwrap() - (1.0 - a)).abs() < 1e-12);
            }
        }

        #[test]
        fn accuracy_is_fraction_of_matches(v in prop::collection::vec((1u8..=3, 1u8..=3), 1..200)) {
            let a: Vec<ClassLabel> = v.iter().map(|p| ClassLabel::new(p.0).unwrap()).collect();
            let p: Vec<ClassLabel> = v.iter().map(|p| ClassLabel::new(p.1).unwrap()).collect();
            let cm = confusion(&a, &p).unwrap();
            let equal = v.iter().filter(|p| p.0 == p.1).count();
            prop_assert_eq!(accuracy(&cm).unwrap(), 100.0 * equal as f64 / v.len() as f64);
        }
    }
}
