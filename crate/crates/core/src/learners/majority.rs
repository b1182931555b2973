use crate::error::{Error, Result};
use crate::features::{class_distribution, ColumnDescriptor, ClassLabel, NUM_CLASSES};

/// Always predicts the most frequent training class; scores are the training priors.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorityModel {
    pub majority: ClassLabel,
    pub priors: [f64; NUM_CLASSES],
    pub columns: Vec<ColumnDescriptor>,
}

pub fn fit_majority(targets: &[ClassLabel], columns: Vec<ColumnDescriptor>) -> Result<MajorityModel> {
    if targets.is_empty() {
        return Err(Error::Data("cannot fit a majority model on no rows".into()));
    }
    let priors = class_distribution(targets)?;
    Ok(MajorityModel { majority: ClassLabel::argmax(&priors), priors, columns })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[u8]) -> Vec<ClassLabel> {
        v.iter().map(|&c| ClassLabel::new(c).unwrap()).collect()
    }

    #[test]
    fn majority_rules() {
        assert_eq!(fit_majority(&labels(&[2]), vec![]).unwrap().majority.value(), 2);
        assert_eq!(fit_majority(&labels(&[1, 1, 2, 2]), vec![]).unwrap().majority.value(), 1);
        assert_eq!(fit_majority(&labels(&[3, 2, 3]), vec![]).unwrap().majority.value(), 3);
        assert!(fit_majority(&[], vec![]).is_err());
    }

    #[test]
    fn reported_priors_pick_class_one() {
        // 57.564 / 31.344 / 11.092 percent of 100,000 rows
        let mut t = vec![ClassLabel::ALL[0]; 57_564];
        t.extend(vec![ClassLabel::ALL[1]; 31_344]);
        t.extend(vec![ClassLabel::ALL[2]; 11_092]);
        let m = fit_majority(&t, vec![]).unwrap();
        assert_eq!(m.majority.value(), 1);
        assert!((m.priors[0] - 0.57564).abs() < 1e-12);
        assert!((m.priors.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
