use std::fmt::Write as _;
use std::io::Write;

use super::metrics::{accuracy, confusion, roc_auc_ovr, weighted_auc, ConfusionMatrix};
use super::split::{split_rows, SplitSpec};
use crate::error::{Error, Result};
use crate::features::{ClassLabel, DesignMatrix, NUM_CLASSES};
use crate::learners::{predict_matrix, FittedModel, ModelSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub model: String,
    /// Percentage of correctly classified test rows.
    pub accuracy: f64,
    /// One-vs-rest AUC per class; `None` when the class is absent from the test rows.
    pub auc: [Option<f64>; NUM_CLASSES],
    /// Prevalence-weighted AUC; 0.5 by convention when `auc_undefined`.
    pub weighted_auc: f64,
    /// Some class present in the test rows had no AUC (the test side holds one class only).
    pub auc_undefined: bool,
    pub confusion: ConfusionMatrix,
    pub train_size: usize,
    pub test_size: usize,
}

/// Scores already-made predictions against the actual labels.
pub fn score_predictions(
    model: &str,
    actual: &[ClassLabel],
    predicted: &[ClassLabel],
    scores: &[[f64; NUM_CLASSES]],
    train_size: usize,
) -> Result<EvalReport> {
    if scores.len() != actual.len() {
        return Err(Error::Data("score rows and labels differ in length".into()));
    }
    let cm = confusion(actual, predicted)?;
    let mut auc = [None; NUM_CLASSES];
    for (k, a) in auc.iter_mut().enumerate() {
        let col: Vec<f64> = scores.iter().map(|s| s[k]).collect();
        let pos: Vec<bool> = actual.iter().map(|c| c.index() == k).collect();
        *a = roc_auc_ovr(&col, &pos);
    }
    let n = actual.len() as f64;
    let prevalence = cm.actual_counts().map(|c| c as f64 / n);
    let (weighted, undefined) = match weighted_auc(&auc, &prevalence) {
        Ok(w) => (w, false),
        Err(_) => (0.5, true),
    };
    Ok(EvalReport {
        model: model.to_string(),
        accuracy: accuracy(&cm)?,
        auc,
        weighted_auc: weighted,
        auc_undefined: undefined,
        confusion: cm,
        train_size,
        test_size: actual.len(),
    })
}

/// Evaluates a fitted model on held-out rows.
pub fn evaluate_fitted(model: &FittedModel, test: &DesignMatrix, train_size: usize) -> Result<EvalReport> {
    let preds = predict_matrix(model, test)?;
    let predicted: Vec<ClassLabel> = preds.iter().map(|p| p.label).collect();
    let scores: Vec<[f64; NUM_CLASSES]> = preds.iter().map(|p| p.scores).collect();
    score_predictions(model.name(), test.targets(), &predicted, &scores, train_size)
}

/// Splits, fits on the train side only, and scores on the test side.
/// Returns the fitted model too so callers can explain or save it.
pub fn evaluate(spec: &ModelSpec, m: &DesignMatrix, split: &SplitSpec, seed: u64) -> Result<(EvalReport, FittedModel)> {
    if m.n_rows() == 0 {
        return Err(Error::Data("cannot evaluate on an empty matrix".into()));
    }
    let s = split_rows(m, split)?;
    let train = m.select_rows(&s.train);
    let test = m.select_rows(&s.test);
    let model = spec.fit(&train, seed)?;
    let report = evaluate_fitted(&model, &test, train.n_rows())?;
    Ok((report, model))
}

fn fmt_auc(a: Option<f64>) -> String {
    a.map_or("NA".into(), |v| v.to_string())
}

impl EvalReport {
    /// (metric, value) pairs in a fixed order.
    pub fn metric_rows(&self) -> Vec<(String, String)> {
        let mut rows: Vec<(String, String)> = vec![
            ("model".into(), self.model.clone()),
            ("train_rows".into(), self.train_size.to_string()),
            ("test_rows".into(), self.test_size.to_string()),
            ("accuracy".into(), self.accuracy.to_string()),
        ];
        for k in 0..NUM_CLASSES {
            rows.push((format!("auc_class{}", k + 1), fmt_auc(self.auc[k])));
        }
        rows.push(("weighted_auc".into(), self.weighted_auc.to_string()));
        rows.push(("auc_undefined".into(), self.auc_undefined.to_string()));
        for a in 0..NUM_CLASSES {
            for p in 0..NUM_CLASSES {
                rows.push((format!("confusion_{}_{}", a + 1, p + 1), self.confusion.counts[a][p].to_string()));
            }
        }
        rows
    }

    /// `metric,value` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "value"])?;
        for (k, v) in self.metric_rows() {
            w.write_record([k, v])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One markdown table row: accuracy to four decimals, AUC to three.
    pub fn markdown_row(&self, label: &str) -> String {
        format!("| {label} | {:.4}% | {:.3} |", self.accuracy, self.weighted_auc)
    }
}

/// Markdown table `| Models | Correctly Classified Instances | ROC Area |`.
pub fn markdown_table(rows: &[(String, &EvalReport)]) -> String {
    let mut s = String::from("| Models | Correctly Classified Instances | ROC Area |\n|---|---|---|\n");
    for (label, r) in rows {
        let _ = writeln!(s, "{}", r.markdown_row(label));
    }
    s
}

/// Confusion matrix as a markdown table, actual classes down, predicted across.
pub fn confusion_markdown(cm: &ConfusionMatrix, class_names: &[&str; NUM_CLASSES]) -> String {
    let mut s = String::from("| Actual \\ Predicted |");
    for n in class_names {
        let _ = write!(s, " {n} |");
    }
    s.push_str("\n|---|---|---|---|\n");
    for (a, name) in class_names.iter().enumerate() {
        let _ = write!(s, "| {name} |");
        for p in 0..NUM_CLASSES {
            let _ = write!(s, " {} |", cm.counts[a][p]);
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_scores() {
        let actual: Vec<ClassLabel> = (0..9).map(|i| ClassLabel::from_index(i % 3)).collect();
        let scores: Vec<[f64; 3]> = actual
            .iter()
            .map(|c| {
                let mut s = [0.0; 3];
                s[c.index()] = 1.0;
                s
            })
            .collect();
        let r = score_predictions("oracle", &actual, &actual, &scores, 20).unwrap();
        assert_eq!(r.accuracy, 100.0);
        assert_eq!(r.auc, [Some(1.0); 3]);
        assert_eq!(r.weighted_auc, 1.0);
        assert_eq!(r.accuracy, accuracy(&r.confusion).unwrap());
    }

    #[test]
    fn single_class_test_side_flags_auc() {
        let actual = vec![ClassLabel::ALL[0]; 4];
        let r = score_predictions("m", &actual, &actual, &[[1.0, 0.0, 0.0]; 4], 4).unwrap();
        assert_eq!(r.accuracy, 100.0);
        assert!(r.auc_undefined);
        assert_eq!(r.weighted_auc, 0.5);
    }

    #[test]
    fn markdown_layout() {
        let cm = ConfusionMatrix::from_counts([[2064, 299, 19], [473, 749, 75], [87, 180, 192]]);
        let r = EvalReport {
            model: "Random Forest".into(),
            accuracy: accuracy(&cm).unwrap(),
            auc: [Some(0.85); 3],
            weighted_auc: 0.849,
            auc_undefined: false,
            confusion: cm,
            train_size: 16553,
            test_size: 4138,
        };
        let t = markdown_table(&[("Random Forest".into(), &r)]);
        assert!(t.starts_with("| Models | Correctly Classified Instances | ROC Area |"));
        assert!(t.contains("| Random Forest | 72.6196% | 0.849 |"));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("confusion_3_3,192"));
    }
}
