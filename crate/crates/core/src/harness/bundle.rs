//! Report files written by every experiment.
//!
//! A bundle `<kind>` writes `<kind>_metrics.csv`, `<kind>_predictions.csv`,
//! `<kind>_report.md` and `<kind>_run.txt`; explain runs add the SHAP CSVs.
//! Nothing time-dependent is written, so reruns are byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{confusion_markdown, markdown_table, score_predictions, EvalReport};
use crate::explain::{instance_id, write_shap_base, write_shap_summary, FeatureRanking, ShapMatrix};
use crate::features::{ClassLabel, NUM_CLASSES};
use crate::dataset::LongTable;

use super::config::ExperimentConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub instance_id: String,
    pub actual: ClassLabel,
    pub predicted: ClassLabel,
    pub scores: [f64; NUM_CLASSES],
}

/// One evaluated model inside an experiment, with its raw predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub label: String,
    pub report: EvalReport,
    pub predictions: Vec<PredictionRecord>,
}

impl ExperimentResult {
    /// Recomputes the report from the stored predictions alone.
    pub fn rescore(&self) -> Result<EvalReport> {
        rescore(&self.report.model, &self.predictions, self.report.train_size)
    }
}

pub fn rescore(model: &str, predictions: &[PredictionRecord], train_size: usize) -> Result<EvalReport> {
    let actual: Vec<ClassLabel> = predictions.iter().map(|p| p.actual).collect();
    let predicted: Vec<ClassLabel> = predictions.iter().map(|p| p.predicted).collect();
    let scores: Vec<[f64; NUM_CLASSES]> = predictions.iter().map(|p| p.scores).collect();
    score_predictions(model, &actual, &predicted, &scores, train_size)
}

/// SHAP output of an explain run. `features` holds the explained rows of the
/// long table, aligned with `matrix.rows`.
#[derive(Debug, Clone)]
pub struct ShapExport {
    pub matrix: ShapMatrix,
    pub features: LongTable,
}

#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub kind: String,
    pub title: String,
    pub seed: u64,
    pub config_hash: String,
    pub settings: BTreeMap<String, String>,
    pub results: Vec<ExperimentResult>,
    pub notes: Vec<String>,
    pub ranking: Option<FeatureRanking>,
    pub shap: Option<ShapExport>,
    /// Display names for variables in the markdown report.
    pub labels: BTreeMap<String, String>,
}

impl ReportBundle {
    pub fn new(kind: &str, title: &str, config: &ExperimentConfig) -> Result<Self> {
        Ok(ReportBundle {
            kind: kind.to_string(),
            title: title.to_string(),
            seed: config.seed()?,
            config_hash: config_hash(config)?,
            settings: config.resolved_entries(),
            results: Vec::new(),
            notes: Vec::new(),
            ranking: None,
            shap: None,
            labels: config.labels.clone(),
        })
    }

    pub fn result(&self, label: &str) -> Option<&ExperimentResult> {
        self.results.iter().find(|r| r.label == label)
    }

    fn label<'a>(&'a self, v: &'a str) -> &'a str {
        self.labels.get(v).map_or(v, String::as_str)
    }

    pub fn metrics_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["experiment", "metric", "value"])?;
        for r in &self.results {
            for (k, v) in r.report.metric_rows() {
                w.write_record([r.label.as_str(), &k, &v])?;
            }
        }
        into_bytes(w)
    }

    pub fn predictions_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["experiment", "row_id", "actual", "predicted", "score1", "score2", "score3"])?;
        for r in &self.results {
            for p in &r.predictions {
                w.write_record([
                    r.label.clone(),
                    p.instance_id.clone(),
                    p.actual.value().to_string(),
                    p.predicted.value().to_string(),
                    p.scores[0].to_string(),
                    p.scores[1].to_string(),
                    p.scores[2].to_string(),
                ])?;
            }
        }
        into_bytes(w)
    }

    pub fn markdown(&self) -> String {
        let mut s = format!("# {}\n\n", self.title);
        let rows: Vec<(String, &EvalReport)> = self.results.iter().map(|r| (r.label.clone(), &r.report)).collect();
        if !rows.is_empty() {
            s.push_str(&markdown_table(&rows));
            s.push('\n');
        }
        if !self.notes.is_empty() {
            for n in &self.notes {
                let _ = writeln!(s, "- {n}");
            }
            s.push('\n');
        }
        if let Some(rank) = &self.ranking {
            s.push_str("## Feature ranking (mean |SHAP|)\n\n| Rank | Variable | Mean abs SHAP |\n|---|---|---|\n");
            for (i, (v, val)) in rank.entries.iter().enumerate() {
                let _ = writeln!(s, "| {} | {} | {:.6} |", i + 1, self.label(v), val);
            }
            s.push('\n');
        }
        for r in &self.results {
            let _ = writeln!(s, "## Confusion matrix: {}\n", r.label);
            s.push_str(&confusion_markdown(&r.report.confusion, &["<50K", "50K-100K", ">=100K"]));
            let _ = writeln!(
                s,
                "\ntrain rows {}, test rows {}, model {}\n",
                r.report.train_size, r.report.test_size, r.report.model
            );
        }
        s
    }

    pub fn run_text(&self) -> String {
        let mut s = format!("experiment = {}\nseed = {}\nconfig_hash = {}\n", self.kind, self.seed, self.config_hash);
        for (k, v) in &self.settings {
            let _ = writeln!(s, "setting {k} = {v}");
        }
        s
    }

    /// Writes every file into `dir`, creating it, and returns the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: String, bytes: &[u8]| -> Result<()> {
            let p = dir.join(name);
            fs::write(&p, bytes)?;
            written.push(p);
            Ok(())
        };
        let k = &self.kind;
        put(format!("{k}_metrics.csv"), &self.metrics_csv()?)?;
        put(format!("{k}_predictions.csv"), &self.predictions_csv()?)?;
        put(format!("{k}_report.md"), self.markdown().as_bytes())?;
        put(format!("{k}_run.txt"), self.run_text().as_bytes())?;
        if let Some(rank) = &self.ranking {
            let mut buf = Vec::new();
            rank.write_csv(&mut buf)?;
            put(format!("{k}_shap_ranking.csv"), &buf)?;
        }
        if let Some(shap) = &self.shap {
            let mut buf = Vec::new();
            write_shap_summary(&shap.matrix, &shap.features, &mut buf)?;
            put(format!("{k}_shap_summary.csv"), &buf)?;
            let mut buf = Vec::new();
            write_shap_base(&shap.matrix, &mut buf)?;
            put(format!("{k}_shap_base.csv"), &buf)?;
        }
        Ok(written)
    }
}

fn into_bytes(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Reads a predictions CSV back, grouped by experiment label in file order.
pub fn read_predictions<R: Read>(reader: R) -> Result<Vec<(String, Vec<PredictionRecord>)>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out: Vec<(String, Vec<PredictionRecord>)> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |what: &str| Error::parse("predictions", line, what.to_string());
        if rec.len() != 7 {
            return Err(bad("expected 7 fields"));
        }
        let class = |k: usize| {
            rec[k].parse::<u8>().ok().and_then(ClassLabel::new).ok_or_else(|| bad("bad class label"))
        };
        let score = |k: usize| rec[k].parse::<f64>().map_err(|_| bad("bad score"));
        let p = PredictionRecord {
            instance_id: rec[1].to_string(),
            actual: class(2)?,
            predicted: class(3)?,
            scores: [score(4)?, score(5)?, score(6)?],
        };
        match out.last_mut() {
            Some((label, v)) if label == &rec[0] => v.push(p),
            _ => out.push((rec[0].to_string(), vec![p])),
        }
    }
    Ok(out)
}

pub(crate) fn prediction_id(row: (i64, u16)) -> String {
    instance_id(row.0, row.1)
}

fn hash_file(h: &mut Sha256, label: &str, path: &Path) -> Result<()> {
    let bytes = fs::read(path).map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    h.update(label.as_bytes());
    h.update(Sha256::digest(&bytes));
    Ok(())
}

/// SHA-256 over the result-shaping settings and the contents (not the paths)
/// of every input file.
pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    let mut h = Sha256::new();
    for (k, v) in config.resolved_entries() {
        h.update(format!("{k}={v}\n").as_bytes());
    }
    if let Some(p) = &config.codebook {
        hash_file(&mut h, "codebook", p)?;
    }
    if let Some(p) = &config.data {
        hash_file(&mut h, "data", p)?;
    }
    for (name, p) in &config.recode_files {
        hash_file(&mut h, &format!("recode.{name}"), p)?;
    }
    Ok(h.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

/// Writes bytes through a buffered file, creating parent directories.
pub(crate) fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}
