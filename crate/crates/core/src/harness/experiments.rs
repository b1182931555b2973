//! The experiment suite: baseline, model comparison, longitudinal comparison,
//! feature ablation and SHAP explanation, plus the `ingest` and `explore`
//! data summaries.

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::index;

use crate::dataset::{balanced_year_sample, LongTable};
use crate::error::{Error, Result};
use crate::eval::{score_predictions, split_rows, Split};
use crate::explain::{
    explain_forest, explain_forest_all_classes, explain_sampling, mean_abs_ranking, ShapMatrix, ShapTarget,
};
use crate::features::{binned_targets, class_counts, class_distribution, ClassLabel, DesignMatrix, NUM_CLASSES};
use crate::learners::{predict_matrix, FittedModel, ModelSpec};
use crate::rng;

use super::bundle::{prediction_id, write_file, ExperimentResult, PredictionRecord, ReportBundle, ShapExport};
use super::config::{ExperimentConfig, ExplainMethod, ExplainTarget};
use super::pipeline::{load_cleaned, prepare, select_features, Prepared};

/// Fits `spec` on the train rows of `m` and records predictions on the test rows.
pub fn fit_and_score(
    label: &str,
    spec: &ModelSpec,
    m: &DesignMatrix,
    split: &Split,
    seed: u64,
) -> Result<(ExperimentResult, FittedModel)> {
    let train = m.select_rows(&split.train);
    let test = m.select_rows(&split.test);
    let model = spec.fit(&train, seed)?;
    let preds = predict_matrix(&model, &test)?;
    let predictions: Vec<PredictionRecord> = preds
        .iter()
        .zip(test.targets())
        .zip(test.row_ids())
        .map(|((p, &actual), &id)| PredictionRecord {
            instance_id: prediction_id(id),
            actual,
            predicted: p.label,
            scores: p.scores,
        })
        .collect();
    let actual: Vec<ClassLabel> = test.targets().to_vec();
    let predicted: Vec<ClassLabel> = preds.iter().map(|p| p.label).collect();
    let scores: Vec<[f64; NUM_CLASSES]> = preds.iter().map(|p| p.scores).collect();
    let report = score_predictions(model.name(), &actual, &predicted, &scores, train.n_rows())?;
    Ok((ExperimentResult { label: label.to_string(), report, predictions }, model))
}

fn data_notes(p: &Prepared, m: &DesignMatrix) -> Vec<String> {
    let c = &p.cleaned;
    let mut notes = vec![format!(
        "{} individuals, {} observations after unrolling, {} removed for invalid income, {} kept",
        c.wide_rows,
        c.long_rows,
        c.removed_invalid,
        c.long.len()
    )];
    if let Ok(d) = class_distribution(m.targets()) {
        notes.push(format!("class distribution: {:.3}% / {:.3}% / {:.3}%", 100.0 * d[0], 100.0 * d[1], 100.0 * d[2]));
    }
    notes.push(format!("features ({}): {}", p.features.len(), p.features.join(", ")));
    if !p.pruned.is_empty() {
        notes.push(format!("removed by correlation pruning: {}", p.pruned.join(", ")));
    }
    for (v, n) in &c.uncovered {
        if *n > 0 {
            notes.push(format!("{n} `{v}` codes outside the recode map were treated as missing"));
        }
    }
    notes
}

/// Majority-class baseline.
pub fn run_baseline(config: &ExperimentConfig) -> Result<ReportBundle> {
    let p = prepare(config)?;
    let m = p.design(config)?;
    let split = split_rows(&m, &config.split_spec()?)?;
    let seed = config.seed()?;
    let mut bundle = ReportBundle::new("baseline", "Baseline model", config)?;
    bundle.notes = data_notes(&p, &m);
    let (result, model) = fit_and_score("vote majority", &ModelSpec::Majority, &m, &split, seed)?;
    if let FittedModel::Majority(mm) = &model {
        let test_counts = class_counts(&result.predictions.iter().map(|r| r.actual).collect::<Vec<_>>());
        let k = mm.majority.index();
        bundle.notes.push(format!(
            "train majority class {}; its test share {:.4}% ({} of {})",
            mm.majority.value(),
            100.0 * test_counts[k] as f64 / result.predictions.len() as f64,
            test_counts[k],
            result.predictions.len()
        ));
    }
    if result.report.auc_undefined {
        bundle.notes.push("test rows hold one class only; ROC area undefined and reported as 0.5".into());
    }
    bundle.results.push(result);
    Ok(bundle)
}

/// Every configured model on one shared split.
pub fn run_model_comparison(config: &ExperimentConfig) -> Result<ReportBundle> {
    if config.models.is_empty() {
        return Err(Error::Config("`models` lists no model".into()));
    }
    let p = prepare(config)?;
    let m = p.design(config)?;
    let split = split_rows(&m, &config.split_spec()?)?;
    let seed = config.seed()?;
    let mut bundle = ReportBundle::new("compare", "Model performance comparison", config)?;
    bundle.notes = data_notes(&p, &m);
    for &choice in &config.models {
        let spec = config.model_spec(choice);
        let (result, _) = fit_and_score(spec.name(), &spec, &m, &split, seed)?;
        bundle.results.push(result);
    }
    Ok(bundle)
}

/// Row counts of the two equal-size longitudinal tasks: (latest year, size).
pub fn longitudinal_task_size(long: &LongTable, latest_year: Option<u16>) -> Result<(u16, usize)> {
    let years = long.codebook().years().to_vec();
    let counts: Vec<usize> = years
        .iter()
        .map(|&y| long.rows().iter().filter(|r| r.year == y).count())
        .collect();
    let present = counts.iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::Data(format!(
            "longitudinal comparison needs data from at least two survey years, found {present}"
        )));
    }
    let latest = match latest_year {
        Some(y) => y,
        None => years.iter().zip(&counts).filter(|(_, &c)| c > 0).map(|(&y, _)| y).max().unwrap(),
    };
    let pos = years
        .iter()
        .position(|&y| y == latest)
        .ok_or_else(|| Error::Config(format!("latest year {latest} is not a codebook year")))?;
    let min = *counts.iter().min().unwrap();
    let total = counts[pos].min(min * years.len()) / years.len() * years.len();
    if total == 0 {
        return Err(Error::Data("not enough rows for two equal-size tasks".into()));
    }
    Ok((latest, total))
}

/// Latest-year-only data against an equal-size sample spread evenly over all years.
pub fn run_longitudinal_compare(config: &ExperimentConfig) -> Result<ReportBundle> {
    let p = prepare(config)?;
    let long = p.long();
    let seed = config.seed()?;
    let (latest, total) = longitudinal_task_size(long, config.latest_year)?;

    let latest_rows: Vec<usize> = (0..long.len()).filter(|&i| long.rows()[i].year == latest).collect();
    let mut task1_rows = if latest_rows.len() > total {
        let mut r = rng::substream(seed, "task1-sample");
        let mut pick: Vec<usize> =
            index::sample(&mut r, latest_rows.len(), total).into_iter().map(|k| latest_rows[k]).collect();
        pick.sort_unstable();
        pick
    } else {
        latest_rows
    };
    task1_rows.truncate(total);
    let task1 = long.select(&task1_rows);
    let task2 = balanced_year_sample(long, total, seed)?;

    let spec = config.model_spec(config.model);
    let split_spec = config.split_spec()?;
    let mut bundle = ReportBundle::new("longitudinal", "Longitudinal data contribution", config)?;
    let m_all = p.design(config)?;
    bundle.notes = data_notes(&p, &m_all);
    bundle.notes.push(format!(
        "task 1: {} rows from {latest}; task 2: {} rows, {} from each of {} years",
        task1.len(),
        task2.len(),
        total / long.codebook().years().len(),
        long.codebook().years().len()
    ));
    for (label, table) in [("task 1 without longitudinal data", &task1), ("task 2 with longitudinal data", &task2)] {
        let m = p.design_for(table, config)?;
        let split = split_rows(&m, &split_spec)?;
        let (result, _) = fit_and_score(label, &spec, &m, &split, seed)?;
        bundle.results.push(result);
    }
    Ok(bundle)
}

/// The full feature set, then each feature dropped in turn, all on one split.
pub fn run_ablation(config: &ExperimentConfig) -> Result<ReportBundle> {
    let p = prepare(config)?;
    if p.features.len() < 2 {
        return Err(Error::Config(format!("ablation needs at least two features, have {}", p.features.len())));
    }
    let m = p.design(config)?;
    let split = split_rows(&m, &config.split_spec()?)?;
    let seed = config.seed()?;
    let spec = config.model_spec(config.model);
    let mut bundle = ReportBundle::new("ablate", "Feature ablation", config)?;
    bundle.notes = data_notes(&p, &m);
    let baseline = format!("baseline: with all {} features", p.features.len());
    let (result, _) = fit_and_score(&baseline, &spec, &m, &split, seed)?;
    let base_acc = result.report.accuracy;
    bundle.results.push(result);
    let mut worst: Option<(String, f64)> = None;
    for v in &p.features {
        let reduced = m.without_variable(v)?;
        let label = format!("without {}", config.label(v));
        let (result, _) = fit_and_score(&label, &spec, &reduced, &split, seed)?;
        let drop = base_acc - result.report.accuracy;
        if worst.as_ref().is_none_or(|(_, d)| drop > *d) {
            worst = Some((v.clone(), drop));
        }
        bundle.results.push(result);
    }
    if let Some((v, d)) = worst {
        bundle.notes.push(format!("largest accuracy drop: without {} ({d:.4} points)", config.label(&v)));
    }
    Ok(bundle)
}

/// Variable that loses the most accuracy when dropped, read from an ablation bundle.
pub fn largest_drop(bundle: &ReportBundle, features: &[String], config: &ExperimentConfig) -> Option<String> {
    let base = bundle.results.first()?.report.accuracy;
    features
        .iter()
        .filter_map(|v| {
            let r = bundle.result(&format!("without {}", config.label(v)))?;
            Some((v.clone(), base - r.report.accuracy))
        })
        .fold(None, |best: Option<(String, f64)>, (v, d)| match best {
            Some((_, bd)) if bd >= d => best,
            _ => Some((v, d)),
        })
        .map(|(v, _)| v)
}

/// Fits the configured model, then attributes its scores on leading test rows.
pub fn run_explain(config: &ExperimentConfig) -> Result<ReportBundle> {
    let p = prepare(config)?;
    let m = p.design(config)?;
    let split = split_rows(&m, &config.split_spec()?)?;
    let seed = config.seed()?;
    let spec = config.model_spec(config.model);
    let mut bundle = ReportBundle::new("explain", "Feature significance (SHAP)", config)?;
    bundle.notes = data_notes(&p, &m);
    let (result, model) = fit_and_score(spec.name(), &spec, &m, &split, seed)?;
    bundle.results.push(result);

    let opts = &config.explain;
    let n = if opts.instances == 0 { split.test.len() } else { opts.instances.min(split.test.len()) };
    let rows: Vec<usize> = split.test[..n].to_vec();
    let test_prevalence = class_distribution(&split.test.iter().map(|&i| m.targets()[i]).collect::<Vec<_>>())?;

    let target = match opts.target {
        ExplainTarget::Predicted => Some(ShapTarget::Predicted),
        ExplainTarget::Class(c) => Some(ShapTarget::Class(c)),
        ExplainTarget::All => None,
    };
    let exact = matches!((&model, opts.method), (FittedModel::Forest(_), ExplainMethod::Auto));
    let matrix: ShapMatrix = match (&model, exact, target) {
        (FittedModel::Forest(f), true, Some(t)) => explain_forest(f, &m, &rows, t)?,
        (FittedModel::Forest(f), true, None) => {
            explain_forest_all_classes(f, &m, &rows)?.with_class_weights(test_prevalence)
        }
        (_, _, t) => {
            let mut shuffled = split.train.clone();
            rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng::substream(seed, "shap-background"));
            shuffled.truncate(opts.background.max(1));
            shuffled.sort_unstable();
            let sample = |t| explain_sampling(&model, &m, &rows, &shuffled, opts.samples, rng::substream_seed(seed, "sampling-shap"), t);
            match t {
                Some(t) => sample(t)?,
                None => {
                    let per: Vec<ShapMatrix> = ClassLabel::ALL
                        .iter()
                        .map(|&c| sample(ShapTarget::Class(c)))
                        .collect::<Result<_>>()?;
                    interleave(per)?.with_class_weights(test_prevalence)
                }
            }
        }
    };
    bundle.notes.push(format!(
        "{} attributions over {} test instances by {}",
        matrix.len(),
        rows.len(),
        if exact { "exact TreeSHAP" } else { "permutation sampling" }
    ));

    let mut worst = 0.0f64;
    for (r, &i) in matrix.rows.iter().zip(expand(&rows, matrix.len() / rows.len().max(1)).iter()) {
        let score = model.scores(m.row(i))?[r.class.index()];
        worst = worst.max((r.reconstructed() - score).abs());
    }
    let _ = write!(
        bundle.notes.last_mut().unwrap(),
        "; max |base + sum - score| = {worst:.3e}"
    );
    if exact && worst > 1e-6 {
        return Err(Error::Data(format!("local accuracy violated by {worst:e}")));
    }
    bundle.ranking = Some(mean_abs_ranking(&matrix)?);
    let long_rows = expand(&split_long_index(&p, &m, &rows)?, matrix.len() / rows.len().max(1));
    bundle.shap = Some(ShapExport { matrix, features: p.long().select(&long_rows) });
    Ok(bundle)
}

/// Each index repeated `k` times in place.
fn expand(rows: &[usize], k: usize) -> Vec<usize> {
    rows.iter().flat_map(|&i| std::iter::repeat_n(i, k)).collect()
}

/// Long-table positions of design-matrix rows, matched on (id, year).
fn split_long_index(p: &Prepared, m: &DesignMatrix, rows: &[usize]) -> Result<Vec<usize>> {
    let keys: std::collections::HashMap<(i64, u16), usize> =
        p.long().keys().into_iter().enumerate().map(|(i, k)| (k, i)).collect();
    rows.iter()
        .map(|&i| {
            keys.get(&m.row_ids()[i])
                .copied()
                .ok_or_else(|| Error::Data(format!("design row {i} has no long-table row")))
        })
        .collect()
}

/// Per-class matrices merged instance by instance, class order within.
fn interleave(per: Vec<ShapMatrix>) -> Result<ShapMatrix> {
    let names = per[0].variables.clone();
    let n = per[0].rows.len();
    let mut rows = Vec::with_capacity(n * per.len());
    for i in 0..n {
        for m in &per {
            rows.push(m.rows[i].clone());
        }
    }
    ShapMatrix::new(names, rows)
}

/// Ingest summary: writes the cleaned long table and a short markdown report.
pub fn run_ingest(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let c = load_cleaned(config)?;
    let out = &config.out;
    let long_path = out.join("long.csv");
    write_file(&long_path, |w| c.long.write_csv(w))?;
    let targets = binned_targets(&c.long)?;
    let counts = class_counts(&targets);
    let mut md = String::from("# Ingest summary\n\n");
    let _ = writeln!(md, "- individuals: {}", c.wide_rows);
    let _ = writeln!(md, "- observations after unrolling: {}", c.long_rows);
    let _ = writeln!(md, "- removed for invalid income: {}", c.removed_invalid);
    let _ = writeln!(md, "- observations kept: {}", c.long.len());
    for y in c.codebook.years() {
        let n = c.long.rows().iter().filter(|r| r.year == *y).count();
        let _ = writeln!(md, "- year {y}: {n} observations");
    }
    if let Ok(d) = class_distribution(&targets) {
        for k in 0..NUM_CLASSES {
            let _ = writeln!(md, "- class {}: {} ({:.3}%)", k + 1, counts[k], 100.0 * d[k]);
        }
    }
    for (v, n) in &c.uncovered {
        let _ = writeln!(md, "- `{v}` codes outside the recode map: {n}");
    }
    let md_path = out.join("ingest_summary.md");
    write_file(&md_path, |w| Ok(w.write_all(md.as_bytes())?))?;
    Ok(vec![long_path, md_path])
}

/// Correlation analysis: full Spearman matrix CSV plus the pruning outcome.
pub fn run_explore(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let p = select_features(load_cleaned(config)?, config)?;
    let out = &config.out;
    let corr_path = out.join("correlation.csv");
    write_file(&corr_path, |w| p.correlation.write_csv(w))?;
    let mut md = String::from("# Correlation analysis\n\n");
    match config.prune_threshold {
        Some(t) => {
            let _ = writeln!(md, "- pruning threshold |rho| >= {t}");
        }
        None => md.push_str("- pruning disabled\n"),
    }
    let _ = writeln!(md, "- kept ({}): {}", p.features.len(), p.features.join(", "));
    let _ = writeln!(md, "- removed: {}", if p.pruned.is_empty() { "none".into() } else { p.pruned.join(", ") });
    md.push_str("\n## Pairs with |rho| >= 0.5\n\n| Variable | Variable | rho |\n|---|---|---|\n");
    let names = p.correlation.names();
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            if let Some(r) = p.correlation.get(i, j).filter(|r| r.abs() >= 0.5) {
                let _ = writeln!(md, "| {} | {} | {r:.4} |", names[i], names[j]);
            }
        }
    }
    let md_path = out.join("explore.md");
    write_file(&md_path, |w| Ok(w.write_all(md.as_bytes())?))?;
    Ok(vec![corr_path, md_path])
}
