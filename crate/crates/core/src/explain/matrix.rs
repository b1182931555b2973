use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;

use super::attribution::{aggregate_onehot, sampling_shap, variable_players, ShapRow};
use super::treeshap::tree_shap_forest;
use crate::dataset::LongTable;
use crate::error::{Error, Result};
use crate::features::{average_ranks, ClassLabel, DesignMatrix, NUM_CLASSES};
use crate::learners::{FittedModel, ForestModel};

/// Attribution rows over a shared variable ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapMatrix {
    pub variables: Vec<String>,
    pub rows: Vec<ShapRow>,
    /// Per-class weights used when the ranking averages over several classes.
    pub class_weights: Option<[f64; NUM_CLASSES]>,
}

impl ShapMatrix {
    pub fn new(variables: Vec<String>, rows: Vec<ShapRow>) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.values.len() != variables.len()) {
            return Err(Error::Layout { expected: variables.len(), found: r.values.len() });
        }
        Ok(ShapMatrix { variables, rows, class_weights: None })
    }

    pub fn with_class_weights(mut self, w: [f64; NUM_CLASSES]) -> Self {
        self.class_weights = Some(w);
        self
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Which class score to attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapTarget {
    Predicted,
    Class(ClassLabel),
}

pub fn instance_id(id: i64, year: u16) -> String {
    format!("{id}_{year}")
}

fn row_id(m: &DesignMatrix, i: usize) -> String {
    m.row_ids().get(i).map_or_else(|| i.to_string(), |&(id, year)| instance_id(id, year))
}

/// Exact forest attributions for `rows` of `m`, aggregated to source variables.
pub fn explain_forest(forest: &ForestModel, m: &DesignMatrix, rows: &[usize], target: ShapTarget) -> Result<ShapMatrix> {
    let (names, _) = variable_players(m.columns());
    let out: Vec<ShapRow> = rows
        .par_iter()
        .map(|&i| {
            let a = tree_shap_forest(forest, m.row(i))?;
            let class = match target {
                ShapTarget::Class(c) => c,
                ShapTarget::Predicted => ClassLabel::argmax(&forest.scores(m.row(i))),
            };
            let row = ShapRow {
                instance_id: row_id(m, i),
                class,
                base: a.base[class.index()],
                values: a.class_values(class.index()),
                std_err: None,
            };
            Ok(aggregate_onehot(&row, m.columns())?.1)
        })
        .collect::<Result<_>>()?;
    ShapMatrix::new(names, out)
}

/// One exact matrix per class, for prevalence-weighted rankings.
pub fn explain_forest_all_classes(forest: &ForestModel, m: &DesignMatrix, rows: &[usize]) -> Result<ShapMatrix> {
    let (names, _) = variable_players(m.columns());
    let per_instance: Vec<Vec<ShapRow>> = rows
        .par_iter()
        .map(|&i| {
            let a = tree_shap_forest(forest, m.row(i))?;
            ClassLabel::ALL
                .iter()
                .map(|&c| {
                    let row = ShapRow {
                        instance_id: row_id(m, i),
                        class: c,
                        base: a.base[c.index()],
                        values: a.class_values(c.index()),
                        std_err: None,
                    };
                    Ok(aggregate_onehot(&row, m.columns())?.1)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    ShapMatrix::new(names, per_instance.into_iter().flatten().collect())
}

/// Sampling attributions for any model, one player per source variable.
pub fn explain_sampling(
    model: &FittedModel,
    m: &DesignMatrix,
    rows: &[usize],
    background: &[usize],
    samples: usize,
    seed: u64,
    target: ShapTarget,
) -> Result<ShapMatrix> {
    let (names, players) = variable_players(m.columns());
    let bg: Vec<Vec<f64>> = background.iter().map(|&i| m.row(i).to_vec()).collect();
    let out: Vec<ShapRow> = rows
        .par_iter()
        .map(|&i| {
            let x = m.row(i);
            let class = match target {
                ShapTarget::Class(c) => c,
                ShapTarget::Predicted => model.predict(x)?.label,
            };
            let k = class.index();
            let f = |r: &[f64]| model.scores(r).map(|s| s[k]).unwrap_or(f64::NAN);
            let (base, values, se) = sampling_shap(f, x, &bg, &players, samples, seed ^ i as u64)?;
            Ok(ShapRow { instance_id: row_id(m, i), class, base, values, std_err: Some(se) })
        })
        .collect::<Result<_>>()?;
    ShapMatrix::new(names, out)
}

/// Variables by mean |φ|, descending; ties by name.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    pub entries: Vec<(String, f64)>,
}

impl FeatureRanking {
    pub fn top(&self, k: usize) -> Vec<&str> {
        self.entries.iter().take(k).map(|(n, _)| n.as_str()).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["variable", "mean_abs_shap"])?;
        for (n, v) in &self.entries {
            w.write_record([n.clone(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean |φ| per variable. Rows of each class are averaged separately, then
/// the class means are combined with the matrix's class weights (or with
/// each class's share of rows when none are set).
pub fn mean_abs_ranking(m: &ShapMatrix) -> Result<FeatureRanking> {
    if m.rows.is_empty() {
        return Err(Error::Data("ranking of an empty SHAP matrix".into()));
    }
    let p = m.variables.len();
    let mut sums = [vec![0.0; p], vec![0.0; p], vec![0.0; p]];
    let mut counts = [0usize; NUM_CLASSES];
    for r in &m.rows {
        let k = r.class.index();
        counts[k] += 1;
        for (s, v) in sums[k].iter_mut().zip(&r.values) {
            *s += v.abs();
        }
    }
    let weights = match m.class_weights {
        Some(w) => {
            let present: f64 = (0..NUM_CLASSES).filter(|&k| counts[k] > 0).map(|k| w[k]).sum();
            if present <= 0.0 {
                return Err(Error::Data("class weights give zero weight to every present class".into()));
            }
            w.map(|x| x / present)
        }
        None => counts.map(|c| c as f64 / m.rows.len() as f64),
    };
    let mut entries: Vec<(String, f64)> = (0..p)
        .map(|j| {
            let v = (0..NUM_CLASSES)
                .filter(|&k| counts[k] > 0)
                .map(|k| weights[k] * sums[k][j] / counts[k] as f64)
                .sum();
            (m.variables[j].clone(), v)
        })
        .collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(FeatureRanking { entries })
}

/// Beeswarm-ready rows `instance_id,variable,shap_value,feature_value,feature_value_rank`.
///
/// `features` must hold the explained instances in matrix row order. The rank
/// is the value's average rank among present values of that variable, scaled
/// to [0, 1]; absent values leave both fields empty.
pub fn write_shap_summary<W: Write>(m: &ShapMatrix, features: &LongTable, out: W) -> Result<()> {
    if features.len() != m.rows.len() {
        return Err(Error::Data(format!("{} SHAP rows but {} feature rows", m.rows.len(), features.len())));
    }
    for (r, f) in m.rows.iter().zip(features.rows()) {
        if r.instance_id != instance_id(f.id, f.year) {
            return Err(Error::Data(format!("SHAP row {} aligned with feature row {}", r.instance_id, instance_id(f.id, f.year))));
        }
    }
    let mut rendered = Vec::with_capacity(m.variables.len());
    let mut ranks = Vec::with_capacity(m.variables.len());
    for v in &m.variables {
        let pos = features.position(v).ok_or_else(|| Error::Data(format!("variable `{v}` not in feature table")))?;
        let cells: Vec<_> = features.rows().iter().map(|r| r.cells[pos]).collect();
        let present: Vec<(usize, f64)> = cells.iter().enumerate().filter_map(|(i, c)| c.as_f64().map(|x| (i, x))).collect();
        let avg = average_ranks(&present.iter().map(|p| p.1).collect::<Vec<_>>());
        let mut rank = vec![None; cells.len()];
        let denom = present.len().saturating_sub(1) as f64;
        for ((i, _), r) in present.iter().zip(avg) {
            rank[*i] = Some(if denom > 0.0 { (r - 1.0) / denom } else { 0.5 });
        }
        rendered.push(cells.iter().map(|c| c.render()).collect::<Vec<_>>());
        ranks.push(rank);
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["instance_id", "variable", "shap_value", "feature_value", "feature_value_rank"])?;
    for (i, r) in m.rows.iter().enumerate() {
        for (j, v) in m.variables.iter().enumerate() {
            w.write_record([
                r.instance_id.clone(),
                v.clone(),
                r.values[j].to_string(),
                rendered[j][i].clone(),
                ranks[j][i].map_or(String::new(), |x| x.to_string()),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Companion file `instance_id,class,base_value`, needed to rebuild the matrix.
pub fn write_shap_base<W: Write>(m: &ShapMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["instance_id", "class", "base_value"])?;
    for r in &m.rows {
        w.write_record([r.instance_id.clone(), r.class.to_string(), r.base.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Rebuilds a matrix from the summary and base files.
pub fn read_shap_matrix<R1: Read, R2: Read>(summary: R1, base: R2) -> Result<ShapMatrix> {
    let bad = |m: String| Error::Data(format!("SHAP import: {m}"));
    let mut variables: Vec<String> = Vec::new();
    let mut order: Vec<String> = Vec::new();
    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for rec in csv::Reader::from_reader(summary).records() {
        let rec = rec?;
        let (id, var, phi) = (&rec[0], &rec[1], &rec[2]);
        let phi: f64 = phi.parse().map_err(|_| bad(format!("bad value `{phi}`")))?;
        if !values.contains_key(id) {
            order.push(id.to_string());
        }
        let row = values.entry(id.to_string()).or_default();
        if order.len() == 1 {
            variables.push(var.to_string());
        } else if variables.get(row.len()).map(String::as_str) != Some(var) {
            return Err(bad(format!("instance {id} lists variables out of order")));
        }
        row.push(phi);
    }
    let mut rows = Vec::with_capacity(order.len());
    let mut seen = 0;
    for rec in csv::Reader::from_reader(base).records() {
        let rec = rec?;
        let id = rec[0].to_string();
        let class = rec[1].parse().ok().and_then(ClassLabel::new).ok_or_else(|| bad(format!("bad class `{}`", &rec[1])))?;
        let base: f64 = rec[2].parse().map_err(|_| bad(format!("bad base `{}`", &rec[2])))?;
        if order.get(seen) != Some(&id) {
            return Err(bad(format!("base file row {id} does not match summary order")));
        }
        seen += 1;
        rows.push(ShapRow { values: values.remove(&id).unwrap_or_default(), instance_id: id, class, base, std_err: None });
    }
    if seen != order.len() {
        return Err(bad("base file has fewer rows than the summary".into()));
    }
    ShapMatrix::new(variables, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(id: &str, class: u8, values: Vec<f64>) -> ShapRow {
        ShapRow { instance_id: id.into(), class: ClassLabel::new(class).unwrap(), base: 0.4, values, std_err: None }
    }

    #[test]
    fn ranking_orders_by_mean_abs_then_name() {
        let m = ShapMatrix::new(
            vec!["b".into(), "a".into(), "c".into()],
            vec![r("1_2021", 1, vec![0.2, -0.2, 0.0]), r("2_2021", 1, vec![-0.4, 0.4, 0.1])],
        )
        .unwrap();
        let rank = mean_abs_ranking(&m).unwrap();
        assert_eq!(rank.top(3), ["a", "b", "c"]);
        assert!((rank.entries[0].1 - 0.3).abs() < 1e-15);
        let empty = ShapMatrix::new(vec![], vec![]).unwrap();
        assert!(mean_abs_ranking(&empty).is_err());
    }

    #[test]
    fn class_weights_combine_class_means() {
        let m = ShapMatrix::new(vec!["x".into()], vec![r("1_2021", 1, vec![1.0]), r("1_2021", 2, vec![3.0])])
            .unwrap()
            .with_class_weights([0.75, 0.25, 0.0]);
        assert!((mean_abs_ranking(&m).unwrap().entries[0].1 - 1.5).abs() < 1e-15);
    }

    #[test]
    fn base_and_summary_round_trip() {
        let m = ShapMatrix::new(
            vec!["x".into(), "y".into()],
            vec![r("1_2021", 1, vec![0.1 + 0.2, -1e-17]), r("2_2019", 3, vec![1.0 / 3.0, 7.0])],
        )
        .unwrap();
        let mut summary = Vec::new();
        let mut w = csv::Writer::from_writer(&mut summary);
        w.write_record(["instance_id", "variable", "shap_value", "feature_value", "feature_value_rank"]).unwrap();
        for row in &m.rows {
            for (j, v) in m.variables.iter().enumerate() {
                w.write_record([row.instance_id.clone(), v.clone(), row.values[j].to_string(), String::new(), String::new()])
                    .unwrap();
            }
        }
        drop(w);
        let mut base = Vec::new();
        write_shap_base(&m, &mut base).unwrap();
        assert_eq!(read_shap_matrix(summary.as_slice(), base.as_slice()).unwrap(), m);
    }
}
