use rand::seq::SliceRandom;
use rand::Rng;

use super::treeshap::tree_shap_forest;
use crate::error::{Error, Result};
use crate::features::{ClassLabel, ColumnDescriptor};
use crate::learners::ForestModel;
use crate::rng;

/// Attributions of one class score on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapRow {
    pub instance_id: String,
    pub class: ClassLabel,
    /// φ₀: expected score with every feature removed.
    pub base: f64,
    pub values: Vec<f64>,
    /// Monte-Carlo standard error per value, sampling estimates only.
    pub std_err: Option<Vec<f64>>,
}

impl ShapRow {
    /// φ₀ + Σφ, which reproduces the model score for exact methods.
    pub fn reconstructed(&self) -> f64 {
        self.base + self.values.iter().sum::<f64>()
    }
}

/// Exact attributions for one class of the forest, over encoded columns.
pub fn tree_shap(forest: &ForestModel, instance: &[f64], class: ClassLabel) -> Result<ShapRow> {
    let a = tree_shap_forest(forest, instance)?;
    Ok(ShapRow {
        instance_id: String::new(),
        class,
        base: a.base[class.index()],
        values: a.class_values(class.index()),
        std_err: None,
    })
}

/// Permutation-sampling Shapley estimate for an arbitrary score function.
///
/// Each sample draws a permutation of `players` (groups of column indices
/// that switch together) and one background row, then walks the permutation
/// swapping the instance's values in and crediting each player with the score
/// change. φ₀ is the mean background score.
pub fn sampling_shap<F>(
    score: F,
    instance: &[f64],
    background: &[Vec<f64>],
    players: &[Vec<usize>],
    samples: usize,
    seed: u64,
) -> Result<(f64, Vec<f64>, Vec<f64>)>
where
    F: Fn(&[f64]) -> f64,
{
    if samples == 0 {
        return Err(Error::Config("sampling SHAP needs at least one sample".into()));
    }
    if background.is_empty() {
        return Err(Error::Data("sampling SHAP needs background rows".into()));
    }
    let mut r = rng::substream(seed, "sampling-shap");
    let base = background.iter().map(|b| score(b)).sum::<f64>() / background.len() as f64;
    let np = players.len();
    let mut sum = vec![0.0; np];
    let mut sum_sq = vec![0.0; np];
    let mut order: Vec<usize> = (0..np).collect();
    for _ in 0..samples {
        order.shuffle(&mut r);
        let mut x = background[r.random_range(0..background.len())].clone();
        let mut prev = score(&x);
        for &p in &order {
            for &c in &players[p] {
                x[c] = instance[c];
            }
            let cur = score(&x);
            let d = cur - prev;
            sum[p] += d;
            sum_sq[p] += d * d;
            prev = cur;
        }
    }
    let n = samples as f64;
    let values: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let se = sum_sq
        .iter()
        .zip(&values)
        .map(|(sq, m)| {
            if samples < 2 {
                return f64::INFINITY;
            }
            let var = ((sq - n * m * m) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        })
        .collect();
    Ok((base, values, se))
}

/// One player per encoded column.
pub fn column_players(width: usize) -> Vec<Vec<usize>> {
    (0..width).map(|c| vec![c]).collect()
}

/// One player per source variable, grouping its indicator columns.
pub fn variable_players(columns: &[ColumnDescriptor]) -> (Vec<String>, Vec<Vec<usize>>) {
    let mut names: Vec<String> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, c) in columns.iter().enumerate() {
        match names.iter().position(|n| *n == c.variable) {
            Some(k) => groups[k].push(i),
            None => {
                names.push(c.variable.clone());
                groups.push(vec![i]);
            }
        }
    }
    (names, groups)
}

/// Sums column attributions into their source variables, in order of first appearance.
pub fn aggregate_onehot(row: &ShapRow, columns: &[ColumnDescriptor]) -> Result<(Vec<String>, ShapRow)> {
    if columns.len() != row.values.len() {
        return Err(Error::Layout { expected: columns.len(), found: row.values.len() });
    }
    let (names, groups) = variable_players(columns);
    let values = groups.iter().map(|g| g.iter().map(|&c| row.values[c]).sum()).collect();
    // standard errors combine as if the column estimates were independent
    let std_err = row
        .std_err
        .as_ref()
        .map(|se| groups.iter().map(|g| g.iter().map(|&c| se[c] * se[c]).sum::<f64>().sqrt()).collect());
    Ok((names, ShapRow { values, std_err, ..row.clone() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Encoding;

    fn row(values: Vec<f64>) -> ShapRow {
        ShapRow { instance_id: "1_2021".into(), class: ClassLabel::ALL[0], base: 0.2, values, std_err: None }
    }

    #[test]
    fn onehot_levels_sum() {
        let cols = vec![
            ColumnDescriptor { variable: "age".into(), encoding: Encoding::Numeric },
            ColumnDescriptor { variable: "race".into(), encoding: Encoding::Level(1) },
            ColumnDescriptor { variable: "race".into(), encoding: Encoding::Level(2) },
            ColumnDescriptor { variable: "race".into(), encoding: Encoding::MissingLevel },
        ];
        let r = row(vec![0.3, 0.1, -0.2, 0.05]);
        let (names, agg) = aggregate_onehot(&r, &cols).unwrap();
        assert_eq!(names, ["age", "race"]);
        assert_eq!(agg.values[0], 0.3);
        assert!((agg.values[1] + 0.05).abs() < 1e-15);
        assert!((agg.reconstructed() - r.reconstructed()).abs() < 1e-15);
        assert!(aggregate_onehot(&r, &cols[..2]).is_err());
    }

    #[test]
    fn constant_function_gets_nothing() {
        let bg = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let (base, phi, se) = sampling_shap(|_| 0.7, &[5.0, 6.0], &bg, &column_players(2), 16, 1).unwrap();
        assert_eq!(base, 0.7);
        assert_eq!(phi, [0.0, 0.0]);
        assert_eq!(se, [0.0, 0.0]);
    }

    #[test]
    fn additive_function_recovers_offsets() {
        let bg: Vec<Vec<f64>> = (0..50).map(|i| vec![(i % 5) as f64, (i % 7) as f64 * 0.5]).collect();
        let mean0 = bg.iter().map(|r| r[0]).sum::<f64>() / 50.0;
        let mean1 = bg.iter().map(|r| r[1]).sum::<f64>() / 50.0;
        let x = [10.0, -3.0];
        let (_, phi, se) = sampling_shap(|r| r[0] + r[1], &x, &bg, &column_players(2), 4000, 3).unwrap();
        assert!((phi[0] - (x[0] - mean0)).abs() < 4.0 * se[0] + 1e-9);
        assert!((phi[1] - (x[1] - mean1)).abs() < 4.0 * se[1] + 1e-9);
    }
}
