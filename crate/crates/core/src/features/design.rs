//! Model-ready numeric encoding of a long table.
//!
//! Numeric variables become one column each, with absent cells stored as
//! NaN and flagged in the missing mask. Nominal variables expand into one
//! indicator column per level observed in the fitting table, plus an
//! optional missing-level indicator.

use std::io::Write;

use super::target::{binned_targets, ClassLabel};
use crate::dataset::{Cell, Kind, LongTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Numeric,
    Level(i64),
    MissingLevel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnDescriptor {
    pub variable: String,
    pub encoding: Encoding,
}

impl ColumnDescriptor {
    /// CSV header: `var`, `var.<level>` or `var.NA`.
    pub fn header(&self) -> String {
        match self.encoding {
            Encoding::Numeric => self.variable.clone(),
            Encoding::Level(l) => format!("{}.{l}", self.variable),
            Encoding::MissingLevel => format!("{}.NA", self.variable),
        }
    }

    pub fn is_indicator(&self) -> bool {
        !matches!(self.encoding, Encoding::Numeric)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeOptions {
    pub one_hot: bool,
    pub missing_level: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions { one_hot: true, missing_level: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Block {
    Numeric,
    OneHot { levels: Vec<i64>, missing_level: bool },
}

/// Column layout learned from one table and reusable on others.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignEncoder {
    variables: Vec<String>,
    blocks: Vec<Block>,
}

impl DesignEncoder {
    pub fn fit(long: &LongTable, kept: &[String], opts: EncodeOptions) -> Result<Self> {
        let cb = long.codebook();
        let mut blocks = Vec::with_capacity(kept.len());
        for name in kept {
            let spec = cb
                .get(name)
                .ok_or_else(|| Error::Data(format!("kept variable `{name}` is not in the codebook")))?;
            if spec.role != crate::dataset::Role::Feature {
                return Err(Error::Data(format!("`{name}` is not a feature variable")));
            }
            let p = long
                .position(name)
                .ok_or_else(|| Error::Data(format!("kept variable `{name}` is absent from the table")))?;
            let block = if spec.kind == Kind::Nominal && opts.one_hot {
                let mut levels: Vec<i64> = long.rows().iter().filter_map(|r| r.cells[p].code()).collect();
                levels.sort_unstable();
                levels.dedup();
                Block::OneHot { levels, missing_level: opts.missing_level }
            } else {
                Block::Numeric
            };
            blocks.push(block);
        }
        Ok(DesignEncoder { variables: kept.to_vec(), blocks })
    }

    pub fn columns(&self) -> Vec<ColumnDescriptor> {
        let mut cols = Vec::new();
        for (name, block) in self.variables.iter().zip(&self.blocks) {
            let col = |encoding| ColumnDescriptor { variable: name.clone(), encoding };
            match block {
                Block::Numeric => cols.push(col(Encoding::Numeric)),
                Block::OneHot { levels, missing_level } => {
                    cols.extend(levels.iter().map(|&l| col(Encoding::Level(l))));
                    if *missing_level {
                        cols.push(col(Encoding::MissingLevel));
                    }
                }
            }
        }
        cols
    }

    /// Encode `long`. Levels unseen at fit time encode as an all-zero block.
    pub fn transform(&self, long: &LongTable) -> Result<DesignMatrix> {
        let columns = self.columns();
        let positions: Vec<usize> = self
            .variables
            .iter()
            .map(|n| {
                long.position(n)
                    .ok_or_else(|| Error::Data(format!("variable `{n}` is absent from the table")))
            })
            .collect::<Result<_>>()?;
        let width = columns.len();
        let mut values = Vec::with_capacity(long.len() * width);
        let mut missing = Vec::with_capacity(long.len() * width);
        for row in long.rows() {
            for (block, &p) in self.blocks.iter().zip(&positions) {
                let cell = row.cells[p];
                match block {
                    Block::Numeric => match cell.as_f64() {
                        Some(v) => {
                            values.push(v);
                            missing.push(false);
                        }
                        None => {
                            values.push(f64::NAN);
                            missing.push(true);
                        }
                    },
                    Block::OneHot { levels, missing_level } => {
                        let code = cell.code();
                        for &l in levels {
                            values.push(if code == Some(l) { 1.0 } else { 0.0 });
                            missing.push(false);
                        }
                        if *missing_level {
                            values.push(if code.is_none() { 1.0 } else { 0.0 });
                            missing.push(false);
                        }
                    }
                }
            }
        }
        Ok(DesignMatrix {
            columns,
            values,
            missing,
            targets: binned_targets(long)?,
            row_ids: long.keys(),
        })
    }
}

/// Fit the layout on `long` and encode it.
pub fn encode_design_matrix(long: &LongTable, kept: &[String], opts: EncodeOptions) -> Result<DesignMatrix> {
    DesignEncoder::fit(long, kept, opts)?.transform(long)
}

/// Dense row-major feature matrix with class targets.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    columns: Vec<ColumnDescriptor>,
    values: Vec<f64>,
    missing: Vec<bool>,
    targets: Vec<ClassLabel>,
    row_ids: Vec<(i64, u16)>,
}

impl DesignMatrix {
    /// Build from raw parts; NaN values are flagged missing.
    pub fn from_parts(
        columns: Vec<ColumnDescriptor>,
        values: Vec<f64>,
        targets: Vec<ClassLabel>,
        row_ids: Vec<(i64, u16)>,
    ) -> Result<Self> {
        let width = columns.len();
        if width == 0 || values.len() != width * targets.len() || row_ids.len() != targets.len() {
            return Err(Error::Data(format!(
                "inconsistent matrix parts: {} columns, {} values, {} targets, {} ids",
                width,
                values.len(),
                targets.len(),
                row_ids.len()
            )));
        }
        let missing = values.iter().map(|v| v.is_nan()).collect();
        Ok(DesignMatrix { columns, values, missing, targets, row_ids })
    }

    /// Numeric-only matrix with synthetic column names `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>], targets: Vec<ClassLabel>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        let columns = (0..width)
            .map(|k| ColumnDescriptor { variable: format!("x{k}"), encoding: Encoding::Numeric })
            .collect();
        let row_ids = (0..rows.len()).map(|i| (i as i64, 0)).collect();
        DesignMatrix::from_parts(columns, rows.concat(), targets, row_ids)
    }

    pub fn columns(&self) -> &[ColumnDescriptor] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_cols();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols() + j]
    }

    pub fn is_missing(&self, i: usize, j: usize) -> bool {
        self.missing[i * self.n_cols() + j]
    }

    pub fn targets(&self) -> &[ClassLabel] {
        &self.targets
    }

    pub fn row_ids(&self) -> &[(i64, u16)] {
        &self.row_ids
    }

    /// Source variables in column order, each listed once.
    pub fn variables(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in &self.columns {
            if out.last() != Some(&c.variable) && !out.contains(&c.variable) {
                out.push(c.variable.clone());
            }
        }
        out
    }

    pub fn columns_of(&self, variable: &str) -> Vec<usize> {
        (0..self.n_cols()).filter(|&j| self.columns[j].variable == variable).collect()
    }

    pub fn select_rows(&self, indices: &[usize]) -> DesignMatrix {
        let w = self.n_cols();
        let mut values = Vec::with_capacity(indices.len() * w);
        let mut missing = Vec::with_capacity(indices.len() * w);
        for &i in indices {
            values.extend_from_slice(self.row(i));
            missing.extend_from_slice(&self.missing[i * w..(i + 1) * w]);
        }
        DesignMatrix {
            columns: self.columns.clone(),
            values,
            missing,
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
            row_ids: indices.iter().map(|&i| self.row_ids[i]).collect(),
        }
    }

    /// Drop every column derived from `variable`.
    pub fn without_variable(&self, variable: &str) -> Result<DesignMatrix> {
        let keep: Vec<usize> = (0..self.n_cols()).filter(|&j| self.columns[j].variable != variable).collect();
        if keep.len() == self.n_cols() {
            return Err(Error::Data(format!("no column derives from `{variable}`")));
        }
        if keep.is_empty() {
            return Err(Error::Data(format!("dropping `{variable}` leaves no columns")));
        }
        let w = self.n_cols();
        let mut values = Vec::with_capacity(self.n_rows() * keep.len());
        let mut missing = Vec::with_capacity(self.n_rows() * keep.len());
        for i in 0..self.n_rows() {
            for &j in &keep {
                values.push(self.values[i * w + j]);
                missing.push(self.missing[i * w + j]);
            }
        }
        Ok(DesignMatrix {
            columns: keep.iter().map(|&j| self.columns[j].clone()).collect(),
            values,
            missing,
            targets: self.targets.clone(),
            row_ids: self.row_ids.clone(),
        })
    }

    /// Recover the source cells of a one-hot encoded variable.
    pub fn decode_variable(&self, variable: &str) -> Option<Vec<Cell>> {
        let cols = self.columns_of(variable);
        if cols.is_empty() || !cols.iter().all(|&j| self.columns[j].is_indicator()) {
            return None;
        }
        Some(
            (0..self.n_rows())
                .map(|i| {
                    cols.iter()
                        .find(|&&j| self.value(i, j) == 1.0)
                        .and_then(|&j| match self.columns[j].encoding {
                            Encoding::Level(l) => Some(Cell::Cat(l)),
                            _ => None,
                        })
                        .unwrap_or(Cell::Absent)
                })
                .collect(),
        )
    }

    /// CSV with `id,year`, one column per descriptor and a trailing `class`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["id".to_string(), "year".to_string()];
        header.extend(self.columns.iter().map(ColumnDescriptor::header));
        header.push("class".into());
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let (id, year) = self.row_ids[i];
            let mut rec = vec![id.to_string(), year.to_string()];
            rec.extend((0..self.n_cols()).map(|j| {
                if self.is_missing(i, j) {
                    String::new()
                } else {
                    self.value(i, j).to_string()
                }
            }));
            rec.push(self.targets[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{unroll_longitudinal, Codebook, Role, VariableSpec, WideRow, WideTable};
    use std::sync::Arc;

    fn table(rows: Vec<(Cell, Cell, f64)>) -> LongTable {
        let cb = Arc::new(
            Codebook::new(vec![
                VariableSpec::new("id", Role::Id, Kind::Numeric),
                VariableSpec::new("hours", Role::Feature, Kind::Numeric),
                VariableSpec::new("race", Role::Feature, Kind::Nominal),
                VariableSpec::new("income", Role::Target, Kind::Numeric).with_years(&[2021]),
            ])
            .unwrap(),
        );
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, (h, r, y))| WideRow { id: i as i64, cells: vec![h, r, Cell::Num(y)] })
            .collect();
        unroll_longitudinal(&WideTable::new(cb, rows).unwrap()).unwrap()
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_numeric_feature() {
        let t = table(vec![(Cell::Num(1.0), Cell::Cat(1), 10.0), (Cell::Num(2.0), Cell::Cat(2), 60_000.0)]);
        let m = encode_design_matrix(&t, &names(&["hours"]), EncodeOptions::default()).unwrap();
        assert_eq!(m.n_cols(), 1);
        assert_eq!(m.row(1), &[2.0]);
        assert!(!m.is_missing(0, 0) && !m.is_missing(1, 0));
        assert_eq!(m.targets().iter().map(|c| c.value()).collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn one_hot_blocks_with_missing_level() {
        let t = table(vec![
            (Cell::Num(1.0), Cell::Cat(5), 0.0),
            (Cell::Absent, Cell::Absent, 0.0),
            (Cell::Num(3.0), Cell::Cat(2), 0.0),
        ]);
        let m = encode_design_matrix(&t, &names(&["hours", "race"]), EncodeOptions::default()).unwrap();
        let headers: Vec<String> = m.columns().iter().map(ColumnDescriptor::header).collect();
        assert_eq!(headers, vec!["hours", "race.2", "race.5", "race.NA"]);
        assert!(m.is_missing(1, 0) && m.value(1, 0).is_nan());
        for i in 0..3 {
            let sum: f64 = m.columns_of("race").iter().map(|&j| m.value(i, j)).sum();
            assert_eq!(sum, 1.0);
        }
        assert_eq!(m.decode_variable("race").unwrap(), t.column("race").unwrap());

        let plain = encode_design_matrix(
            &t,
            &names(&["race"]),
            EncodeOptions { one_hot: true, missing_level: false },
        )
        .unwrap();
        assert_eq!(plain.n_cols(), 2);
        assert_eq!(plain.row(1), &[0.0, 0.0]);

        let codes = encode_design_matrix(
            &t,
            &names(&["race"]),
            EncodeOptions { one_hot: false, missing_level: false },
        )
        .unwrap();
        assert_eq!(codes.n_cols(), 1);
        assert_eq!(codes.value(0, 0), 5.0);
    }

    #[test]
    fn rejects_unknown_and_non_feature() {
        let t = table(vec![(Cell::Num(1.0), Cell::Cat(1), 0.0)]);
        assert!(encode_design_matrix(&t, &names(&["zip"]), EncodeOptions::default()).is_err());
        assert!(encode_design_matrix(&t, &names(&["income"]), EncodeOptions::default()).is_err());
    }

    #[test]
    fn drop_and_select() {
        let t = table(vec![(Cell::Num(1.0), Cell::Cat(5), 0.0), (Cell::Num(2.0), Cell::Cat(2), 1e6)]);
        let m = encode_design_matrix(&t, &names(&["hours", "race"]), EncodeOptions::default()).unwrap();
        let d = m.without_variable("race").unwrap();
        assert_eq!(d.n_cols(), 1);
        assert_eq!(d.variables(), vec!["hours"]);
        assert!(m.without_variable("zip").is_err());
        let s = m.select_rows(&[1]);
        assert_eq!(s.row(0), m.row(1));
        assert_eq!(s.targets()[0].value(), 3);
    }
}
