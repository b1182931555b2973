use std::collections::HashSet;
use std::io::Write;
use std::sync::Arc;

use super::codebook::{Codebook, Kind};
use crate::error::{Error, Result};

/// One survey value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Cat(i64),
    Absent,
}

impl Cell {
    /// Type a raw integer code according to the variable kind.
    pub fn from_code(kind: Kind, raw: Option<i64>) -> Cell {
        match (kind, raw) {
            (_, None) => Cell::Absent,
            (Kind::Numeric, Some(v)) => Cell::Num(v as f64),
            (Kind::Nominal, Some(v)) => Cell::Cat(v),
        }
    }

    pub fn is_absent(&self) -> bool {
        matches!(self, Cell::Absent)
    }

    /// Numeric view: nominal codes map to their integer value, absent to `None`.
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Num(v) => Some(v),
            Cell::Cat(c) => Some(c as f64),
            Cell::Absent => None,
        }
    }

    /// Integer code, if the cell holds an integral value.
    pub fn code(&self) -> Option<i64> {
        match *self {
            Cell::Num(v) if v.fract() == 0.0 && v.is_finite() => Some(v as i64),
            Cell::Num(_) => None,
            Cell::Cat(c) => Some(c),
            Cell::Absent => None,
        }
    }

    pub fn matches_kind(&self, kind: Kind) -> bool {
        !matches!(
            (self, kind),
            (Cell::Num(_), Kind::Nominal) | (Cell::Cat(_), Kind::Numeric)
        )
    }

    /// CSV rendering: integers without a fraction, absent as an empty field.
    pub fn render(&self) -> String {
        match *self {
            Cell::Num(v) if v.fract() == 0.0 && v.abs() < 1e15 => format!("{}", v as i64),
            Cell::Num(v) => format!("{v}"),
            Cell::Cat(c) => c.to_string(),
            Cell::Absent => String::new(),
        }
    }
}

/// Column of a wide table: a variable, optionally bound to one survey year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WideColumn {
    pub var: usize,
    pub year: Option<u16>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WideRow {
    pub id: i64,
    pub cells: Vec<Cell>,
}

/// One row per individual, repeated measures spread over `<var>#<year>` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct WideTable {
    codebook: Arc<Codebook>,
    columns: Vec<WideColumn>,
    rows: Vec<WideRow>,
}

/// Canonical wide layout: codebook order, each repeated variable expanded over its years.
pub fn wide_layout(codebook: &Codebook) -> Vec<WideColumn> {
    let id = codebook.index_of(&codebook.id_variable().name);
    let mut cols = Vec::new();
    for (i, v) in codebook.variables().iter().enumerate() {
        if Some(i) == id || v.role == super::Role::Time {
            continue;
        }
        if v.is_repeated() {
            cols.extend(v.year_suffixes.iter().map(|&y| WideColumn { var: i, year: Some(y) }));
        } else {
            cols.push(WideColumn { var: i, year: None });
        }
    }
    cols
}

pub fn wide_column_name(codebook: &Codebook, col: WideColumn) -> String {
    let name = &codebook.variables()[col.var].name;
    match col.year {
        Some(y) => format!("{name}#{y}"),
        None => name.clone(),
    }
}

impl WideTable {
    pub fn new(codebook: Arc<Codebook>, rows: Vec<WideRow>) -> Result<Self> {
        let columns = wide_layout(&codebook);
        let mut ids = HashSet::new();
        for row in &rows {
            if row.cells.len() != columns.len() {
                return Err(Error::Data(format!(
                    "individual {} has {} cells, layout has {}",
                    row.id,
                    row.cells.len(),
                    columns.len()
                )));
            }
            if !ids.insert(row.id) {
                return Err(Error::Data(format!("duplicate individual id {}", row.id)));
            }
            for (cell, col) in row.cells.iter().zip(&columns) {
                if !cell.matches_kind(codebook.variables()[col.var].kind) {
                    return Err(Error::Data(format!(
                        "individual {}: cell {:?} does not match the kind of `{}`",
                        row.id,
                        cell,
                        wide_column_name(&codebook, *col)
                    )));
                }
            }
        }
        Ok(WideTable { codebook, columns, rows })
    }

    pub fn codebook(&self) -> &Arc<Codebook> {
        &self.codebook
    }

    pub fn columns(&self) -> &[WideColumn] {
        &self.columns
    }

    pub fn rows(&self) -> &[WideRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_position(&self, var: usize, year: Option<u16>) -> Option<usize> {
        self.columns.iter().position(|c| c.var == var && c.year == year)
    }

    pub fn header(&self) -> Vec<String> {
        std::iter::once(self.codebook.id_variable().name.clone())
            .chain(self.columns.iter().map(|&c| wide_column_name(&self.codebook, c)))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for row in &self.rows {
            let mut rec = vec![row.id.to_string()];
            rec.extend(row.cells.iter().map(Cell::render));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongRow {
    pub id: i64,
    pub year: u16,
    pub cells: Vec<Cell>,
}

/// One row per (individual, year) observation.
///
/// Columns are every codebook variable except the id and time variables, in
/// codebook order.
#[derive(Debug, Clone, PartialEq)]
pub struct LongTable {
    codebook: Arc<Codebook>,
    variables: Vec<usize>,
    rows: Vec<LongRow>,
}

pub fn long_layout(codebook: &Codebook) -> Vec<usize> {
    codebook
        .variables()
        .iter()
        .enumerate()
        .filter(|(_, v)| !matches!(v.role, super::Role::Id | super::Role::Time))
        .map(|(i, _)| i)
        .collect()
}

impl LongTable {
    pub fn new(codebook: Arc<Codebook>, rows: Vec<LongRow>) -> Result<Self> {
        let variables = long_layout(&codebook);
        let mut keys = HashSet::with_capacity(rows.len());
        for row in &rows {
            if row.cells.len() != variables.len() {
                return Err(Error::Data(format!(
                    "row ({}, {}) has {} cells, expected {}",
                    row.id,
                    row.year,
                    row.cells.len(),
                    variables.len()
                )));
            }
            if !keys.insert((row.id, row.year)) {
                return Err(Error::Data(format!(
                    "duplicate observation for individual {} in {}",
                    row.id, row.year
                )));
            }
        }
        Ok(LongTable { codebook, variables, rows })
    }

    /// Build from rows already known to satisfy the table invariants.
    pub(crate) fn from_trusted(codebook: Arc<Codebook>, rows: Vec<LongRow>) -> Self {
        let variables = long_layout(&codebook);
        LongTable { codebook, variables, rows }
    }

    pub fn codebook(&self) -> &Arc<Codebook> {
        &self.codebook
    }

    /// Codebook indices of the table columns.
    pub fn variables(&self) -> &[usize] {
        &self.variables
    }

    pub fn variable_names(&self) -> Vec<String> {
        self.variables
            .iter()
            .map(|&v| self.codebook.variables()[v].name.clone())
            .collect()
    }

    pub fn rows(&self) -> &[LongRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Column position of a variable by name.
    pub fn position(&self, name: &str) -> Option<usize> {
        let idx = self.codebook.index_of(name)?;
        self.variables.iter().position(|&v| v == idx)
    }

    pub fn target_position(&self) -> usize {
        let t = self.codebook.target_index();
        self.variables
            .iter()
            .position(|&v| v == t)
            .expect("target is always a long column")
    }

    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        let p = self.position(name)?;
        Some(self.rows.iter().map(|r| r.cells[p]).collect())
    }

    pub fn keys(&self) -> Vec<(i64, u16)> {
        self.rows.iter().map(|r| (r.id, r.year)).collect()
    }

    /// Rows at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> LongTable {
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        LongTable::from_trusted(self.codebook.clone(), rows)
    }

    pub fn filter_rows(&self, mut keep: impl FnMut(&LongRow) -> bool) -> LongTable {
        let rows = self.rows.iter().filter(|r| keep(r)).cloned().collect();
        LongTable::from_trusted(self.codebook.clone(), rows)
    }

    pub(crate) fn map_cells(&self, mut f: impl FnMut(usize, Cell) -> Cell) -> LongTable {
        let rows = self
            .rows
            .iter()
            .map(|r| LongRow {
                id: r.id,
                year: r.year,
                cells: r.cells.iter().enumerate().map(|(p, &c)| f(p, c)).collect(),
            })
            .collect();
        LongTable::from_trusted(self.codebook.clone(), rows)
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec![
            self.codebook.id_variable().name.clone(),
            self.codebook.time_name().to_string(),
        ];
        h.extend(self.variable_names());
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for row in &self.rows {
            let mut rec = vec![row.id.to_string(), row.year.to_string()];
            rec.extend(row.cells.iter().map(Cell::render));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_kinds() {
        assert_eq!(Cell::from_code(Kind::Numeric, Some(3)), Cell::Num(3.0));
        assert_eq!(Cell::from_code(Kind::Nominal, Some(3)), Cell::Cat(3));
        assert_eq!(Cell::from_code(Kind::Nominal, None), Cell::Absent);
        assert!(!Cell::Num(1.0).matches_kind(Kind::Nominal));
        assert!(Cell::Absent.matches_kind(Kind::Nominal));
        assert_eq!(Cell::Num(128400.0).render(), "128400");
        assert_eq!(Cell::Num(0.5).render(), "0.5");
        assert_eq!(Cell::Absent.render(), "");
    }
}
