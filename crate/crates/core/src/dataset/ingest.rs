//! Wide-format survey extract ingestion.
//!
//! The extract is a UTF-8 CSV with a header row and one row per individual.
//! Time-invariant variables use their plain name as header; repeated
//! measures use `<var>#<year>`. Cells are integer codes, empty means absent.

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use super::codebook::Codebook;
use super::table::{wide_column_name, wide_layout, Cell, WideRow, WideTable};
use crate::error::{Error, Result};

pub fn ingest_wide_csv(path: impl AsRef<Path>, codebook: Arc<Codebook>) -> Result<WideTable> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    read_wide_csv(file, path, codebook)
}

pub fn read_wide_csv<R: Read>(reader: R, source: &Path, codebook: Arc<Codebook>) -> Result<WideTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(source, 1, e.to_string()))?
        .clone();

    let layout = wide_layout(&codebook);
    let mut expected: HashMap<String, Option<usize>> = layout
        .iter()
        .enumerate()
        .map(|(k, &c)| (wide_column_name(&codebook, c), Some(k)))
        .collect();
    expected.insert(codebook.id_variable().name.clone(), None);

    // header position -> Some(layout slot) or None for the id column
    let mut slots: Vec<Option<usize>> = Vec::with_capacity(header.len());
    let mut seen = std::collections::HashSet::new();
    for name in header.iter().map(str::trim) {
        let slot = *expected
            .get(name)
            .ok_or_else(|| Error::parse(source, 1, format!("unknown column `{name}`")))?;
        if !seen.insert(name.to_string()) {
            return Err(Error::parse(source, 1, format!("duplicate column `{name}`")));
        }
        slots.push(slot);
    }
    if let Some(missing) = expected.keys().filter(|k| !seen.contains(*k)).min() {
        return Err(Error::parse(
            source,
            1,
            format!("missing required column `{missing}`"),
        ));
    }

    let mut rows = Vec::new();
    let mut ids = std::collections::HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(source, line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let mut id = None;
        let mut cells = vec![Cell::Absent; layout.len()];
        for (field, slot) in record.iter().zip(&slots) {
            let field = field.trim();
            let code = if field.is_empty() {
                None
            } else {
                Some(field.parse::<i64>().map_err(|_| {
                    Error::parse(source, line, format!("non-integer token `{field}`"))
                })?)
            };
            match slot {
                None => {
                    id = Some(code.ok_or_else(|| Error::parse(source, line, "empty individual id"))?)
                }
                Some(k) => {
                    let kind = codebook.variables()[layout[*k].var].kind;
                    cells[*k] = Cell::from_code(kind, code);
                }
            }
        }
        let id = id.expect("id column is required");
        if !ids.insert(id) {
            return Err(Error::parse(source, line, format!("duplicate individual id {id}")));
        }
        rows.push(WideRow { id, cells });
    }
    WideTable::new(codebook, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Kind, Role, VariableSpec};

    fn codebook() -> Arc<Codebook> {
        Arc::new(
            Codebook::new(vec![
                VariableSpec::new("pid", Role::Id, Kind::Numeric),
                VariableSpec::new("sex", Role::Feature, Kind::Nominal),
                VariableSpec::new("age", Role::Feature, Kind::Numeric).with_years(&[2019, 2021]),
                VariableSpec::new("income", Role::Target, Kind::Numeric).with_years(&[2019, 2021]),
            ])
            .unwrap(),
        )
    }

    fn read(text: &str) -> Result<WideTable> {
        read_wide_csv(text.as_bytes(), Path::new("wide.csv"), codebook())
    }

    #[test]
    fn reads_any_column_order() {
        let t = read("income#2021,pid,age#2019,sex,age#2021,income#2019\n115000,2,448,1,472,128400\n").unwrap();
        assert_eq!(t.len(), 1);
        let row = &t.rows()[0];
        assert_eq!(row.id, 2);
        let cb = t.codebook().clone();
        let pos = |n: &str, y| t.column_position(cb.index_of(n).unwrap(), y).unwrap();
        assert_eq!(row.cells[pos("sex", None)], Cell::Cat(1));
        assert_eq!(row.cells[pos("age", Some(2021))], Cell::Num(472.0));
        assert_eq!(row.cells[pos("income", Some(2019))], Cell::Num(128400.0));
    }

    #[test]
    fn empty_body_is_empty_table() {
        let t = read("pid,sex,age#2019,age#2021,income#2019,income#2021\n").unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn empty_cell_is_absent() {
        let t = read("pid,sex,age#2019,age#2021,income#2019,income#2021\n1,,-4,,5,6\n").unwrap();
        assert_eq!(t.rows()[0].cells[0], Cell::Absent);
        assert_eq!(t.rows()[0].cells[1], Cell::Num(-4.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let missing = read("pid,sex,age#2019,income#2019,income#2021\n").unwrap_err();
        assert!(missing.to_string().contains("missing required column `age#2021`"), "{missing}");
        let unknown = read("pid,sex,age#2019,age#2021,income#2019,income#2021,zip\n").unwrap_err();
        assert!(unknown.to_string().contains("unknown column"));
        let token = read("pid,sex,age#2019,age#2021,income#2019,income#2021\n1,1,4.5,1,1,1\n").unwrap_err();
        assert!(matches!(token, Error::Parse { line: 2, .. }), "{token}");
        let dup = read("pid,sex,age#2019,age#2021,income#2019,income#2021\n1,1,1,1,1,1\n1,2,2,2,2,2\n")
            .unwrap_err();
        assert!(dup.to_string().contains("duplicate individual id 1"));
    }
}
