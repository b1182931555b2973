//! Range recoding of raw census codes into nominal groups.
//!
//! A recode map file is a CSV with header `low,high,out_category`; each row
//! maps the inclusive raw range `low..=high` to one group id.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::dataset::{Cell, LongTable};
use crate::error::{Error, Result};

pub const INDUSTRY_MAP: &str = "census2002_industry";
pub const OCCUPATION_MAP: &str = "census2002_occupation";

const INDUSTRY_CSV: &str = include_str!("../../data/recode/census2002_industry.csv");
const OCCUPATION_CSV: &str = include_str!("../../data/recode/census2002_occupation.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecodeRange {
    pub low: i64,
    pub high: i64,
    pub out_category: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecodeMap {
    name: String,
    ranges: Vec<RecodeRange>,
}

impl RecodeMap {
    pub fn new(name: impl Into<String>, mut ranges: Vec<RecodeRange>) -> Result<Self> {
        let name = name.into();
        ranges.sort_by_key(|r| r.low);
        for r in &ranges {
            if r.low > r.high {
                return Err(Error::Config(format!("recode map {name}: empty range {}-{}", r.low, r.high)));
            }
            if r.out_category < 1 {
                return Err(Error::Config(format!(
                    "recode map {name}: output category {} must be >= 1",
                    r.out_category
                )));
            }
        }
        if let Some(w) = ranges.windows(2).find(|w| w[1].low <= w[0].high) {
            return Err(Error::Config(format!(
                "recode map {name}: ranges {}-{} and {}-{} overlap",
                w[0].low, w[0].high, w[1].low, w[1].high
            )));
        }
        Ok(RecodeMap { name, ranges })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ranges(&self) -> &[RecodeRange] {
        &self.ranges
    }

    /// Number of distinct output categories.
    pub fn categories(&self) -> usize {
        let mut c: Vec<i64> = self.ranges.iter().map(|r| r.out_category).collect();
        c.sort_unstable();
        c.dedup();
        c.len()
    }

    pub fn lookup(&self, raw: i64) -> Option<i64> {
        let k = self.ranges.partition_point(|r| r.high < raw);
        self.ranges
            .get(k)
            .filter(|r| r.low <= raw)
            .map(|r| r.out_category)
    }

    /// Shipped stand-in grouping of 2002 Census codes, by map name.
    pub fn builtin(name: &str) -> Option<RecodeMap> {
        let text = match name {
            INDUSTRY_MAP => INDUSTRY_CSV,
            OCCUPATION_MAP => OCCUPATION_CSV,
            _ => return None,
        };
        Some(read_recode_map(name, text.as_bytes(), Path::new(name)).expect("builtin map parses"))
    }
}

/// Map a raw code through `map`; codes outside every range become absent.
pub fn recode_nominal(raw: i64, map: &RecodeMap) -> Cell {
    match map.lookup(raw) {
        Some(c) => Cell::Cat(c),
        None => Cell::Absent,
    }
}

pub fn load_recode_map(name: &str, path: impl AsRef<Path>) -> Result<RecodeMap> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| Error::Config(format!("cannot open recode map {}: {e}", path.display())))?;
    read_recode_map(name, file, path)
}

pub fn read_recode_map<R: Read>(name: &str, reader: R, source: &Path) -> Result<RecodeMap> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::parse(source, 1, e.to_string()))?;
    if header.iter().map(str::trim).ne(["low", "high", "out_category"]) {
        return Err(Error::parse(source, 1, "header must be `low,high,out_category`"));
    }
    let mut ranges = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            Error::parse(source, e.position().map(|p| p.line() as usize).unwrap_or(0), e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let num = |k: usize| -> Result<i64> {
            rec[k]
                .trim()
                .parse()
                .map_err(|_| Error::parse(source, line, format!("bad integer `{}`", &rec[k])))
        };
        ranges.push(RecodeRange { low: num(0)?, high: num(1)?, out_category: num(2)? });
    }
    RecodeMap::new(name, ranges)
}

/// Apply each variable's `recode_ref` map. Returns the recoded table and, per
/// recoded variable, how many present codes fell outside the map.
pub fn apply_recodes(
    long: &LongTable,
    maps: &HashMap<String, RecodeMap>,
) -> Result<(LongTable, BTreeMap<String, usize>)> {
    let cb = long.codebook().clone();
    let mut plan: Vec<Option<&RecodeMap>> = Vec::with_capacity(long.variables().len());
    let mut uncovered = BTreeMap::new();
    for &v in long.variables() {
        let spec = &cb.variables()[v];
        match &spec.recode_ref {
            Some(r) => {
                let map = maps.get(r).ok_or_else(|| {
                    Error::Config(format!("no recode map `{r}` for variable `{}`", spec.name))
                })?;
                uncovered.insert(spec.name.clone(), 0usize);
                plan.push(Some(map));
            }
            None => plan.push(None),
        }
    }
    let vars = long.variables().to_vec();
    let table = long.map_cells(|p, cell| match (plan[p], cell.code()) {
        (Some(map), Some(raw)) => {
            let out = recode_nominal(raw, map);
            if out.is_absent() {
                *uncovered.get_mut(&cb.variables()[vars[p]].name).unwrap() += 1;
            }
            // numeric-declared raw codes stay numeric after grouping
            match (out, cb.variables()[vars[p]].kind) {
                (Cell::Cat(c), crate::dataset::Kind::Numeric) => Cell::Num(c as f64),
                (o, _) => o,
            }
        }
        _ => cell,
    });
    Ok((table, uncovered))
}

/// Maps for every `recode_ref` in the codebook: explicit files first, then the shipped defaults.
pub fn resolve_maps(
    long: &LongTable,
    files: &BTreeMap<String, std::path::PathBuf>,
) -> Result<HashMap<String, RecodeMap>> {
    let mut maps = HashMap::new();
    for spec in long.codebook().variables() {
        let Some(r) = &spec.recode_ref else { continue };
        if maps.contains_key(r) {
            continue;
        }
        let map = match files.get(r) {
            Some(p) => load_recode_map(r, p)?,
            None => RecodeMap::builtin(r).ok_or_else(|| {
                Error::Config(format!("recode map `{r}` has no file and no built-in default"))
            })?,
        };
        maps.insert(r.clone(), map);
    }
    Ok(maps)
}
