//! Variable codebook: the schema that drives ingestion, cleaning and encoding.
//!
//! On disk a codebook is a CSV file with the exact header
//!
//! ```text
//! name,role,kind,missing_codes,valid_values,year_suffixes,recode_ref,bin_edges
//! ```
//!
//! List fields hold semicolon-separated values; an empty field means "not
//! applicable". `valid_values` tokens are either a single integer or an
//! inclusive range written `lo..hi` (e.g. `0..20;95`).

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

pub const CODEBOOK_HEADER: [&str; 8] = [
    "name",
    "role",
    "kind",
    "missing_codes",
    "valid_values",
    "year_suffixes",
    "recode_ref",
    "bin_edges",
];

/// Income class boundaries used when the target declares no `bin_edges`.
pub const DEFAULT_CLASS_EDGES: [f64; 2] = [50_000.0, 100_000.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Id,
    Time,
    Feature,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Numeric,
    Nominal,
}

impl Role {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "id" => Some(Role::Id),
            "time" => Some(Role::Time),
            "feature" => Some(Role::Feature),
            "target" => Some(Role::Target),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Id => "id",
            Role::Time => "time",
            Role::Feature => "feature",
            Role::Target => "target",
        }
    }
}

impl Kind {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "numeric" => Some(Kind::Numeric),
            "nominal" => Some(Kind::Nominal),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Numeric => "numeric",
            Kind::Nominal => "nominal",
        }
    }
}

/// Inclusive integer set, stored as sorted disjoint ranges.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidValues {
    ranges: Vec<(i64, i64)>,
}

impl ValidValues {
    pub fn from_ranges(mut ranges: Vec<(i64, i64)>) -> Self {
        ranges.sort_unstable();
        ValidValues { ranges }
    }

    pub fn contains(&self, v: i64) -> bool {
        self.ranges.iter().any(|&(lo, hi)| lo <= v && v <= hi)
    }

    pub fn ranges(&self) -> &[(i64, i64)] {
        &self.ranges
    }
}

impl fmt::Display for ValidValues {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, &(lo, hi)) in self.ranges.iter().enumerate() {
            if k > 0 {
                f.write_str(";")?;
            }
            if lo == hi {
                write!(f, "{lo}")?;
            } else {
                write!(f, "{lo}..{hi}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableSpec {
    pub name: String,
    pub role: Role,
    pub kind: Kind,
    pub missing_codes: BTreeSet<i64>,
    pub valid_values: Option<ValidValues>,
    /// Survey years of a repeated measure; empty for time-invariant variables.
    pub year_suffixes: Vec<u16>,
    pub recode_ref: Option<String>,
    pub bin_edges: Option<Vec<f64>>,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, role: Role, kind: Kind) -> Self {
        VariableSpec {
            name: name.into(),
            role,
            kind,
            missing_codes: BTreeSet::new(),
            valid_values: None,
            year_suffixes: Vec::new(),
            recode_ref: None,
            bin_edges: None,
        }
    }

    pub fn with_years(mut self, years: &[u16]) -> Self {
        self.year_suffixes = years.to_vec();
        self
    }

    pub fn with_missing(mut self, codes: &[i64]) -> Self {
        self.missing_codes = codes.iter().copied().collect();
        self
    }

    pub fn with_recode(mut self, name: impl Into<String>) -> Self {
        self.recode_ref = Some(name.into());
        self
    }

    pub fn with_valid(mut self, ranges: Vec<(i64, i64)>) -> Self {
        self.valid_values = Some(ValidValues::from_ranges(ranges));
        self
    }

    pub fn with_bin_edges(mut self, edges: Vec<f64>) -> Self {
        self.bin_edges = Some(edges);
        self
    }

    pub fn is_repeated(&self) -> bool {
        !self.year_suffixes.is_empty()
    }

    /// True when `raw` is one of the declared missing codes or negative.
    pub fn is_missing_code(&self, raw: i64) -> bool {
        raw < 0 || self.missing_codes.contains(&raw)
    }
}

/// Ordered, validated list of variables plus the survey years they span.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    variables: Vec<VariableSpec>,
    years: Vec<u16>,
    id: usize,
    target: usize,
    time: Option<usize>,
}

impl Codebook {
    pub fn new(variables: Vec<VariableSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for v in &variables {
            if v.name.is_empty() {
                return Err(Error::Codebook("empty variable name".into()));
            }
            if v.name.contains(['#', ',']) || v.name.contains(char::is_whitespace) {
                return Err(Error::Codebook(format!(
                    "variable name `{}` may not contain `#`, `,` or whitespace",
                    v.name
                )));
            }
            if !seen.insert(v.name.as_str()) {
                return Err(Error::Codebook(format!("duplicate variable `{}`", v.name)));
            }
        }

        let with_role = |role: Role| -> Vec<usize> {
            variables
                .iter()
                .enumerate()
                .filter(|(_, v)| v.role == role)
                .map(|(i, _)| i)
                .collect()
        };
        let ids = with_role(Role::Id);
        let targets = with_role(Role::Target);
        let times = with_role(Role::Time);
        if ids.len() != 1 {
            return Err(Error::Codebook(format!(
                "expected exactly one id variable, found {}",
                ids.len()
            )));
        }
        if targets.len() != 1 {
            return Err(Error::Codebook(format!(
                "expected exactly one target variable, found {}",
                targets.len()
            )));
        }
        if times.len() > 1 {
            return Err(Error::Codebook("at most one time variable is allowed".into()));
        }

        for v in &variables {
            if matches!(v.role, Role::Id | Role::Time) && v.is_repeated() {
                return Err(Error::Codebook(format!(
                    "{} variable `{}` cannot be a repeated measure",
                    v.role.as_str(),
                    v.name
                )));
            }
            let mut years = v.year_suffixes.clone();
            years.sort_unstable();
            years.dedup();
            if years.len() != v.year_suffixes.len() {
                return Err(Error::Codebook(format!("`{}` repeats a year suffix", v.name)));
            }
            if let Some(edges) = &v.bin_edges {
                if v.role != Role::Target {
                    return Err(Error::Codebook(format!(
                        "bin_edges declared on non-target `{}`",
                        v.name
                    )));
                }
                if edges.len() != 2 {
                    return Err(Error::Codebook(format!(
                        "target `{}` needs exactly 2 bin edges for three classes, found {}",
                        v.name,
                        edges.len()
                    )));
                }
                if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Codebook(format!(
                        "bin_edges of `{}` must be finite and strictly ascending",
                        v.name
                    )));
                }
            }
        }
        let target = targets[0];
        if variables[target].kind != Kind::Numeric {
            return Err(Error::Codebook("the target variable must be numeric".into()));
        }

        let years: BTreeSet<u16> = variables
            .iter()
            .flat_map(|v| v.year_suffixes.iter().copied())
            .collect();

        Ok(Codebook {
            years: years.into_iter().collect(),
            id: ids[0],
            target,
            time: times.first().copied(),
            variables,
        })
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    /// Survey years covered by repeated measures, ascending.
    pub fn years(&self) -> &[u16] {
        &self.years
    }

    pub fn id_variable(&self) -> &VariableSpec {
        &self.variables[self.id]
    }

    pub fn target_index(&self) -> usize {
        self.target
    }

    pub fn target(&self) -> &VariableSpec {
        &self.variables[self.target]
    }

    /// Name of the year column in long-format output.
    pub fn time_name(&self) -> &str {
        self.time
            .map(|t| self.variables[t].name.as_str())
            .unwrap_or("year")
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&VariableSpec> {
        self.index_of(name).map(|i| &self.variables[i])
    }

    pub fn features(&self) -> impl Iterator<Item = &VariableSpec> {
        self.variables.iter().filter(|v| v.role == Role::Feature)
    }

    pub fn class_edges(&self) -> [f64; 2] {
        match &self.target().bin_edges {
            Some(e) => [e[0], e[1]],
            None => DEFAULT_CLASS_EDGES,
        }
    }

    /// Serialize in the codebook CSV grammar.
    pub fn to_csv_string(&self) -> String {
        let join = |items: Vec<String>| items.join(";");
        let mut out = CODEBOOK_HEADER.join(",");
        out.push('\n');
        for v in &self.variables {
            let fields = [
                v.name.clone(),
                v.role.as_str().to_string(),
                v.kind.as_str().to_string(),
                join(v.missing_codes.iter().map(|c| c.to_string()).collect()),
                v.valid_values.as_ref().map(|vv| vv.to_string()).unwrap_or_default(),
                join(v.year_suffixes.iter().map(|y| y.to_string()).collect()),
                v.recode_ref.clone().unwrap_or_default(),
                v.bin_edges
                    .as_ref()
                    .map(|e| join(e.iter().map(|x| x.to_string()).collect()))
                    .unwrap_or_default(),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// Load and validate a codebook CSV file.
pub fn load_codebook(path: impl AsRef<Path>) -> Result<Codebook> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| Error::Codebook(format!("cannot open {}: {e}", path.display())))?;
    read_codebook(file, path)
}

pub fn read_codebook<R: Read>(reader: R, source: &Path) -> Result<Codebook> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(source, 1, e.to_string()))?
        .clone();
    if header.iter().map(str::trim).ne(CODEBOOK_HEADER.iter().copied()) {
        return Err(Error::parse(
            source,
            1,
            format!("header must be `{}`", CODEBOOK_HEADER.join(",")),
        ));
    }

    let mut vars = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(source, line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let bad = |msg: String| Error::parse(source, line, msg);
        let f: Vec<&str> = record.iter().map(str::trim).collect();

        let role = Role::parse(f[1]).ok_or_else(|| bad(format!("unknown role `{}`", f[1])))?;
        let kind = Kind::parse(f[2]).ok_or_else(|| bad(format!("unknown kind `{}`", f[2])))?;
        let missing_codes = parse_list::<i64>(f[3]).map_err(&bad)?.into_iter().collect();
        let valid_values = if f[4].is_empty() {
            None
        } else {
            Some(parse_valid(f[4]).map_err(&bad)?)
        };
        let year_suffixes = parse_list::<u16>(f[5]).map_err(&bad)?;
        let recode_ref = (!f[6].is_empty()).then(|| f[6].to_string());
        let bin_edges = if f[7].is_empty() {
            None
        } else {
            Some(parse_list::<f64>(f[7]).map_err(&bad)?)
        };

        vars.push(VariableSpec {
            name: f[0].to_string(),
            role,
            kind,
            missing_codes,
            valid_values,
            year_suffixes,
            recode_ref,
            bin_edges,
        });
    }
    Codebook::new(vars)
}

fn parse_list<T: std::str::FromStr>(field: &str) -> std::result::Result<Vec<T>, String> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(';')
        .map(|tok| {
            let tok = tok.trim();
            tok.parse::<T>().map_err(|_| format!("bad list item `{tok}`"))
        })
        .collect()
}

fn parse_valid(field: &str) -> std::result::Result<ValidValues, String> {
    let mut ranges = Vec::new();
    for tok in field.split(';').map(str::trim) {
        let range = match tok.split_once("..") {
            Some((lo, hi)) => {
                let lo: i64 = lo.trim().parse().map_err(|_| format!("bad range `{tok}`"))?;
                let hi: i64 = hi.trim().parse().map_err(|_| format!("bad range `{tok}`"))?;
                if lo > hi {
                    return Err(format!("empty range `{tok}`"));
                }
                (lo, hi)
            }
            None => {
                let v: i64 = tok.parse().map_err(|_| format!("bad value `{tok}`"))?;
                (v, v)
            }
        };
        ranges.push(range);
    }
    Ok(ValidValues::from_ranges(ranges))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<Codebook> {
        read_codebook(text.as_bytes(), Path::new("test.csv"))
    }

    const HEADER: &str = "name,role,kind,missing_codes,valid_values,year_suffixes,recode_ref,bin_edges\n";

    #[test]
    fn minimal_codebook() {
        let cb = read(&format!(
            "{HEADER}pid,id,numeric,,,,,\nx,feature,numeric,-1;-2,,2019;2021,,\nincome,target,numeric,,,2019;2021,,50000;100000\n"
        ))
        .unwrap();
        assert_eq!(cb.len(), 3);
        assert_eq!(cb.years(), &[2019, 2021]);
        assert_eq!(cb.id_variable().name, "pid");
        assert_eq!(cb.class_edges(), [50_000.0, 100_000.0]);
        assert_eq!(cb.time_name(), "year");
    }

    #[test]
    fn two_targets_rejected() {
        let err = read(&format!(
            "{HEADER}pid,id,numeric,,,,,\na,target,numeric,,,,,\nb,target,numeric,,,,,\n"
        ))
        .unwrap_err();
        assert!(err.to_string().contains("exactly one target"), "{err}");
    }

    #[test]
    fn missing_target_and_duplicates_rejected() {
        assert!(read(&format!("{HEADER}pid,id,numeric,,,,,\na,feature,numeric,,,,,\n")).is_err());
        let err = read(&format!(
            "{HEADER}pid,id,numeric,,,,,\na,feature,numeric,,,,,\na,target,numeric,,,,,\n"
        ))
        .unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = read(&format!(
            "{HEADER}pid,id,numeric,,,,,\nx,feature,numeric,abc,,,,\n"
        ))
        .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let err = read("name,role\npid,id\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn bin_edges_must_ascend() {
        let err = read(&format!(
            "{HEADER}pid,id,numeric,,,,,\nincome,target,numeric,,,,,100000;50000\n"
        ))
        .unwrap_err();
        assert!(err.to_string().contains("ascending"));
    }

    #[test]
    fn valid_values_and_round_trip() {
        let cb = read(&format!(
            "{HEADER}pid,id,numeric,,,,,\ngrade,feature,numeric,-5;-4;-3;-2;-1,0..20;95,,,\nincome,target,numeric,,,2021,,\n"
        ))
        .unwrap();
        let vv = cb.get("grade").unwrap().valid_values.clone().unwrap();
        assert!(vv.contains(0) && vv.contains(20) && vv.contains(95));
        assert!(!vv.contains(21) && !vv.contains(-1));
        let again = read(&cb.to_csv_string()).unwrap();
        assert_eq!(cb, again);
    }
}
