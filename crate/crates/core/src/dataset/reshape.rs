//! Wide-to-long unrolling and row-level cleaning.

use std::collections::BTreeMap;

use rand::seq::index;

use super::codebook::Role;
use super::table::{Cell, LongRow, LongTable, WideTable};
use crate::error::{Error, Result};
use crate::rng;

/// Turn each individual's N declared survey years into N observation rows.
///
/// Time-invariant cells are copied into every year row; each row carries
/// exactly one year's repeated measures. A repeated variable that does not
/// declare a given year contributes an absent cell to that year's row.
pub fn unroll_longitudinal(wide: &WideTable) -> Result<LongTable> {
    let cb = wide.codebook().clone();
    if !cb.variables().iter().any(|v| v.is_repeated()) {
        return Err(Error::Data(
            "codebook declares no repeated-measure variable to unroll".into(),
        ));
    }
    let layout = super::table::long_layout(&cb);

    // (long position, year) -> wide position
    let mut source: Vec<BTreeMap<Option<u16>, usize>> = vec![BTreeMap::new(); layout.len()];
    for (k, col) in wide.columns().iter().enumerate() {
        let p = layout.iter().position(|&v| v == col.var).expect("wide var is a long column");
        source[p].insert(col.year, k);
    }

    let years = cb.years();
    let mut rows = Vec::with_capacity(wide.len() * years.len());
    for w in wide.rows() {
        for &year in years {
            let cells = layout
                .iter()
                .enumerate()
                .map(|(p, &var)| {
                    let key = if cb.variables()[var].is_repeated() { Some(year) } else { None };
                    source[p].get(&key).map(|&k| w.cells[k]).unwrap_or(Cell::Absent)
                })
                .collect();
            rows.push(LongRow { id: w.id, year, cells });
        }
    }
    LongTable::new(cb, rows)
}

/// Drop rows whose target is absent or negative. Returns the removed count.
pub fn filter_invalid_target(long: &LongTable) -> (LongTable, usize) {
    let t = long.target_position();
    let kept = long.filter_rows(|r| matches!(r.cells[t].as_f64(), Some(v) if v >= 0.0));
    let removed = long.len() - kept.len();
    (kept, removed)
}

/// Replace feature cells holding a missing code (declared or negative) with absent.
pub fn mark_missing(long: &LongTable) -> LongTable {
    let cb = long.codebook().clone();
    let vars = long.variables().to_vec();
    long.map_cells(|p, cell| {
        let spec = &cb.variables()[vars[p]];
        if spec.role != Role::Feature {
            return cell;
        }
        match cell {
            Cell::Num(v) if v < 0.0 => Cell::Absent,
            c => match c.code() {
                Some(code) if spec.is_missing_code(code) => Cell::Absent,
                _ => c,
            },
        }
    })
}

/// Sample `total` rows with an equal share from every codebook year.
///
/// Sampling is uniform without replacement within each year and a pure
/// function of `seed`. Output rows keep their original table order.
pub fn balanced_year_sample(long: &LongTable, total: usize, seed: u64) -> Result<LongTable> {
    let years = long.codebook().years().to_vec();
    if years.is_empty() {
        return Err(Error::Data("codebook declares no survey years".into()));
    }
    if total % years.len() != 0 {
        return Err(Error::Data(format!(
            "sample size {total} is not divisible by the {} survey years",
            years.len()
        )));
    }
    let per_year = total / years.len();
    let mut rng = rng::substream(seed, "year-sample");
    let mut chosen = Vec::with_capacity(total);
    for &year in &years {
        let members: Vec<usize> = (0..long.len()).filter(|&i| long.rows()[i].year == year).collect();
        if members.len() < per_year {
            return Err(Error::Data(format!(
                "year {year} has {} rows, {per_year} required",
                members.len()
            )));
        }
        chosen.extend(index::sample(&mut rng, members.len(), per_year).into_iter().map(|k| members[k]));
    }
    chosen.sort_unstable();
    Ok(long.select(&chosen))
}
