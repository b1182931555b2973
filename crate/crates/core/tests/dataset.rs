mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::sync::Arc;

use proptest::prelude::*;

use income_panel::dataset::{
    balanced_year_sample, filter_invalid_target, ingest_wide_csv, mark_missing, read_codebook, read_wide_csv,
    unroll_longitudinal, Cell, Role,
};
use income_panel::eval::{percentage_split, percentage_split_grouped, SplitSpec};
use income_panel::features::{average_ranks, correlation_matrix, prune_correlated, spearman, CorrelationMatrix};
use income_panel::harness::{generate_synthetic, nlsy_codebook, SynthSpec, NLSY_YEARS};

use common::*;

fn small_panel(individuals: usize, seed: u64) -> income_panel::dataset::WideTable {
    generate_synthetic(&SynthSpec { individuals, ..SynthSpec::default() }, seed).unwrap()
}

#[test]
fn unroll_matches_per_cell_lookup_by_header() {
    let wide = small_panel(60, 1);
    // header()[0] is the id column, cells start after it
    let header: Vec<String> = wide.header().into_iter().skip(1).collect();
    let cb = wide.codebook().clone();
    let long = unroll_longitudinal(&wide).unwrap();
    assert_eq!(long.len(), 60 * cb.years().len());

    let by_id: HashMap<i64, &income_panel::dataset::WideRow> = wide.rows().iter().map(|r| (r.id, r)).collect();
    let names = long.variable_names();
    for row in long.rows() {
        let w = by_id[&row.id];
        for (p, name) in names.iter().enumerate() {
            let spec = cb.get(name).unwrap();
            let wanted = if spec.is_repeated() { format!("{name}#{}", row.year) } else { name.clone() };
            let expected = match header.iter().position(|h| *h == wanted) {
                Some(k) => w.cells[k],
                None => Cell::Absent,
            };
            assert_eq!(row.cells[p], expected, "id {} year {} `{name}`", row.id, row.year);
        }
    }
}

#[test]
fn each_long_row_carries_exactly_one_year() {
    let wide = small_panel(30, 2);
    let long = unroll_longitudinal(&wide).unwrap();
    let mut seen: BTreeMap<i64, Vec<u16>> = BTreeMap::new();
    for r in long.rows() {
        seen.entry(r.id).or_default().push(r.year);
    }
    for years in seen.values() {
        assert_eq!(years, &NLSY_YEARS.to_vec());
    }
}

#[test]
fn filter_keeps_exactly_nonnegative_targets() {
    let long = unroll_longitudinal(&small_panel(200, 3)).unwrap();
    let t = long.target_position();
    let valid = long.rows().iter().filter(|r| matches!(r.cells[t].as_f64(), Some(v) if v >= 0.0)).count();
    let (kept, removed) = filter_invalid_target(&long);
    assert_eq!(kept.len(), valid);
    assert_eq!(removed, long.len() - valid);
    assert!(removed > 0, "generator plants invalid incomes");
    assert!(kept.rows().iter().all(|r| r.cells[t].as_f64().unwrap() >= 0.0));
}

#[test]
fn mark_missing_blanks_only_feature_missing_codes() {
    let long = unroll_longitudinal(&small_panel(200, 4)).unwrap();
    let cb = long.codebook().clone();
    let marked = mark_missing(&long);
    let vars = long.variables();
    let mut blanked = 0;
    for (before, after) in long.rows().iter().zip(marked.rows()) {
        for p in 0..vars.len() {
            let spec = &cb.variables()[vars[p]];
            let is_code = match before.cells[p] {
                Cell::Num(v) => v < 0.0 || spec.is_missing_code(v as i64) && v.fract() == 0.0,
                Cell::Cat(c) => c < 0 || spec.is_missing_code(c),
                Cell::Absent => false,
            };
            if spec.role == Role::Feature && is_code {
                assert_eq!(after.cells[p], Cell::Absent);
                blanked += 1;
            } else {
                assert_eq!(after.cells[p], before.cells[p]);
            }
        }
    }
    assert!(blanked > 0);
}

#[test]
fn written_panel_reads_back_identically() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec { individuals: 150, ..SynthSpec::default() };
    let written = income_panel::harness::write_synthetic(&spec, 9, dir.path()).unwrap();
    let cb = income_panel::dataset::load_codebook(dir.path().join("codebook.csv")).unwrap();
    assert_eq!(&cb, written.codebook().as_ref());
    let read = ingest_wide_csv(dir.path().join("data.csv"), Arc::new(cb)).unwrap();
    assert_eq!(read, written);
}

#[test]
fn codebook_csv_round_trips() {
    let cb = nlsy_codebook(&NLSY_YEARS).unwrap();
    let text = cb.to_csv_string();
    let back = read_codebook(text.as_bytes(), Path::new("codebook.csv")).unwrap();
    assert_eq!(back, cb);
}

#[test]
fn ingest_rejects_missing_declared_column() {
    let cb = Arc::new(nlsy_codebook(&NLSY_YEARS).unwrap());
    let wide = small_panel(5, 5);
    let mut buf = Vec::new();
    wide.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let (head, body) = text.split_once('\n').unwrap();
    let cols: Vec<&str> = head.split(',').collect();
    let drop = cols.len() - 1;
    let cut = |line: &str| line.split(',').take(drop).collect::<Vec<_>>().join(",");
    let broken: String = std::iter::once(cut(head)).chain(body.lines().map(cut)).map(|l| l + "\n").collect();
    let err = read_wide_csv(broken.as_bytes(), Path::new("data.csv"), cb).unwrap_err();
    assert!(err.to_string().contains(cols[drop]), "{err}");
}

#[test]
fn correlation_matrix_is_symmetric_with_unit_diagonal() {
    let long = mark_missing(&filter_invalid_target(&unroll_longitudinal(&small_panel(300, 6)).unwrap()).0);
    let m = correlation_matrix(&long);
    for i in 0..m.len() {
        for j in 0..m.len() {
            assert_eq!(m.get(i, j), m.get(j, i));
        }
        if let Some(d) = m.get(i, i) {
            assert!((d - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn pruning_keeps_policy_member_of_a_correlated_pair() {
    let names: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
    let a: Vec<f64> = (0..50).map(|i| i as f64).collect();
    let b: Vec<f64> = a.iter().map(|v| v * 2.0 + 1.0).collect();
    let c: Vec<f64> = (0..50).map(|i| ((i * 37) % 50) as f64).collect();
    let m = CorrelationMatrix::from_columns(names, &[a, b, c]);
    let kept = prune_correlated(&m, 0.8, &["b".to_string()]).unwrap();
    assert!(kept.contains(&"b".to_string()) && !kept.contains(&"a".to_string()));
    assert!(kept.contains(&"c".to_string()));
}

proptest! {
    #[test]
    fn balanced_sample_has_equal_year_shares(individuals in 20usize..80, seed in 0u64..1000, per_year in 1usize..15) {
        let long = unroll_longitudinal(&small_panel(individuals, seed % 7)).unwrap();
        let years = long.codebook().years().len();
        let s = balanced_year_sample(&long, per_year * years, seed).unwrap();
        let mut counts: BTreeMap<u16, usize> = BTreeMap::new();
        for r in s.rows() {
            *counts.entry(r.year).or_default() += 1;
        }
        prop_assert!(counts.values().all(|&c| c == per_year));
        let all: BTreeSet<(i64, u16)> = long.keys().into_iter().collect();
        prop_assert!(s.keys().iter().all(|k| all.contains(k)));
        prop_assert_eq!(s.keys().len(), s.keys().into_iter().collect::<BTreeSet<_>>().len());
    }

    #[test]
    fn average_ranks_sum_and_ties(v in prop::collection::vec(0i32..6, 1..60)) {
        let x: Vec<f64> = v.iter().map(|&a| a as f64).collect();
        let r = average_ranks(&x);
        let n = x.len() as f64;
        prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
        prop_assert_eq!(r, counting_ranks(&x));
    }

    #[test]
    fn spearman_is_symmetric_and_bounded(
        pairs in prop::collection::vec((0i32..10, -5i32..5), 2..50)
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let a = spearman(&x, &y);
        prop_assert_eq!(a, spearman(&y, &x));
        if let Some(r) = a {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
        }
    }

    #[test]
    fn percentage_split_partitions_rows(n in 2usize..400, f in 0.05f64..0.95, seed in any::<u64>()) {
        let s = percentage_split(n, &SplitSpec::new(f, seed).unwrap()).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        let want = ((n as f64 * f).round() as usize).clamp(1, n - 1);
        prop_assert_eq!(s.train.len(), want);
    }

    #[test]
    fn grouped_split_never_separates_an_individual(ids in prop::collection::vec(0i64..30, 2..200), seed in any::<u64>()) {
        prop_assume!(ids.iter().collect::<BTreeSet<_>>().len() >= 2);
        let s = percentage_split_grouped(&ids, &SplitSpec::new(0.7, seed).unwrap()).unwrap();
        let train: BTreeSet<i64> = s.train.iter().map(|&i| ids[i]).collect();
        prop_assert!(s.test.iter().all(|&i| !train.contains(&ids[i])));
        prop_assert_eq!(s.train.len() + s.test.len(), ids.len());
    }
}
