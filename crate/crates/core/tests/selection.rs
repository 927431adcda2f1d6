use std::collections::BTreeMap;

use proptest::prelude::*;
use xlda_core::selection::{
    greedy_schedule, load_matrix_csv, matrix_from_accuracies, select_best, write_matrix_csv,
    CurvePoint,
};
use xlda_core::{LanguageId, PairwiseMatrix};

fn langs(n: usize) -> Vec<LanguageId> {
    (0..n).map(|i| format!("l{i:02}").parse().unwrap()).collect()
}

/// Deltas on a coarse grid so ties and zeros are common.
fn matrix_strategy(n: usize) -> impl Strategy<Value = PairwiseMatrix> {
    prop::collection::vec(-4i32..=4, n * n).prop_map(move |raw| {
        let cells = raw
            .iter()
            .enumerate()
            .map(|(i, &v)| if i / n == i % n { 0.5 } else { v as f64 / 100.0 })
            .collect();
        PairwiseMatrix::from_cells(langs(n), cells).unwrap()
    })
}

/// Selection-sort with explicit tie-break on position, then cut.
fn oracle(m: &PairwiseMatrix, t: &LanguageId) -> Vec<LanguageId> {
    let mut rest: Vec<(usize, LanguageId, f64)> = m
        .languages()
        .iter()
        .enumerate()
        .filter(|(_, a)| *a != t)
        .map(|(i, a)| (i, a.clone(), m.delta(t, a).unwrap()))
        .collect();
    let mut out = Vec::new();
    while !rest.is_empty() {
        let mut best = 0;
        for j in 1..rest.len() {
            if rest[j].2 > rest[best].2 || (rest[j].2 == rest[best].2 && rest[j].0 < rest[best].0) {
                best = j;
            }
        }
        let (_, a, d) = rest.remove(best);
        if d < 0.0 {
            break;
        }
        out.push(a);
    }
    out
}

proptest! {
    #[test]
    fn greedy_matches_oracle(m in matrix_strategy(6)) {
        for t in m.languages() {
            let s = greedy_schedule(&m, t).unwrap();
            prop_assert_eq!(s.prefix(s.cut).to_vec(), oracle(&m, t));
            for k in 1..=s.cut {
                prop_assert_eq!(s.prefix(k), &s.prefix(s.cut)[..k]);
            }
        }
    }

    #[test]
    fn positive_scaling_keeps_schedule(m in matrix_strategy(5), scale in 0.01f64..3.0) {
        let n = m.len();
        let mut cells = Vec::new();
        for t in m.languages() {
            for a in m.languages() {
                cells.push(match m.delta(t, a) {
                    Some(d) => d * scale,
                    None => m.baseline(t).unwrap(),
                });
            }
        }
        let scaled = PairwiseMatrix::from_cells(m.languages().to_vec(), cells).unwrap();
        prop_assert_eq!(scaled.len(), n);
        for t in m.languages() {
            let a = greedy_schedule(&m, t).unwrap();
            let b = greedy_schedule(&scaled, t).unwrap();
            prop_assert_eq!(a.prefix(a.cut), b.prefix(b.cut));
        }
    }

    /// Relabelling languages consistently permutes the chosen set when all
    /// deltas are distinct.
    #[test]
    fn permutation_safe(raw in prop::collection::hash_set(-1000i32..1000, 4), perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle()) {
        let n = 5;
        let vals: Vec<f64> = raw.into_iter().map(|v| v as f64 / 1e4).collect();
        let l = langs(n);
        let mut cells = vec![0.5; n * n];
        for (j, v) in vals.iter().enumerate() {
            cells[j + 1] = *v;
        }
        let m = PairwiseMatrix::from_cells(l.clone(), cells).unwrap();
        // move augmentors around, target stays first
        let order: Vec<usize> = std::iter::once(0).chain(perm.iter().map(|p| p + 1)).collect();
        let pl: Vec<LanguageId> = order.iter().map(|&i| l[i].clone()).collect();
        let mut pc = vec![0.5; n * n];
        for (r, &i) in order.iter().enumerate() {
            for (c, &j) in order.iter().enumerate() {
                pc[r * n + c] = m.delta(&l[i], &l[j]).unwrap_or(0.5);
            }
        }
        let pm = PairwiseMatrix::from_cells(pl, pc).unwrap();
        let a = greedy_schedule(&m, &l[0]).unwrap();
        let b = greedy_schedule(&pm, &l[0]).unwrap();
        prop_assert_eq!(a.prefix(a.cut), b.prefix(b.cut));
    }

    #[test]
    fn matrix_csv_round_trip(m in matrix_strategy(4)) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_matrix_csv(&m, &p).unwrap();
        let back = load_matrix_csv(&p).unwrap();
        prop_assert_eq!(back.languages(), m.languages());
        for t in m.languages() {
            prop_assert!((back.baseline(t).unwrap() - m.baseline(t).unwrap()).abs() < 1e-9);
            for (a, d) in m.row_deltas(t).unwrap() {
                prop_assert!((back.delta(t, &a).unwrap() - d).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn best_point_is_max_with_smallest_k(accs in prop::collection::vec(0u8..5, 1..10)) {
        let pts: Vec<CurvePoint> = accs.iter().enumerate().map(|(k, &a)| CurvePoint { k, accuracy: a as f64 / 4.0 }).collect();
        let best = select_best(&pts).unwrap();
        let max = *accs.iter().max().unwrap();
        prop_assert_eq!(best.k, accs.iter().position(|&a| a == max).unwrap());
    }
}

#[test]
fn all_negative_row_gives_empty_schedule() {
    let l = langs(3);
    let m = PairwiseMatrix::from_cells(l.clone(), vec![0.6, -0.01, -0.02, 0.0, 0.5, 0.0, 0.0, 0.0, 0.5]).unwrap();
    let s = greedy_schedule(&m, &l[0]).unwrap();
    assert_eq!(s.cut, 0);
    assert!(s.prefix(0).is_empty());
}

#[test]
fn accuracies_to_deltas() {
    let (hi, de): (LanguageId, LanguageId) = ("hi".parse().unwrap(), "de".parse().unwrap());
    let acc = BTreeMap::from([
        ((hi.clone(), hi.clone()), 0.673),
        ((hi.clone(), de.clone()), 0.706),
        ((de.clone(), de.clone()), 0.8),
        ((de.clone(), hi.clone()), 0.79),
    ]);
    let m = matrix_from_accuracies(&[hi.clone(), de.clone()], &acc).unwrap();
    assert!((m.delta(&hi, &de).unwrap() - 0.033).abs() <= 1e-9);
    assert_eq!(m.baseline(&hi), Some(0.673));
}
