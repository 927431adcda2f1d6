//! Pairwise augmentor matrices and greedy augmentor selection.
//!
//! A [`PairwiseMatrix`] row is a target language, a column an augmentor.
//! The diagonal holds the absolute monolingual accuracy; off-diagonal cells
//! hold the signed change over that row's diagonal. Deltas are fractions
//! (0.033), never percent points.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::LanguageId;

#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseMatrix {
    languages: Vec<LanguageId>,
    /// Row-major, `n * n`; diagonal = baseline, off-diagonal = delta.
    cells: Vec<f64>,
}

impl PairwiseMatrix {
    /// Builds a matrix from row-major cells in the diagonal/delta convention.
    pub fn from_cells(languages: Vec<LanguageId>, cells: Vec<f64>) -> Result<Self> {
        let n = languages.len();
        let mut seen = HashSet::new();
        for lang in &languages {
            if !seen.insert(lang) {
                return Err(Error::Matrix(format!("duplicate language {lang}")));
            }
        }
        if cells.len() != n * n {
            return Err(Error::Matrix(format!(
                "{} cells for {n} languages",
                cells.len()
            )));
        }
        for (i, &v) in cells.iter().enumerate() {
            let (r, c) = (i / n, i % n);
            if !v.is_finite() {
                return Err(Error::Matrix(format!(
                    "non-finite cell ({}, {})",
                    languages[r], languages[c]
                )));
            }
            if r == c && !(0.0..=1.0).contains(&v) {
                return Err(Error::Matrix(format!(
                    "baseline for {} is {v}, outside [0, 1]",
                    languages[r]
                )));
            }
        }
        Ok(PairwiseMatrix { languages, cells })
    }

    pub fn languages(&self) -> &[LanguageId] {
        &self.languages
    }

    pub fn len(&self) -> usize {
        self.languages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.languages.is_empty()
    }

    pub fn index_of(&self, lang: &LanguageId) -> Option<usize> {
        self.languages.iter().position(|l| l == lang)
    }

    fn cell(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.languages.len() + col]
    }

    pub fn baseline(&self, target: &LanguageId) -> Option<f64> {
        let i = self.index_of(target)?;
        Some(self.cell(i, i))
    }

    /// `None` on the diagonal or for unknown languages.
    pub fn delta(&self, target: &LanguageId, augmentor: &LanguageId) -> Option<f64> {
        let (t, a) = (self.index_of(target)?, self.index_of(augmentor)?);
        (t != a).then(|| self.cell(t, a))
    }

    /// `(augmentor, delta)` for every other language, in matrix order.
    pub fn row_deltas(&self, target: &LanguageId) -> Option<Vec<(LanguageId, f64)>> {
        let t = self.index_of(target)?;
        Some(
            self.languages
                .iter()
                .enumerate()
                .filter(|&(a, _)| a != t)
                .map(|(a, lang)| (lang.clone(), self.cell(t, a)))
                .collect(),
        )
    }
}

/// Builds the matrix from absolute accuracies: `baseline(t) = acc(t, t)`,
/// `delta(t, a) = acc(t, a) - acc(t, t)`.
pub fn matrix_from_accuracies(
    languages: &[LanguageId],
    acc: &BTreeMap<(LanguageId, LanguageId), f64>,
) -> Result<PairwiseMatrix> {
    let n = languages.len();
    let mut cells = Vec::with_capacity(n * n);
    for t in languages {
        let get = |a: &LanguageId| -> Result<f64> {
            let v = *acc
                .get(&(t.clone(), a.clone()))
                .ok_or_else(|| Error::Matrix(format!("missing accuracy for ({t}, {a})")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Matrix(format!(
                    "accuracy {v} for ({t}, {a}) is outside [0, 1]"
                )));
            }
            Ok(v)
        };
        let base = get(t)?;
        for a in languages {
            cells.push(if a == t { base } else { get(a)? - base });
        }
    }
    PairwiseMatrix::from_cells(languages.to_vec(), cells)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedAugmentor {
    pub lang: LanguageId,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedySchedule {
    pub target: LanguageId,
    pub ranked: Vec<RankedAugmentor>,
    pub cut: usize,
    pub prefixes: Vec<Vec<LanguageId>>,
}

impl GreedySchedule {
    /// The first `k` ranked augmentors, `k <= cut`.
    pub fn prefix(&self, k: usize) -> &[LanguageId] {
        if k == 0 {
            &[]
        } else {
            &self.prefixes[k - 1]
        }
    }
}

/// Ranks augmentors by decreasing delta (stable, so ties keep matrix order)
/// and keeps them up to, not including, the first one with a negative
/// delta. Zero deltas do not stop the schedule.
pub fn greedy_schedule(matrix: &PairwiseMatrix, target: &LanguageId) -> Result<GreedySchedule> {
    let mut row = matrix
        .row_deltas(target)
        .ok_or_else(|| Error::UnknownLanguage(target.clone()))?;
    if row.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "matrix has no augmentor languages besides {target}"
        )));
    }
    row.sort_by(|a, b| b.1.total_cmp(&a.1));
    let cut = row.iter().position(|(_, d)| *d < 0.0).unwrap_or(row.len());
    let prefixes = (1..=cut)
        .map(|k| row[..k].iter().map(|(l, _)| l.clone()).collect())
        .collect();
    Ok(GreedySchedule {
        target: target.clone(),
        ranked: row
            .into_iter()
            .map(|(lang, delta)| RankedAugmentor { lang, delta })
            .collect(),
        cut,
        prefixes,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyCurve {
    pub target: LanguageId,
    pub points: Vec<CurvePoint>,
    pub best_k: usize,
}

impl GreedyCurve {
    pub fn new(target: LanguageId, points: Vec<CurvePoint>) -> Result<Self> {
        let best_k = select_best(&points)?.k;
        Ok(GreedyCurve {
            target,
            points,
            best_k,
        })
    }
}

/// Highest-accuracy point; the smallest `k` wins exact ties.
pub fn select_best(points: &[CurvePoint]) -> Result<CurvePoint> {
    let mut best: Option<CurvePoint> = None;
    for p in points {
        best = match best {
            Some(b) if p.accuracy < b.accuracy || (p.accuracy == b.accuracy && p.k >= b.k) => Some(b),
            _ => Some(*p),
        };
    }
    best.ok_or_else(|| Error::InvalidArgument("curve has no points".into()))
}

// ---------------------------------------------------------------------------
// Serialization

/// Square CSV: header `target,<langs...>`, one row per target. Diagonal
/// cells are absolute (`0.6730`), off-diagonal cells signed (`+0.0330`).
pub fn write_matrix_csv(matrix: &PairwiseMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["target".to_string()];
    header.extend(matrix.languages.iter().map(ToString::to_string));
    w.write_record(&header)?;
    let n = matrix.len();
    for (r, lang) in matrix.languages.iter().enumerate() {
        let mut row = vec![lang.to_string()];
        for c in 0..n {
            let v = matrix.cell(r, c);
            row.push(if r == c {
                format!("{v:.4}")
            } else {
                format!("{v:+.4}")
            });
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_matrix_csv(path: &Path) -> Result<PairwiseMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_csv(file)
}

pub(crate) fn parse_matrix_csv(reader: impl std::io::Read) -> Result<PairwiseMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let rows: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    let Some((header, body)) = rows.split_first() else {
        return Err(Error::Matrix("empty file".into()));
    };
    let languages = header
        .iter()
        .skip(1)
        .map(|s| LanguageId::new(s.trim()))
        .collect::<Result<Vec<_>>>()?;
    let n = languages.len();
    if body.len() != n {
        return Err(Error::Matrix(format!(
            "not square: {} columns but {} rows",
            n,
            body.len()
        )));
    }
    let mut cells = Vec::with_capacity(n * n);
    for (r, row) in body.iter().enumerate() {
        if row.len() != n + 1 {
            return Err(Error::Matrix(format!(
                "not square: row {} has {} cells, expected {n}",
                r + 1,
                row.len().saturating_sub(1)
            )));
        }
        if row[0].trim() != languages[r].as_str() {
            return Err(Error::Matrix(format!(
                "row {} is labelled {:?}, expected {}",
                r + 1,
                &row[0],
                languages[r]
            )));
        }
        for (c, raw) in row.iter().skip(1).enumerate() {
            let raw = raw.trim();
            if r == c && raw.starts_with(['+', '-']) {
                return Err(Error::Matrix(format!(
                    "diagonal cell for {} is {raw:?}; diagonal cells must be absolute accuracies",
                    languages[r]
                )));
            }
            let v: f64 = raw.parse().map_err(|_| {
                Error::Matrix(format!(
                    "unparseable cell {raw:?} at ({}, {})",
                    languages[r], languages[c]
                ))
            })?;
            cells.push(v);
        }
    }
    PairwiseMatrix::from_cells(languages, cells)
}

pub fn write_schedule_json(schedule: &GreedySchedule, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(schedule)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Curve CSV: `target,k,accuracy,added_augmentor,is_best`, with
/// `added_augmentor` empty at `k = 0`.
pub fn write_curve_csv(curve: &GreedyCurve, schedule: &GreedySchedule, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["target", "k", "accuracy", "added_augmentor", "is_best"])?;
    for p in &curve.points {
        let added = match p.k {
            0 => String::new(),
            k => schedule.ranked[k - 1].lang.to_string(),
        };
        w.write_record([
            curve.target.to_string(),
            p.k.to_string(),
            format!("{:.6}", p.accuracy),
            added,
            (p.k == curve.best_k).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lang(s: &str) -> LanguageId {
        LanguageId::new(s).unwrap()
    }

    fn langs(codes: &[&str]) -> Vec<LanguageId> {
        codes.iter().map(|c| lang(c)).collect()
    }

    /// Matrix with baseline 0.5 on every row and the given deltas for `t`.
    fn row_matrix(target: &str, deltas: &[(&str, f64)]) -> PairwiseMatrix {
        let mut order = vec![target];
        order.extend(deltas.iter().map(|(l, _)| *l));
        let languages = langs(&order);
        let n = languages.len();
        let mut cells = vec![0.0; n * n];
        for i in 0..n {
            cells[i * n + i] = 0.5;
        }
        for (j, (_, d)) in deltas.iter().enumerate() {
            cells[j + 1] = *d;
        }
        PairwiseMatrix::from_cells(languages, cells).unwrap()
    }

    #[test]
    fn hindi_german_delta() {
        let mut acc = BTreeMap::new();
        acc.insert((lang("hi"), lang("hi")), 0.673);
        acc.insert((lang("hi"), lang("de")), 0.706);
        acc.insert((lang("de"), lang("de")), 0.70);
        acc.insert((lang("de"), lang("hi")), 0.70);
        let m = matrix_from_accuracies(&langs(&["hi", "de"]), &acc).unwrap();
        assert_eq!(m.baseline(&lang("hi")), Some(0.673));
        assert!((m.delta(&lang("hi"), &lang("de")).unwrap() - 0.033).abs() < 1e-9);
        assert_eq!(m.delta(&lang("hi"), &lang("hi")), None);
    }

    #[test]
    fn equal_accuracies_give_zero_deltas() {
        let ls = langs(&["a1", "b1", "c1"]);
        let mut acc = BTreeMap::new();
        for t in &ls {
            for a in &ls {
                acc.insert((t.clone(), a.clone()), 0.6);
            }
        }
        let m = matrix_from_accuracies(&ls, &acc).unwrap();
        for t in &ls {
            assert!(m.row_deltas(t).unwrap().iter().all(|(_, d)| *d == 0.0));
        }
    }

    #[test]
    fn accuracy_out_of_range_or_missing() {
        let mut acc = BTreeMap::new();
        acc.insert((lang("en"), lang("en")), 1.2);
        assert!(matrix_from_accuracies(&langs(&["en"]), &acc).is_err());
        let acc = BTreeMap::new();
        assert!(matrix_from_accuracies(&langs(&["en"]), &acc).is_err());
    }

    #[test]
    fn schedule_sort_and_cut() {
        let m = row_matrix(
            "en",
            &[("ur", -0.018), ("fr", 0.015), ("de", 0.020), ("ru", 0.003)],
        );
        let s = greedy_schedule(&m, &lang("en")).unwrap();
        let ranked: Vec<_> = s.ranked.iter().map(|r| r.lang.as_str()).collect();
        assert_eq!(ranked, vec!["de", "fr", "ru", "ur"]);
        assert_eq!(s.cut, 3);
        assert_eq!(
            s.prefixes,
            vec![langs(&["de"]), langs(&["de", "fr"]), langs(&["de", "fr", "ru"])]
        );
        assert_eq!(s.prefix(0), &[] as &[LanguageId]);
        assert_eq!(s.prefix(2), langs(&["de", "fr"]).as_slice());
    }

    #[test]
    fn schedule_all_negative() {
        let m = row_matrix("en", &[("de", -0.01), ("fr", -0.02)]);
        let s = greedy_schedule(&m, &lang("en")).unwrap();
        assert_eq!(s.cut, 0);
        assert!(s.prefixes.is_empty());
    }

    #[test]
    fn schedule_ties_and_zero() {
        let m = row_matrix("en", &[("aa", 0.01), ("bb", 0.01), ("cc", 0.0)]);
        let s = greedy_schedule(&m, &lang("en")).unwrap();
        let ranked: Vec<_> = s.ranked.iter().map(|r| r.lang.as_str()).collect();
        assert_eq!(ranked, vec!["aa", "bb", "cc"]);
        assert_eq!(s.cut, 3);
    }

    #[test]
    fn schedule_errors() {
        let m = row_matrix("en", &[("de", 0.01)]);
        assert!(greedy_schedule(&m, &lang("zz")).is_err());
        let single = PairwiseMatrix::from_cells(langs(&["en"]), vec![0.5]).unwrap();
        assert!(greedy_schedule(&single, &lang("en")).is_err());
    }

    fn pts(v: &[(usize, f64)]) -> Vec<CurvePoint> {
        v.iter().map(|&(k, accuracy)| CurvePoint { k, accuracy }).collect()
    }

    #[test]
    fn best_point() {
        let p = pts(&[(0, 0.67), (1, 0.70), (2, 0.71), (3, 0.705)]);
        assert_eq!(select_best(&p).unwrap(), CurvePoint { k: 2, accuracy: 0.71 });
        assert_eq!(select_best(&pts(&[(0, 0.5)])).unwrap().k, 0);
        assert_eq!(select_best(&pts(&[(0, 0.6), (1, 0.6)])).unwrap().k, 0);
        assert_eq!(select_best(&pts(&[(1, 0.6), (0, 0.6)])).unwrap().k, 0);
        assert!(select_best(&[]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = PairwiseMatrix::from_cells(
            langs(&["en", "de", "hi"]),
            vec![0.8123, 0.0101, -0.0042, -0.02, 0.79, 0.0, 0.0331, 0.0123, 0.673],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_matrix_csv(&m, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("target,en,de,hi\nen,0.8123,+0.0101,-0.0042\n"), "{text}");
        let back = load_matrix_csv(&path).unwrap();
        assert_eq!(back.languages(), m.languages());
        for (a, b) in back.cells.iter().zip(&m.cells) {
            assert!((a - b).abs() < 5e-5);
        }
    }

    #[test]
    fn csv_errors() {
        let non_square = "target,en,de\nen,0.5,+0.1\n";
        assert!(parse_matrix_csv(non_square.as_bytes()).is_err());
        let signed_diag = "target,en,de\nen,+0.5,+0.1\nde,-0.1,0.4\n";
        let err = parse_matrix_csv(signed_diag.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("absolute"), "{err}");
        let garbage = "target,en,de\nen,0.5,abc\nde,-0.1,0.4\n";
        assert!(parse_matrix_csv(garbage.as_bytes()).is_err());
        let dup = "target,en,en\nen,0.5,0.1\nen,-0.1,0.4\n";
        assert!(parse_matrix_csv(dup.as_bytes()).is_err());
        let ok = "target,en,de\nen,0.5,0.1\nde,-0.1,0.4\n";
        assert!(parse_matrix_csv(ok.as_bytes()).is_ok());
    }

    #[test]
    fn schedule_json_shape() {
        let m = row_matrix("en", &[("de", 0.02), ("fr", -0.01)]);
        let s = greedy_schedule(&m, &lang("en")).unwrap();
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["target"], "en");
        assert_eq!(v["cut"], 1);
        assert_eq!(v["ranked"][0]["lang"], "de");
        assert_eq!(v["prefixes"][0][0], "de");
    }
}
