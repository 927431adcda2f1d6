//! Plot-ready CSV emission and run manifests.
//!
//! Heatmap rows are ordered by (target, augmentor) in matrix language order;
//! scatter rows by (target, augmentor) likewise.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lang::LanguageId;
use crate::selection::PairwiseMatrix;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BleuTable {
    scores: BTreeMap<LanguageId, f64>,
}

impl BleuTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, lang: LanguageId, score: f64) -> Result<()> {
        if !(score.is_finite() && score >= 0.0) {
            return Err(Error::Schema(format!("BLEU for {lang} must be non-negative, got {score}")));
        }
        if self.scores.contains_key(&lang) {
            return Err(Error::Schema(format!("duplicate BLEU entry for {lang}")));
        }
        self.scores.insert(lang, score);
        Ok(())
    }

    pub fn get(&self, lang: &LanguageId) -> Option<f64> {
        self.scores.get(lang).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LanguageId, f64)> + '_ {
        self.scores.iter().map(|(l, s)| (l, *s))
    }

    /// Parses `"ar:15.8, bg:34.2, ..."`.
    pub fn parse_pairs(s: &str) -> Result<Self> {
        let mut table = BleuTable::new();
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (lang, score) = item
                .split_once(':')
                .ok_or_else(|| Error::Schema(format!("expected lang:score, got {item:?}")))?;
            let score: f64 = score
                .trim()
                .parse()
                .map_err(|_| Error::Schema(format!("bad BLEU score in {item:?}")))?;
            table.insert(lang.trim().parse()?, score)?;
        }
        Ok(table)
    }

    /// Reads a CSV file with header `lang,bleu`.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let headers = reader.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))
        };
        let (lang_col, bleu_col) = (col("lang")?, col("bleu")?);
        let mut table = BleuTable::new();
        for row in reader.records() {
            let row = row?;
            let lang = row.get(lang_col).unwrap_or_default().trim();
            let raw = row.get(bleu_col).unwrap_or_default().trim();
            let score: f64 = raw
                .parse()
                .map_err(|_| Error::Schema(format!("bad BLEU score {raw:?} for {lang}")))?;
            table.insert(lang.parse()?, score)?;
        }
        Ok(table)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Long-form heatmap: one `baseline` row per target and one `delta` row per
/// off-diagonal cell, each carrying its row's delta range.
pub fn emit_heatmap_csv(matrix: &PairwiseMatrix, path: &Path) -> Result<()> {
    if matrix.is_empty() {
        return Err(Error::Matrix("cannot emit a heatmap for an empty matrix".into()));
    }
    let mut out = create(path)?;
    let w = |out: &mut BufWriter<File>, line: String| {
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))
    };
    w(&mut out, "target,augmentor,kind,value,row_min_delta,row_max_delta".into())?;
    for t in matrix.languages() {
        let deltas = matrix.row_deltas(t).unwrap_or_default();
        let (lo, hi) = match deltas.is_empty() {
            true => (String::new(), String::new()),
            false => {
                let lo = deltas.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
                let hi = deltas.iter().map(|d| d.1).fold(f64::NEG_INFINITY, f64::max);
                (format!("{lo:+.6}"), format!("{hi:+.6}"))
            }
        };
        for a in matrix.languages() {
            let (kind, value) = if a == t {
                ("baseline", format!("{:.6}", matrix.baseline(t).unwrap_or_default()))
            } else {
                ("delta", format!("{:+.6}", matrix.delta(t, a).unwrap_or_default()))
            };
            w(&mut out, format!("{t},{a},{kind},{value},{lo},{hi}"))?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatterPoint {
    pub augmentor: LanguageId,
    pub bleu: f64,
    pub target: LanguageId,
    pub delta: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scatter {
    pub points: Vec<ScatterPoint>,
    /// Augmentors with no BLEU entry; their rows are omitted.
    pub missing: Vec<LanguageId>,
}

pub fn bleu_scatter(matrix: &PairwiseMatrix, bleu: &BleuTable) -> Scatter {
    let mut scatter = Scatter {
        points: Vec::new(),
        missing: matrix
            .languages()
            .iter()
            .filter(|l| bleu.get(l).is_none())
            .cloned()
            .collect(),
    };
    for t in matrix.languages() {
        for (a, delta) in matrix.row_deltas(t).unwrap_or_default() {
            if let Some(b) = bleu.get(&a) {
                scatter.points.push(ScatterPoint {
                    augmentor: a,
                    bleu: b,
                    target: t.clone(),
                    delta,
                });
            }
        }
    }
    scatter
}

/// Writes `augmentor,bleu,target,delta` rows and returns the number of
/// augmentors skipped for lack of a BLEU score. Each is also reported on
/// stderr.
pub fn emit_bleu_scatter(matrix: &PairwiseMatrix, bleu: &BleuTable, path: &Path) -> Result<usize> {
    let scatter = bleu_scatter(matrix, bleu);
    let mut out = create(path)?;
    let mut text = String::from("augmentor,bleu,target,delta\n");
    for p in &scatter.points {
        text.push_str(&format!("{},{:.1},{},{:+.6}\n", p.augmentor, p.bleu, p.target, p.delta));
    }
    out.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))?;
    for lang in &scatter.missing {
        eprintln!("warning: no BLEU score for augmentor {lang}; its rows are omitted");
    }
    Ok(scatter.missing.len())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    /// SHA-256 of the resolved configuration JSON.
    pub config_digest: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
    pub tool_version: String,
    /// Unix seconds. Not part of any digest.
    pub timestamp: u64,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

impl RunManifest {
    pub fn new<C: Serialize>(
        command: Vec<String>,
        config: &C,
        seed: Option<u64>,
        inputs: &[&Path],
    ) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        let config_digest = hex::encode(Sha256::digest(serde_json::to_vec(&config)?));
        let inputs = inputs
            .iter()
            .map(|p| {
                Ok(InputDigest {
                    path: p.to_path_buf(),
                    sha256: file_sha256(p)?,
                })
            })
            .collect::<Result<_>>()?;
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or_default();
        Ok(RunManifest {
            command,
            config_digest,
            config,
            seed,
            inputs,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
            extra: serde_json::Value::Null,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = create(path)?;
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(s: &str) -> LanguageId {
        s.parse().unwrap()
    }

    fn matrix2() -> PairwiseMatrix {
        PairwiseMatrix::from_cells(vec![l("de"), l("hi")], vec![0.70, 0.01, 0.033, 0.673]).unwrap()
    }

    #[test]
    fn bleu_pairs() {
        let t = BleuTable::parse_pairs("ar:15.8, bg:34.2").unwrap();
        assert_eq!(t.get(&l("bg")), Some(34.2));
        assert!(BleuTable::parse_pairs("ar:-1").is_err());
        assert!(BleuTable::parse_pairs("ar:1,ar:2").is_err());
        assert!(BleuTable::parse_pairs("ar").is_err());
    }

    #[test]
    fn heatmap_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        emit_heatmap_csv(&matrix2(), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1], "de,de,baseline,0.700000,+0.010000,+0.010000");
        assert_eq!(lines[3], "hi,de,delta,+0.033000,+0.033000,+0.033000");
    }

    #[test]
    fn heatmap_empty_fails() {
        let m = PairwiseMatrix::from_cells(vec![], vec![]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_heatmap_csv(&m, &dir.path().join("h.csv")).is_err());
    }

    #[test]
    fn scatter_skips_missing() {
        let bleu = BleuTable::parse_pairs("de:38.8").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let warned = emit_bleu_scatter(&matrix2(), &bleu, &p).unwrap();
        assert_eq!(warned, 1);
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "augmentor,bleu,target,delta\nde,38.8,hi,+0.033000\n");
    }

    #[test]
    fn manifest_digest_ignores_time() {
        let a = RunManifest::new(vec!["x".into()], &serde_json::json!({"k": 1}), Some(1), &[]).unwrap();
        let b = RunManifest::new(vec!["y".into()], &serde_json::json!({"k": 1}), Some(1), &[]).unwrap();
        assert_eq!(a.config_digest, b.config_digest);
    }
}
