//! Aligned multilingual NLI corpora and SQuAD-style QA data.
//!
//! The canonical on-disk form of an [`AlignedCorpus`] is JSONL with one
//! record per `(id, lang)`:
//!
//! ```text
//! {"id":"1","lang":"en","premise":"...","hypothesis":"...","label":"neutral"}
//! ```
//!
//! TSV files (one language per file, positional ids) are accepted as an
//! import convenience and merged into the same model. Loaders never alter
//! text: no trimming, no normalization, so character offsets stay valid.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::LanguageId;
use crate::text::char_slice;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Entailment,
    Contradiction,
    Neutral,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Entailment, Label::Contradiction, Label::Neutral];

    pub fn index(self) -> usize {
        match self {
            Label::Entailment => 0,
            Label::Contradiction => 1,
            Label::Neutral => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Label::ALL.get(i).copied()
    }

    /// Case-insensitive; anything other than the three canonical names
    /// (e.g. `contradictory`) is rejected rather than coerced.
    pub fn parse(s: &str) -> Option<Label> {
        match s.to_lowercase().as_str() {
            "entailment" => Some(Label::Entailment),
            "contradiction" => Some(Label::Contradiction),
            "neutral" => Some(Label::Neutral),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Entailment => "entailment",
            Label::Contradiction => "contradiction",
            Label::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NliExample {
    pub id: String,
    pub premise: String,
    pub hypothesis: String,
    pub label: Label,
}

impl NliExample {
    pub fn new(
        id: impl Into<String>,
        premise: impl Into<String>,
        hypothesis: impl Into<String>,
        label: Label,
    ) -> Result<Self> {
        let ex = NliExample {
            id: id.into(),
            premise: premise.into(),
            hypothesis: hypothesis.into(),
            label,
        };
        if ex.premise.trim().is_empty() || ex.hypothesis.trim().is_empty() {
            return Err(Error::InvalidArgument(format!(
                "example {:?} has an empty premise or hypothesis",
                ex.id
            )));
        }
        Ok(ex)
    }
}

/// Per-id, per-language parallel versions of NLI examples.
///
/// Immutable once built; share it freely across threads. Label agreement
/// across languages is checked by the loaders and reported by [`validate`],
/// not enforced on insert, so that faulty corpora can still be inspected.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AlignedCorpus {
    languages: BTreeSet<LanguageId>,
    examples: BTreeMap<String, BTreeMap<LanguageId, NliExample>>,
    duplicates: Vec<(String, LanguageId)>,
}

impl AlignedCorpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one language version. A second version for the same `(id, lang)`
    /// is an error.
    pub fn insert(&mut self, lang: LanguageId, example: NliExample) -> Result<()> {
        let versions = self.examples.entry(example.id.clone()).or_default();
        if versions.contains_key(&lang) {
            return Err(Error::DuplicateRecord {
                id: example.id,
                lang,
            });
        }
        versions.insert(lang.clone(), example);
        self.languages.insert(lang);
        Ok(())
    }

    /// Like [`insert`](Self::insert) but keeps the first version of a
    /// duplicate and records the `(id, lang)` pair for reporting.
    pub fn insert_lenient(&mut self, lang: LanguageId, example: NliExample) {
        if let Err(Error::DuplicateRecord { id, lang }) = self.insert(lang, example) {
            self.duplicates.push((id, lang));
        }
    }

    pub fn languages(&self) -> impl Iterator<Item = &LanguageId> + '_ {
        self.languages.iter()
    }

    pub fn has_language(&self, lang: &LanguageId) -> bool {
        self.languages.contains(lang)
    }

    pub fn n_languages(&self) -> usize {
        self.languages.len()
    }

    /// Ids in ascending byte order.
    pub fn ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.examples.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn get(&self, id: &str, lang: &LanguageId) -> Option<&NliExample> {
        self.examples.get(id)?.get(lang)
    }

    pub fn versions(&self, id: &str) -> Option<&BTreeMap<LanguageId, NliExample>> {
        self.examples.get(id)
    }

    /// `(id, versions)` pairs in id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeMap<LanguageId, NliExample>)> + '_ {
        self.examples.iter().map(|(id, v)| (id.as_str(), v))
    }

    pub fn duplicates(&self) -> &[(String, LanguageId)] {
        &self.duplicates
    }

    /// Folds `other` into `self`. Fails on any shared `(id, lang)`.
    pub fn merge(mut self, other: AlignedCorpus) -> Result<Self> {
        for (_, versions) in other.examples {
            for (lang, ex) in versions {
                self.insert(lang, ex)?;
            }
        }
        self.languages.extend(other.languages);
        self.duplicates.extend(other.duplicates);
        self.duplicates.sort();
        Ok(self)
    }

    /// Fails with the first id (in id order) whose language versions disagree
    /// on the label.
    pub fn check_labels(&self) -> Result<()> {
        for (id, versions) in &self.examples {
            if has_label_conflict(versions) {
                return Err(Error::LabelConflict {
                    id: id.clone(),
                    labels: versions
                        .iter()
                        .map(|(l, ex)| (l.clone(), ex.label))
                        .collect(),
                });
            }
        }
        Ok(())
    }
}

fn has_label_conflict(versions: &BTreeMap<LanguageId, NliExample>) -> bool {
    let mut labels = versions.values().map(|ex| ex.label);
    match labels.next() {
        Some(first) => labels.any(|l| l != first),
        None => false,
    }
}

/// Merges per-language parts into one corpus. Merge order does not matter.
pub fn merge_all(parts: impl IntoIterator<Item = AlignedCorpus>) -> Result<AlignedCorpus> {
    parts
        .into_iter()
        .try_fold(AlignedCorpus::new(), AlignedCorpus::merge)
}

/// Merges parts whose ids are row positions. All parts must have the same
/// number of rows, since alignment is purely positional.
pub fn merge_positional(parts: Vec<AlignedCorpus>) -> Result<AlignedCorpus> {
    if let Some(first) = parts.first() {
        let n = first.len();
        if let Some(bad) = parts.iter().find(|p| p.len() != n) {
            return Err(Error::InvalidArgument(format!(
                "positional merge needs equal row counts, got {n} and {}",
                bad.len()
            )));
        }
    }
    merge_all(parts)
}

// ---------------------------------------------------------------------------
// JSONL

#[derive(Deserialize)]
struct RawNliRecord {
    id: Option<String>,
    lang: Option<String>,
    premise: Option<String>,
    hypothesis: Option<String>,
    label: Option<String>,
}

#[derive(Serialize)]
struct NliRecordOut<'a> {
    id: &'a str,
    lang: &'a LanguageId,
    premise: &'a str,
    hypothesis: &'a str,
    label: Label,
}

/// Loads canonical JSONL. Duplicate `(id, lang)` records and labels that
/// disagree across languages are errors.
pub fn load_nli_jsonl(path: &Path, default_lang: Option<&LanguageId>) -> Result<AlignedCorpus> {
    let corpus = read_nli_jsonl(path, default_lang, true)?;
    corpus.check_labels()?;
    Ok(corpus)
}

/// Loads JSONL for inspection: duplicates and label conflicts are kept as
/// report content instead of failing. Malformed lines are still errors.
pub fn load_nli_jsonl_lenient(
    path: &Path,
    default_lang: Option<&LanguageId>,
) -> Result<AlignedCorpus> {
    read_nli_jsonl(path, default_lang, false)
}

fn read_nli_jsonl(
    path: &Path,
    default_lang: Option<&LanguageId>,
    strict: bool,
) -> Result<AlignedCorpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut corpus = AlignedCorpus::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (lang, ex) = parse_nli_line(&line, line_no, default_lang)?;
        if strict {
            corpus.insert(lang, ex)?;
        } else {
            corpus.insert_lenient(lang, ex);
        }
    }
    Ok(corpus)
}

fn parse_nli_line(
    line: &str,
    line_no: usize,
    default_lang: Option<&LanguageId>,
) -> Result<(LanguageId, NliExample)> {
    let raw: RawNliRecord = serde_json::from_str(line).map_err(|e| Error::MalformedLine {
        line: line_no,
        message: e.to_string(),
    })?;
    let missing = |field| Error::MissingField {
        line: line_no,
        field,
    };
    let id = raw.id.ok_or_else(|| missing("id"))?;
    let lang = match (raw.lang, default_lang) {
        (Some(code), _) => LanguageId::new(code).map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?,
        (None, Some(lang)) => lang.clone(),
        (None, None) => return Err(missing("lang")),
    };
    let premise = raw.premise.ok_or_else(|| missing("premise"))?;
    let hypothesis = raw.hypothesis.ok_or_else(|| missing("hypothesis"))?;
    let label_str = raw.label.ok_or_else(|| missing("label"))?;
    let label = Label::parse(&label_str).ok_or(Error::UnknownLabel {
        line: line_no,
        value: label_str,
    })?;
    let ex = NliExample::new(id, premise, hypothesis, label).map_err(|e| Error::MalformedLine {
        line: line_no,
        message: e.to_string(),
    })?;
    Ok((lang, ex))
}

/// Writes canonical JSONL sorted by id, then language.
pub fn write_nli_jsonl(corpus: &AlignedCorpus, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (id, versions) in corpus.iter() {
        for (lang, ex) in versions {
            let rec = NliRecordOut {
                id,
                lang,
                premise: &ex.premise,
                hypothesis: &ex.hypothesis,
                label: ex.label,
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// TSV

/// Maps TSV header names to example fields.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TsvColumns {
    pub id: Option<String>,
    pub premise: String,
    pub hypothesis: String,
    pub label: String,
}

impl Default for TsvColumns {
    fn default() -> Self {
        TsvColumns {
            id: None,
            premise: "sentence1".into(),
            hypothesis: "sentence2".into(),
            label: "gold_label".into(),
        }
    }
}

/// Reads one language's tab-separated file. Without an id column, the
/// 0-based data row index becomes the id.
pub fn load_nli_tsv(path: &Path, lang: &LanguageId, columns: &TsvColumns) -> Result<AlignedCorpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_nli_tsv(file, lang, columns)
}

pub(crate) fn read_nli_tsv(
    reader: impl std::io::Read,
    lang: &LanguageId,
    columns: &TsvColumns,
) -> Result<AlignedCorpus> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .flexible(true)
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let id_col = columns.id.as_deref().map(find).transpose()?;
    let premise_col = find(&columns.premise)?;
    let hypothesis_col = find(&columns.hypothesis)?;
    let label_col = find(&columns.label)?;

    let mut corpus = AlignedCorpus::new();
    for (row_idx, record) in rdr.records().enumerate() {
        let record = record?;
        // header is line 1
        let line = row_idx + 2;
        if record.len() != headers.len() {
            return Err(Error::FieldCount {
                row: line,
                expected: headers.len(),
                found: record.len(),
            });
        }
        let id = match id_col {
            Some(c) => record[c].to_string(),
            None => row_idx.to_string(),
        };
        let label = Label::parse(&record[label_col]).ok_or_else(|| Error::UnknownLabel {
            line,
            value: record[label_col].to_string(),
        })?;
        let ex = NliExample::new(id, &record[premise_col], &record[hypothesis_col], label)
            .map_err(|e| Error::MalformedLine {
                line,
                message: e.to_string(),
            })?;
        corpus.insert(lang.clone(), ex)?;
    }
    Ok(corpus)
}

// ---------------------------------------------------------------------------
// SQuAD

/// An extractive QA example. `answer_start` is a character offset into
/// `context` and `context[answer_start..][..len(answer_text)] == answer_text`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaExample {
    pub id: String,
    pub context: String,
    pub question: String,
    pub answer_text: String,
    pub answer_start: usize,
}

impl QaExample {
    /// Character span `[start, end)` of the answer in the context.
    pub fn answer_span(&self) -> (usize, usize) {
        (
            self.answer_start,
            self.answer_start + self.answer_text.chars().count(),
        )
    }

    pub fn is_consistent(&self) -> bool {
        let (start, end) = self.answer_span();
        char_slice(&self.context, start, end) == Some(self.answer_text.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SkippedQa {
    pub id: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SquadLoad {
    pub examples: Vec<QaExample>,
    pub skipped: Vec<SkippedQa>,
}

#[derive(Serialize, Deserialize)]
struct SquadFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    version: Option<String>,
    data: Vec<SquadArticle>,
}

#[derive(Serialize, Deserialize)]
struct SquadArticle {
    #[serde(default)]
    title: String,
    paragraphs: Vec<SquadParagraph>,
}

#[derive(Serialize, Deserialize)]
struct SquadParagraph {
    context: String,
    qas: Vec<SquadQa>,
}

#[derive(Serialize, Deserialize)]
struct SquadQa {
    id: String,
    question: String,
    answers: Vec<SquadAnswer>,
}

#[derive(Serialize, Deserialize)]
struct SquadAnswer {
    text: String,
    answer_start: usize,
}

/// Loads SQuAD v1.1 JSON, keeping the first gold answer of each question.
/// Answers whose offset does not point at their text are skipped and
/// reported, not fixed up.
pub fn load_squad_json(path: &Path) -> Result<SquadLoad> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let parsed: SquadFile = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::Schema(e.to_string()))?;
    let mut load = SquadLoad::default();
    for article in parsed.data {
        for para in article.paragraphs {
            for qa in para.qas {
                let Some(first) = qa.answers.into_iter().next() else {
                    return Err(Error::Schema(format!("question {:?} has no answers", qa.id)));
                };
                let ex = QaExample {
                    id: qa.id,
                    context: para.context.clone(),
                    question: qa.question,
                    answer_text: first.text,
                    answer_start: first.answer_start,
                };
                if ex.is_consistent() {
                    load.examples.push(ex);
                } else {
                    load.skipped.push(SkippedQa {
                        reason: format!(
                            "answer {:?} not found at character offset {}",
                            ex.answer_text, ex.answer_start
                        ),
                        id: ex.id,
                    });
                }
            }
        }
    }
    Ok(load)
}

/// Writes examples as SQuAD v1.1 JSON, one article with one paragraph per
/// example.
pub fn write_squad_json(examples: &[QaExample], path: &Path) -> Result<()> {
    let file = SquadFile {
        version: Some("1.1".into()),
        data: vec![SquadArticle {
            title: "generated".into(),
            paragraphs: examples
                .iter()
                .map(|ex| SquadParagraph {
                    context: ex.context.clone(),
                    qas: vec![SquadQa {
                        id: ex.id.clone(),
                        question: ex.question.clone(),
                        answers: vec![SquadAnswer {
                            text: ex.answer_text.clone(),
                            answer_start: ex.answer_start,
                        }],
                    }],
                })
                .collect(),
        }],
    };
    let out = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(out);
    serde_json::to_writer(&mut out, &file)?;
    out.flush().map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LabelMismatch {
    pub id: String,
    pub labels: Vec<(LanguageId, Label)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub per_language_counts: BTreeMap<LanguageId, usize>,
    pub label_mismatches: Vec<LabelMismatch>,
    pub missing: Vec<(String, LanguageId)>,
    pub duplicates: Vec<(String, LanguageId)>,
}

impl ValidationReport {
    pub fn is_fully_aligned(&self) -> bool {
        self.label_mismatches.is_empty() && self.missing.is_empty()
    }

    pub fn is_clean(&self) -> bool {
        self.is_fully_aligned() && self.duplicates.is_empty()
    }
}

/// Lists every label mismatch and every `(id, missing language)` pair,
/// ordered by id, then language.
pub fn validate(corpus: &AlignedCorpus) -> ValidationReport {
    let mut report = ValidationReport {
        duplicates: corpus.duplicates.clone(),
        ..Default::default()
    };
    for lang in &corpus.languages {
        report.per_language_counts.insert(lang.clone(), 0);
    }
    for (id, versions) in &corpus.examples {
        for lang in versions.keys() {
            *report.per_language_counts.entry(lang.clone()).or_default() += 1;
        }
        for lang in &corpus.languages {
            if !versions.contains_key(lang) {
                report.missing.push((id.clone(), lang.clone()));
            }
        }
        if has_label_conflict(versions) {
            report.label_mismatches.push(LabelMismatch {
                id: id.clone(),
                labels: versions
                    .iter()
                    .map(|(l, ex)| (l.clone(), ex.label))
                    .collect(),
            });
        }
    }
    report
}
