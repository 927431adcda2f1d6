//! Answer-span recovery for machine-translated extractive QA data.
//!
//! Context, question and answer are translated separately. Recovery then
//! runs in two phases:
//!
//! 1. **Exact first match**: the translated answer is searched in the
//!    translated context (both NFC-normalized, answer whitespace-trimmed,
//!    no case folding) and its first occurrence becomes the span.
//! 2. **Marker recovery**: for examples that fail phase 1, a marker is
//!    placed on both sides of the source span, the marked context is
//!    translated, and if exactly two markers survive the text between them
//!    becomes the span.
//!
//! Marker-recovered examples are counted in the statistics but kept out of
//! the training output unless explicitly requested. All offsets are
//! character offsets into the stored (NFC) translated context.

mod translator;

pub use translator::{
    ChunkShuffleTranslator, IdentityTranslator, SubprocessTranslator, TranslateError, Translator,
    WordCipherTranslator,
};

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::QaExample;
use crate::error::{Error, Result};
use crate::lang::LanguageId;
use crate::text::{char_index, char_slice};

/// Default boundary marker, U+27E6.
pub const DEFAULT_MARKER: &str = "\u{27E6}";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryPhase {
    ExactFirstMatch,
    MarkerRecovered,
    Unrecovered,
}

impl RecoveryPhase {
    pub fn as_str(self) -> &'static str {
        match self {
            RecoveryPhase::ExactFirstMatch => "exact_first_match",
            RecoveryPhase::MarkerRecovered => "marker_recovered",
            RecoveryPhase::Unrecovered => "unrecovered",
        }
    }
}

fn nfc(s: &str) -> String {
    s.nfc().collect()
}

/// First occurrence of `needle` in `haystack` as a character span.
fn first_match(haystack: &str, needle: &str) -> Option<(usize, usize)> {
    if needle.is_empty() {
        return None;
    }
    let byte = haystack.find(needle)?;
    let start = char_index(haystack, byte);
    Some((start, start + needle.chars().count()))
}

/// Character span of the first occurrence of the (trimmed) answer in the
/// context, after NFC-normalizing both. Offsets index the NFC form of
/// `translated_context`.
pub fn recover_span_exact(translated_context: &str, translated_answer: &str) -> Option<(usize, usize)> {
    first_match(&nfc(translated_context), &nfc(translated_answer.trim()))
}

/// Inserts `marker` immediately before `span.0` and after `span.1`
/// (character offsets).
pub fn mark_answer(context: &str, span: (usize, usize), marker: &str) -> Result<String> {
    if marker.is_empty() {
        return Err(Error::InvalidArgument("marker must be non-empty".into()));
    }
    if context.contains(marker) {
        return Err(Error::MarkerInContext(marker.to_string()));
    }
    let (start, end) = span;
    let len = context.chars().count();
    let out_of_bounds = Error::SpanOutOfBounds { start, end, len };
    if start > end || end > len {
        return Err(out_of_bounds);
    }
    let b_start = crate::text::byte_offset(context, start).ok_or(out_of_bounds)?;
    let b_end = b_start
        + crate::text::byte_offset(&context[b_start..], end - start)
            .expect("end checked against length");
    let mut out = String::with_capacity(context.len() + 2 * marker.len());
    out.push_str(&context[..b_start]);
    out.push_str(marker);
    out.push_str(&context[b_start..b_end]);
    out.push_str(marker);
    out.push_str(&context[b_end..]);
    Ok(out)
}

/// If `marker` occurs exactly twice, returns the text with both occurrences
/// removed and the character span that lay between them.
pub fn recover_span_marked(
    translated_marked_context: &str,
    marker: &str,
) -> Option<(String, (usize, usize))> {
    if marker.is_empty() {
        return None;
    }
    let positions: Vec<usize> = translated_marked_context
        .match_indices(marker)
        .map(|(i, _)| i)
        .collect();
    let [open, close] = positions[..] else {
        return None;
    };
    let text = translated_marked_context;
    let inner = &text[open + marker.len()..close];
    let mut clean = String::with_capacity(text.len());
    clean.push_str(&text[..open]);
    clean.push_str(inner);
    clean.push_str(&text[close + marker.len()..]);
    let start = char_index(text, open);
    Some((clean, (start, start + inner.chars().count())))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpanRecoveryRecord {
    pub source: QaExample,
    pub dest_lang: LanguageId,
    /// NFC form; for marker-recovered records, the cleaned marked translation.
    pub translated_context: String,
    pub translated_question: String,
    pub translated_answer: String,
    pub recovered_span: Option<(usize, usize)>,
    pub phase: RecoveryPhase,
    pub excluded_from_training: bool,
}

impl SpanRecoveryRecord {
    pub fn recovered_text(&self) -> Option<&str> {
        let (start, end) = self.recovered_span?;
        char_slice(&self.translated_context, start, end)
    }

    /// The translated training example, unless excluded or unrecovered.
    pub fn training_example(&self) -> Option<AlignedQaRecord> {
        if self.excluded_from_training {
            return None;
        }
        let (start, _) = self.recovered_span?;
        Some(AlignedQaRecord {
            id: self.source.id.clone(),
            dest_lang: self.dest_lang.clone(),
            context: self.translated_context.clone(),
            question: self.translated_question.clone(),
            answer_text: self.recovered_text()?.to_string(),
            answer_start: start,
            phase: self.phase,
        })
    }
}

/// One line of the aligned-output JSONL.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedQaRecord {
    pub id: String,
    pub dest_lang: LanguageId,
    pub context: String,
    pub question: String,
    pub answer_text: String,
    pub answer_start: usize,
    pub phase: RecoveryPhase,
}

impl AlignedQaRecord {
    pub fn to_qa_example(&self) -> QaExample {
        QaExample {
            id: self.id.clone(),
            context: self.context.clone(),
            question: self.question.clone(),
            answer_text: self.answer_text.clone(),
            answer_start: self.answer_start,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryStats {
    pub dest_lang: LanguageId,
    pub total: usize,
    pub exact_count: usize,
    pub marker_count: usize,
    pub unrecovered_count: usize,
    pub exact_rate: f64,
    pub cumulative_rate: f64,
}

impl RecoveryStats {
    /// Rates are 0 for an empty run.
    pub fn from_counts(dest_lang: LanguageId, exact: usize, marker: usize, unrecovered: usize) -> Self {
        let total = exact + marker + unrecovered;
        let rate = |n: usize| if total == 0 { 0.0 } else { n as f64 / total as f64 };
        RecoveryStats {
            dest_lang,
            total,
            exact_count: exact,
            marker_count: marker,
            unrecovered_count: unrecovered,
            exact_rate: rate(exact),
            cumulative_rate: rate(exact + marker),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AlignConfig {
    pub source: LanguageId,
    pub marker: String,
    pub include_marker_phase: bool,
    pub jobs: usize,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            source: LanguageId::new("en").expect("valid code"),
            marker: DEFAULT_MARKER.to_string(),
            include_marker_phase: false,
            jobs: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AlignOutput {
    pub records: Vec<SpanRecoveryRecord>,
    pub stats: RecoveryStats,
}

impl AlignOutput {
    pub fn training_examples(&self) -> impl Iterator<Item = AlignedQaRecord> + '_ {
        self.records.iter().filter_map(SpanRecoveryRecord::training_example)
    }
}

/// Translates every example into `dest` and recovers its answer span.
///
/// Examples are processed concurrently (bounded by `config.jobs` and the
/// translator's in-flight cap); output order always matches input order. A
/// translator failure aborts the run, naming the first failing example.
pub fn align_qa_dataset(
    examples: &[QaExample],
    translator: &dyn Translator,
    dest: &LanguageId,
    config: &AlignConfig,
) -> Result<AlignOutput> {
    if config.marker.is_empty() {
        return Err(Error::InvalidArgument("marker must be non-empty".into()));
    }
    let jobs = config
        .jobs
        .max(1)
        .min(translator.max_in_flight().unwrap_or(usize::MAX));
    let work = || -> Vec<Result<SpanRecoveryRecord>> {
        examples
            .par_iter()
            .map(|ex| align_one(ex, translator, dest, config))
            .collect()
    };
    let results = if jobs == 1 {
        examples
            .iter()
            .map(|ex| align_one(ex, translator, dest, config))
            .collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(work)
    };
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    let count = |p| records.iter().filter(|r| r.phase == p).count();
    let stats = RecoveryStats::from_counts(
        dest.clone(),
        count(RecoveryPhase::ExactFirstMatch),
        count(RecoveryPhase::MarkerRecovered),
        count(RecoveryPhase::Unrecovered),
    );
    Ok(AlignOutput { records, stats })
}

fn align_one(
    ex: &QaExample,
    translator: &dyn Translator,
    dest: &LanguageId,
    config: &AlignConfig,
) -> Result<SpanRecoveryRecord> {
    let translate = |text: &str| -> Result<String> {
        let fail = |message: String| Error::Translation {
            translator: translator.name().to_string(),
            id: ex.id.clone(),
            message,
        };
        let out = translator
            .translate(text, &config.source, dest)
            .map_err(|e| fail(e.0))?;
        if out.is_empty() && !text.is_empty() {
            return Err(fail("empty translation for non-empty input".into()));
        }
        Ok(out)
    };

    let context = nfc(&translate(&ex.context)?);
    let question = translate(&ex.question)?;
    let answer = translate(&ex.answer_text)?;

    let mut record = SpanRecoveryRecord {
        source: ex.clone(),
        dest_lang: dest.clone(),
        translated_context: context,
        translated_question: question,
        translated_answer: answer,
        recovered_span: None,
        phase: RecoveryPhase::Unrecovered,
        excluded_from_training: false,
    };

    if let Some(span) = first_match(&record.translated_context, &nfc(record.translated_answer.trim())) {
        record.recovered_span = Some(span);
        record.phase = RecoveryPhase::ExactFirstMatch;
        return Ok(record);
    }

    // A source context that already contains the marker cannot be marked;
    // such examples stay unrecovered.
    if let Ok(marked) = mark_answer(&ex.context, ex.answer_span(), &config.marker) {
        let translated = nfc(&translate(&marked)?);
        if let Some((clean, span)) = recover_span_marked(&translated, &config.marker) {
            if let Some(span) = trim_span(&clean, span) {
                record.translated_context = clean;
                record.recovered_span = Some(span);
                record.phase = RecoveryPhase::MarkerRecovered;
                record.excluded_from_training = !config.include_marker_phase;
            }
        }
    }
    Ok(record)
}

/// Shrinks a span to exclude surrounding whitespace; `None` if nothing is
/// left.
fn trim_span(text: &str, (start, end): (usize, usize)) -> Option<(usize, usize)> {
    let inner = char_slice(text, start, end)?;
    let lead = inner.chars().take_while(|c| c.is_whitespace()).count();
    let trimmed = inner.trim();
    if trimmed.is_empty() {
        return None;
    }
    let s = start + lead;
    Some((s, s + trimmed.chars().count()))
}

pub fn write_aligned_jsonl<'a>(
    records: impl IntoIterator<Item = &'a AlignedQaRecord>,
    path: &Path,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Recovery CSV, one row per language sorted by language code; rates are
/// printed with three decimals.
pub fn write_recovery_report(stats: &[RecoveryStats], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut sorted: Vec<&RecoveryStats> = stats.iter().collect();
    sorted.sort_by(|a, b| a.dest_lang.cmp(&b.dest_lang));
    let mut w = csv::Writer::from_writer(file);
    w.write_record([
        "dest_lang",
        "total",
        "exact_count",
        "exact_rate",
        "marker_count",
        "cumulative_rate",
        "unrecovered_count",
    ])?;
    for s in sorted {
        w.write_record([
            s.dest_lang.to_string(),
            s.total.to_string(),
            s.exact_count.to_string(),
            format!("{:.3}", s.exact_rate),
            s.marker_count.to_string(),
            format!("{:.3}", s.cumulative_rate),
            s.unrecovered_count.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
