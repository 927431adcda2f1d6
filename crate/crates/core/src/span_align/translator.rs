//! The translator boundary plus deterministic mocks and a line-delimited
//! JSON subprocess client.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::lang::LanguageId;
use crate::seed::{keyed_draw, rng_from};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct TranslateError(pub String);

pub trait Translator: Send + Sync {
    fn name(&self) -> &str;

    fn translate(
        &self,
        text: &str,
        source: &LanguageId,
        dest: &LanguageId,
    ) -> Result<String, TranslateError>;

    /// Upper bound on concurrent `translate` calls, if the backend has one.
    fn max_in_flight(&self) -> Option<usize> {
        None
    }
}

/// Returns its input unchanged.
#[derive(Debug, Default, Clone, Copy)]
pub struct IdentityTranslator;

impl Translator for IdentityTranslator {
    fn name(&self) -> &str {
        "identity"
    }

    fn translate(&self, text: &str, _: &LanguageId, _: &LanguageId) -> Result<String, TranslateError> {
        Ok(text.to_string())
    }
}

/// Substitutes every word through a keyed letter permutation.
///
/// The permutation depends on `(seed, dest)` and is applied to ASCII letters
/// only (case preserved); everything else passes through. Because it acts
/// letter by letter, word order and whitespace are kept and any substring of
/// the input maps to a substring of the output.
#[derive(Debug, Clone)]
pub struct WordCipherTranslator {
    seed: u64,
}

impl WordCipherTranslator {
    pub fn new(seed: u64) -> Self {
        WordCipherTranslator { seed }
    }

    fn alphabet(&self, dest: &LanguageId) -> [u8; 26] {
        let mut letters: [u8; 26] = std::array::from_fn(|i| b'a' + i as u8);
        let mut rng = rng_from(keyed_draw(self.seed, ["word-cipher", dest.as_str()]));
        letters.shuffle(&mut rng);
        letters
    }
}

impl Translator for WordCipherTranslator {
    fn name(&self) -> &str {
        "word-cipher"
    }

    fn translate(&self, text: &str, _: &LanguageId, dest: &LanguageId) -> Result<String, TranslateError> {
        let table = self.alphabet(dest);
        Ok(text
            .chars()
            .map(|c| match c {
                'a'..='z' => table[(c as u8 - b'a') as usize] as char,
                'A'..='Z' => table[(c as u8 - b'A') as usize].to_ascii_uppercase() as char,
                _ => c,
            })
            .collect())
    }
}

/// A hostile mock that defeats first-match recovery but keeps marked spans.
///
/// Built with the answer strings of the corpus it will translate:
/// - a text equal to one of the answers (after trimming) is returned as is;
/// - otherwise the text is split into whitespace tokens, every token outside
///   a marked region whose word (trailing punctuation stripped) is an answer
///   word is dropped (its punctuation kept), tokens are grouped into sentence
///   chunks that never split a marked region, and the chunks are shuffled.
///
/// When no answer word occurs as a substring of any non-answer word, the
/// translated answer can never be found in a translated unmarked context,
/// while a marked context keeps both markers and the text between them.
#[derive(Debug, Clone)]
pub struct ChunkShuffleTranslator {
    marker: String,
    seed: u64,
    answers: HashSet<String>,
    answer_words: HashSet<String>,
}

impl ChunkShuffleTranslator {
    pub fn new<'a>(marker: &str, seed: u64, answers: impl IntoIterator<Item = &'a str>) -> Self {
        let answers: HashSet<String> = answers.into_iter().map(|a| a.trim().to_string()).collect();
        let answer_words = answers
            .iter()
            .flat_map(|a| a.split_whitespace().map(|w| strip_punct(w).0.to_string()))
            .filter(|w| !w.is_empty())
            .collect();
        ChunkShuffleTranslator {
            marker: marker.to_string(),
            seed,
            answers,
            answer_words,
        }
    }
}

fn strip_punct(token: &str) -> (&str, &str) {
    let core = token.trim_end_matches(|c: char| c.is_ascii_punctuation());
    (core, &token[core.len()..])
}

fn ends_sentence(token: &str) -> bool {
    token.ends_with(['.', '!', '?'])
}

impl Translator for ChunkShuffleTranslator {
    fn name(&self) -> &str {
        "chunk-shuffler"
    }

    fn translate(&self, text: &str, _: &LanguageId, dest: &LanguageId) -> Result<String, TranslateError> {
        if self.answers.contains(text.trim()) {
            return Ok(text.to_string());
        }
        let mut chunks: Vec<Vec<String>> = Vec::new();
        let mut current: Vec<String> = Vec::new();
        let mut markers_seen = 0usize;
        for token in text.split_whitespace() {
            let inside_before = markers_seen % 2 == 1;
            let n_markers = token.matches(self.marker.as_str()).count();
            markers_seen += n_markers;
            let protected = inside_before || n_markers > 0;
            if protected {
                current.push(token.to_string());
            } else {
                let (core, punct) = strip_punct(token);
                if self.answer_words.contains(core) {
                    if !punct.is_empty() {
                        current.push(punct.to_string());
                    }
                } else {
                    current.push(token.to_string());
                }
            }
            if markers_seen % 2 == 0 && ends_sentence(token) {
                chunks.push(std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            chunks.push(current);
        }
        let mut rng = rng_from(keyed_draw(self.seed, ["chunk-shuffle", dest.as_str(), text]));
        chunks.shuffle(&mut rng);
        let out = chunks
            .into_iter()
            .flatten()
            .collect::<Vec<_>>()
            .join(" ");
        if out.is_empty() {
            // Never return an empty translation for non-empty input.
            return Ok(text.trim().chars().take(1).collect());
        }
        Ok(out)
    }
}

#[derive(Serialize)]
struct TranslateRequest<'a> {
    text: &'a str,
    source: &'a str,
    dest: &'a str,
}

#[derive(Deserialize)]
struct TranslateResponse {
    text: Option<String>,
    error: Option<String>,
}

struct Proc {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// Talks to an external translation process over stdin/stdout.
///
/// Each request is one JSON line `{"text", "source", "dest"}`; each reply is
/// one JSON line `{"text"}` (or `{"error"}`). Requests are serialized, so
/// the in-flight cap is 1.
pub struct SubprocessTranslator {
    name: String,
    proc: Mutex<Proc>,
}

impl SubprocessTranslator {
    pub fn spawn(command: &[String]) -> std::io::Result<Self> {
        let (program, args) = command.split_first().ok_or_else(|| {
            std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty translator command")
        })?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(SubprocessTranslator {
            name: command.join(" "),
            proc: Mutex::new(Proc {
                child,
                stdin,
                stdout,
            }),
        })
    }
}

impl Translator for SubprocessTranslator {
    fn name(&self) -> &str {
        &self.name
    }

    fn translate(
        &self,
        text: &str,
        source: &LanguageId,
        dest: &LanguageId,
    ) -> Result<String, TranslateError> {
        let err = |e: &dyn std::fmt::Display| TranslateError(e.to_string());
        let mut proc = self.proc.lock().map_err(|e| err(&e))?;
        let req = TranslateRequest {
            text,
            source: source.as_str(),
            dest: dest.as_str(),
        };
        let mut line = serde_json::to_string(&req).map_err(|e| err(&e))?;
        line.push('\n');
        proc.stdin.write_all(line.as_bytes()).map_err(|e| err(&e))?;
        proc.stdin.flush().map_err(|e| err(&e))?;
        let mut reply = String::new();
        let n = proc.stdout.read_line(&mut reply).map_err(|e| err(&e))?;
        if n == 0 {
            return Err(TranslateError("translator process closed its output".into()));
        }
        let resp: TranslateResponse = serde_json::from_str(&reply).map_err(|e| err(&e))?;
        match (resp.text, resp.error) {
            (_, Some(e)) => Err(TranslateError(e)),
            (Some(t), None) => Ok(t),
            (None, None) => Err(TranslateError("response has no `text` field".into())),
        }
    }

    fn max_in_flight(&self) -> Option<usize> {
        Some(1)
    }
}

impl Drop for SubprocessTranslator {
    fn drop(&mut self) {
        if let Ok(proc) = self.proc.get_mut() {
            let _ = proc.child.kill();
            let _ = proc.child.wait();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lang(s: &str) -> LanguageId {
        LanguageId::new(s).unwrap()
    }

    #[test]
    fn word_cipher_is_bijective_and_deterministic() {
        let t = WordCipherTranslator::new(7);
        let table = t.alphabet(&lang("de"));
        let distinct: HashSet<_> = table.iter().collect();
        assert_eq!(distinct.len(), 26);
        let a = t.translate("The cat, sat!", &lang("en"), &lang("de")).unwrap();
        let b = t.translate("The cat, sat!", &lang("en"), &lang("de")).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), "The cat, sat!".len());
        assert!(a.starts_with(|c: char| c.is_ascii_uppercase()));
        assert_eq!(&a[3..4], " ");
        assert_ne!(
            t.translate("abcdef", &lang("en"), &lang("de")).unwrap(),
            t.translate("abcdef", &lang("en"), &lang("fr")).unwrap()
        );
    }

    #[test]
    fn chunk_shuffler_drops_unmarked_answer_words() {
        let t = ChunkShuffleTranslator::new("⟦", 1, ["Zed Qua"]);
        let out = t
            .translate("one Zed Qua two. three four.", &lang("en"), &lang("de"))
            .unwrap();
        assert!(!out.contains("Zed"));
        assert!(!out.contains("Qua"));
        assert!(out.contains("three four."));
        assert_eq!(t.translate("Zed Qua", &lang("en"), &lang("de")).unwrap(), "Zed Qua");
    }

    #[test]
    fn chunk_shuffler_keeps_marked_region_whole() {
        let t = ChunkShuffleTranslator::new("⟦", 3, ["Zed. Qua"]);
        let text = "alpha beta. gamma ⟦Zed. Qua⟦ delta. eps zeta. eta.";
        for seed in 0..20 {
            let t = ChunkShuffleTranslator { seed, ..t.clone() };
            let out = t.translate(text, &lang("en"), &lang("de")).unwrap();
            assert_eq!(out.matches('⟦').count(), 2);
            assert!(out.contains("⟦Zed. Qua⟦"), "{out}");
        }
    }

    #[test]
    fn subprocess_missing_executable() {
        assert!(SubprocessTranslator::spawn(&["/nonexistent/translator".to_string()]).is_err());
    }
}
