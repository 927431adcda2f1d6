//! Desk-scale stand-ins for aligned NLI training data and extractive QA data.
//!
//! NLI: examples are generated once over an abstract vocabulary, labelled by
//! a deterministic rule, then rendered into every language through a
//! per-language bijective token cipher. Alignment and label agreement hold
//! by construction.
//!
//! QA: lowercase filler text with a capitalized answer phrase embedded in
//! one sentence. Capital letters occur only inside answers.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::corpus::{AlignedCorpus, Label, NliExample, QaExample};
use crate::error::{Error, Result};
use crate::lang::LanguageId;
use crate::seed::{keyed_draw, rng_from};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelRule {
    /// Every vocabulary item carries a hidden 3-class score vector per field;
    /// the label is the arg-max of the summed scores. Linearly learnable.
    #[default]
    TokenScores,
    /// Entailment iff the hypothesis multiset is contained in the premise's,
    /// contradiction iff the two are disjoint, neutral otherwise.
    Overlap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCorpusSpec {
    pub n_ids: usize,
    pub n_eval_ids: usize,
    pub languages: Vec<LanguageId>,
    pub vocab_size: usize,
    pub cipher_seed: u64,
    pub label_rule: LabelRule,
    /// Inclusive token-count range.
    pub premise_len: (usize, usize),
    pub hypothesis_len: (usize, usize),
}

impl Default for SyntheticCorpusSpec {
    fn default() -> Self {
        SyntheticCorpusSpec {
            n_ids: 500,
            n_eval_ids: 2000,
            languages: ["x1", "x2", "x3", "x4"]
                .iter()
                .map(|c| LanguageId::new(*c).expect("valid code"))
                .collect(),
            vocab_size: 200,
            cipher_seed: 0,
            label_rule: LabelRule::TokenScores,
            premise_len: (8, 14),
            hypothesis_len: (4, 8),
        }
    }
}

impl SyntheticCorpusSpec {
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("synthetic corpus: {m}")));
        if self.vocab_size < 50 {
            return bad("vocab_size must be at least 50");
        }
        if self.n_ids < 10 {
            return bad("n_ids must be at least 10");
        }
        if self.languages.len() < 2 {
            return bad("at least two languages are required");
        }
        let mut langs = self.languages.clone();
        langs.sort();
        langs.dedup();
        if langs.len() != self.languages.len() {
            return bad("languages must be distinct");
        }
        for (lo, hi) in [self.premise_len, self.hypothesis_len] {
            if lo == 0 || lo > hi {
                return bad("length ranges must satisfy 1 <= min <= max");
            }
        }
        if self.label_rule == LabelRule::Overlap && self.premise_len.0 >= self.vocab_size / 2 {
            return bad("premises too long for the overlap rule");
        }
        Ok(())
    }
}

struct AbstractExample {
    premise: Vec<usize>,
    hypothesis: Vec<usize>,
    label: Label,
}

fn argmax3(v: [f64; 3]) -> usize {
    let mut best = 0;
    for c in 1..3 {
        if v[c] > v[best] {
            best = c;
        }
    }
    best
}

fn overlap_label(premise: &[usize], hypothesis: &[usize]) -> Label {
    let mut remaining = premise.to_vec();
    let mut contained = true;
    for t in hypothesis {
        match remaining.iter().position(|p| p == t) {
            Some(i) => {
                remaining.swap_remove(i);
            }
            None => contained = false,
        }
    }
    if contained {
        Label::Entailment
    } else if hypothesis.iter().all(|t| !premise.contains(t)) {
        Label::Contradiction
    } else {
        Label::Neutral
    }
}

struct Generator {
    spec: SyntheticCorpusSpec,
    scores: Vec<[[f64; 3]; 2]>,
}

impl Generator {
    fn new(spec: &SyntheticCorpusSpec) -> Self {
        let mut rng = rng_from(keyed_draw(spec.cipher_seed, ["token-scores"]));
        let scores = (0..spec.vocab_size)
            .map(|_| {
                let mut draw = || std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                [draw(), draw()]
            })
            .collect();
        Generator {
            spec: spec.clone(),
            scores,
        }
    }

    fn tokens(&self, rng: &mut impl RngCore, (lo, hi): (usize, usize)) -> Vec<usize> {
        let n = rng.random_range(lo..=hi);
        (0..n).map(|_| rng.random_range(0..self.spec.vocab_size)).collect()
    }

    fn example(&self, rng: &mut impl RngCore) -> AbstractExample {
        let premise = self.tokens(rng, self.spec.premise_len);
        match self.spec.label_rule {
            LabelRule::TokenScores => {
                let hypothesis = self.tokens(rng, self.spec.hypothesis_len);
                let mut total = [0.0; 3];
                for (field, toks) in [(0, &premise), (1, &hypothesis)] {
                    for &t in toks {
                        for (c, acc) in total.iter_mut().enumerate() {
                            *acc += self.scores[t][field][c];
                        }
                    }
                }
                let label = Label::from_index(argmax3(total)).expect("three classes");
                AbstractExample {
                    premise,
                    hypothesis,
                    label,
                }
            }
            LabelRule::Overlap => {
                let (lo, hi) = self.spec.hypothesis_len;
                let n = rng.random_range(lo..=hi);
                let outside: Vec<usize> = (0..self.spec.vocab_size)
                    .filter(|t| !premise.contains(t))
                    .collect();
                let from_premise = |rng: &mut dyn RngCore| premise[rng.random_range(0..premise.len())];
                let from_outside = |rng: &mut dyn RngCore| outside[rng.random_range(0..outside.len())];
                let mut shuffled = premise.clone();
                let hypothesis: Vec<usize> = match rng.random_range(0..3) {
                    0 => {
                        shuffled.shuffle(rng);
                        shuffled.truncate(n.min(premise.len()));
                        shuffled
                    }
                    1 => (0..n).map(|_| from_outside(rng)).collect(),
                    _ => {
                        let mut h = vec![from_premise(rng), from_outside(rng)];
                        h.extend((2..n).map(|_| from_premise(rng)));
                        h
                    }
                };
                let label = overlap_label(&premise, &hypothesis);
                AbstractExample {
                    premise,
                    hypothesis,
                    label,
                }
            }
        }
    }
}

/// Per-language surface vocabularies: language 0 is the pivot (identity),
/// every other language a keyed permutation of it.
fn cipher_vocabularies(spec: &SyntheticCorpusSpec) -> Vec<Vec<String>> {
    spec.languages
        .iter()
        .enumerate()
        .map(|(i, lang)| {
            let mut perm: Vec<usize> = (0..spec.vocab_size).collect();
            if i > 0 {
                let mut rng = rng_from(keyed_draw(spec.cipher_seed, ["cipher", lang.as_str()]));
                perm.shuffle(&mut rng);
            }
            perm.into_iter().map(|p| format!("{lang}_{p}")).collect()
        })
        .collect()
}

/// Returns `(train, eval)`; ids are `tr000000..` and `ev000000..`.
pub fn generate_synthetic_corpus(spec: &SyntheticCorpusSpec) -> Result<(AlignedCorpus, AlignedCorpus)> {
    spec.check()?;
    let generator = Generator::new(spec);
    let vocabularies = cipher_vocabularies(spec);
    let render = |toks: &[usize], vocab: &[String]| {
        toks.iter()
            .map(|&t| vocab[t].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut rng = rng_from(keyed_draw(spec.cipher_seed, ["examples"]));
    let mut build = |prefix: &str, n: usize| -> Result<AlignedCorpus> {
        let mut corpus = AlignedCorpus::new();
        for i in 0..n {
            let ex = generator.example(&mut rng);
            let id = format!("{prefix}{i:06}");
            for (lang, vocab) in spec.languages.iter().zip(&vocabularies) {
                let nli = NliExample::new(
                    id.clone(),
                    render(&ex.premise, vocab),
                    render(&ex.hypothesis, vocab),
                    ex.label,
                )?;
                corpus.insert(lang.clone(), nli)?;
            }
        }
        Ok(corpus)
    };
    let train = build("tr", spec.n_ids)?;
    let eval = build("ev", spec.n_eval_ids)?;
    Ok((train, eval))
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

fn pseudo_word(rng: &mut impl RngCore, syllables: usize) -> String {
    (0..syllables)
        .flat_map(|_| {
            [
                CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char,
                VOWELS[rng.random_range(0..VOWELS.len())] as char,
            ]
        })
        .collect()
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_ascii_uppercase().to_string() + chars.as_str(),
        None => String::new(),
    }
}

/// `n` QA examples over lowercase filler text. Each answer is one to three
/// capitalized words placed inside (never at the start of) one sentence.
pub fn generate_synthetic_qa(n: usize, seed: u64) -> Vec<QaExample> {
    let mut rng = rng_from(keyed_draw(seed, ["synthetic-qa"]));
    let filler: Vec<String> = (0..300)
        .map(|_| {
            let syl = rng.random_range(1..=3);
            pseudo_word(&mut rng, syl)
        })
        .collect();
    let pick = |rng: &mut dyn RngCore| filler[rng.random_range(0..filler.len())].clone();
    (0..n)
        .map(|i| {
            let n_answer = rng.random_range(1..=3);
            let answer_words: Vec<String> = (0..n_answer)
                .map(|_| capitalize(&pseudo_word(&mut rng, 2)))
                .collect();
            let answer = answer_words.join(" ");
            let n_sentences = rng.random_range(2..=4);
            let host = rng.random_range(0..n_sentences);
            let mut sentences = Vec::with_capacity(n_sentences);
            for s in 0..n_sentences {
                let len = rng.random_range(5..=10);
                let mut words: Vec<String> = (0..len).map(|_| pick(&mut rng)).collect();
                if s == host {
                    let at = rng.random_range(1..len);
                    words.insert(at, answer.clone());
                }
                sentences.push(words.join(" ") + ".");
            }
            let context = sentences.join(" ");
            let byte = context.find(&answer).expect("answer was inserted");
            let question = format!("what is the {} {}?", pick(&mut rng), pick(&mut rng));
            QaExample {
                id: format!("qa{i:06}"),
                answer_start: context[..byte].chars().count(),
                context,
                question,
                answer_text: answer,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::validate;

    #[test]
    fn three_languages_hundred_ids_validate_clean() {
        let spec = SyntheticCorpusSpec {
            n_ids: 100,
            n_eval_ids: 20,
            languages: ["en", "x1", "x2"].iter().map(|c| LanguageId::new(*c).unwrap()).collect(),
            ..Default::default()
        };
        let (train, eval) = generate_synthetic_corpus(&spec).unwrap();
        assert_eq!((train.len(), train.n_languages()), (100, 3));
        assert!(validate(&train).is_clean());
        assert!(validate(&eval).is_clean());
        assert!(train.ids().all(|id| eval.versions(id).is_none()));
    }

    #[test]
    fn same_seed_same_corpus() {
        let spec = SyntheticCorpusSpec {
            n_ids: 30,
            n_eval_ids: 10,
            ..Default::default()
        };
        assert_eq!(
            generate_synthetic_corpus(&spec).unwrap(),
            generate_synthetic_corpus(&spec).unwrap()
        );
        let other = SyntheticCorpusSpec {
            cipher_seed: 1,
            ..spec.clone()
        };
        assert_ne!(
            generate_synthetic_corpus(&spec).unwrap().0,
            generate_synthetic_corpus(&other).unwrap().0
        );
    }

    #[test]
    fn ciphers_are_bijective() {
        let spec = SyntheticCorpusSpec::default();
        for vocab in cipher_vocabularies(&spec) {
            let mut v = vocab.clone();
            v.sort();
            v.dedup();
            assert_eq!(v.len(), spec.vocab_size);
        }
    }

    #[test]
    fn overlap_rule() {
        assert_eq!(overlap_label(&[1, 2, 3], &[2, 1]), Label::Entailment);
        assert_eq!(overlap_label(&[1, 2, 3], &[2, 2]), Label::Neutral);
        assert_eq!(overlap_label(&[1, 2, 3], &[4, 5]), Label::Contradiction);
        assert_eq!(overlap_label(&[1, 2, 3], &[1, 5]), Label::Neutral);
    }

    #[test]
    fn invalid_specs() {
        let base = SyntheticCorpusSpec::default();
        for bad in [
            SyntheticCorpusSpec { vocab_size: 49, ..base.clone() },
            SyntheticCorpusSpec { n_ids: 9, ..base.clone() },
            SyntheticCorpusSpec { languages: base.languages[..1].to_vec(), ..base.clone() },
            SyntheticCorpusSpec { premise_len: (5, 4), ..base.clone() },
        ] {
            assert!(generate_synthetic_corpus(&bad).is_err());
        }
    }

    #[test]
    fn qa_examples_are_consistent() {
        let qa = generate_synthetic_qa(200, 9);
        assert_eq!(qa.len(), 200);
        for ex in &qa {
            assert!(ex.is_consistent(), "{ex:?}");
            assert!(ex.answer_start > 0);
            let caps = ex.context.chars().filter(char::is_ascii_uppercase).count();
            let answer_caps = ex.answer_text.chars().filter(char::is_ascii_uppercase).count();
            assert_eq!(caps, answer_caps);
        }
        assert_eq!(qa, generate_synthetic_qa(200, 9));
    }
}
