//! Training-set construction: monolingual, disjoint multilingual (DMT) and
//! cross-lingual (XLDA) settings.
//!
//! An XLDA example keeps one field of an aligned example in the target
//! language and swaps the other field for its version in an augmentor
//! language. DMT mixes languages across examples but never within one.
//!
//! All randomness is keyed by `(seed, example id)` so the output does not
//! depend on iteration order or on how construction is parallelized.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{AlignedCorpus, Label, NliExample};
use crate::error::{Error, Result};
use crate::lang::LanguageId;
use crate::seed::keyed_draw;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Monolingual,
    Dmt,
    Xlda,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionMode {
    /// Emit `(P_target, H_aug)` and `(P_aug, H_target)` for every id.
    #[default]
    Both,
    /// Emit one of the two, drawn per id.
    SingleRandom,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Balance {
    /// Keep the whole pool.
    #[default]
    All,
    /// Draw `sample_size` examples uniformly without replacement.
    UniformSample,
}

/// How cross-lingual examples are composed. Recorded verbatim in every
/// dataset header so runs are self-describing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompositionPolicy {
    pub direction_mode: DirectionMode,
    pub include_monolingual: bool,
    pub per_augmentor_balance: Balance,
    pub sample_size: Option<usize>,
    pub seed: Option<u64>,
}

impl CompositionPolicy {
    pub fn check(&self) -> Result<()> {
        if self.seed.is_none() {
            if self.direction_mode == DirectionMode::SingleRandom {
                return Err(Error::InvalidArgument(
                    "direction mode single_random requires a seed".into(),
                ));
            }
            if self.per_augmentor_balance == Balance::UniformSample {
                return Err(Error::InvalidArgument(
                    "balance uniform_sample requires a seed".into(),
                ));
            }
        }
        if self.per_augmentor_balance == Balance::UniformSample && self.sample_size.is_none() {
            return Err(Error::InvalidArgument(
                "balance uniform_sample requires a sample size".into(),
            ));
        }
        Ok(())
    }

    fn seed_or_zero(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AugmentedExample {
    pub source_id: String,
    pub premise: String,
    pub premise_lang: LanguageId,
    pub hypothesis: String,
    pub hypothesis_lang: LanguageId,
    pub label: Label,
}

impl AugmentedExample {
    pub fn is_cross_lingual(&self) -> bool {
        self.premise_lang != self.hypothesis_lang
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub setting: Setting,
    pub target: LanguageId,
    pub augmentors: Vec<LanguageId>,
    pub policy: CompositionPolicy,
    /// Ids (or `(id, language)` slots for DMT) skipped for lack of coverage.
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugmentedDataset {
    pub meta: DatasetMeta,
    pub examples: Vec<AugmentedExample>,
}

impl AugmentedDataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn setting(&self) -> Setting {
        self.meta.setting
    }

    pub fn target(&self) -> &LanguageId {
        &self.meta.target
    }

    /// True when every example pairs two different languages.
    pub fn is_cross_only(&self) -> bool {
        self.examples.iter().all(AugmentedExample::is_cross_lingual)
    }
}

fn require_language(corpus: &AlignedCorpus, lang: &LanguageId) -> Result<()> {
    if corpus.has_language(lang) {
        Ok(())
    } else {
        Err(Error::UnknownLanguage(lang.clone()))
    }
}

fn combine(
    id: &str,
    premise: (&LanguageId, &NliExample),
    hypothesis: (&LanguageId, &NliExample),
) -> Result<AugmentedExample> {
    let (p_lang, p_ex) = premise;
    let (h_lang, h_ex) = hypothesis;
    if p_ex.label != h_ex.label {
        return Err(Error::LabelConflict {
            id: id.to_string(),
            labels: vec![(p_lang.clone(), p_ex.label), (h_lang.clone(), h_ex.label)],
        });
    }
    Ok(AugmentedExample {
        source_id: id.to_string(),
        premise: p_ex.premise.clone(),
        premise_lang: p_lang.clone(),
        hypothesis: h_ex.hypothesis.clone(),
        hypothesis_lang: h_lang.clone(),
        label: p_ex.label,
    })
}

fn monolingual_example(id: &str, lang: &LanguageId, ex: &NliExample) -> AugmentedExample {
    AugmentedExample {
        source_id: id.to_string(),
        premise: ex.premise.clone(),
        premise_lang: lang.clone(),
        hypothesis: ex.hypothesis.clone(),
        hypothesis_lang: lang.clone(),
        label: ex.label,
    }
}

/// Only the target-language version of each id, sorted by id.
pub fn build_monolingual(corpus: &AlignedCorpus, target: &LanguageId) -> Result<AugmentedDataset> {
    require_language(corpus, target)?;
    let mut examples = Vec::with_capacity(corpus.len());
    let mut skipped = 0;
    for (id, versions) in corpus.iter() {
        match versions.get(target) {
            Some(ex) => examples.push(monolingual_example(id, target, ex)),
            None => skipped += 1,
        }
    }
    Ok(AugmentedDataset {
        meta: DatasetMeta {
            setting: Setting::Monolingual,
            target: target.clone(),
            augmentors: Vec::new(),
            policy: CompositionPolicy::default(),
            skipped,
        },
        examples,
    })
}

/// Every covered `(id, language)` pair as a monolingual example, ordered by
/// id, then by `languages` as given. The first language is recorded as the
/// dataset target.
pub fn build_dmt(
    corpus: &AlignedCorpus,
    languages: &[LanguageId],
    policy: &CompositionPolicy,
) -> Result<AugmentedDataset> {
    policy.check()?;
    let Some(first) = languages.first() else {
        return Err(Error::InvalidArgument("DMT needs at least one language".into()));
    };
    check_distinct(languages)?;
    for lang in languages {
        require_language(corpus, lang)?;
    }
    let mut pool = Vec::new();
    let mut skipped = 0;
    for (id, versions) in corpus.iter() {
        for lang in languages {
            match versions.get(lang) {
                Some(ex) => pool.push(monolingual_example(id, lang, ex)),
                None => skipped += 1,
            }
        }
    }
    let examples = apply_balance(pool, policy)?;
    Ok(AugmentedDataset {
        meta: DatasetMeta {
            setting: Setting::Dmt,
            target: first.clone(),
            augmentors: languages.to_vec(),
            policy: *policy,
            skipped,
        },
        examples,
    })
}

/// Cross-lingual pool for one `(target, augmentor)` pair before balancing.
fn pairwise_pool(
    corpus: &AlignedCorpus,
    target: &LanguageId,
    augmentor: &LanguageId,
    policy: &CompositionPolicy,
) -> Result<(Vec<AugmentedExample>, usize)> {
    let seed = policy.seed_or_zero();
    let mut pool = Vec::new();
    let mut skipped = 0;
    for (id, versions) in corpus.iter() {
        let (Some(t_ex), Some(a_ex)) = (versions.get(target), versions.get(augmentor)) else {
            skipped += 1;
            continue;
        };
        let t = (target, t_ex);
        let a = (augmentor, a_ex);
        match policy.direction_mode {
            DirectionMode::Both => {
                pool.push(combine(id, t, a)?);
                pool.push(combine(id, a, t)?);
            }
            DirectionMode::SingleRandom => {
                if keyed_draw(seed, ["direction", id]) & 1 == 0 {
                    pool.push(combine(id, t, a)?);
                } else {
                    pool.push(combine(id, a, t)?);
                }
            }
        }
        if policy.include_monolingual {
            pool.push(monolingual_example(id, target, t_ex));
        }
    }
    Ok((pool, skipped))
}

fn check_pair(corpus: &AlignedCorpus, target: &LanguageId, augmentor: &LanguageId) -> Result<()> {
    if target == augmentor {
        return Err(Error::InvalidArgument(format!(
            "augmentor must differ from the target ({target})"
        )));
    }
    require_language(corpus, target)?;
    require_language(corpus, augmentor)
}

/// XLDA training set for a single augmentor. Ids not covered in both
/// languages are skipped and counted.
pub fn build_xlda_pairwise(
    corpus: &AlignedCorpus,
    target: &LanguageId,
    augmentor: &LanguageId,
    policy: &CompositionPolicy,
) -> Result<AugmentedDataset> {
    policy.check()?;
    check_pair(corpus, target, augmentor)?;
    let (pool, skipped) = pairwise_pool(corpus, target, augmentor, policy)?;
    let examples = apply_balance(pool, policy)?;
    Ok(AugmentedDataset {
        meta: DatasetMeta {
            setting: Setting::Xlda,
            target: target.clone(),
            augmentors: vec![augmentor.clone()],
            policy: *policy,
            skipped,
        },
        examples,
    })
}

/// XLDA with several augmentors: the per-augmentor pools concatenated in
/// augmentor order, de-duplicated on `(source_id, premise_lang,
/// hypothesis_lang)`, then balanced.
pub fn build_xlda_multi(
    corpus: &AlignedCorpus,
    target: &LanguageId,
    augmentors: &[LanguageId],
    policy: &CompositionPolicy,
) -> Result<AugmentedDataset> {
    policy.check()?;
    if augmentors.is_empty() {
        return Err(Error::InvalidArgument("augmentor list is empty".into()));
    }
    check_distinct(augmentors)?;
    let mut seen = HashSet::new();
    let mut pool = Vec::new();
    let mut skipped = 0;
    for augmentor in augmentors {
        check_pair(corpus, target, augmentor)?;
        let (part, n_skipped) = pairwise_pool(corpus, target, augmentor, policy)?;
        skipped += n_skipped;
        for ex in part {
            let key = (
                ex.source_id.clone(),
                ex.premise_lang.clone(),
                ex.hypothesis_lang.clone(),
            );
            if seen.insert(key) {
                pool.push(ex);
            }
        }
    }
    let examples = apply_balance(pool, policy)?;
    Ok(AugmentedDataset {
        meta: DatasetMeta {
            setting: Setting::Xlda,
            target: target.clone(),
            augmentors: augmentors.to_vec(),
            policy: *policy,
            skipped,
        },
        examples,
    })
}

fn check_distinct(langs: &[LanguageId]) -> Result<()> {
    let mut seen = HashSet::new();
    for lang in langs {
        if !seen.insert(lang) {
            return Err(Error::InvalidArgument(format!("language {lang} listed twice")));
        }
    }
    Ok(())
}

fn apply_balance(pool: Vec<AugmentedExample>, policy: &CompositionPolicy) -> Result<Vec<AugmentedExample>> {
    match policy.per_augmentor_balance {
        Balance::All => Ok(pool),
        Balance::UniformSample => {
            let size = policy.sample_size.unwrap_or_default();
            sample_uniform(pool, size, policy.seed_or_zero())
        }
    }
}

/// Uniform sample without replacement that keeps the pool's relative order.
///
/// Each example gets a key drawn from `(seed, id, premise_lang,
/// hypothesis_lang)`; the `size` smallest keys win. The chosen subset is
/// therefore independent of pool order.
fn sample_uniform(pool: Vec<AugmentedExample>, size: usize, seed: u64) -> Result<Vec<AugmentedExample>> {
    if size > pool.len() {
        return Err(Error::InvalidArgument(format!(
            "sample size {size} exceeds the pool of {} examples",
            pool.len()
        )));
    }
    let mut keyed: Vec<(u64, usize)> = pool
        .iter()
        .enumerate()
        .map(|(i, ex)| {
            let key = keyed_draw(
                seed,
                [
                    "sample",
                    ex.source_id.as_str(),
                    ex.premise_lang.as_str(),
                    ex.hypothesis_lang.as_str(),
                ],
            );
            (key, i)
        })
        .collect();
    keyed.sort_unstable();
    let mut chosen: Vec<usize> = keyed[..size].iter().map(|&(_, i)| i).collect();
    chosen.sort_unstable();
    let mut pool: Vec<Option<AugmentedExample>> = pool.into_iter().map(Some).collect();
    Ok(chosen.into_iter().filter_map(|i| pool[i].take()).collect())
}

// ---------------------------------------------------------------------------
// Serialization

#[derive(Serialize, Deserialize)]
struct MetaRecord {
    #[serde(rename = "_meta")]
    meta: DatasetMeta,
}

/// Writes a header record `{"_meta": {...}}` followed by one example per
/// line. Output bytes depend only on the dataset.
pub fn write_dataset(ds: &AugmentedDataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    serde_json::to_writer(&mut out, &MetaRecord { meta: ds.meta.clone() })?;
    out.write_all(b"\n").map_err(io_err)?;
    for ex in &ds.examples {
        serde_json::to_writer(&mut out, ex)?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_dataset(path: &Path) -> Result<AugmentedDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let malformed = |line: usize, e: serde_json::Error| Error::MalformedLine {
        line,
        message: e.to_string(),
    };
    let meta = match lines.next() {
        Some((_, line)) => {
            let line = line.map_err(|e| Error::io(path, e))?;
            serde_json::from_str::<MetaRecord>(&line)
                .map_err(|e| malformed(1, e))?
                .meta
        }
        None => return Err(Error::Schema("dataset file has no `_meta` header".into())),
    };
    let mut examples = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        examples.push(serde_json::from_str(&line).map_err(|e| malformed(idx + 1, e))?);
    }
    Ok(AugmentedDataset { meta, examples })
}
