use std::collections::BTreeSet;

use proptest::prelude::*;
use xlda_core::augment::{
    build_dmt, build_monolingual, build_xlda_multi, build_xlda_pairwise, read_dataset,
    write_dataset,
};
use xlda_core::corpus::merge_all;
use xlda_core::{
    AlignedCorpus, AugmentedExample, Balance, CompositionPolicy, DirectionMode, Label, LanguageId,
    NliExample,
};

const POOL: [&str; 5] = ["en", "de", "fr", "hi", "sw"];

fn lang(s: &str) -> LanguageId {
    s.parse().unwrap()
}

/// `coverage[i][j]`: id `i` has a version in language `j`.
fn corpus_strategy() -> impl Strategy<Value = (usize, Vec<Vec<bool>>, Vec<u8>)> {
    (2usize..=5).prop_flat_map(|n_langs| {
        (1usize..=20).prop_flat_map(move |n_ids| {
            (
                Just(n_langs),
                prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.8), n_langs), n_ids),
                prop::collection::vec(0u8..3, n_ids),
            )
        })
    })
}

fn build(n_langs: usize, coverage: &[Vec<bool>], labels: &[u8]) -> (AlignedCorpus, Vec<LanguageId>) {
    let langs: Vec<LanguageId> = POOL[..n_langs].iter().map(|l| lang(l)).collect();
    let mut c = AlignedCorpus::new();
    for (i, row) in coverage.iter().enumerate() {
        let id = format!("id{i:02}");
        for (j, &has) in row.iter().enumerate() {
            if has {
                let l = &langs[j];
                let label = Label::from_index(labels[i] as usize).unwrap();
                let ex = NliExample::new(&id, format!("p {id} {l}"), format!("h {id} {l}"), label).unwrap();
                c.insert(l.clone(), ex).unwrap();
            }
        }
    }
    (c, langs)
}

type Key = (String, String, String, String, String, Label);

fn key(ex: &AugmentedExample) -> Key {
    (
        ex.source_id.clone(),
        ex.premise_lang.to_string(),
        ex.hypothesis_lang.to_string(),
        ex.premise.clone(),
        ex.hypothesis.clone(),
        ex.label,
    )
}

fn keys(examples: &[AugmentedExample]) -> Vec<Key> {
    let mut k: Vec<Key> = examples.iter().map(key).collect();
    k.sort();
    k
}

/// Brute-force enumeration straight from the coverage table.
fn oracle(
    coverage: &[Vec<bool>],
    labels: &[u8],
    langs: &[LanguageId],
    pairs: &[(usize, usize)],
) -> Vec<Key> {
    let mut out = BTreeSet::new();
    for (i, row) in coverage.iter().enumerate() {
        let id = format!("id{i:02}");
        for &(p, h) in pairs {
            if row[p] && row[h] {
                out.insert((
                    id.clone(),
                    langs[p].to_string(),
                    langs[h].to_string(),
                    format!("p {id} {}", langs[p]),
                    format!("h {id} {}", langs[h]),
                    Label::from_index(labels[i] as usize).unwrap(),
                ));
            }
        }
    }
    out.into_iter().collect()
}

fn both() -> CompositionPolicy {
    CompositionPolicy::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn monolingual_matches_oracle((n, cov, labels) in corpus_strategy()) {
        let (c, langs) = build(n, &cov, &labels);
        let t = 0;
        prop_assume!(c.has_language(&langs[t]));
        let ds = build_monolingual(&c, &langs[t]).unwrap();
        prop_assert_eq!(keys(&ds.examples), oracle(&cov, &labels, &langs, &[(t, t)]));
    }

    #[test]
    fn dmt_matches_oracle((n, cov, labels) in corpus_strategy()) {
        let (c, langs) = build(n, &cov, &labels);
        let present: Vec<usize> = (0..n).filter(|&j| c.has_language(&langs[j])).collect();
        prop_assume!(!present.is_empty());
        let chosen: Vec<LanguageId> = present.iter().map(|&j| langs[j].clone()).collect();
        let ds = build_dmt(&c, &chosen, &both()).unwrap();
        let pairs: Vec<(usize, usize)> = present.iter().map(|&j| (j, j)).collect();
        prop_assert_eq!(keys(&ds.examples), oracle(&cov, &labels, &langs, &pairs));
        prop_assert!(ds.examples.iter().all(|e| !e.is_cross_lingual()));
    }

    #[test]
    fn pairwise_matches_oracle((n, cov, labels) in corpus_strategy(), mono in any::<bool>()) {
        let (c, langs) = build(n, &cov, &labels);
        prop_assume!(c.has_language(&langs[0]) && c.has_language(&langs[1]));
        let policy = CompositionPolicy { include_monolingual: mono, ..both() };
        let ds = build_xlda_pairwise(&c, &langs[0], &langs[1], &policy).unwrap();
        let mut expected = oracle(&cov, &labels, &langs, &[(0, 1), (1, 0)]);
        if mono {
            let with_both: BTreeSet<String> = cov
                .iter()
                .enumerate()
                .filter(|(_, r)| r[0] && r[1])
                .map(|(i, _)| format!("id{i:02}"))
                .collect();
            expected.extend(
                oracle(&cov, &labels, &langs, &[(0, 0)])
                    .into_iter()
                    .filter(|k| with_both.contains(&k.0)),
            );
            expected.sort();
        } else {
            prop_assert!(ds.is_cross_only());
        }
        prop_assert_eq!(keys(&ds.examples), expected);
    }

    #[test]
    fn single_random_picks_one_direction((n, cov, labels) in corpus_strategy(), seed in any::<u64>()) {
        let (c, langs) = build(n, &cov, &labels);
        prop_assume!(c.has_language(&langs[0]) && c.has_language(&langs[1]));
        let policy = CompositionPolicy {
            direction_mode: DirectionMode::SingleRandom,
            seed: Some(seed),
            ..both()
        };
        let ds = build_xlda_pairwise(&c, &langs[0], &langs[1], &policy).unwrap();
        let full = oracle(&cov, &labels, &langs, &[(0, 1), (1, 0)]);
        prop_assert_eq!(ds.len() * 2, full.len());
        let got = keys(&ds.examples);
        prop_assert!(got.iter().all(|k| full.contains(k)));
        let ids: BTreeSet<&String> = got.iter().map(|k| &k.0).collect();
        prop_assert_eq!(ids.len(), got.len());
    }

    #[test]
    fn multi_matches_oracle((n, cov, labels) in corpus_strategy()) {
        let (c, langs) = build(n, &cov, &labels);
        let present: Vec<usize> = (1..n).filter(|&j| c.has_language(&langs[j])).collect();
        prop_assume!(c.has_language(&langs[0]) && !present.is_empty());
        let augs: Vec<LanguageId> = present.iter().map(|&j| langs[j].clone()).collect();
        let ds = build_xlda_multi(&c, &langs[0], &augs, &both()).unwrap();
        let pairs: Vec<(usize, usize)> = present.iter().flat_map(|&j| [(0, j), (j, 0)]).collect();
        prop_assert_eq!(keys(&ds.examples), oracle(&cov, &labels, &langs, &pairs));
        prop_assert!(ds.is_cross_only());
        // augmentor-major order
        let order: Vec<usize> = ds
            .examples
            .iter()
            .map(|e| {
                let other = if e.premise_lang == langs[0] { &e.hypothesis_lang } else { &e.premise_lang };
                augs.iter().position(|a| a == other).unwrap()
            })
            .collect();
        prop_assert!(order.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn uniform_sample_is_a_subset((n, cov, labels) in corpus_strategy(), seed in any::<u64>(), frac in 0.0f64..=1.0) {
        let (c, langs) = build(n, &cov, &labels);
        prop_assume!(c.has_language(&langs[0]) && c.has_language(&langs[1]));
        let full = build_xlda_pairwise(&c, &langs[0], &langs[1], &both()).unwrap();
        let size = (full.len() as f64 * frac).floor() as usize;
        let policy = CompositionPolicy {
            per_augmentor_balance: Balance::UniformSample,
            sample_size: Some(size),
            seed: Some(seed),
            ..both()
        };
        let ds = build_xlda_pairwise(&c, &langs[0], &langs[1], &policy).unwrap();
        prop_assert_eq!(ds.len(), size);
        let mut it = full.examples.iter();
        prop_assert!(ds.examples.iter().all(|e| it.any(|f| f == e)));
    }

    #[test]
    fn dataset_round_trip((n, cov, labels) in corpus_strategy()) {
        let (c, langs) = build(n, &cov, &labels);
        prop_assume!(c.has_language(&langs[0]) && c.has_language(&langs[1]));
        let ds = build_xlda_pairwise(&c, &langs[0], &langs[1], &both()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        write_dataset(&ds, &path).unwrap();
        prop_assert_eq!(read_dataset(&path).unwrap(), ds);
    }

    #[test]
    fn merge_commutes((n, cov, labels) in corpus_strategy()) {
        let (c, langs) = build(n, &cov, &labels);
        let parts: Vec<AlignedCorpus> = langs
            .iter()
            .map(|l| {
                let mut part = AlignedCorpus::new();
                for (_, versions) in c.iter() {
                    if let Some(ex) = versions.get(l) {
                        part.insert(l.clone(), ex.clone()).unwrap();
                    }
                }
                part
            })
            .collect();
        let forward = merge_all(parts.clone()).unwrap();
        let backward = merge_all(parts.into_iter().rev()).unwrap();
        prop_assert_eq!(&forward, &backward);
        prop_assert_eq!(forward, c);
    }
}

#[test]
fn label_conflict_is_reported() {
    let mut c = AlignedCorpus::new();
    c.insert(lang("de"), NliExample::new("x", "p", "h", Label::Neutral).unwrap()).unwrap();
    c.insert(lang("fr"), NliExample::new("x", "p", "h", Label::Contradiction).unwrap()).unwrap();
    let err = build_xlda_pairwise(&c, &lang("de"), &lang("fr"), &both()).unwrap_err();
    assert!(err.to_string().contains("de=neutral"), "{err}");
}
