use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use xlda_core::augment::{build_dmt, build_xlda_multi, build_xlda_pairwise};
use xlda_core::harness::linear::FeatureHasher;
use xlda_core::harness::{generate_synthetic_corpus, generate_synthetic_qa, SyntheticCorpusSpec};
use xlda_core::selection::{greedy_schedule, matrix_from_accuracies};
use xlda_core::span_align::{align_qa_dataset, AlignConfig, ChunkShuffleTranslator, WordCipherTranslator};
use xlda_core::{AlignedCorpus, CompositionPolicy, LanguageId, TrainerSpec};

fn lang(code: &str) -> LanguageId {
    LanguageId::new(code).unwrap()
}

fn corpus(n_ids: usize) -> (AlignedCorpus, AlignedCorpus) {
    let spec = SyntheticCorpusSpec {
        n_ids,
        n_eval_ids: 200,
        ..SyntheticCorpusSpec::default()
    };
    generate_synthetic_corpus(&spec).unwrap()
}

fn sets(c: &mut Criterion) {
    let mut g = c.benchmark_group("sets");
    for n in [500, 5000] {
        let (train, _) = corpus(n);
        let policy = CompositionPolicy::default();
        let langs: Vec<_> = train.languages().cloned().collect();
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::new("pairwise", n), &train, |b, t| {
            b.iter(|| build_xlda_pairwise(t, &lang("x1"), &lang("x2"), &policy).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("multi", n), &train, |b, t| {
            b.iter(|| build_xlda_multi(t, &lang("x1"), &langs[1..], &policy).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("dmt", n), &train, |b, t| {
            b.iter(|| build_dmt(t, &langs, &policy).unwrap())
        });
    }
    g.finish();
}

fn greedy(c: &mut Criterion) {
    let langs: Vec<_> = (0..15).map(|i| lang(&format!("l{i:02}"))).collect();
    let n = langs.len();
    let mut acc = BTreeMap::new();
    for (i, t) in langs.iter().enumerate() {
        for (j, a) in langs.iter().enumerate() {
            acc.insert((t.clone(), a.clone()), 0.5 + ((i * n + j) * 7919 % 101) as f64 / 1000.0);
        }
    }
    let m = matrix_from_accuracies(&langs, &acc).unwrap();
    c.bench_function("greedy/15x15 all rows", |b| {
        b.iter(|| {
            for t in &langs {
                black_box(greedy_schedule(&m, t).unwrap());
            }
        })
    });
}

fn featurize(c: &mut Criterion) {
    let (train, _) = corpus(500);
    let ds = build_xlda_pairwise(&train, &lang("x1"), &lang("x2"), &CompositionPolicy::default()).unwrap();
    let spec = TrainerSpec::default();
    let hasher = FeatureHasher::new(spec.feature_dim, &spec.ngram_orders).unwrap();
    let mut g = c.benchmark_group("featurize");
    g.throughput(Throughput::Elements(ds.examples.len() as u64));
    g.bench_function("uni+bigram", |b| {
        b.iter(|| ds.examples.iter().map(|e| hasher.example_features(e).len()).sum::<usize>())
    });
    g.finish();
}

fn span(c: &mut Criterion) {
    let qa = generate_synthetic_qa(500, 0);
    let config = AlignConfig {
        include_marker_phase: true,
        ..AlignConfig::default()
    };
    let de = lang("de");
    let cipher = WordCipherTranslator::new(0);
    let shuffler = ChunkShuffleTranslator::new(&config.marker, 0, qa.iter().map(|q| q.answer_text.as_str()));
    let mut g = c.benchmark_group("span");
    g.throughput(Throughput::Elements(qa.len() as u64));
    g.bench_function("exact/word-cipher", |b| b.iter(|| align_qa_dataset(&qa, &cipher, &de, &config).unwrap()));
    g.bench_function("marker/chunk-shuffler", |b| {
        b.iter(|| align_qa_dataset(&qa, &shuffler, &de, &config).unwrap())
    });
    g.finish();
}

criterion_group!(benches, sets, greedy, featurize, span);
criterion_main!(benches);
