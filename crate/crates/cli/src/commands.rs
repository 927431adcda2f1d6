use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::json;
use xlda_core::augment::{
    build_dmt, build_monolingual, build_xlda_multi, build_xlda_pairwise, write_dataset,
};
use xlda_core::corpus::{
    load_nli_jsonl, load_nli_jsonl_lenient, load_nli_tsv, load_squad_json, merge_all,
    merge_positional, validate, write_nli_jsonl, write_squad_json, TsvColumns,
};
use xlda_core::harness::{
    generate_synthetic_corpus, generate_synthetic_qa, greedy_curve_run, pairwise_grid, LabelRule,
    SyntheticCorpusSpec,
};
use xlda_core::lang::parse_language_list;
use xlda_core::report::{emit_bleu_scatter, emit_heatmap_csv, BleuTable, RunManifest};
use xlda_core::selection::{load_matrix_csv, write_curve_csv, write_matrix_csv, write_schedule_json};
use xlda_core::span_align::{
    align_qa_dataset, write_aligned_jsonl, write_recovery_report, AlignConfig,
    ChunkShuffleTranslator, IdentityTranslator, SubprocessTranslator, Translator,
    WordCipherTranslator,
};
use xlda_core::{AlignedCorpus, LanguageId};

use crate::cli::*;
use crate::config::{resolve_common, resolve_policy, resolve_trainer, split_command, usage, Resolved};

const BUNDLED_BLEU: &str = include_str!("../../../data/nmt_bleu.csv");

fn lang(s: &str) -> anyhow::Result<LanguageId> {
    match s.parse() {
        Ok(l) => Ok(l),
        Err(e) => usage(format!("{e}")),
    }
}

fn langs(s: &str) -> anyhow::Result<Vec<LanguageId>> {
    match parse_language_list(s) {
        Ok(l) if !l.is_empty() => Ok(l),
        Ok(_) => usage("empty language list"),
        Err(e) => usage(format!("{e}")),
    }
}

fn prepare(common: &Common) -> anyhow::Result<Resolved> {
    let r = resolve_common(common)?;
    fs::create_dir_all(&common.out_dir)
        .with_context(|| format!("creating {}", common.out_dir.display()))?;
    Ok(r)
}

fn out(common: &Common, name: &str) -> PathBuf {
    common.out_dir.join(name)
}

fn manifest<C: Serialize>(
    common: &Common,
    config: &C,
    seed: Option<u64>,
    inputs: &[&Path],
    extra: serde_json::Value,
) -> anyhow::Result<()> {
    let mut m = RunManifest::new(std::env::args().collect(), config, seed, inputs)?;
    m.extra = extra;
    m.write(&out(common, "manifest.json"))?;
    Ok(())
}

pub fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Augment(a) => augment(a),
        Command::AlignSquad(a) => align_squad(a),
        Command::Pairwise(a) => pairwise(a),
        Command::Greedy(a) => greedy(a),
        Command::Report(a) => report(a),
        Command::Synth(a) => synth(a),
    }
}

fn split_input(s: &str) -> anyhow::Result<(Option<LanguageId>, PathBuf)> {
    match s.split_once('=') {
        Some((l, p)) => Ok((Some(lang(l)?), PathBuf::from(p))),
        None => Ok((None, PathBuf::from(s))),
    }
}

fn ingest(a: IngestArgs) -> anyhow::Result<()> {
    prepare(&a.common)?;
    let inputs = a
        .inputs
        .iter()
        .map(|s| split_input(s))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let corpus = match a.format {
        InputFormat::Jsonl => {
            let mut parts = Vec::new();
            for (l, p) in &inputs {
                let part = if a.lenient {
                    load_nli_jsonl_lenient(p, l.as_ref())?
                } else {
                    load_nli_jsonl(p, l.as_ref())?
                };
                parts.push(part);
            }
            merge_all(parts)?
        }
        InputFormat::Tsv => {
            let columns = TsvColumns {
                id: a.id_column.clone(),
                premise: a.premise_column.clone(),
                hypothesis: a.hypothesis_column.clone(),
                label: a.label_column.clone(),
            };
            let mut parts = Vec::new();
            for (l, p) in &inputs {
                let Some(l) = l else {
                    return usage(format!("TSV input {} needs a language: lang=path", p.display()));
                };
                parts.push(load_nli_tsv(p, l, &columns)?);
            }
            if columns.id.is_some() {
                merge_all(parts)?
            } else {
                merge_positional(parts)?
            }
        }
    };
    if !a.lenient {
        corpus.check_labels()?;
    }
    let report = validate(&corpus);
    write_nli_jsonl(&corpus, &out(&a.common, "corpus.jsonl"))?;
    write_json(&report, &out(&a.common, "validation.json"))?;
    eprintln!(
        "ingested {} ids over {} languages ({} missing, {} label mismatches, {} duplicates)",
        corpus.len(),
        corpus.n_languages(),
        report.missing.len(),
        report.label_mismatches.len(),
        report.duplicates.len()
    );
    let paths: Vec<&Path> = inputs.iter().map(|(_, p)| p.as_path()).collect();
    let config = json!({"format": format!("{:?}", a.format).to_lowercase(), "lenient": a.lenient});
    manifest(&a.common, &config, None, &paths, serde_json::Value::Null)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_corpus(path: &Path) -> anyhow::Result<AlignedCorpus> {
    Ok(load_nli_jsonl_lenient(path, None)?)
}

fn cmd_validate(a: ValidateArgs) -> anyhow::Result<()> {
    prepare(&a.common)?;
    let corpus = load_corpus(&a.corpus)?;
    let report = validate(&corpus);
    write_json(&report, &out(&a.common, "validation.json"))?;
    manifest(&a.common, &json!({"strict": a.strict}), None, &[&a.corpus], serde_json::Value::Null)?;
    let problems = report.missing.len() + report.label_mismatches.len() + report.duplicates.len();
    for (l, n) in &report.per_language_counts {
        eprintln!("{l}: {n} examples");
    }
    eprintln!(
        "{} missing, {} label mismatches, {} duplicates",
        report.missing.len(),
        report.label_mismatches.len(),
        report.duplicates.len()
    );
    if a.strict && problems > 0 {
        anyhow::bail!("{problems} validation problems");
    }
    Ok(())
}

fn need<'a>(v: &'a Option<String>, flag: &str, setting: &str) -> anyhow::Result<&'a str> {
    match v {
        Some(s) => Ok(s),
        None => usage(format!("--setting {setting} needs {flag}")),
    }
}

fn augment(a: AugmentArgs) -> anyhow::Result<()> {
    let r = prepare(&a.common)?;
    let policy = resolve_policy(&a.policy, &r.config, r.seed)?;
    let corpus = load_corpus(&a.corpus)?;
    let ds = match a.setting {
        SettingArg::Mono => build_monolingual(&corpus, &lang(need(&a.target, "--target", "mono")?)?)?,
        SettingArg::Dmt => build_dmt(&corpus, &langs(need(&a.languages, "--languages", "dmt")?)?, &policy)?,
        SettingArg::XldaPair => build_xlda_pairwise(
            &corpus,
            &lang(need(&a.target, "--target", "xlda-pair")?)?,
            &lang(need(&a.augmentor, "--augmentor", "xlda-pair")?)?,
            &policy,
        )?,
        SettingArg::XldaMulti => build_xlda_multi(
            &corpus,
            &lang(need(&a.target, "--target", "xlda-multi")?)?,
            &langs(need(&a.languages, "--languages", "xlda-multi")?)?,
            &policy,
        )?,
    };
    write_dataset(&ds, &out(&a.common, "dataset.jsonl"))?;
    eprintln!("wrote {} examples ({} ids skipped)", ds.len(), ds.meta.skipped);
    manifest(&a.common, &ds.meta, Some(r.seed), &[&a.corpus], serde_json::Value::Null)
}

fn align_squad(a: AlignSquadArgs) -> anyhow::Result<()> {
    let r = prepare(&a.common)?;
    let dest = lang(&a.dest)?;
    let load = load_squad_json(&a.input)?;
    for s in &load.skipped {
        eprintln!("skipped {}: {}", s.id, s.reason);
    }
    let translator: Box<dyn Translator> = match (&a.translator, &a.translator_cmd) {
        (_, Some(cmd)) => {
            let argv = split_command(cmd);
            if argv.is_empty() {
                return usage("--translator-cmd is empty");
            }
            Box::new(
                SubprocessTranslator::spawn(&argv)
                    .with_context(|| format!("starting translator {cmd:?}"))?,
            )
        }
        (Some(TranslatorArg::Identity) | None, None) => Box::new(IdentityTranslator),
        (Some(TranslatorArg::WordCipher), None) => Box::new(WordCipherTranslator::new(r.seed)),
        (Some(TranslatorArg::ChunkShuffler), None) => Box::new(ChunkShuffleTranslator::new(
            &a.marker,
            r.seed,
            load.examples.iter().map(|e| e.answer_text.as_str()),
        )),
    };
    let config = AlignConfig {
        source: lang(&a.source)?,
        marker: a.marker.clone(),
        include_marker_phase: a.include_marker_phase,
        jobs: r.jobs,
    };
    let output = align_qa_dataset(&load.examples, translator.as_ref(), &dest, &config)?;
    let training: Vec<_> = output.training_examples().collect();
    write_aligned_jsonl(&training, &out(&a.common, "aligned.jsonl"))?;
    write_recovery_report(std::slice::from_ref(&output.stats), &out(&a.common, "recovery.csv"))?;
    let s = &output.stats;
    eprintln!(
        "{}: {} examples, exact {:.3}, cumulative {:.3}, kept {}",
        s.dest_lang,
        s.total,
        s.exact_rate,
        s.cumulative_rate,
        training.len()
    );
    let cfg = json!({
        "dest": dest,
        "source": config.source,
        "translator": translator.name(),
        "marker": config.marker,
        "include_marker_phase": config.include_marker_phase,
    });
    manifest(&a.common, &cfg, Some(r.seed), &[&a.input], json!({"skipped": load.skipped.len()}))
}

fn pairwise(a: PairwiseArgs) -> anyhow::Result<()> {
    let r = prepare(&a.common)?;
    let spec = resolve_trainer(&a.trainer, &r.config, r.seed)?;
    let policy = resolve_policy(&a.policy, &r.config, r.seed)?;
    let train = load_corpus(&a.train)?;
    let eval = load_corpus(&a.eval)?;
    let languages = match &a.languages {
        Some(s) => langs(s)?,
        None => train.languages().cloned().collect(),
    };
    let run = pairwise_grid(&train, &eval, &languages, &spec, &policy, r.jobs)?;
    write_matrix_csv(&run.matrix, &out(&a.common, "matrix.csv"))?;
    emit_heatmap_csv(&run.matrix, &out(&a.common, "heatmap.csv"))?;
    let mut cells = String::from("target,augmentor,seed,train_size,correct,n_eval,accuracy\n");
    for c in &run.cells {
        cells.push_str(&format!(
            "{},{},{},{},{},{},{:.6}\n",
            c.cell.target,
            c.cell.augmentor,
            c.seed,
            c.result.train_size,
            c.result.correct,
            c.result.n_eval,
            c.result.accuracy
        ));
    }
    fs::write(out(&a.common, "cells.csv"), cells)?;
    eprintln!("{}x{} matrix written", languages.len(), languages.len());
    let cfg = json!({"spec": spec, "policy": policy, "languages": languages});
    let extra = json!({
        "cells": run.cells.iter().map(|c| json!({
            "target": c.cell.target,
            "augmentor": c.cell.augmentor,
            "seed": c.seed,
            "wall_ms": c.wall_ms,
            "spec_digest": c.result.spec_digest,
        })).collect::<Vec<_>>(),
    });
    manifest(&a.common, &cfg, Some(r.seed), &[&a.train, &a.eval], extra)
}

fn greedy(a: GreedyArgs) -> anyhow::Result<()> {
    let r = prepare(&a.common)?;
    let spec = resolve_trainer(&a.trainer, &r.config, r.seed)?;
    let policy = resolve_policy(&a.policy, &r.config, r.seed)?;
    let train = load_corpus(&a.train)?;
    let eval = load_corpus(&a.eval)?;
    let matrix = load_matrix_csv(&a.matrix)?;
    let targets = match &a.target {
        Some(s) => langs(s)?,
        None => matrix.languages().to_vec(),
    };
    let mut points = Vec::new();
    for t in &targets {
        let run = greedy_curve_run(&train, &eval, t, &matrix, &spec, &policy, r.jobs)?;
        write_schedule_json(&run.schedule, &out(&a.common, &format!("schedule_{t}.json")))?;
        write_curve_csv(&run.curve, &run.schedule, &out(&a.common, &format!("curve_{t}.csv")))?;
        eprintln!(
            "{t}: cut {}, best k {} ({:.4})",
            run.schedule.cut,
            run.curve.best_k,
            run.curve.points[run.curve.best_k].accuracy
        );
        points.extend(run.points.iter().map(|p| {
            json!({"target": t, "k": p.k, "seed": p.seed, "wall_ms": p.wall_ms})
        }));
    }
    let cfg = json!({"spec": spec, "policy": policy, "targets": targets});
    manifest(
        &a.common,
        &cfg,
        Some(r.seed),
        &[&a.train, &a.eval, &a.matrix],
        json!({"points": points}),
    )
}

fn report(a: ReportArgs) -> anyhow::Result<()> {
    prepare(&a.common)?;
    let matrix = load_matrix_csv(&a.matrix)?;
    let bleu = match (&a.bleu, &a.bleu_pairs) {
        (Some(p), _) => BleuTable::load_csv(p)?,
        (None, Some(s)) => BleuTable::parse_pairs(s)?,
        (None, None) => BleuTable::read_csv(BUNDLED_BLEU.as_bytes())?,
    };
    if !matrix.is_empty() {
        emit_heatmap_csv(&matrix, &out(&a.common, "heatmap.csv"))?;
    }
    let warnings = emit_bleu_scatter(&matrix, &bleu, &out(&a.common, "bleu_scatter.csv"))?;
    let mut inputs: Vec<&Path> = vec![&a.matrix];
    if let Some(p) = &a.bleu {
        inputs.push(p);
    }
    let cfg = json!({"bleu": bleu.iter().map(|(l, s)| (l.to_string(), s)).collect::<Vec<_>>()});
    manifest(&a.common, &cfg, None, &inputs, json!({"bleu_warnings": warnings}))
}

fn synth(a: SynthArgs) -> anyhow::Result<()> {
    let r = prepare(&a.common)?;
    let spec = SyntheticCorpusSpec {
        n_ids: a.n_ids,
        n_eval_ids: a.n_eval_ids,
        languages: langs(&a.languages)?,
        vocab_size: a.vocab_size,
        cipher_seed: a.cipher_seed.unwrap_or(r.seed),
        label_rule: match a.label_rule {
            LabelRuleArg::TokenScores => LabelRule::TokenScores,
            LabelRuleArg::Overlap => LabelRule::Overlap,
        },
        ..SyntheticCorpusSpec::default()
    };
    if let Err(e) = spec.check() {
        return usage(e.to_string());
    }
    let (train, eval) = generate_synthetic_corpus(&spec)?;
    write_nli_jsonl(&train, &out(&a.common, "train.jsonl"))?;
    write_nli_jsonl(&eval, &out(&a.common, "eval.jsonl"))?;
    if let Some(n) = a.qa {
        write_squad_json(&generate_synthetic_qa(n, r.seed), &out(&a.common, "squad.json"))?;
    }
    eprintln!("{} train ids, {} eval ids, {} languages", train.len(), eval.len(), spec.languages.len());
    manifest(&a.common, &spec, Some(r.seed), &[], json!({"qa": a.qa}))
}
