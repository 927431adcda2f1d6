//! Pairwise grids and greedy curves.
//!
//! Each grid cell and curve point derives its seed from its position
//! (`global seed ^ stable_hash(target, augmentors...)`), never from shared
//! state, so results do not depend on execution order or thread count.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::augment::{
    build_monolingual, build_xlda_multi, build_xlda_pairwise, AugmentedDataset, CompositionPolicy,
};
use crate::corpus::AlignedCorpus;
use crate::error::{Error, Result};
use crate::lang::LanguageId;
use crate::seed::stable_hash;
use crate::selection::{
    greedy_schedule, matrix_from_accuracies, CurvePoint, GreedyCurve, GreedySchedule,
    PairwiseMatrix,
};

use super::{train_eval, EvalResult, TrainerSpec};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct GridCell {
    pub target: LanguageId,
    pub augmentor: LanguageId,
}

impl GridCell {
    pub fn is_diagonal(&self) -> bool {
        self.target == self.augmentor
    }
}

/// Row-major cells, diagonal included.
pub fn grid_cells(languages: &[LanguageId]) -> Vec<GridCell> {
    languages
        .iter()
        .flat_map(|t| {
            languages.iter().map(move |a| GridCell {
                target: t.clone(),
                augmentor: a.clone(),
            })
        })
        .collect()
}

pub fn cell_seed(global: u64, target: &LanguageId, augmentor: &LanguageId) -> u64 {
    global ^ stable_hash([target.as_str(), augmentor.as_str()])
}

/// Seed for a greedy point: keyed by the target and the augmentor prefix,
/// so `k = 0` and `k = 1` coincide with the matching grid cells.
pub fn point_seed(global: u64, target: &LanguageId, prefix: &[LanguageId]) -> u64 {
    if prefix.is_empty() {
        return cell_seed(global, target, target);
    }
    let mut parts = vec![target.as_str()];
    parts.extend(prefix.iter().map(LanguageId::as_str));
    global ^ stable_hash(parts)
}

fn seeded_policy(policy: &CompositionPolicy, seed: u64) -> CompositionPolicy {
    CompositionPolicy {
        seed: Some(seed),
        ..*policy
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CellOutcome {
    pub cell: GridCell,
    pub seed: u64,
    pub result: EvalResult,
    pub wall_ms: u64,
}

#[derive(Clone, Debug)]
pub struct GridRun {
    pub matrix: PairwiseMatrix,
    pub cells: Vec<CellOutcome>,
}

fn require_languages(corpus: &AlignedCorpus, languages: &[LanguageId]) -> Result<()> {
    match languages.iter().find(|l| !corpus.has_language(l)) {
        Some(l) => Err(Error::UnknownLanguage(l.clone())),
        None => Ok(()),
    }
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs <= 1 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn run_cell(
    corpus: &AlignedCorpus,
    eval_sets: &BTreeMap<LanguageId, AugmentedDataset>,
    cell: &GridCell,
    spec: &TrainerSpec,
    policy: &CompositionPolicy,
) -> Result<CellOutcome> {
    let start = Instant::now();
    let seed = cell_seed(spec.seed, &cell.target, &cell.augmentor);
    let train = if cell.is_diagonal() {
        build_monolingual(corpus, &cell.target)?
    } else {
        build_xlda_pairwise(corpus, &cell.target, &cell.augmentor, &seeded_policy(policy, seed))?
    };
    let eval = eval_sets
        .get(&cell.target)
        .ok_or_else(|| Error::UnknownLanguage(cell.target.clone()))?;
    let result = train_eval(&train, eval, &spec.with_seed(seed))?;
    Ok(CellOutcome {
        cell: cell.clone(),
        seed,
        result,
        wall_ms: start.elapsed().as_millis() as u64,
    })
}

fn eval_sets<'a>(
    eval_corpus: &AlignedCorpus,
    targets: impl IntoIterator<Item = &'a LanguageId>,
) -> Result<BTreeMap<LanguageId, AugmentedDataset>> {
    targets
        .into_iter()
        .map(|t| Ok((t.clone(), build_monolingual(eval_corpus, t)?)))
        .collect()
}

/// Runs the given cells (in any order, on up to `jobs` threads) and returns
/// outcomes in the order of `cells`. Errors name their cell.
pub fn run_grid_cells(
    corpus: &AlignedCorpus,
    eval_corpus: &AlignedCorpus,
    cells: &[GridCell],
    spec: &TrainerSpec,
    policy: &CompositionPolicy,
    jobs: usize,
) -> Result<Vec<CellOutcome>> {
    spec.check()?;
    let evals = eval_sets(eval_corpus, cells.iter().map(|c| &c.target))?;
    let attribute = |cell: &GridCell, e: Error| Error::Cell {
        target: cell.target.clone(),
        augmentor: cell.augmentor.clone(),
        source: Box::new(e),
    };
    let results: Vec<Result<CellOutcome>> = with_pool(jobs, || {
        cells
            .par_iter()
            .map(|cell| run_cell(corpus, &evals, cell, spec, policy).map_err(|e| attribute(cell, e)))
            .collect()
    })?;
    results.into_iter().collect()
}

/// Full `n x n` grid: monolingual training on the diagonal, pairwise XLDA
/// off it, every cell scored on the target-language eval set.
pub fn pairwise_grid(
    corpus: &AlignedCorpus,
    eval_corpus: &AlignedCorpus,
    languages: &[LanguageId],
    spec: &TrainerSpec,
    policy: &CompositionPolicy,
    jobs: usize,
) -> Result<GridRun> {
    require_languages(corpus, languages)?;
    require_languages(eval_corpus, languages)?;
    let cells = grid_cells(languages);
    let outcomes = run_grid_cells(corpus, eval_corpus, &cells, spec, policy, jobs)?;
    let matrix = assemble_matrix(languages, &outcomes)?;
    Ok(GridRun {
        matrix,
        cells: outcomes,
    })
}

pub fn assemble_matrix(languages: &[LanguageId], outcomes: &[CellOutcome]) -> Result<PairwiseMatrix> {
    let acc: BTreeMap<(LanguageId, LanguageId), f64> = outcomes
        .iter()
        .map(|o| {
            (
                (o.cell.target.clone(), o.cell.augmentor.clone()),
                o.result.accuracy,
            )
        })
        .collect();
    matrix_from_accuracies(languages, &acc)
}

#[derive(Clone, Debug, Serialize)]
pub struct PointOutcome {
    pub k: usize,
    pub augmentors: Vec<LanguageId>,
    pub seed: u64,
    pub result: EvalResult,
    pub wall_ms: u64,
}

#[derive(Clone, Debug)]
pub struct GreedyRun {
    pub schedule: GreedySchedule,
    pub curve: GreedyCurve,
    pub points: Vec<PointOutcome>,
}

/// Trains one model per greedy prefix size `k = 0..=cut`, each on a freshly
/// built training set, and scores all on the target-language eval set.
pub fn greedy_curve_run(
    corpus: &AlignedCorpus,
    eval_corpus: &AlignedCorpus,
    target: &LanguageId,
    matrix: &PairwiseMatrix,
    spec: &TrainerSpec,
    policy: &CompositionPolicy,
    jobs: usize,
) -> Result<GreedyRun> {
    spec.check()?;
    let schedule = greedy_schedule(matrix, target)?;
    require_languages(corpus, std::slice::from_ref(target))?;
    require_languages(corpus, schedule.prefix(schedule.cut))?;
    let eval = build_monolingual(eval_corpus, target)?;
    let run_point = |k: usize| -> Result<PointOutcome> {
        let start = Instant::now();
        let prefix = schedule.prefix(k);
        let seed = point_seed(spec.seed, target, prefix);
        let train = if k == 0 {
            build_monolingual(corpus, target)?
        } else {
            build_xlda_multi(corpus, target, prefix, &seeded_policy(policy, seed))?
        };
        let result = train_eval(&train, &eval, &spec.with_seed(seed))?;
        Ok(PointOutcome {
            k,
            augmentors: prefix.to_vec(),
            seed,
            result,
            wall_ms: start.elapsed().as_millis() as u64,
        })
    };
    let results: Vec<Result<PointOutcome>> = with_pool(jobs, || {
        (0..=schedule.cut)
            .into_par_iter()
            .map(|k| {
                run_point(k).map_err(|e| Error::CurvePoint {
                    target: target.clone(),
                    k,
                    source: Box::new(e),
                })
            })
            .collect()
    })?;
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;
    let curve = GreedyCurve::new(
        target.clone(),
        points
            .iter()
            .map(|p| CurvePoint {
                k: p.k,
                accuracy: p.result.accuracy,
            })
            .collect(),
    )?;
    Ok(GreedyRun {
        schedule,
        curve,
        points,
    })
}
