//! End-to-end evaluation: a seeded built-in trainer, an external trainer
//! plug-in, synthetic aligned corpora, pairwise grids and greedy curves.

mod external;
pub mod grid;
pub mod linear;
mod schedule;
pub mod synthetic;

pub use grid::{
    cell_seed, greedy_curve_run, grid_cells, pairwise_grid, point_seed, run_grid_cells,
    CellOutcome, GreedyRun, GridCell, GridRun, PointOutcome,
};
pub use schedule::{lr_at, warmup_steps};
pub use synthetic::{generate_synthetic_corpus, generate_synthetic_qa, LabelRule, SyntheticCorpusSpec};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augment::AugmentedDataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainerKind {
    #[default]
    BuiltinLinear,
    External,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainerSpec {
    pub kind: TrainerKind,
    pub feature_dim: usize,
    pub ngram_orders: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub peak_lr: f64,
    pub warmup_fraction: f64,
    pub seed: u64,
    /// Program and arguments, for `kind = external`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_command: Option<Vec<String>>,
}

impl Default for TrainerSpec {
    fn default() -> Self {
        TrainerSpec {
            kind: TrainerKind::BuiltinLinear,
            feature_dim: 1 << 18,
            ngram_orders: vec![1, 2],
            epochs: 3,
            batch_size: 32,
            peak_lr: 0.1,
            warmup_fraction: 0.10,
            seed: 0,
            external_command: None,
        }
    }
}

impl TrainerSpec {
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return bad(format!("warmup_fraction {} is outside [0, 1)", self.warmup_fraction));
        }
        if self.feature_dim < 2 {
            return bad(format!("feature_dim {} is below 2", self.feature_dim));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive".into());
        }
        if !(self.peak_lr.is_finite() && self.peak_lr > 0.0) {
            return bad(format!("peak_lr {} must be positive", self.peak_lr));
        }
        if self.kind == TrainerKind::External && self.external_command.is_none() {
            return bad("external trainer needs a command".into());
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        TrainerSpec {
            seed,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// Exactly `correct / n_eval`.
    pub accuracy: f64,
    pub correct: usize,
    pub n_eval: usize,
    pub train_size: usize,
    pub spec_digest: String,
}

/// SHA-256 over the trainer spec and both datasets' metadata and sizes.
pub fn spec_digest(spec: &TrainerSpec, train: &AugmentedDataset, eval: &AugmentedDataset) -> String {
    let mut h = Sha256::new();
    for part in [
        serde_json::to_string(spec),
        serde_json::to_string(&train.meta),
        serde_json::to_string(&eval.meta),
    ] {
        h.update(part.expect("plain data serializes").as_bytes());
        h.update([0u8]);
    }
    h.update((train.len() as u64).to_le_bytes());
    h.update((eval.len() as u64).to_le_bytes());
    hex::encode(h.finalize())
}

/// Trains on `train`, scores `eval`. A pure function of its arguments for the
/// built-in trainer.
pub fn train_eval(train: &AugmentedDataset, eval: &AugmentedDataset, spec: &TrainerSpec) -> Result<EvalResult> {
    spec.check()?;
    if train.is_empty() || eval.is_empty() {
        return Err(Error::Trainer(format!(
            "empty dataset (train {}, eval {})",
            train.len(),
            eval.len()
        )));
    }
    let digest = spec_digest(spec, train, eval);
    match spec.kind {
        TrainerKind::BuiltinLinear => {
            let hasher = linear::FeatureHasher::new(spec.feature_dim, &spec.ngram_orders)?;
            let train_x: Vec<(linear::Features, usize)> = train
                .examples
                .iter()
                .map(|ex| (hasher.example_features(ex), ex.label.index()))
                .collect();
            let model = linear::train(&train_x, spec)?;
            let correct = eval
                .examples
                .iter()
                .filter(|ex| model.predict(&hasher.example_features(ex)) == ex.label.index())
                .count();
            Ok(EvalResult {
                accuracy: correct as f64 / eval.len() as f64,
                correct,
                n_eval: eval.len(),
                train_size: train.len(),
                spec_digest: digest,
            })
        }
        TrainerKind::External => {
            let command = spec.external_command.as_deref().unwrap_or_default();
            let reply = external::run(command, train, eval, spec)?;
            if reply.n_eval != eval.len() || !(0.0..=1.0).contains(&reply.accuracy) {
                return Err(Error::Trainer(format!(
                    "external trainer reported accuracy {} on {} examples, expected {} examples",
                    reply.accuracy,
                    reply.n_eval,
                    eval.len()
                )));
            }
            Ok(EvalResult {
                accuracy: reply.accuracy,
                correct: (reply.accuracy * reply.n_eval as f64).round() as usize,
                n_eval: reply.n_eval,
                train_size: train.len(),
                spec_digest: digest,
            })
        }
    }
}
