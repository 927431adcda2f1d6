//! Cross-lingual data augmentation toolkit.
//!
//! - [`corpus`]: aligned multilingual NLI corpora and SQuAD-style QA loading.
//! - [`augment`]: monolingual, DMT and XLDA training-set construction.
//! - [`span_align`]: answer-span recovery in machine-translated QA data.
//! - [`selection`]: pairwise improvement matrices and greedy augmentor selection.
//! - [`harness`]: seeded linear classifier, pairwise grids and greedy curves.
//! - [`report`]: plot-ready CSV emission and run manifests.

pub mod augment;
pub mod corpus;
pub mod error;
pub mod harness;
pub mod lang;
pub mod report;
pub mod seed;
pub mod selection;
pub mod span_align;
pub mod text;

pub use augment::{
    AugmentedDataset, AugmentedExample, Balance, CompositionPolicy, DirectionMode, Setting,
};
pub use corpus::{AlignedCorpus, Label, NliExample, QaExample, ValidationReport};
pub use error::{Error, Result};
pub use lang::LanguageId;
pub use harness::{EvalResult, TrainerKind, TrainerSpec};
pub use report::{BleuTable, RunManifest};
pub use selection::{GreedyCurve, GreedySchedule, PairwiseMatrix};
