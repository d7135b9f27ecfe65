//! Frequency-aware morphological inflection toolkit.
//!
//! The pipeline: CoNLL-U treebanks are lexicalized into lemma-tag-form
//! triples with occurrence counts ([`lexicon`]), split into lemma-disjoint
//! train/dev/test parts with frequency-weighted train sampling
//! ([`splitter`]), used to train inflection models under a corpus-frequency
//! temperature ([`sampler`], [`inflectors`]), and scored with type and token
//! accuracy ([`metrics`]). [`harness`] ties the stages together.

pub mod conllu;
pub mod error;
pub mod harness;
pub mod inflectors;
pub mod lexicon;
pub mod metrics;
pub mod rng;
pub mod sampler;
pub mod splitter;

pub use error::{Error, Result};
pub use inflectors::{CopyModel, InflectionModel, ModelKind, RuleModel, TrainingMode};
pub use lexicon::{lexicalize, FilterConfig, LexEntry, Lexicon, MorphTag};
pub use metrics::{evaluate, macro_average, EvalOutcome, Prediction};
pub use sampler::{SamplingDistribution, Temperature};
pub use splitter::{split_lexicon, DataSplit, SplitConfig};
