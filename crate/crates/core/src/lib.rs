//! Evaluation and labeling toolkit for product usage options.
//!
//! * [`set_metrics`]: S4 / MS4 set-to-set similarity.
//! * [`corpus`]: HAMS4 aggregation, classification scores, significance
//!   testing and inter-annotator agreement.
//! * [`wms`]: word mover's similarity with an exact transport solver.
//! * [`annotation`]: prompt templates, response parsing and a chat client
//!   for LLM labeling.
//! * [`dataset`]: review ingestion, filtering and splitting.
//! * [`feasibility`]: FLOPs break-even estimates.
//! * [`io`]: prediction, reference and label files.
//!
//! Similarities come from [`similarity`], backed by the embedding providers
//! in [`embedding`] or by exact string matching.

pub mod annotation;
pub mod corpus;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod feasibility;
pub mod io;
pub mod set_metrics;
pub mod similarity;
pub mod wms;

pub use error::{Error, ErrorClass, Result};
pub use set_metrics::{ReferenceSets, SetScorer, UsageOptionSet, WeightScheme};
pub use similarity::{ExactMatch, Similarity, SimilarityConfig};
