//! Collective entity disambiguation over a local knowledge-base link graph.
//!
//! The pipeline resolves ambiguous entity mentions in three stages:
//! NER-type candidate filtering, per-mention normalization of upstream
//! input scores, and an iterative coherence loop that picks, for each
//! mention in least-ambiguous-first order, the candidate most related
//! (by inlink overlap) to the entities already resolved. An evaluation
//! harness provides micro-F1 scoring, grid-search tuning, and a paired
//! Top/Shadow overshadowing robustness analysis.

pub mod config;
pub mod document;
pub mod error;
pub mod eval;
pub mod graph;
pub mod ice;
pub mod relatedness;
pub mod scoring;
pub mod typing;

pub use config::PipelineConfig;
pub use document::{Candidate, Document, Mention};
pub use error::{Error, Result};
pub use eval::{
    grid_search, load_dataset, micro_f1, overshadow_analysis, Dataset, EvalReport,
    OvershadowReport, Predictions, SweepGrid,
};
pub use graph::{build_graph, build_graph_from_files, EntityId, LinkGraph};
pub use ice::{disambiguate_corpus, disambiguate_document, Assignment};
pub use relatedness::{AggregationMode, PairCache, RelatednessMeasure};
pub use scoring::{CombinationWeights, ScoreFallback};
pub use typing::{FilterConfig, TypeDict};
