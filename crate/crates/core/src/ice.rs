//! Iterative collective disambiguation.
//!
//! A document is resolved in two phases. The seed phase picks the least
//! ambiguous mention (fewest candidates after type filtering) and commits
//! to its best input score, using no relatedness at all. The loop phase
//! then repeatedly takes the least ambiguous remaining mention and scores
//! each of its candidates as
//!
//! ```text
//! final = w_coherence · aggr_rel(candidate, answered)
//!       + w_input     · normalized input score
//!       + w_prior     · prior
//! ```
//!
//! where `aggr_rel` aggregates (max/min/avg) the candidate's pairwise
//! relatedness to every already-answered entity. Each step appends exactly
//! one assignment, so a document with `n` candidate-bearing mentions
//! terminates in exactly `n` steps.
//!
//! Every tie is broken deterministically: mention selection by candidate
//! count, then span start, then input order; candidate argmax by score,
//! then input score (loop) or prior (seed), then lower entity id. Identical
//! inputs therefore produce identical assignments on every run and under
//! any document-level parallelism.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::document::{Candidate, Document};
use crate::error::Result;
use crate::graph::{EntityId, LinkGraph};
use crate::relatedness::{aggregate, AggregationMode, PairCache, RelatednessMeasure};
use crate::scoring::{combine, input_scores_for};
use crate::typing::{filter_candidates, predicted_type_set, TypeDict};

/// Per-candidate score components of a committed assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub coherence: f64,
    pub input: f64,
    pub prior: f64,
    pub final_score: f64,
}

/// One resolved mention, with processing-order diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub mention_index: usize,
    pub entity: EntityId,
    pub is_seed: bool,
    /// Position in the resolution order, 1-based; steps over a document
    /// form a permutation of 1..=n.
    pub step: usize,
    pub breakdown: ScoreBreakdown,
}

/// An unresolved mention: its post-filter candidates and their normalized
/// input scores, plus the keys used for deterministic mention selection.
#[derive(Debug, Clone)]
pub struct PendingMention {
    pub mention_index: usize,
    pub span_start: usize,
    pub candidates: Vec<Candidate>,
    pub input_scores: Vec<f64>,
}

/// Index of the mention with the fewest candidates; ties go to the
/// smallest span start, then to input order.
pub fn find_least_ambiguous(todo: &[PendingMention]) -> usize {
    assert!(
        !todo.is_empty(),
        "contract violation: find_least_ambiguous on an empty set"
    );
    let mut best = 0;
    for (i, m) in todo.iter().enumerate().skip(1) {
        let key = (m.candidates.len(), m.span_start);
        let best_key = (todo[best].candidates.len(), todo[best].span_start);
        if key < best_key {
            best = i;
        }
    }
    best
}

/// Candidate index the seed phase commits to: argmax of normalized input
/// score, ties broken by higher prior, then lower entity id.
pub fn disamb_seed(mention: &PendingMention) -> usize {
    let mut best = 0;
    for i in 1..mention.candidates.len() {
        if seed_key(mention, i) > seed_key(mention, best) {
            best = i;
        }
    }
    best
}

fn seed_key(m: &PendingMention, i: usize) -> (f64, f64, std::cmp::Reverse<u32>) {
    (
        m.input_scores[i],
        m.candidates[i].prior_or_zero(),
        std::cmp::Reverse(m.candidates[i].entity.0),
    )
}

/// Aggregated relatedness of `candidate` to the already-resolved entities.
pub fn aggr_rel(
    g: &LinkGraph,
    candidate: EntityId,
    answered: &[EntityId],
    measure: RelatednessMeasure,
    mode: AggregationMode,
    cache: Option<&PairCache>,
) -> f64 {
    assert!(
        !answered.is_empty(),
        "contract violation: aggr_rel before the seed phase"
    );
    let scores: Vec<f64> = answered
        .iter()
        .map(|&anchor| match cache {
            Some(c) => c.score(g, measure, candidate, anchor),
            None => crate::relatedness::score(g, measure, candidate, anchor),
        })
        .collect();
    aggregate(&scores, mode)
}

/// Runs filtering, normalization, seed disambiguation, and the iterative
/// loop over one document. Returns one assignment per candidate-bearing
/// mention, ordered by mention index. Mentions without candidates are
/// skipped: there is nothing to choose from.
pub fn disambiguate_document(
    doc: &Document,
    g: &LinkGraph,
    type_dict: &TypeDict,
    cfg: &PipelineConfig,
) -> Result<Vec<Assignment>> {
    disambiguate_document_cached(doc, g, type_dict, cfg, None)
}

/// Same as [`disambiguate_document`] with an optional shared relatedness
/// cache. Results are identical with or without the cache.
pub fn disambiguate_document_cached(
    doc: &Document,
    g: &LinkGraph,
    type_dict: &TypeDict,
    cfg: &PipelineConfig,
    cache: Option<&PairCache>,
) -> Result<Vec<Assignment>> {
    let mut todo: Vec<PendingMention> = Vec::new();
    for (mention_index, mention) in doc.mentions.iter().enumerate() {
        if mention.candidates.is_empty() {
            continue;
        }
        // Filtering runs before ambiguity counting, so "least ambiguous"
        // reflects post-filter candidate counts; normalization follows.
        let type_set = predicted_type_set(&mention.type_predictions, &cfg.filter);
        let candidates = filter_candidates(&mention.candidates, type_dict, &type_set, &cfg.filter);
        let input_scores = input_scores_for(mention, &candidates, cfg.fallback)?;
        todo.push(PendingMention {
            mention_index,
            span_start: mention.start,
            candidates,
            input_scores,
        });
    }
    if todo.is_empty() {
        return Ok(Vec::new());
    }

    let mut assignments: Vec<Assignment> = Vec::with_capacity(todo.len());
    let mut answered: Vec<EntityId> = Vec::with_capacity(todo.len());

    // Part 1: seed, decided on input scores alone.
    let seed = todo.remove(find_least_ambiguous(&todo));
    let pick = disamb_seed(&seed);
    answered.push(seed.candidates[pick].entity);
    assignments.push(Assignment {
        mention_index: seed.mention_index,
        entity: seed.candidates[pick].entity,
        is_seed: true,
        step: 1,
        breakdown: ScoreBreakdown {
            coherence: 0.0,
            input: seed.input_scores[pick],
            prior: seed.candidates[pick].prior_or_zero(),
            final_score: seed.input_scores[pick],
        },
    });

    // Part 2: collective loop. Candidate scores are computed against the
    // answered set as frozen at the start of the step.
    let mut step = 1;
    while !todo.is_empty() {
        step += 1;
        let mention = todo.remove(find_least_ambiguous(&todo));
        let mut best: Option<(usize, ScoreBreakdown)> = None;
        for (i, cand) in mention.candidates.iter().enumerate() {
            let coherence = aggr_rel(g, cand.entity, &answered, cfg.measure, cfg.aggregation, cache);
            let input = mention.input_scores[i];
            let prior = cand.prior_or_zero();
            let final_score = combine(coherence, input, prior, &cfg.weights);
            let key = (final_score, input, std::cmp::Reverse(cand.entity.0));
            let better = match &best {
                None => true,
                Some((j, b)) => {
                    key > (
                        b.final_score,
                        mention.input_scores[*j],
                        std::cmp::Reverse(mention.candidates[*j].entity.0),
                    )
                }
            };
            if better {
                best = Some((
                    i,
                    ScoreBreakdown {
                        coherence,
                        input,
                        prior,
                        final_score,
                    },
                ));
            }
        }
        let (pick, breakdown) = best.expect("nonempty candidate list");
        answered.push(mention.candidates[pick].entity);
        assignments.push(Assignment {
            mention_index: mention.mention_index,
            entity: mention.candidates[pick].entity,
            is_seed: false,
            step,
            breakdown,
        });
    }

    assignments.sort_by_key(|a| a.mention_index);
    Ok(assignments)
}

/// Disambiguates every document, independently and possibly in parallel
/// (`cfg.parallelism` worker threads). A relatedness cache is shared across
/// documents; results are assembled in corpus order, so the output is
/// independent of scheduling.
pub fn disambiguate_corpus(
    docs: &[Document],
    g: &LinkGraph,
    type_dict: &TypeDict,
    cfg: &PipelineConfig,
) -> Result<Vec<Vec<Assignment>>> {
    cfg.validate()?;
    let cache = PairCache::new();
    if cfg.parallelism <= 1 {
        return docs
            .iter()
            .map(|d| disambiguate_document_cached(d, g, type_dict, cfg, Some(&cache)))
            .collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| crate::error::Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        docs.par_iter()
            .map(|d| disambiguate_document_cached(d, g, type_dict, cfg, Some(&cache)))
            .collect()
    })
}
