//! Input unit of the pipeline: documents holding mentions, each mention
//! holding pre-generated candidate entities with optional priors, input
//! scores, and ranked type predictions.

use serde::{Deserialize, Serialize};

use crate::graph::EntityId;
use crate::typing::TypePrediction;

/// A candidate entity for one mention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub entity: EntityId,
    /// Context-independent commonness of this sense, in [0, 1].
    #[serde(default)]
    pub prior: Option<f64>,
    /// Raw pre-score from an upstream similarity model; any finite range.
    #[serde(default)]
    pub input_score: Option<f64>,
}

impl Candidate {
    pub fn new(entity: EntityId) -> Self {
        Candidate {
            entity,
            prior: None,
            input_score: None,
        }
    }

    /// Prior used in combination and tie-breaking; absent priors count as 0.
    pub fn prior_or_zero(&self) -> f64 {
        self.prior.unwrap_or(0.0)
    }
}

/// A text span referring to an entity, with its candidate list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mention {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    /// Whether this mention is evaluated (carries ground truth). Auxiliary
    /// mentions participate in collective disambiguation only.
    #[serde(default)]
    pub is_target: bool,
    #[serde(default)]
    pub gold: Option<EntityId>,
    /// Ranked NER-type predictions, confidences non-increasing.
    #[serde(default)]
    pub type_predictions: TypePrediction,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub mentions: Vec<Mention>,
}
