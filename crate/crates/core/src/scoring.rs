//! Per-candidate score plumbing: min-max normalization of heterogeneous
//! input scores and the weighted combination of coherence, input, and prior
//! terms into one final score.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::document::{Candidate, Mention};
use crate::error::{Error, Result};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Nonnegative weights for the coherence / input / prior terms, summing
/// to 1. The two-way form `α·coherence + (1−α)·input` is the special case
/// with zero prior weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinationWeights {
    pub coherence: f64,
    pub input: f64,
    pub prior: f64,
}

impl CombinationWeights {
    pub fn new(coherence: f64, input: f64, prior: f64) -> Result<Self> {
        let w = CombinationWeights {
            coherence,
            input,
            prior,
        };
        w.validate()?;
        Ok(w)
    }

    /// `α` on coherence, `1 − α` on input, nothing on prior.
    pub fn two_way(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(format!("alpha must be in [0, 1], got {alpha}")));
        }
        Self::new(alpha, 1.0 - alpha, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("coherence", self.coherence),
            ("input", self.input),
            ("prior", self.prior),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!(
                    "{name} weight must be a nonnegative finite number, got {v}"
                )));
            }
        }
        let sum = self.coherence + self.input + self.prior;
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::Config(format!(
                "weights must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

impl Default for CombinationWeights {
    fn default() -> Self {
        CombinationWeights {
            coherence: 0.7,
            input: 0.3,
            prior: 0.0,
        }
    }
}

/// What to use as the input score when the dataset carries none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreFallback {
    Prior,
    Uniform,
}

impl ScoreFallback {
    pub fn name(&self) -> &'static str {
        match self {
            ScoreFallback::Prior => "prior",
            ScoreFallback::Uniform => "uniform",
        }
    }
}

impl fmt::Display for ScoreFallback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoreFallback {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prior" => Ok(ScoreFallback::Prior),
            "uniform" => Ok(ScoreFallback::Uniform),
            other => Err(Error::Config(format!(
                "unknown fallback `{other}` (expected prior or uniform)"
            ))),
        }
    }
}

/// Min-max normalization into [0, 1]. A constant vector maps to 0.5
/// everywhere: "no information" without biasing the coherence term.
///
/// Affine-invariant: shifting or positively scaling all inputs leaves the
/// output unchanged, so upstream score ranges cannot reorder candidates.
pub fn normalize_scores(raw: &[f64]) -> Result<Vec<f64>> {
    assert!(!raw.is_empty(), "contract violation: normalize_scores on an empty list");
    if let Some(bad) = raw.iter().find(|v| !v.is_finite()) {
        return Err(Error::Contract(format!(
            "normalize_scores requires finite inputs, got {bad}"
        )));
    }
    let min = raw.iter().copied().fold(f64::MAX, f64::min);
    let max = raw.iter().copied().fold(f64::MIN, f64::max);
    if max == min {
        return Ok(vec![0.5; raw.len()]);
    }
    Ok(raw.iter().map(|v| (v - min) / (max - min)).collect())
}

/// Weighted combination of the three per-candidate terms.
pub fn combine(coherence: f64, input: f64, prior: f64, w: &CombinationWeights) -> f64 {
    w.coherence * coherence + w.input * input + w.prior * prior
}

/// Normalized input scores aligned with `candidates`.
///
/// Uses the raw input scores when every candidate carries one; otherwise
/// falls back to priors (when requested and all present) or to a uniform
/// 0.5. A mention where only some candidates are scored is malformed data.
pub fn input_scores_for(
    mention: &Mention,
    candidates: &[Candidate],
    fallback: ScoreFallback,
) -> Result<Vec<f64>> {
    assert!(
        !candidates.is_empty(),
        "contract violation: input_scores_for on a mention with no candidates"
    );
    let scored = candidates.iter().filter(|c| c.input_score.is_some()).count();
    if scored > 0 && scored < candidates.len() {
        return Err(Error::Validation(format!(
            "mention `{}`: {scored} of {} candidates carry an input score; \
             scores must be present for all candidates or none",
            mention.surface,
            candidates.len()
        )));
    }
    if scored == candidates.len() {
        let raw: Vec<f64> = candidates.iter().map(|c| c.input_score.unwrap()).collect();
        return normalize_scores(&raw);
    }
    if fallback == ScoreFallback::Prior && candidates.iter().all(|c| c.prior.is_some()) {
        let raw: Vec<f64> = candidates.iter().map(|c| c.prior.unwrap()).collect();
        return normalize_scores(&raw);
    }
    Ok(vec![0.5; candidates.len()])
}
