//! NER-type candidate filtering: derive the predicted type set of a mention
//! from ranked classifier output, then keep only candidates whose dictionary
//! type matches.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::document::Candidate;
use crate::error::{Error, Result};
use crate::graph::EntityId;

/// Ranked `(type_label, confidence)` pairs, confidences non-increasing.
pub type TypePrediction = Vec<(String, f64)>;

/// Sentinel threshold meaning "candidate filter off".
pub const FILTER_DISABLED: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownTypePolicy {
    /// Candidates missing from the type dictionary survive filtering.
    /// Dropping them would silently destroy recall on long-tail entities.
    Keep,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Number of top predicted classes considered.
    pub k: usize,
    /// Confidence threshold: strictly above it, only the top class is used.
    /// `-1` disables the filter entirely.
    pub t: f64,
    pub enabled: bool,
    pub unknown_type_policy: UnknownTypePolicy,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            k: 3,
            t: 1.0,
            enabled: true,
            unknown_type_policy: UnknownTypePolicy::Keep,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("filter k must be at least 1".into()));
        }
        if self.t != FILTER_DISABLED && !(0.0..=1.0).contains(&self.t) {
            return Err(Error::Config(format!(
                "filter threshold must be in [0, 1] or -1 to disable, got {}",
                self.t
            )));
        }
        Ok(())
    }

    pub fn is_disabled(&self) -> bool {
        !self.enabled || self.t == FILTER_DISABLED
    }
}

/// Entity-id → type-label dictionary backing the candidate filter.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeDict {
    types: HashMap<EntityId, String>,
}

impl TypeDict {
    pub fn new(types: HashMap<EntityId, String>) -> Self {
        TypeDict { types }
    }

    /// Loads `entity_id<TAB>type_label` lines; `#` comments and blank lines
    /// are ignored.
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(BufReader::new(File::open(path)?), path)
    }

    /// Reader-based form of [`TypeDict::load`]; `path` only labels errors.
    pub fn parse(reader: impl BufRead, path: &Path) -> Result<Self> {
        let mut types = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let lineno = idx + 1;
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 2 {
                return Err(Error::Ingestion {
                    path: path.to_path_buf(),
                    line: lineno,
                    message: format!("expected 2 tab-separated columns, got {}", cols.len()),
                });
            }
            let id = cols[0].trim().parse::<u32>().map_err(|_| Error::Ingestion {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("expected a non-negative integer id, got `{}`", cols[0]),
            })?;
            types.insert(EntityId(id), cols[1].to_string());
        }
        Ok(TypeDict { types })
    }

    pub fn get(&self, e: EntityId) -> Option<&str> {
        self.types.get(&e).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }
}

/// The set of type labels a candidate may carry to survive filtering.
///
/// If the top confidence strictly exceeds `t`, only the top-1 class is
/// used; otherwise the labels of the top `min(k, len)` predictions. With
/// the default `t = 1` and confidences capped at 1, the top-1 branch never
/// fires, so the top-k labels are always used.
pub fn predicted_type_set<'a>(pred: &'a [(String, f64)], cfg: &FilterConfig) -> HashSet<&'a str> {
    match pred.first() {
        None => HashSet::new(),
        Some((top_label, top_conf)) if *top_conf > cfg.t => {
            HashSet::from([top_label.as_str()])
        }
        Some(_) => pred
            .iter()
            .take(cfg.k)
            .map(|(label, _)| label.as_str())
            .collect(),
    }
}

/// Keeps candidates whose dictionary type is in `type_set`, preserving
/// input order. Candidates without a known type follow the unknown-type
/// policy. Never empties a nonempty list: if everything would be dropped,
/// the original list is returned so the disambiguation loop always has at
/// least one candidate per mention.
pub fn filter_candidates(
    candidates: &[Candidate],
    type_of: &TypeDict,
    type_set: &HashSet<&str>,
    cfg: &FilterConfig,
) -> Vec<Candidate> {
    if cfg.is_disabled() {
        return candidates.to_vec();
    }
    let kept: Vec<Candidate> = candidates
        .iter()
        .filter(|c| match type_of.get(c.entity) {
            Some(t) => type_set.contains(t),
            None => cfg.unknown_type_policy == UnknownTypePolicy::Keep,
        })
        .copied()
        .collect();
    if kept.is_empty() {
        candidates.to_vec()
    } else {
        kept
    }
}
