//! Whole-pipeline configuration. Defaults reproduce the selected setup:
//! weights 0.7/0.3/0, top-3 type filter at threshold 1, Milne-Witten
//! relatedness with max aggregation, prior fallback.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relatedness::{AggregationMode, RelatednessMeasure};
use crate::scoring::{CombinationWeights, ScoreFallback};
use crate::typing::FilterConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub weights: CombinationWeights,
    pub filter: FilterConfig,
    pub measure: RelatednessMeasure,
    pub aggregation: AggregationMode,
    pub fallback: ScoreFallback,
    pub parallelism: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            weights: CombinationWeights::default(),
            filter: FilterConfig::default(),
            measure: RelatednessMeasure::MilneWitten,
            aggregation: AggregationMode::Max,
            fallback: ScoreFallback::Prior,
            parallelism: 1,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.filter.validate()?;
        if self.parallelism < 1 {
            return Err(Error::Config("parallelism must be at least 1".into()));
        }
        Ok(())
    }

    /// Applies one `key=value` setting. Used by the config-file layer;
    /// command-line flags are applied on top by the CLI.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_f64 = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("`{key}` expects a number, got `{v}`")))
        };
        match key {
            "alpha" => self.weights = CombinationWeights::two_way(parse_f64(value)?)?,
            "weights" => {
                let parts: Vec<&str> = value.split(',').collect();
                if parts.len() != 3 {
                    return Err(Error::Config(format!(
                        "`weights` expects three comma-separated numbers, got `{value}`"
                    )));
                }
                self.weights = CombinationWeights::new(
                    parse_f64(parts[0])?,
                    parse_f64(parts[1])?,
                    parse_f64(parts[2])?,
                )?;
            }
            "filter_threshold" => self.filter.t = parse_f64(value)?,
            "filter_k" => {
                self.filter.k = value.trim().parse::<usize>().map_err(|_| {
                    Error::Config(format!("`filter_k` expects a positive integer, got `{value}`"))
                })?
            }
            "filter_enabled" => {
                self.filter.enabled = value.trim().parse::<bool>().map_err(|_| {
                    Error::Config(format!("`filter_enabled` expects true/false, got `{value}`"))
                })?
            }
            "measure" => self.measure = value.trim().parse()?,
            "aggregation" => self.aggregation = value.trim().parse()?,
            "fallback" => self.fallback = value.trim().parse()?,
            "parallelism" => {
                self.parallelism = value.trim().parse::<usize>().map_err(|_| {
                    Error::Config(format!(
                        "`parallelism` expects a positive integer, got `{value}`"
                    ))
                })?
            }
            other => {
                return Err(Error::Config(format!("unknown config key `{other}`")));
            }
        }
        Ok(())
    }

    /// Loads `key=value` lines from a file; `#` comments and blank lines
    /// are ignored.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)?;
        for (idx, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(Error::Config(format!(
                    "{}:{}: expected `key=value`, got `{trimmed}`",
                    path.display(),
                    idx + 1
                )));
            };
            self.apply_kv(key.trim(), value.trim())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_published_configuration() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.weights.coherence, 0.7);
        assert_eq!(cfg.weights.input, 0.3);
        assert_eq!(cfg.weights.prior, 0.0);
        assert_eq!(cfg.filter.k, 3);
        assert_eq!(cfg.filter.t, 1.0);
        assert!(cfg.filter.enabled);
        assert_eq!(cfg.measure, RelatednessMeasure::MilneWitten);
        assert_eq!(cfg.aggregation, AggregationMode::Max);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn kv_settings_apply() {
        let mut cfg = PipelineConfig::default();
        cfg.apply_kv("alpha", "0.4").unwrap();
        assert!((cfg.weights.coherence - 0.4).abs() < 1e-12);
        assert!((cfg.weights.input - 0.6).abs() < 1e-12);
        cfg.apply_kv("weights", "0.2,0.3,0.5").unwrap();
        assert_eq!(cfg.weights.prior, 0.5);
        cfg.apply_kv("measure", "jaccard").unwrap();
        assert_eq!(cfg.measure, RelatednessMeasure::Jaccard);
        cfg.apply_kv("filter_threshold", "-1").unwrap();
        assert!(cfg.filter.is_disabled());
        assert!(cfg.apply_kv("bogus", "1").is_err());
        assert!(cfg.apply_kv("weights", "0.2,0.3").is_err());
    }

    #[test]
    fn config_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "# comment\nalpha = 0.5\nmeasure = pmi\nparallelism = 4\n").unwrap();
        let mut cfg = PipelineConfig::default();
        cfg.apply_file(&path).unwrap();
        assert_eq!(cfg.measure, RelatednessMeasure::Pmi);
        assert_eq!(cfg.parallelism, 4);
        assert!((cfg.weights.coherence - 0.5).abs() < 1e-12);
    }
}
