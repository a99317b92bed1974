//! Dataset loading, micro-F1 scoring, grid-search tuning, and the
//! Top/Shadow overshadowing robustness analysis.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::document::{Document, Mention};
use crate::error::{Error, Result};
use crate::graph::{EntityId, LinkGraph};
use crate::ice::{disambiguate_corpus, Assignment};
use crate::relatedness::{AggregationMode, RelatednessMeasure};
use crate::scoring::CombinationWeights;
use crate::typing::{FilterConfig, TypeDict, FILTER_DISABLED};

/// A loaded corpus. Every `is_target` mention carries a gold label and a
/// nonempty candidate list; auxiliary mentions only feed the collective
/// loop.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub documents: Vec<Document>,
}

impl Dataset {
    pub fn new(documents: Vec<Document>) -> Self {
        Dataset { documents }
    }

    /// `(document index, mention index)` of every target mention.
    pub fn target_mentions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (di, doc) in self.documents.iter().enumerate() {
            for (mi, m) in doc.mentions.iter().enumerate() {
                if m.is_target {
                    out.push((di, mi));
                }
            }
        }
        out
    }
}

fn schema_err(path: &Path, line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

fn validate_mention(m: &Mention, path: &Path, line: usize, mi: usize) -> Result<()> {
    let field = |name: &str| format!("mentions[{mi}].{name}");
    if m.end < m.start {
        return Err(schema_err(path, line, &field("end"), "span end before start"));
    }
    for (i, (_, conf)) in m.type_predictions.iter().enumerate() {
        if !(0.0..=1.0).contains(conf) {
            return Err(schema_err(
                path,
                line,
                &field(&format!("type_predictions[{i}]")),
                format!("confidence {conf} outside [0, 1]"),
            ));
        }
        if i > 0 && m.type_predictions[i - 1].1 < *conf {
            return Err(schema_err(
                path,
                line,
                &field("type_predictions"),
                "confidences must be non-increasing",
            ));
        }
    }
    for (i, c) in m.candidates.iter().enumerate() {
        if let Some(p) = c.prior {
            if !(0.0..=1.0).contains(&p) {
                return Err(schema_err(
                    path,
                    line,
                    &field(&format!("candidates[{i}].prior")),
                    format!("prior {p} outside [0, 1]"),
                ));
            }
        }
        if let Some(s) = c.input_score {
            if !s.is_finite() {
                return Err(schema_err(
                    path,
                    line,
                    &field(&format!("candidates[{i}].input_score")),
                    "input score must be finite",
                ));
            }
        }
    }
    if m.is_target {
        if m.gold.is_none() {
            return Err(schema_err(
                path,
                line,
                &field("gold"),
                "target mention without a gold label",
            ));
        }
        if m.candidates.is_empty() {
            return Err(schema_err(
                path,
                line,
                &field("candidates"),
                "target mention with an empty candidate list",
            ));
        }
    }
    Ok(())
}

/// Loads a JSONL dataset, one document per line. Schema errors name the
/// line and the offending field.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    parse_dataset(BufReader::new(File::open(path)?), path)
}

/// Reader-based form of [`load_dataset`]; `path` only labels errors.
pub fn parse_dataset(reader: impl BufRead, path: &Path) -> Result<Dataset> {
    let mut documents = Vec::new();
    let mut seen_ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let mut de = serde_json::Deserializer::from_str(&line);
        let doc: Document = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            schema_err(path, lineno, &e.path().to_string(), e.inner().to_string())
        })?;
        if !seen_ids.insert(doc.doc_id.clone()) {
            return Err(Error::Validation(format!(
                "{}:{lineno}: duplicate doc_id `{}`",
                path.display(),
                doc.doc_id
            )));
        }
        for (mi, m) in doc.mentions.iter().enumerate() {
            validate_mention(m, path, lineno, mi)?;
        }
        documents.push(doc);
    }
    Ok(Dataset { documents })
}

// ---------------------------------------------------------------------------
// Predictions
// ---------------------------------------------------------------------------

/// Per-mention predictions keyed by `(doc_id, mention_index)`. `None` is
/// NIL: the mention was left unpredicted (written as entity id `-1`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Predictions {
    records: BTreeMap<(String, usize), Option<EntityId>>,
}

impl Predictions {
    pub fn insert(&mut self, doc_id: &str, mention_index: usize, entity: Option<EntityId>) {
        self.records
            .insert((doc_id.to_string(), mention_index), entity);
    }

    pub fn get(&self, doc_id: &str, mention_index: usize) -> Option<Option<EntityId>> {
        self.records
            .get(&(doc_id.to_string(), mention_index))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, usize), &Option<EntityId>)> {
        self.records.iter()
    }

    /// Collects engine assignments. Only target mentions are kept unless
    /// `all_mentions` is set.
    pub fn from_assignments(
        docs: &[Document],
        assignments: &[Vec<Assignment>],
        all_mentions: bool,
    ) -> Self {
        let mut out = Predictions::default();
        for (doc, doc_assignments) in docs.iter().zip(assignments) {
            for a in doc_assignments {
                if all_mentions || doc.mentions[a.mention_index].is_target {
                    out.insert(&doc.doc_id, a.mention_index, Some(a.entity));
                }
            }
        }
        out
    }

    /// Reads `doc_id<TAB>mention_index<TAB>entity_id` lines; `-1` is NIL.
    pub fn read(path: &Path) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut out = Predictions::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let lineno = idx + 1;
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::Ingestion {
                    path: path.to_path_buf(),
                    line: lineno,
                    message: format!("expected 3 tab-separated columns, got {}", cols.len()),
                });
            }
            let mention_index = cols[1].trim().parse::<usize>().map_err(|_| Error::Ingestion {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("expected a mention index, got `{}`", cols[1]),
            })?;
            let raw_id = cols[2].trim().parse::<i64>().map_err(|_| Error::Ingestion {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("expected an entity id or -1, got `{}`", cols[2]),
            })?;
            let entity = match raw_id {
                -1 => None,
                id if id >= 0 && id <= u32::MAX as i64 => Some(EntityId(id as u32)),
                id => {
                    return Err(Error::Ingestion {
                        path: path.to_path_buf(),
                        line: lineno,
                        message: format!("entity id {id} out of range"),
                    })
                }
            };
            out.records.insert((cols[0].to_string(), mention_index), entity);
        }
        Ok(out)
    }

    /// Writes the TSV form, sorted by `(doc_id, mention_index)`.
    pub fn write_to(&self, out: &mut impl Write) -> Result<()> {
        for ((doc_id, mention_index), entity) in &self.records {
            let id: i64 = entity.map(|e| e.0 as i64).unwrap_or(-1);
            writeln!(out, "{doc_id}\t{mention_index}\t{id}")?;
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = File::create(path)?;
        self.write_to(&mut f)
    }
}

// ---------------------------------------------------------------------------
// Micro-F1
// ---------------------------------------------------------------------------

/// Micro-averaged precision/recall/F1 over target mentions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_gold: usize,
    pub n_predicted: usize,
    pub n_correct: usize,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "gold mentions:    {}", self.n_gold)?;
        writeln!(f, "predicted:        {}", self.n_predicted)?;
        writeln!(f, "correct:          {}", self.n_correct)?;
        writeln!(f, "micro precision:  {:.4}", self.micro_precision)?;
        writeln!(f, "micro recall:     {:.4}", self.micro_recall)?;
        write!(f, "micro F1:         {:.4}", self.micro_f1)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Counts over target mentions: recall against all targets, precision
/// against non-NIL predictions. Predictions for unknown mentions are an
/// error; predictions for auxiliary mentions are ignored.
pub fn micro_f1(predictions: &Predictions, dataset: &Dataset) -> Result<EvalReport> {
    let mut mentions: HashMap<(&str, usize), &Mention> = HashMap::new();
    for doc in &dataset.documents {
        for (mi, m) in doc.mentions.iter().enumerate() {
            mentions.insert((doc.doc_id.as_str(), mi), m);
        }
    }
    for ((doc_id, mi), _) in predictions.iter() {
        if !mentions.contains_key(&(doc_id.as_str(), *mi)) {
            return Err(Error::Validation(format!(
                "prediction for unknown mention: doc `{doc_id}` index {mi}"
            )));
        }
    }
    let mut n_gold = 0;
    let mut n_predicted = 0;
    let mut n_correct = 0;
    for doc in &dataset.documents {
        for (mi, m) in doc.mentions.iter().enumerate() {
            if !m.is_target {
                continue;
            }
            n_gold += 1;
            if let Some(Some(pred)) = predictions.get(&doc.doc_id, mi) {
                n_predicted += 1;
                if Some(pred) == m.gold {
                    n_correct += 1;
                }
            }
        }
    }
    let p = ratio(n_correct, n_predicted);
    let r = ratio(n_correct, n_gold);
    let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    Ok(EvalReport {
        n_gold,
        n_predicted,
        n_correct,
        micro_precision: p,
        micro_recall: r,
        micro_f1: f1,
    })
}

/// End-to-end convenience: disambiguate and score in one call.
pub fn evaluate_pipeline(
    dataset: &Dataset,
    g: &LinkGraph,
    type_dict: &TypeDict,
    cfg: &PipelineConfig,
) -> Result<EvalReport> {
    let assignments = disambiguate_corpus(&dataset.documents, g, type_dict, cfg)?;
    let preds = Predictions::from_assignments(&dataset.documents, &assignments, false);
    micro_f1(&preds, dataset)
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

/// The swept parameter space: every combination of `alpha`, filter
/// threshold, measure, and aggregation is evaluated exactly once, in
/// enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub alphas: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub measures: Vec<RelatednessMeasure>,
    pub aggregations: Vec<AggregationMode>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            alphas: (0..=10).map(|i| i as f64 / 10.0).collect(),
            thresholds: vec![FILTER_DISABLED, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            measures: RelatednessMeasure::ALL.to_vec(),
            aggregations: AggregationMode::ALL.to_vec(),
        }
    }
}

impl SweepGrid {
    pub fn len(&self) -> usize {
        self.alphas.len() * self.thresholds.len() * self.measures.len() * self.aggregations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One evaluated grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub threshold: f64,
    pub measure: RelatednessMeasure,
    pub aggregation: AggregationMode,
    pub micro_f1: f64,
}

/// Renders the sweep table as CSV with the fixed header
/// `alpha,threshold,measure,aggregation,micro_f1`.
pub fn sweep_table_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("alpha,threshold,measure,aggregation,micro_f1\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.6}\n",
            r.alpha, r.threshold, r.measure, r.aggregation, r.micro_f1
        ));
    }
    out
}

/// Evaluates micro-F1 for every grid cell on the development set and
/// returns the best configuration (ties: first in enumeration order)
/// together with the full table. Non-swept knobs (filter k, fallback,
/// parallelism) come from `base`.
pub fn grid_search(
    dev: &Dataset,
    grid: &SweepGrid,
    g: &LinkGraph,
    type_dict: &TypeDict,
    base: &PipelineConfig,
) -> Result<(PipelineConfig, Vec<SweepRow>)> {
    if dev.documents.is_empty() {
        return Err(Error::Validation("grid search needs a nonempty dev set".into()));
    }
    if grid.is_empty() {
        return Err(Error::Validation("grid search needs a nonempty grid".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    let mut best: Option<(PipelineConfig, f64)> = None;
    for &alpha in &grid.alphas {
        for &threshold in &grid.thresholds {
            for &measure in &grid.measures {
                for &aggregation in &grid.aggregations {
                    let cfg = PipelineConfig {
                        weights: CombinationWeights::two_way(alpha)?,
                        filter: FilterConfig {
                            t: threshold,
                            ..base.filter
                        },
                        measure,
                        aggregation,
                        ..*base
                    };
                    let report = evaluate_pipeline(dev, g, type_dict, &cfg)?;
                    rows.push(SweepRow {
                        alpha,
                        threshold,
                        measure,
                        aggregation,
                        micro_f1: report.micro_f1,
                    });
                    if best.as_ref().map(|(_, f)| report.micro_f1 > *f).unwrap_or(true) {
                        best = Some((cfg, report.micro_f1));
                    }
                }
            }
        }
    }
    Ok((best.expect("nonempty grid").0, rows))
}

// ---------------------------------------------------------------------------
// Overshadowing analysis
// ---------------------------------------------------------------------------

/// Paired Top/Shadow robustness statistics. A model that answers the same
/// way for both sides of a pair is over-relying on surface-form priors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OvershadowReport {
    pub n_pairs: usize,
    /// % of pairs where the two predictions differ.
    pub pct_pred_differs: f64,
    pub pct_top_correct: f64,
    pub pct_shadow_correct: f64,
}

impl fmt::Display for OvershadowReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "paired entries:                 {}", self.n_pairs)?;
        writeln!(f, "pred(top) != pred(shadow), %:   {:.1}", self.pct_pred_differs)?;
        writeln!(f, "pred(top) is correct, %:        {:.1}", self.pct_top_correct)?;
        write!(f, "pred(shadow) is correct, %:     {:.1}", self.pct_shadow_correct)
    }
}

/// One evaluated side of a pair: surface form, gold, and prediction
/// (`None` = NIL or unpredicted).
#[derive(Debug, Clone)]
struct TargetEntry {
    surface: String,
    gold: EntityId,
    prediction: Option<EntityId>,
}

fn target_entries(dataset: &Dataset, preds: &Predictions) -> Vec<TargetEntry> {
    let mut entries: Vec<(String, usize, TargetEntry)> = Vec::new();
    for doc in &dataset.documents {
        for (mi, m) in doc.mentions.iter().enumerate() {
            if !m.is_target {
                continue;
            }
            entries.push((
                doc.doc_id.clone(),
                mi,
                TargetEntry {
                    surface: m.surface.clone(),
                    gold: m.gold.expect("validated target"),
                    prediction: preds.get(&doc.doc_id, mi).flatten(),
                },
            ));
        }
    }
    // sort by (surface, doc_id, mention_index) so pairing is invariant to
    // document order in the file
    entries.sort_by(|a, b| {
        (a.2.surface.as_str(), a.0.as_str(), a.1).cmp(&(b.2.surface.as_str(), b.0.as_str(), b.1))
    });
    entries.into_iter().map(|(_, _, e)| e).collect()
}

/// Pairs Top and Shadow entries by exact target surface form (entries
/// without a counterpart are dropped), then reports how often the two
/// predictions coincide and how often each side is correct.
pub fn overshadow_analysis(
    preds_top: &Predictions,
    preds_shadow: &Predictions,
    dataset_top: &Dataset,
    dataset_shadow: &Dataset,
) -> Result<OvershadowReport> {
    let mut by_surface: BTreeMap<String, (Vec<TargetEntry>, Vec<TargetEntry>)> = BTreeMap::new();
    for e in target_entries(dataset_top, preds_top) {
        by_surface.entry(e.surface.clone()).or_default().0.push(e);
    }
    for e in target_entries(dataset_shadow, preds_shadow) {
        match by_surface.entry(e.surface.clone()) {
            Entry::Occupied(mut o) => o.get_mut().1.push(e),
            // shadow-only surfaces can never pair; skip the allocation
            Entry::Vacant(_) => {}
        }
    }
    let mut n_pairs = 0usize;
    let mut n_differs = 0usize;
    let mut n_top_correct = 0usize;
    let mut n_shadow_correct = 0usize;
    for (_, (top, shadow)) in by_surface {
        for (t, s) in top.iter().zip(shadow.iter()) {
            n_pairs += 1;
            if t.prediction != s.prediction {
                n_differs += 1;
            }
            if t.prediction == Some(t.gold) {
                n_top_correct += 1;
            }
            if s.prediction == Some(s.gold) {
                n_shadow_correct += 1;
            }
        }
    }
    if n_pairs == 0 {
        return Err(Error::Validation(
            "overshadowing analysis needs at least one surface form shared \
             between the Top and Shadow datasets"
                .into(),
        ));
    }
    let pct = |n: usize| 100.0 * n as f64 / n_pairs as f64;
    Ok(OvershadowReport {
        n_pairs,
        pct_pred_differs: pct(n_differs),
        pct_top_correct: pct(n_top_correct),
        pct_shadow_correct: pct(n_shadow_correct),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::Candidate;

    fn e(id: u32) -> EntityId {
        EntityId(id)
    }

    fn target(surface: &str, gold: u32, cands: &[u32]) -> Mention {
        Mention {
            start: 0,
            end: surface.len(),
            surface: surface.to_string(),
            is_target: true,
            gold: Some(e(gold)),
            type_predictions: vec![],
            candidates: cands.iter().map(|&c| Candidate::new(e(c))).collect(),
        }
    }

    fn doc(id: &str, mentions: Vec<Mention>) -> Document {
        Document {
            doc_id: id.to_string(),
            mentions,
        }
    }

    fn write_jsonl(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f.flush().unwrap();
        f
    }

    const GOOD_LINE: &str = r#"{"doc_id":"d1","mentions":[{"start":0,"end":4,"surface":"Rome","is_target":true,"gold":7,"type_predictions":[["LOC",0.9],["ORG",0.1]],"candidates":[{"entity":7,"prior":0.8,"input_score":0.5},{"entity":8,"prior":0.2,"input_score":0.1}]}]}"#;

    #[test]
    fn load_well_formed_dataset() {
        let f = write_jsonl(&[
            GOOD_LINE,
            r#"{"doc_id":"d2","mentions":[{"start":1,"end":2,"surface":"x","candidates":[]}]}"#,
        ]);
        let ds = load_dataset(f.path()).unwrap();
        assert_eq!(ds.documents.len(), 2);
        assert_eq!(ds.target_mentions(), vec![(0, 0)]);
        assert_eq!(ds.documents[0].mentions[0].type_predictions.len(), 2);
    }

    #[test]
    fn empty_file_is_an_empty_dataset() {
        let f = write_jsonl(&[]);
        assert!(load_dataset(f.path()).unwrap().documents.is_empty());
    }

    #[test]
    fn missing_gold_on_target_is_a_schema_error() {
        let f = write_jsonl(&[
            r#"{"doc_id":"d","mentions":[{"start":0,"end":1,"surface":"x","is_target":true,"candidates":[{"entity":1}]}]}"#,
        ]);
        let err = load_dataset(f.path()).unwrap_err();
        match err {
            Error::Schema { line, field, .. } => {
                assert_eq!(line, 1);
                assert!(field.contains("gold"), "{field}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn empty_candidates_on_target_is_a_schema_error() {
        let f = write_jsonl(&[
            r#"{"doc_id":"d","mentions":[{"start":0,"end":1,"surface":"x","is_target":true,"gold":1,"candidates":[]}]}"#,
        ]);
        let err = load_dataset(f.path()).unwrap_err();
        assert!(matches!(err, Error::Schema { .. }), "{err}");
    }

    #[test]
    fn malformed_json_names_line_and_field() {
        let f = write_jsonl(&[
            GOOD_LINE,
            r#"{"doc_id":"d2","mentions":[{"start":0,"end":1,"surface":"x","candidates":[{"entity":"seven"}]}]}"#,
        ]);
        let err = load_dataset(f.path()).unwrap_err();
        match err {
            Error::Schema { line, field, .. } => {
                assert_eq!(line, 2);
                assert!(field.contains("entity"), "{field}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn unsorted_type_predictions_are_rejected() {
        let f = write_jsonl(&[
            r#"{"doc_id":"d","mentions":[{"start":0,"end":1,"surface":"x","type_predictions":[["A",0.2],["B",0.9]],"candidates":[{"entity":1}]}]}"#,
        ]);
        assert!(matches!(
            load_dataset(f.path()).unwrap_err(),
            Error::Schema { .. }
        ));
    }

    #[test]
    fn duplicate_doc_ids_are_rejected() {
        let f = write_jsonl(&[GOOD_LINE, GOOD_LINE]);
        assert!(matches!(
            load_dataset(f.path()).unwrap_err(),
            Error::Validation(_)
        ));
    }

    #[test]
    fn micro_f1_perfect_predictions() {
        let ds = Dataset::new(vec![doc("d1", vec![target("a", 1, &[1, 2])])]);
        let mut preds = Predictions::default();
        preds.insert("d1", 0, Some(e(1)));
        let r = micro_f1(&preds, &ds).unwrap();
        assert_eq!((r.micro_precision, r.micro_recall, r.micro_f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn micro_f1_partial_counts() {
        // 3 targets, 2 predicted, 1 correct -> P=0.5, R=1/3, F1=0.4
        let ds = Dataset::new(vec![
            doc("d1", vec![target("a", 1, &[1, 2])]),
            doc("d2", vec![target("b", 2, &[1, 2])]),
            doc("d3", vec![target("c", 3, &[3, 4])]),
        ]);
        let mut preds = Predictions::default();
        preds.insert("d1", 0, Some(e(1)));
        preds.insert("d2", 0, Some(e(1)));
        let r = micro_f1(&preds, &ds).unwrap();
        assert_eq!((r.n_gold, r.n_predicted, r.n_correct), (3, 2, 1));
        assert!((r.micro_precision - 0.5).abs() < 1e-12);
        assert!((r.micro_recall - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.micro_f1 - 0.4).abs() < 1e-12);
    }

    #[test]
    fn micro_f1_equals_accuracy_when_every_target_is_predicted() {
        let ds = Dataset::new(vec![
            doc("d1", vec![target("a", 1, &[1, 2])]),
            doc("d2", vec![target("b", 2, &[1, 2])]),
            doc("d3", vec![target("c", 3, &[3, 4])]),
            doc("d4", vec![target("d", 4, &[3, 4])]),
        ]);
        let mut preds = Predictions::default();
        preds.insert("d1", 0, Some(e(1)));
        preds.insert("d2", 0, Some(e(1)));
        preds.insert("d3", 0, Some(e(3)));
        preds.insert("d4", 0, Some(e(3)));
        let r = micro_f1(&preds, &ds).unwrap();
        assert_eq!(r.micro_precision, r.micro_recall);
        assert!((r.micro_f1 - 0.5).abs() < 1e-12, "accuracy 2/4");
    }

    #[test]
    fn micro_f1_zero_predictions() {
        let ds = Dataset::new(vec![doc("d1", vec![target("a", 1, &[1])])]);
        let r = micro_f1(&Predictions::default(), &ds).unwrap();
        assert_eq!(r.micro_f1, 0.0);
    }

    #[test]
    fn micro_f1_nil_predictions_do_not_count_as_predicted() {
        let ds = Dataset::new(vec![
            doc("d1", vec![target("a", 1, &[1])]),
            doc("d2", vec![target("b", 2, &[2])]),
        ]);
        let mut preds = Predictions::default();
        preds.insert("d1", 0, Some(e(1)));
        preds.insert("d2", 0, None); // NIL
        let r = micro_f1(&preds, &ds).unwrap();
        assert_eq!((r.n_gold, r.n_predicted, r.n_correct), (2, 1, 1));
    }

    #[test]
    fn micro_f1_rejects_unknown_mentions() {
        let ds = Dataset::new(vec![doc("d1", vec![target("a", 1, &[1])])]);
        let mut preds = Predictions::default();
        preds.insert("nope", 0, Some(e(1)));
        assert!(matches!(
            micro_f1(&preds, &ds).unwrap_err(),
            Error::Validation(_)
        ));
    }

    #[test]
    fn predictions_tsv_round_trip() {
        let mut preds = Predictions::default();
        preds.insert("b", 1, Some(e(42)));
        preds.insert("a", 0, None);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("preds.tsv");
        preds.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "a\t0\t-1\nb\t1\t42\n");
        assert_eq!(Predictions::read(&path).unwrap(), preds);
    }

    #[test]
    fn default_grid_has_the_documented_shape() {
        let grid = SweepGrid::default();
        assert_eq!(grid.alphas.len(), 11);
        assert_eq!(grid.thresholds.len(), 7);
        assert_eq!(grid.len(), 11 * 7 * 4 * 3);
        assert!(grid.thresholds.contains(&FILTER_DISABLED));
        assert!(grid.thresholds.contains(&1.0));
    }

    #[test]
    fn overshadow_counts_on_a_toy_fixture() {
        // 4 pairs, predictions differ in exactly 1
        let ds_top = Dataset::new(vec![
            doc("t1", vec![target("s1", 1, &[1, 2])]),
            doc("t2", vec![target("s2", 3, &[3, 4])]),
            doc("t3", vec![target("s3", 5, &[5, 6])]),
            doc("t4", vec![target("s4", 7, &[7, 8])]),
        ]);
        let ds_shadow = Dataset::new(vec![
            doc("s1", vec![target("s1", 2, &[1, 2])]),
            doc("s2", vec![target("s2", 4, &[3, 4])]),
            doc("s3", vec![target("s3", 6, &[5, 6])]),
            doc("s4", vec![target("s4", 8, &[7, 8])]),
        ]);
        let mut pt = Predictions::default();
        let mut ps = Predictions::default();
        pt.insert("t1", 0, Some(e(1)));
        ps.insert("s1", 0, Some(e(2))); // differs, both correct
        for (td, sd) in [("t2", "s2"), ("t3", "s3"), ("t4", "s4")] {
            pt.insert(td, 0, Some(e(99)));
            ps.insert(sd, 0, Some(e(99))); // same prediction, both wrong
        }
        let r = overshadow_analysis(&pt, &ps, &ds_top, &ds_shadow).unwrap();
        assert_eq!(r.n_pairs, 4);
        assert!((r.pct_pred_differs - 25.0).abs() < 1e-12);
        assert!((r.pct_top_correct - 25.0).abs() < 1e-12);
        assert!((r.pct_shadow_correct - 25.0).abs() < 1e-12);
    }

    #[test]
    fn overshadow_identical_predictions_never_differ() {
        let ds_top = Dataset::new(vec![doc("t1", vec![target("s", 1, &[1, 2])])]);
        let ds_shadow = Dataset::new(vec![doc("s1", vec![target("s", 2, &[1, 2])])]);
        let mut pt = Predictions::default();
        let mut ps = Predictions::default();
        pt.insert("t1", 0, Some(e(1)));
        ps.insert("s1", 0, Some(e(1)));
        let r = overshadow_analysis(&pt, &ps, &ds_top, &ds_shadow).unwrap();
        assert_eq!(r.pct_pred_differs, 0.0);
    }

    #[test]
    fn overshadow_zero_pairs_is_an_error() {
        let ds_top = Dataset::new(vec![doc("t1", vec![target("only-top", 1, &[1])])]);
        let ds_shadow = Dataset::new(vec![doc("s1", vec![target("only-shadow", 2, &[2])])]);
        assert!(overshadow_analysis(
            &Predictions::default(),
            &Predictions::default(),
            &ds_top,
            &ds_shadow
        )
        .is_err());
    }

    #[test]
    fn overshadow_is_invariant_to_document_shuffling() {
        let mk_top = |order: &[usize]| {
            let docs = [
                doc("t1", vec![target("x", 1, &[1])]),
                doc("t2", vec![target("x", 2, &[2])]),
                doc("t3", vec![target("y", 3, &[3])]),
            ];
            Dataset::new(order.iter().map(|&i| docs[i].clone()).collect())
        };
        let ds_shadow = Dataset::new(vec![
            doc("s1", vec![target("x", 9, &[9])]),
            doc("s2", vec![target("y", 8, &[8])]),
        ]);
        let mut pt = Predictions::default();
        pt.insert("t1", 0, Some(e(1)));
        pt.insert("t2", 0, Some(e(5)));
        pt.insert("t3", 0, Some(e(3)));
        let mut ps = Predictions::default();
        ps.insert("s1", 0, Some(e(9)));
        ps.insert("s2", 0, Some(e(7)));
        let a = overshadow_analysis(&pt, &ps, &mk_top(&[0, 1, 2]), &ds_shadow).unwrap();
        let b = overshadow_analysis(&pt, &ps, &mk_top(&[2, 1, 0]), &ds_shadow).unwrap();
        assert_eq!(a, b);
    }
}
