//! Browser bindings: build a link graph from pasted edge lines and expose
//! the pipeline's explorable surfaces (pairwise relatedness, step-by-step
//! disambiguation traces, alpha × threshold sweep heatmaps) as JSON for a
//! static demo page.
//!
//! The `api` module is plain Rust (errors as strings) so it runs and tests
//! on any target; the `#[wasm_bindgen]` exports are thin wrappers that
//! only translate errors into thrown JS values.

use wasm_bindgen::prelude::*;

pub mod api {
    use std::io::Cursor;
    use std::path::Path;

    use serde::Serialize;

    use icelink::config::PipelineConfig;
    use icelink::eval::{evaluate_pipeline, parse_dataset, Dataset};
    use icelink::graph::{build_graph, parse_edges, LinkGraph};
    use icelink::ice::disambiguate_document;
    use icelink::relatedness::{score, AggregationMode, RelatednessMeasure};
    use icelink::scoring::CombinationWeights;
    use icelink::typing::{FilterConfig, TypeDict, FILTER_DISABLED};

    type ApiResult = Result<String, String>;

    fn err(e: impl std::fmt::Display) -> String {
        e.to_string()
    }

    fn graph_from_text(edges: &str) -> Result<LinkGraph, String> {
        let parsed = parse_edges(Cursor::new(edges), Path::new("edges")).map_err(err)?;
        build_graph(parsed, [], None).map_err(err)
    }

    fn dataset_from_text(dataset_jsonl: &str) -> Result<Dataset, String> {
        parse_dataset(Cursor::new(dataset_jsonl), Path::new("dataset")).map_err(err)
    }

    fn dict_from_text(type_dict: &str) -> Result<TypeDict, String> {
        TypeDict::parse(Cursor::new(type_dict), Path::new("types")).map_err(err)
    }

    fn config_for(
        alpha: f64,
        threshold: f64,
        measure: &str,
        aggregation: &str,
    ) -> Result<PipelineConfig, String> {
        Ok(PipelineConfig {
            weights: CombinationWeights::two_way(alpha).map_err(err)?,
            filter: FilterConfig {
                t: threshold,
                ..FilterConfig::default()
            },
            measure: measure.parse().map_err(err)?,
            aggregation: aggregation.parse().map_err(err)?,
            ..PipelineConfig::default()
        })
    }

    #[derive(Serialize)]
    struct MatrixEntity {
        id: u32,
        inlinks: usize,
    }

    #[derive(Serialize)]
    struct MatrixOutput {
        total_pages: u64,
        entities: Vec<MatrixEntity>,
        scores: Vec<Vec<f64>>,
    }

    /// Pairwise relatedness of every entity in the pasted edge list under
    /// one measure. Row/column order follows ascending entity id.
    pub fn relatedness_matrix(edges: &str, measure: &str) -> ApiResult {
        let g = graph_from_text(edges)?;
        let m: RelatednessMeasure = measure.parse().map_err(err)?;
        let ids = g.entity_ids();
        let scores: Vec<Vec<f64>> = ids
            .iter()
            .map(|&a| ids.iter().map(|&b| score(&g, m, a, b)).collect())
            .collect();
        let out = MatrixOutput {
            total_pages: g.total_pages(),
            entities: ids
                .iter()
                .map(|&id| MatrixEntity {
                    id: id.0,
                    inlinks: g.inlinks(id).len(),
                })
                .collect(),
            scores,
        };
        serde_json::to_string(&out).map_err(err)
    }

    #[derive(Serialize)]
    struct TraceStep {
        step: usize,
        mention_index: usize,
        surface: String,
        entity: u32,
        gold: Option<u32>,
        correct: Option<bool>,
        is_seed: bool,
        coherence: f64,
        input: f64,
        prior: f64,
        #[serde(rename = "final")]
        final_score: f64,
    }

    #[derive(Serialize)]
    struct TraceDocument {
        doc_id: String,
        steps: Vec<TraceStep>,
    }

    /// Runs the full pipeline over a pasted JSONL dataset and returns the
    /// resolution order with per-step score breakdowns.
    pub fn disambiguate_trace(
        edges: &str,
        dataset_jsonl: &str,
        type_dict: &str,
        alpha: f64,
        threshold: f64,
        measure: &str,
        aggregation: &str,
    ) -> ApiResult {
        let g = graph_from_text(edges)?;
        let dataset = dataset_from_text(dataset_jsonl)?;
        let dict = dict_from_text(type_dict)?;
        let cfg = config_for(alpha, threshold, measure, aggregation)?;

        let mut documents = Vec::new();
        for doc in &dataset.documents {
            let mut assignments = disambiguate_document(doc, &g, &dict, &cfg).map_err(err)?;
            assignments.sort_by_key(|a| a.step);
            let steps = assignments
                .into_iter()
                .map(|a| {
                    let mention = &doc.mentions[a.mention_index];
                    TraceStep {
                        step: a.step,
                        mention_index: a.mention_index,
                        surface: mention.surface.clone(),
                        entity: a.entity.0,
                        gold: mention.gold.map(|e| e.0),
                        correct: mention.gold.map(|gold| gold == a.entity),
                        is_seed: a.is_seed,
                        coherence: a.breakdown.coherence,
                        input: a.breakdown.input,
                        prior: a.breakdown.prior,
                        final_score: a.breakdown.final_score,
                    }
                })
                .collect();
            documents.push(TraceDocument {
                doc_id: doc.doc_id.clone(),
                steps,
            });
        }
        serde_json::to_string(&documents).map_err(err)
    }

    #[derive(Serialize)]
    struct HeatmapOutput {
        alphas: Vec<f64>,
        thresholds: Vec<f64>,
        /// `f1[threshold_index][alpha_index]`, micro-F1 over target mentions.
        f1: Vec<Vec<f64>>,
    }

    /// Micro-F1 for every alpha × filter-threshold combination under one
    /// measure/aggregation: the data behind a sweep heatmap.
    pub fn sweep_heatmap(
        edges: &str,
        dataset_jsonl: &str,
        type_dict: &str,
        measure: &str,
        aggregation: &str,
    ) -> ApiResult {
        let g = graph_from_text(edges)?;
        let dataset = dataset_from_text(dataset_jsonl)?;
        let dict = dict_from_text(type_dict)?;
        let measure: RelatednessMeasure = measure.parse().map_err(err)?;
        let aggregation: AggregationMode = aggregation.parse().map_err(err)?;

        let alphas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let thresholds = vec![FILTER_DISABLED, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
        let mut f1 = Vec::with_capacity(thresholds.len());
        for &t in &thresholds {
            let mut row = Vec::with_capacity(alphas.len());
            for &alpha in &alphas {
                let cfg = PipelineConfig {
                    weights: CombinationWeights::two_way(alpha).map_err(err)?,
                    filter: FilterConfig {
                        t,
                        ..FilterConfig::default()
                    },
                    measure,
                    aggregation,
                    ..PipelineConfig::default()
                };
                let report = evaluate_pipeline(&dataset, &g, &dict, &cfg).map_err(err)?;
                row.push(report.micro_f1);
            }
            f1.push(row);
        }
        serde_json::to_string(&HeatmapOutput {
            alphas,
            thresholds,
            f1,
        })
        .map_err(err)
    }
}

fn to_js(result: Result<String, String>) -> Result<String, JsValue> {
    result.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn relatedness_matrix(edges: &str, measure: &str) -> Result<String, JsValue> {
    to_js(api::relatedness_matrix(edges, measure))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn disambiguate_trace(
    edges: &str,
    dataset_jsonl: &str,
    type_dict: &str,
    alpha: f64,
    threshold: f64,
    measure: &str,
    aggregation: &str,
) -> Result<String, JsValue> {
    to_js(api::disambiguate_trace(
        edges,
        dataset_jsonl,
        type_dict,
        alpha,
        threshold,
        measure,
        aggregation,
    ))
}

#[wasm_bindgen]
pub fn sweep_heatmap(
    edges: &str,
    dataset_jsonl: &str,
    type_dict: &str,
    measure: &str,
    aggregation: &str,
) -> Result<String, JsValue> {
    to_js(api::sweep_heatmap(
        edges,
        dataset_jsonl,
        type_dict,
        measure,
        aggregation,
    ))
}
