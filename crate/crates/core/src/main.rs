//! Command-line front end: graph building, disambiguation runs, evaluation,
//! grid-search tuning, overshadowing analysis, and ad-hoc relatedness
//! queries.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use icelink::config::PipelineConfig;
use icelink::error::{Error, Result};
use icelink::eval::{
    grid_search, load_dataset, micro_f1, overshadow_analysis, sweep_table_csv, Predictions,
    SweepGrid, SweepRow,
};
use icelink::graph::{build_graph_from_files, EntityId, LinkGraph};
use icelink::ice::disambiguate_corpus;
use icelink::relatedness::{score, AggregationMode, RelatednessMeasure};
use icelink::scoring::{CombinationWeights, ScoreFallback};
use icelink::typing::TypeDict;

#[derive(Debug, Parser)]
#[command(name = "icelink", version, about = "Collective entity disambiguation over a link graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a link-graph snapshot from edge and metadata files.
    BuildGraph {
        /// Edge file: one `source_id<TAB>target_id` per line.
        #[arg(long)]
        edges: PathBuf,
        /// Metadata file: `id<TAB>title<TAB>type` (type may be empty).
        #[arg(long)]
        metadata: Option<PathBuf>,
        /// Snapshot output path.
        #[arg(long)]
        out: PathBuf,
        /// Override the page-universe size W instead of counting distinct ids.
        #[arg(long)]
        total_pages: Option<u64>,
    },
    /// Run the disambiguation pipeline over a dataset.
    Disambiguate {
        #[arg(long)]
        dataset: PathBuf,
        /// Graph snapshot produced by `build-graph`.
        #[arg(long)]
        graph: PathBuf,
        /// Entity-type dictionary: `entity_id<TAB>type_label`.
        #[arg(long)]
        type_dict: Option<PathBuf>,
        /// Predictions output (TSV). Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a step-by-step trace TSV to this path.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Emit predictions for auxiliary mentions too, not just targets.
        #[arg(long)]
        all_mentions: bool,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Score a predictions file against a dataset (micro-F1).
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Grid-search pipeline parameters on a development set.
    Tune {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        type_dict: Option<PathBuf>,
        /// Comma-separated alpha values (default 0,0.1,...,1).
        #[arg(long)]
        alphas: Option<String>,
        /// Comma-separated thresholds (default -1,0.5,0.6,0.7,0.8,0.9,1).
        #[arg(long, allow_hyphen_values = true)]
        thresholds: Option<String>,
        /// Comma-separated measures (default all four).
        #[arg(long)]
        measures: Option<String>,
        /// Comma-separated aggregations (default max,min,avg).
        #[arg(long)]
        aggregations: Option<String>,
        /// Write the full sweep table CSV here (default stdout).
        #[arg(long)]
        table_out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Paired Top/Shadow overshadowing robustness analysis.
    AnalyzeOvershadowing {
        #[arg(long)]
        preds_top: PathBuf,
        #[arg(long)]
        preds_shadow: PathBuf,
        #[arg(long)]
        dataset_top: PathBuf,
        #[arg(long)]
        dataset_shadow: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Query pairwise relatedness scores from a graph snapshot.
    Relatedness {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value = "milne_witten")]
        measure: RelatednessMeasure,
        #[arg(long, requires = "e2")]
        e1: Option<u32>,
        #[arg(long, requires = "e1")]
        e2: Option<u32>,
        /// Batch mode: TSV of `e1<TAB>e2` pairs; each line is echoed with a
        /// score column appended.
        #[arg(long, conflicts_with = "e1")]
        pairs: Option<PathBuf>,
        /// Batch output path (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Pipeline knobs shared by `disambiguate` and `tune`. Precedence:
/// built-in defaults, then `--config` file, then these flags.
#[derive(Debug, Args)]
struct ConfigFlags {
    /// Key=value config file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Coherence weight; input weight becomes 1-alpha, prior weight 0.
    #[arg(long, conflicts_with = "weights")]
    alpha: Option<f64>,
    /// Three comma-separated weights: coherence,input,prior.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    filter_threshold: Option<f64>,
    #[arg(long)]
    filter_k: Option<usize>,
    /// Disable type-based candidate filtering.
    #[arg(long)]
    no_filter: bool,
    #[arg(long)]
    measure: Option<RelatednessMeasure>,
    #[arg(long)]
    aggregation: Option<AggregationMode>,
    /// Input-score fallback when the dataset carries none: prior or uniform.
    #[arg(long)]
    fallback: Option<ScoreFallback>,
    /// Worker threads for document-level parallelism.
    #[arg(long)]
    parallelism: Option<usize>,
}

impl ConfigFlags {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if let Some(alpha) = self.alpha {
            cfg.weights = CombinationWeights::two_way(alpha)?;
        }
        if let Some(weights) = &self.weights {
            cfg.apply_kv("weights", weights)?;
        }
        if let Some(t) = self.filter_threshold {
            cfg.filter.t = t;
        }
        if let Some(k) = self.filter_k {
            cfg.filter.k = k;
        }
        if self.no_filter {
            cfg.filter.enabled = false;
        }
        if let Some(m) = self.measure {
            cfg.measure = m;
        }
        if let Some(a) = self.aggregation {
            cfg.aggregation = a;
        }
        if let Some(f) = self.fallback {
            cfg.fallback = f;
        }
        if let Some(p) = self.parallelism {
            cfg.parallelism = p;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("icelink: {err}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildGraph {
            edges,
            metadata,
            out,
            total_pages,
        } => cmd_build_graph(&edges, metadata.as_deref(), &out, total_pages),
        Command::Disambiguate {
            dataset,
            graph,
            type_dict,
            out,
            trace,
            all_mentions,
            config,
        } => cmd_disambiguate(
            &dataset,
            &graph,
            type_dict.as_deref(),
            out.as_deref(),
            trace.as_deref(),
            all_mentions,
            &config,
        ),
        Command::Evaluate {
            predictions,
            dataset,
            json,
        } => cmd_evaluate(&predictions, &dataset, json),
        Command::Tune {
            dataset,
            graph,
            type_dict,
            alphas,
            thresholds,
            measures,
            aggregations,
            table_out,
            json,
            config,
        } => cmd_tune(
            &dataset,
            &graph,
            type_dict.as_deref(),
            alphas.as_deref(),
            thresholds.as_deref(),
            measures.as_deref(),
            aggregations.as_deref(),
            table_out.as_deref(),
            json,
            &config,
        ),
        Command::AnalyzeOvershadowing {
            preds_top,
            preds_shadow,
            dataset_top,
            dataset_shadow,
            json,
        } => {
            cmd_analyze_overshadowing(&preds_top, &preds_shadow, &dataset_top, &dataset_shadow, json)
        }
        Command::Relatedness {
            graph,
            measure,
            e1,
            e2,
            pairs,
            out,
        } => cmd_relatedness(&graph, measure, e1, e2, pairs.as_deref(), out.as_deref()),
    }
}

fn cmd_build_graph(
    edges: &Path,
    metadata: Option<&Path>,
    out: &Path,
    total_pages: Option<u64>,
) -> Result<()> {
    let g = build_graph_from_files(edges, metadata, total_pages)?;
    g.write_snapshot(out)?;
    println!("entities: {}", g.entity_count());
    println!("total_pages: {}", g.total_pages());
    println!("snapshot: {}", out.display());
    Ok(())
}

fn load_type_dict(path: Option<&Path>) -> Result<TypeDict> {
    match path {
        Some(p) => TypeDict::load(p),
        None => Ok(TypeDict::default()),
    }
}

fn cmd_disambiguate(
    dataset_path: &Path,
    graph_path: &Path,
    type_dict_path: Option<&Path>,
    out: Option<&Path>,
    trace: Option<&Path>,
    all_mentions: bool,
    config: &ConfigFlags,
) -> Result<()> {
    let cfg = config.resolve()?;
    let dataset = load_dataset(dataset_path)?;
    let g = LinkGraph::read_snapshot(graph_path)?;
    let type_dict = load_type_dict(type_dict_path)?;

    let assignments = disambiguate_corpus(&dataset.documents, &g, &type_dict, &cfg)?;
    let preds = Predictions::from_assignments(&dataset.documents, &assignments, all_mentions);
    match out {
        Some(path) => preds.write(path)?,
        None => {
            let stdout = std::io::stdout();
            preds.write_to(&mut stdout.lock())?;
        }
    }

    if let Some(trace_path) = trace {
        let mut w = BufWriter::new(File::create(trace_path)?);
        writeln!(
            w,
            "doc_id\tstep\tmention_index\tentity\tis_seed\tcoherence\tinput\tprior\tfinal"
        )?;
        // stable ordering: documents by id, lines by resolution step
        let mut order: Vec<usize> = (0..dataset.documents.len()).collect();
        order.sort_by(|&a, &b| dataset.documents[a].doc_id.cmp(&dataset.documents[b].doc_id));
        for di in order {
            let doc = &dataset.documents[di];
            let mut rows = assignments[di].clone();
            rows.sort_by_key(|a| a.step);
            for a in rows {
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                    doc.doc_id,
                    a.step,
                    a.mention_index,
                    a.entity,
                    a.is_seed,
                    a.breakdown.coherence,
                    a.breakdown.input,
                    a.breakdown.prior,
                    a.breakdown.final_score
                )?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

fn cmd_evaluate(predictions: &Path, dataset: &Path, json: bool) -> Result<()> {
    let preds = Predictions::read(predictions)?;
    let ds = load_dataset(dataset)?;
    let report = micro_f1(&preds, &ds)?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("serializable report")
        );
    } else {
        println!("{report}");
    }
    Ok(())
}

fn parse_list<T, F>(raw: Option<&str>, parse: F) -> Result<Option<Vec<T>>>
where
    F: Fn(&str) -> Result<T>,
{
    match raw {
        None => Ok(None),
        Some(s) => s
            .split(',')
            .map(|part| parse(part.trim()))
            .collect::<Result<Vec<T>>>()
            .map(Some),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_tune(
    dataset_path: &Path,
    graph_path: &Path,
    type_dict_path: Option<&Path>,
    alphas: Option<&str>,
    thresholds: Option<&str>,
    measures: Option<&str>,
    aggregations: Option<&str>,
    table_out: Option<&Path>,
    json: bool,
    config: &ConfigFlags,
) -> Result<()> {
    let base = config.resolve()?;
    let dev = load_dataset(dataset_path)?;
    let g = LinkGraph::read_snapshot(graph_path)?;
    let type_dict = load_type_dict(type_dict_path)?;

    let defaults = SweepGrid::default();
    let parse_f64 = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::Config(format!("expected a number, got `{s}`")))
    };
    let grid = SweepGrid {
        alphas: parse_list(alphas, parse_f64)?.unwrap_or(defaults.alphas),
        thresholds: parse_list(thresholds, parse_f64)?.unwrap_or(defaults.thresholds),
        measures: parse_list(measures, |s| s.parse())?.unwrap_or(defaults.measures),
        aggregations: parse_list(aggregations, |s| s.parse())?.unwrap_or(defaults.aggregations),
    };

    let (best, rows) = grid_search(&dev, &grid, &g, &type_dict, &base)?;
    let best_row = best_row(&rows).expect("nonempty grid");
    let csv = sweep_table_csv(&rows);

    if json {
        #[derive(serde::Serialize)]
        struct TuneOutput<'a> {
            best: &'a SweepRow,
            rows: &'a [SweepRow],
        }
        println!(
            "{}",
            serde_json::to_string_pretty(&TuneOutput {
                best: best_row,
                rows: &rows
            })
            .expect("serializable sweep")
        );
    } else {
        println!(
            "best: alpha={} threshold={} measure={} aggregation={} micro_f1={:.6}",
            best.weights.coherence, best.filter.t, best.measure, best.aggregation, best_row.micro_f1
        );
    }
    match table_out {
        Some(path) => std::fs::write(path, csv)?,
        None if !json => print!("{csv}"),
        None => {}
    }
    Ok(())
}

/// First row achieving the maximum micro-F1 (enumeration order).
fn best_row(rows: &[SweepRow]) -> Option<&SweepRow> {
    let mut best: Option<&SweepRow> = None;
    for row in rows {
        if best.map(|b| row.micro_f1 > b.micro_f1).unwrap_or(true) {
            best = Some(row);
        }
    }
    best
}

fn cmd_analyze_overshadowing(
    preds_top: &Path,
    preds_shadow: &Path,
    dataset_top: &Path,
    dataset_shadow: &Path,
    json: bool,
) -> Result<()> {
    let pt = Predictions::read(preds_top)?;
    let ps = Predictions::read(preds_shadow)?;
    let dt = load_dataset(dataset_top)?;
    let dsh = load_dataset(dataset_shadow)?;
    let report = overshadow_analysis(&pt, &ps, &dt, &dsh)?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("serializable report")
        );
    } else {
        println!("{report}");
    }
    Ok(())
}

fn cmd_relatedness(
    graph_path: &Path,
    measure: RelatednessMeasure,
    e1: Option<u32>,
    e2: Option<u32>,
    pairs: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let g = LinkGraph::read_snapshot(graph_path)?;
    match (e1, e2, pairs) {
        (Some(a), Some(b), None) => {
            println!("{}", score(&g, measure, EntityId(a), EntityId(b)));
            Ok(())
        }
        (None, None, Some(pairs_path)) => {
            let reader = BufReader::new(File::open(pairs_path)?);
            let mut lines = Vec::new();
            for (idx, line) in reader.lines().enumerate() {
                let line = line?;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    lines.push(line);
                    continue;
                }
                let lineno = idx + 1;
                let cols: Vec<&str> = line.split('\t').collect();
                if cols.len() < 2 {
                    return Err(Error::Ingestion {
                        path: pairs_path.to_path_buf(),
                        line: lineno,
                        message: format!("expected at least 2 columns, got {}", cols.len()),
                    });
                }
                let parse = |s: &str| {
                    s.trim().parse::<u32>().map_err(|_| Error::Ingestion {
                        path: pairs_path.to_path_buf(),
                        line: lineno,
                        message: format!("expected an entity id, got `{s}`"),
                    })
                };
                let s = score(
                    &g,
                    measure,
                    EntityId(parse(cols[0])?),
                    EntityId(parse(cols[1])?),
                );
                lines.push(format!("{line}\t{s}"));
            }
            let rendered = lines.join("\n") + "\n";
            match out {
                Some(path) => std::fs::write(path, rendered)?,
                None => print!("{rendered}"),
            }
            Ok(())
        }
        _ => Err(Error::Config(
            "relatedness needs either --e1/--e2 or --pairs".into(),
        )),
    }
}
