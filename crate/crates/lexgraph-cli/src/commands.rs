//! Subcommand implementations.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use serde::Serialize;

use lexgraph::corpus::{
    build_graph, default_histogram_ranges, parse_corpus, write_corpus, year_histogram, BuildStats,
    CaseDoc, CorpusError, FetchConfig, HistogramRow,
};
use lexgraph::features::load_feature_file;
use lexgraph::redact::{parse_spans_file, redact_corpus, RedactionReport};
use lexgraph::sage::{load_model, save_model};
use lexgraph::tasks::{
    evaluate_node_model, run_grid, run_label_shuffle_control, run_link_prediction,
    run_node_classification, run_temporal_sweep, EvalReport, ExperimentSpec, FeatureCatalog,
    TaskError, TaskKind,
};

use crate::artifacts::{
    grid_csv, histogram_csv, linkpred_series_csv, load_graph, roc_csv, roc_file_name, save_graph,
    sweep_series_csv,
};
use crate::config::Config;
use crate::error::CliError;
use crate::manifest::ManifestBuilder;

fn require_corpus(config: &Config) -> Result<&Path, CliError> {
    config
        .corpus
        .as_deref()
        .ok_or_else(|| CliError::validation(anyhow!("no corpus given (--corpus or config)")))
}

fn load_corpus(path: &Path) -> Result<Vec<CaseDoc>, CliError> {
    parse_corpus(path).map_err(|e| CliError::validation(anyhow!("{}: {e}", path.display())))
}

/// Feature tables resolved from the configured paths.
fn build_catalog(config: &Config) -> Result<FeatureCatalog, CliError> {
    let mut catalog = FeatureCatalog {
        random_dim: config.features.dim,
        random_seed: config.features.random_seed,
        fallback_seed: config.features.fallback_seed,
        vanilla: None,
        pretrained: None,
    };
    if let Some(path) = &config.features.vanilla {
        catalog.vanilla = Some(
            load_feature_file(path)
                .map_err(|e| CliError::validation(anyhow!("{}: {e}", path.display())))?,
        );
    }
    if let Some(path) = &config.features.pretrained {
        catalog.pretrained = Some(
            load_feature_file(path)
                .map_err(|e| CliError::validation(anyhow!("{}: {e}", path.display())))?,
        );
    }
    Ok(catalog)
}

fn classify_task_error(err: TaskError) -> CliError {
    match err {
        TaskError::Corpus(CorpusError::EmptyTrain) => CliError::task(anyhow!("empty train side")),
        TaskError::Corpus(e) => CliError::validation(anyhow::Error::new(e)),
        TaskError::Feature(e) => CliError::validation(anyhow::Error::new(e)),
        TaskError::Invalid(msg) => CliError::validation(anyhow!(msg)),
        TaskError::Sage(e) => CliError::task(anyhow::Error::new(e)),
        TaskError::Metrics(e) => CliError::task(anyhow::Error::new(e)),
    }
}

fn stamp(config: &Config, report: &mut EvalReport) {
    if !config.deterministic {
        report.timestamp = Some(
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs().to_string())
                .unwrap_or_default(),
        );
    }
}

fn node_spec(config: &Config) -> ExperimentSpec {
    ExperimentSpec {
        regime: config.regime,
        mode: config.mode,
        include_time: config.include_time,
        include_acts: config.include_acts,
        split: config.split.plan(),
        task: TaskKind::NodeClassification,
        train: config.train.clone(),
    }
}

// ── build-graph ──────────────────────────────────────────────────

#[derive(Serialize)]
struct BuildReport {
    stats: BuildStats,
    histogram: Vec<HistogramRow>,
}

pub fn cmd_build_graph(config: &Config) -> Result<(), CliError> {
    let corpus_path = require_corpus(config)?;
    let docs = load_corpus(corpus_path)?;
    let (graph, stats) = build_graph(&docs, config.include_time, config.include_acts, config.mode)
        .map_err(|e| CliError::validation(anyhow::Error::new(e)))?;
    let histogram = year_histogram(&docs, &default_histogram_ranges());

    let mut manifest = ManifestBuilder::new("build-graph", config).map_err(CliError::task)?;
    manifest
        .add_input("corpus", corpus_path)
        .map_err(CliError::validation)?;
    save_graph(
        &manifest.out_path("graph.json"),
        &graph,
        config.include_time,
        config.include_acts,
        &docs,
    )
    .map_err(CliError::task)?;
    manifest.add_output("graph.json");
    manifest
        .emit_json("build_stats.json", &BuildReport { stats, histogram: histogram.clone() })
        .map_err(CliError::task)?;
    manifest
        .emit("histogram.csv", histogram_csv(&histogram).as_bytes())
        .map_err(CliError::task)?;
    manifest.finish().map_err(CliError::task)?;
    println!(
        "built graph: {} cases, {} time nodes, {} act nodes, {} citation edges ({} dangling dropped)",
        stats.case_nodes, stats.time_nodes, stats.act_nodes, stats.citation_edges,
        stats.dangling_citations
    );
    Ok(())
}

// ── train / eval ─────────────────────────────────────────────────

pub fn cmd_train(config: &Config, graph_path: &Path) -> Result<(), CliError> {
    let loaded = load_graph(graph_path).map_err(CliError::validation)?;
    let catalog = build_catalog(config)?;
    let mut spec = node_spec(config);
    // The checkpoint owns the graph structure.
    spec.mode = loaded.graph.mode();
    spec.include_time = loaded.include_time;
    spec.include_acts = loaded.include_acts;

    let mut run = run_node_classification(&loaded.graph, &loaded.docs, &catalog, &spec)
        .map_err(classify_task_error)?;
    stamp(config, &mut run.report);

    let mut manifest = ManifestBuilder::new("train", config).map_err(CliError::task)?;
    manifest
        .add_input("graph", graph_path)
        .map_err(CliError::validation)?;
    add_feature_inputs(&mut manifest, config)?;
    save_model(manifest.out_path("model.lxg"), &run.model, &spec.train)
        .map_err(|e| CliError::task(anyhow::Error::new(e)))?;
    manifest.add_output("model.lxg");
    manifest
        .emit_json("report.json", &run.report)
        .map_err(CliError::task)?;
    manifest.finish().map_err(CliError::task)?;
    if let Some(overall) = &run.report.overall {
        println!(
            "trained: test macro-F1 {:.4} over {} cases",
            overall.macro_f1, overall.n
        );
    } else {
        println!("trained: no test cases to score");
    }
    Ok(())
}

pub fn cmd_eval(config: &Config, graph_path: &Path, model_path: &Path) -> Result<(), CliError> {
    let loaded = load_graph(graph_path).map_err(CliError::validation)?;
    let (model, train_config) =
        load_model(model_path).map_err(|e| CliError::validation(anyhow::Error::new(e)))?;
    let catalog = build_catalog(config)?;
    let mut spec = node_spec(config);
    spec.mode = loaded.graph.mode();
    spec.include_time = loaded.include_time;
    spec.include_acts = loaded.include_acts;
    spec.train = train_config;

    let mut report = evaluate_node_model(&loaded.graph, &loaded.docs, &catalog, &spec, &model)
        .map_err(classify_task_error)?;
    stamp(config, &mut report);

    let mut manifest = ManifestBuilder::new("eval", config).map_err(CliError::task)?;
    manifest
        .add_input("graph", graph_path)
        .map_err(CliError::validation)?;
    manifest
        .add_input("model", model_path)
        .map_err(CliError::validation)?;
    add_feature_inputs(&mut manifest, config)?;
    manifest
        .emit_json("eval_report.json", &report)
        .map_err(CliError::task)?;
    manifest.finish().map_err(CliError::task)?;
    if let Some(overall) = &report.overall {
        println!("evaluated: macro-F1 {:.4} over {} cases", overall.macro_f1, overall.n);
    } else {
        println!("evaluated: no test cases to score");
    }
    Ok(())
}

fn add_feature_inputs(manifest: &mut ManifestBuilder, config: &Config) -> Result<(), CliError> {
    if let Some(path) = &config.features.vanilla {
        manifest
            .add_input("features/vanilla", path)
            .map_err(CliError::validation)?;
    }
    if let Some(path) = &config.features.pretrained {
        manifest
            .add_input("features/pretrained", path)
            .map_err(CliError::validation)?;
    }
    Ok(())
}

// ── sweep ────────────────────────────────────────────────────────

pub fn cmd_sweep(config: &Config) -> Result<(), CliError> {
    let corpus_path = require_corpus(config)?;
    let docs = load_corpus(corpus_path)?;
    let catalog = build_catalog(config)?;
    let base = node_spec(config);
    let mut outcome = run_temporal_sweep(
        &docs,
        &catalog,
        &base,
        config.sweep.direction,
        &config.sweep.cutoffs,
        config.split.pool,
    )
    .map_err(classify_task_error)?;
    for report in &mut outcome.reports {
        stamp(config, report);
    }

    let mut manifest = ManifestBuilder::new("sweep", config).map_err(CliError::task)?;
    manifest
        .add_input("corpus", corpus_path)
        .map_err(CliError::validation)?;
    add_feature_inputs(&mut manifest, config)?;
    manifest
        .emit_json("sweep_report.json", &outcome)
        .map_err(CliError::task)?;
    manifest
        .emit("sweep_series.csv", sweep_series_csv(&outcome.reports).as_bytes())
        .map_err(CliError::task)?;
    manifest.finish().map_err(CliError::task)?;
    println!(
        "sweep: {} cutoffs scored, {} skipped",
        outcome.reports.len(),
        outcome.skipped_cutoffs.len()
    );
    Ok(())
}

// ── linkpred ─────────────────────────────────────────────────────

pub fn cmd_linkpred(config: &Config) -> Result<(), CliError> {
    let corpus_path = require_corpus(config)?;
    let docs = load_corpus(corpus_path)?;
    let catalog = build_catalog(config)?;
    let mut base = node_spec(config);
    base.task = TaskKind::LinkPrediction;
    let mut outcome = run_link_prediction(
        &docs,
        &catalog,
        &base,
        config.sweep.direction,
        &config.sweep.cutoffs,
    )
    .map_err(classify_task_error)?;
    for report in &mut outcome.reports {
        stamp(config, report);
    }

    let mut manifest = ManifestBuilder::new("linkpred", config).map_err(CliError::task)?;
    manifest
        .add_input("corpus", corpus_path)
        .map_err(CliError::validation)?;
    add_feature_inputs(&mut manifest, config)?;
    manifest
        .emit_json("linkpred_report.json", &outcome)
        .map_err(CliError::task)?;
    manifest
        .emit(
            "linkpred_series.csv",
            linkpred_series_csv(&outcome.reports).as_bytes(),
        )
        .map_err(CliError::task)?;
    for report in &outcome.reports {
        let lexgraph::corpus::SplitPlan::Temporal { cutoff_year, .. } = report.split else {
            continue;
        };
        for bucket in &report.roc_buckets {
            let name = roc_file_name(config.sweep.direction, cutoff_year, bucket.range);
            manifest
                .emit(
                    name.to_str().expect("ascii file name"),
                    roc_csv(&bucket.points).as_bytes(),
                )
                .map_err(CliError::task)?;
        }
    }
    manifest.finish().map_err(CliError::task)?;
    println!(
        "linkpred: {} cutoffs scored, {} skipped",
        outcome.reports.len(),
        outcome.skipped_cutoffs.len()
    );
    Ok(())
}

// ── shuffle-control ──────────────────────────────────────────────

#[derive(Serialize)]
struct ShuffleReport {
    fraction: f64,
    control_seed: u64,
    clean: EvalReport,
    control: EvalReport,
    macro_f1_drop: Option<f64>,
}

pub fn cmd_shuffle_control(config: &Config) -> Result<(), CliError> {
    let corpus_path = require_corpus(config)?;
    let docs = load_corpus(corpus_path)?;
    let catalog = build_catalog(config)?;
    let (graph, _) = build_graph(&docs, config.include_time, config.include_acts, config.mode)
        .map_err(|e| CliError::validation(anyhow::Error::new(e)))?;
    let spec = node_spec(config);

    let mut clean = run_node_classification(&graph, &docs, &catalog, &spec)
        .map_err(classify_task_error)?;
    let mut control = run_label_shuffle_control(
        &graph,
        &docs,
        &catalog,
        &spec,
        config.shuffle.fraction,
        config.shuffle.control_seed,
    )
    .map_err(classify_task_error)?;
    stamp(config, &mut clean.report);
    stamp(config, &mut control.report);

    let drop = match (&clean.report.overall, &control.report.overall) {
        (Some(a), Some(b)) => Some(a.macro_f1 - b.macro_f1),
        _ => None,
    };
    let report = ShuffleReport {
        fraction: config.shuffle.fraction,
        control_seed: config.shuffle.control_seed,
        clean: clean.report,
        control: control.report,
        macro_f1_drop: drop,
    };

    let mut manifest = ManifestBuilder::new("shuffle-control", config).map_err(CliError::task)?;
    manifest
        .add_input("corpus", corpus_path)
        .map_err(CliError::validation)?;
    add_feature_inputs(&mut manifest, config)?;
    manifest
        .emit_json("shuffle_report.json", &report)
        .map_err(CliError::task)?;
    manifest.finish().map_err(CliError::task)?;
    match report.macro_f1_drop {
        Some(drop) => println!("shuffle control: macro-F1 drop {drop:.4}"),
        None => println!("shuffle control: no test cases to score"),
    }
    Ok(())
}

// ── grid ─────────────────────────────────────────────────────────

pub fn cmd_grid(config: &Config) -> Result<(), CliError> {
    let corpus_path = require_corpus(config)?;
    let docs = load_corpus(corpus_path)?;
    let catalog = build_catalog(config)?;
    let base = node_spec(config);
    let report = run_grid(&docs, &catalog, &base).map_err(classify_task_error)?;

    let mut manifest = ManifestBuilder::new("grid", config).map_err(CliError::task)?;
    manifest
        .add_input("corpus", corpus_path)
        .map_err(CliError::validation)?;
    add_feature_inputs(&mut manifest, config)?;
    manifest
        .emit_json("grid_report.json", &report)
        .map_err(CliError::task)?;
    manifest
        .emit("grid.csv", grid_csv(&report).as_bytes())
        .map_err(CliError::task)?;
    manifest.finish().map_err(CliError::task)?;
    let failures = report.cells.iter().filter(|c| c.error.is_some()).count();
    println!("grid: {} cells, {} failed", report.cells.len(), failures);
    Ok(())
}

// ── redact ───────────────────────────────────────────────────────

pub fn cmd_redact(config: &Config, spans_path: &Path) -> Result<(), CliError> {
    let corpus_path = require_corpus(config)?;
    let docs = load_corpus(corpus_path)?;
    let spans = parse_spans_file(spans_path)
        .map_err(|e| CliError::validation(anyhow!("{}: {e}", spans_path.display())))?;
    let (redacted, report): (Vec<CaseDoc>, RedactionReport) = redact_corpus(&docs, &spans)
        .map_err(|e| CliError::validation(anyhow::Error::new(e)))?;

    let mut manifest = ManifestBuilder::new("redact", config).map_err(CliError::task)?;
    manifest
        .add_input("corpus", corpus_path)
        .map_err(CliError::validation)?;
    manifest
        .add_input("spans", spans_path)
        .map_err(CliError::validation)?;
    let out_corpus = manifest.out_path("redacted.jsonl");
    write_corpus(&out_corpus, &redacted)
        .map_err(|e| CliError::task(anyhow::Error::new(e)))?;
    manifest.add_output("redacted.jsonl");
    manifest
        .emit_json("redaction_report.json", &report)
        .map_err(CliError::task)?;
    manifest.finish().map_err(CliError::task)?;
    println!(
        "redacted: {} pronouns, {} name spans, {} unmatched span case ids",
        report.pronoun_count,
        report.span_count,
        report.unmatched_case_ids.len()
    );
    Ok(())
}

// ── fetch ────────────────────────────────────────────────────────

#[derive(Serialize)]
struct FetchReport {
    requested: usize,
    fetched: usize,
    misses: Vec<(String, String)>,
}

pub fn cmd_fetch(config: &Config, ids_path: &Path) -> Result<(), CliError> {
    let endpoint = config
        .fetch
        .endpoint
        .clone()
        .ok_or_else(|| CliError::validation(anyhow!("no fetch endpoint configured")))?;
    let token = std::env::var("LEXGRAPH_API_TOKEN")
        .ok()
        .filter(|t| !t.is_empty())
        .ok_or_else(|| CliError::validation(anyhow!("LEXGRAPH_API_TOKEN is not set")))?;
    let ids: Vec<String> = std::fs::read_to_string(ids_path)
        .with_context(|| format!("reading {}", ids_path.display()))
        .map_err(CliError::validation)?
        .lines()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty())
        .collect();

    let fetch_config = FetchConfig {
        attempts: config.fetch.attempts,
        backoff: std::time::Duration::from_millis(config.fetch.backoff_ms),
        concurrency: config.fetch.concurrency,
        timeout: std::time::Duration::from_millis(config.fetch.timeout_ms),
    };
    let outcome = lexgraph::corpus::fetch_remote(&endpoint, &token, &ids, &fetch_config)
        .map_err(|e| CliError::task(anyhow::Error::new(e)))?;

    let mut manifest = ManifestBuilder::new("fetch", config).map_err(CliError::task)?;
    manifest
        .add_input("ids", ids_path)
        .map_err(CliError::validation)?;
    let out_corpus = manifest.out_path("fetched.jsonl");
    write_corpus(&out_corpus, &outcome.docs)
        .map_err(|e| CliError::task(anyhow::Error::new(e)))?;
    manifest.add_output("fetched.jsonl");
    manifest
        .emit_json(
            "fetch_report.json",
            &FetchReport {
                requested: ids.len(),
                fetched: outcome.docs.len(),
                misses: outcome
                    .misses
                    .iter()
                    .map(|m| (m.id.clone(), m.reason.clone()))
                    .collect(),
            },
        )
        .map_err(CliError::task)?;
    manifest.finish().map_err(CliError::task)?;
    println!(
        "fetched {} of {} documents ({} misses)",
        outcome.docs.len(),
        ids.len(),
        outcome.misses.len()
    );
    Ok(())
}
