//! End-to-end tests of the `lexgraph` binary: exit codes, artifact schemas,
//! configuration precedence, and determinism of emitted files.

use std::path::{Path, PathBuf};
use std::process::Output;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_lexgraph")
}

fn run(args: &[&str]) -> Output {
    std::process::Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed:\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

fn small_corpus(dir: &Path) -> PathBuf {
    let path = dir.join("corpus.jsonl");
    write(
        &path,
        concat!(
            "{\"case_id\":\"a\",\"year\":1960,\"label\":1,\"split\":\"train\",\"cited_ids\":[\"b\"],\"act_ids\":[\"IPC-302\"]}\n",
            "{\"case_id\":\"b\",\"year\":1955,\"label\":0,\"split\":\"train\"}\n",
            "{\"case_id\":\"c\",\"year\":1970,\"label\":1,\"split\":\"test\",\"cited_ids\":[\"a\",\"zzz\"]}\n",
            "{\"case_id\":\"d\",\"year\":1970,\"label\":0,\"split\":\"test\",\"cited_ids\":[\"b\"]}\n",
            "{\"case_id\":\"e\",\"year\":1980,\"cited_ids\":[\"a\"]}\n",
        ),
    );
    path
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn build_graph_writes_stats_and_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());
    let out = dir.path().join("run");
    run_ok(&[
        "build-graph",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--deterministic",
    ]);
    let stats = read_json(&out.join("build_stats.json"));
    assert_eq!(stats["stats"]["case_nodes"], 5);
    assert_eq!(stats["stats"]["citation_edges"], 4);
    assert_eq!(stats["stats"]["dangling_citations"], 1);
    let csv = std::fs::read_to_string(out.join("histogram.csv")).unwrap();
    assert!(csv.starts_with("range_start,range_end,count,cumulative\n"));
    // 1956-1960 contains one train-hinted doc ("a"); "b" (1955) precedes the
    // first range.
    assert!(csv.lines().nth(1).unwrap().starts_with("1956,1960,1,"));
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "build-graph");
    assert!(manifest["created_unix"].is_null() || manifest.get("created_unix").is_none());
    assert!(manifest["outputs"].as_array().unwrap().len() >= 4);
}

#[test]
fn build_graph_with_characteristics_counts_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());
    let out = dir.path().join("run");
    run_ok(&[
        "build-graph",
        "--corpus",
        corpus.to_str().unwrap(),
        "--time",
        "--acts",
        "--out",
        out.to_str().unwrap(),
    ]);
    let stats = read_json(&out.join("build_stats.json"));
    // Years 1960, 1955, 1970, 1980 and one act.
    assert_eq!(stats["stats"]["time_nodes"], 4);
    assert_eq!(stats["stats"]["act_nodes"], 1);
}

#[test]
fn missing_corpus_is_validation_exit_2() {
    let out = run(&["build-graph", "--corpus", "/nonexistent.jsonl", "--out", "/tmp/x"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["error"]["kind"], "validation");
}

#[test]
fn malformed_corpus_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("bad.jsonl");
    write(
        &corpus,
        "{\"case_id\":\"a\",\"year\":1960}\n{\"case_id\":\"b\"}\n",
    );
    let out = run(&[
        "build-graph",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

#[test]
fn empty_train_side_is_task_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());
    let graph_out = dir.path().join("g");
    run_ok(&[
        "build-graph",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        graph_out.to_str().unwrap(),
    ]);
    let out = run(&[
        "train",
        "--graph",
        graph_out.join("graph.json").to_str().unwrap(),
        "--split",
        "temporal",
        "--cutoff",
        "1900",
        "--out",
        dir.path().join("t").to_str().unwrap(),
        "--epochs",
        "2",
        "--hidden-dim",
        "4",
        "--feature-dim",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["error"]["kind"], "task");
}

#[test]
fn train_then_eval_reproduces_scores() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());
    let graph_out = dir.path().join("g");
    run_ok(&[
        "build-graph",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        graph_out.to_str().unwrap(),
        "--deterministic",
    ]);
    let train_out = dir.path().join("t");
    run_ok(&[
        "train",
        "--graph",
        graph_out.join("graph.json").to_str().unwrap(),
        "--out",
        train_out.to_str().unwrap(),
        "--epochs",
        "5",
        "--hidden-dim",
        "4",
        "--feature-dim",
        "4",
        "--seed",
        "3",
        "--deterministic",
    ]);
    let report = read_json(&train_out.join("report.json"));
    let eval_out = dir.path().join("e");
    run_ok(&[
        "eval",
        "--graph",
        graph_out.join("graph.json").to_str().unwrap(),
        "--model",
        train_out.join("model.lxg").to_str().unwrap(),
        "--out",
        eval_out.to_str().unwrap(),
        "--feature-dim",
        "4",
        "--seed",
        "3",
        "--deterministic",
    ]);
    let eval_report = read_json(&eval_out.join("eval_report.json"));
    assert_eq!(report["overall"], eval_report["overall"]);
    // Checkpoint carries the magic bytes.
    let model_bytes = std::fs::read(train_out.join("model.lxg")).unwrap();
    assert_eq!(&model_bytes[..4], b"LXG1");
}

#[test]
fn sweep_emits_one_row_per_cutoff_bucket() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    let mut lines = String::new();
    for (i, year) in (1956..=1976).enumerate() {
        lines.push_str(&format!(
            "{{\"case_id\":\"c{i}\",\"year\":{year},\"label\":{},\"split\":\"train\"}}\n",
            i % 2
        ));
    }
    write(&corpus, &lines);
    let out = dir.path().join("run");
    run_ok(&[
        "sweep",
        "--corpus",
        corpus.to_str().unwrap(),
        "--cutoffs",
        "1956,1966",
        "--direction",
        "forward",
        "--out",
        out.to_str().unwrap(),
        "--epochs",
        "2",
        "--hidden-dim",
        "4",
        "--feature-dim",
        "4",
        "--deterministic",
    ]);
    let csv = std::fs::read_to_string(out.join("sweep_series.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "regime,mode,time,acts,direction,cutoff,bucket_start,bucket_end,n,macro_f1,f1_label0,f1_label1"
    );
    // Cutoff 1956: buckets 1957-61, 62-66, 67-71, 72-76; cutoff 1966: 67-71, 72-76.
    assert_eq!(lines.count(), 6);
    let report = read_json(&out.join("sweep_report.json"));
    assert_eq!(report["reports"].as_array().unwrap().len(), 2);
}

#[test]
fn config_file_layering_cli_wins() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());
    let config = dir.path().join("lexgraph.toml");
    write(
        &config,
        &format!(
            "corpus = {:?}\nseed = 5\n[train]\nepochs = 7\nhidden_dim = 4\n[features]\ndim = 4\n",
            corpus.to_str().unwrap()
        ),
    );
    let graph_out = dir.path().join("g");
    run_ok(&[
        "build-graph",
        "--config",
        config.to_str().unwrap(),
        "--out",
        graph_out.to_str().unwrap(),
    ]);
    let train_out = dir.path().join("t");
    run_ok(&[
        "train",
        "--config",
        config.to_str().unwrap(),
        "--graph",
        graph_out.join("graph.json").to_str().unwrap(),
        "--out",
        train_out.to_str().unwrap(),
        "--epochs",
        "3",
        "--deterministic",
    ]);
    let report = read_json(&train_out.join("report.json"));
    // CLI --epochs overrides the file's 7; the file's hidden_dim sticks.
    assert_eq!(report["train"]["epochs"], 3);
    assert_eq!(report["train"]["hidden_dim"], 4);
    assert_eq!(report["train"]["seed"], 5);
}

#[test]
fn redacted_corpus_builds_identical_topology() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    write(
        &corpus,
        concat!(
            "{\"case_id\":\"a\",\"year\":1960,\"cited_ids\":[\"b\"],\"text\":\"He cited his Ram Kumar\"}\n",
            "{\"case_id\":\"b\",\"year\":1955,\"text\":\"she said\"}\n",
        ),
    );
    let spans = dir.path().join("s.jsonl");
    write(
        &spans,
        "{\"case_id\":\"a\",\"start\":13,\"end\":22,\"kind\":\"person-name\"}\n",
    );
    let red_out = dir.path().join("r");
    run_ok(&[
        "redact",
        "--corpus",
        corpus.to_str().unwrap(),
        "--spans",
        spans.to_str().unwrap(),
        "--out",
        red_out.to_str().unwrap(),
        "--deterministic",
    ]);
    let report = read_json(&red_out.join("redaction_report.json"));
    assert_eq!(report["pronoun_count"], 3);
    assert_eq!(report["span_count"], 1);

    // Graph topology is text-independent.
    let g1 = dir.path().join("g1");
    let g2 = dir.path().join("g2");
    run_ok(&[
        "build-graph", "--corpus", corpus.to_str().unwrap(),
        "--out", g1.to_str().unwrap(), "--deterministic",
    ]);
    run_ok(&[
        "build-graph", "--corpus", red_out.join("redacted.jsonl").to_str().unwrap(),
        "--out", g2.to_str().unwrap(), "--deterministic",
    ]);
    let a = std::fs::read(g1.join("graph.json")).unwrap();
    let b = std::fs::read(g2.join("graph.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn overlapping_spans_exit_2_with_record() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    write(
        &corpus,
        "{\"case_id\":\"a\",\"year\":1960,\"text\":\"abcdefgh\"}\n",
    );
    let spans = dir.path().join("s.jsonl");
    write(
        &spans,
        concat!(
            "{\"case_id\":\"a\",\"start\":0,\"end\":4,\"kind\":\"x\"}\n",
            "{\"case_id\":\"a\",\"start\":2,\"end\":6,\"kind\":\"x\"}\n",
        ),
    );
    // Overlapping spans merge under normalization; a span out of bounds is
    // the hard error.
    let out = run(&[
        "redact",
        "--corpus",
        corpus.to_str().unwrap(),
        "--spans",
        spans.to_str().unwrap(),
        "--out",
        dir.path().join("r").to_str().unwrap(),
    ]);
    assert!(out.status.success());

    write(
        &spans,
        "{\"case_id\":\"a\",\"start\":4,\"end\":99,\"kind\":\"x\"}\n",
    );
    let out = run(&[
        "redact",
        "--corpus",
        corpus.to_str().unwrap(),
        "--spans",
        spans.to_str().unwrap(),
        "--out",
        dir.path().join("r2").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    let message = err["error"]["message"].as_str().unwrap();
    assert!(message.contains("99") && message.contains('a'), "message: {message}");
}

#[test]
fn fetch_requires_token() {
    let dir = tempfile::tempdir().unwrap();
    let ids = dir.path().join("ids.txt");
    write(&ids, "a\nb\n");
    let out = std::process::Command::new(bin())
        .args([
            "fetch",
            "--endpoint",
            "http://127.0.0.1:1",
            "--ids",
            ids.to_str().unwrap(),
            "--out",
            dir.path().join("f").to_str().unwrap(),
        ])
        .env_remove("LEXGRAPH_API_TOKEN")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = run(&["build-graph", "--bogus"]);
    assert!(!out.status.success());
}
