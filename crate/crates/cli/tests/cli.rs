use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Output;

use glyphlearn::formats;
use glyphlearn::ingestion::{BezierStroke, Point, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const TOY: &str = concat!(
    "{\"id\":\"旦\",\"program\":\"(list S HZ H H H)\"}\n",
    "{\"id\":\"见\",\"program\":\"(list S HZ SP SWG)\"}\n",
    "{\"id\":\"日\",\"program\":\"(list S HZ H H)\"}\n",
);

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> &Self {
        std::fs::write(self.path(name), text).unwrap();
        self
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }

    fn run(&self, args: &[&str]) -> Output {
        std::process::Command::new(env!("CARGO_BIN_EXE_glyphlearn"))
            .current_dir(self.dir.path())
            .args(args)
            .output()
            .unwrap()
    }

    fn run_ok(&self, args: &[&str]) -> Output {
        let out = self.run(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out
    }
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn records(text: &str) -> Vec<Value> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .filter(|v| v.get("provenance").is_none())
        .collect()
}

fn programs(text: &str) -> BTreeMap<String, String> {
    records(text)
        .into_iter()
        .map(|v| (v["id"].as_str().unwrap().to_string(), v["program"].as_str().unwrap().to_string()))
        .collect()
}

/// Data rows of a CSV artifact keyed by column, after its provenance line.
fn csv_rows(text: &str) -> Vec<BTreeMap<String, String>> {
    let body = text.strip_prefix("# provenance ").map(|t| t.split_once('\n').unwrap().1).expect("provenance line");
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let headers = reader.headers().unwrap().clone();
    reader
        .records()
        .map(|r| headers.iter().zip(r.unwrap().iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        .collect()
}

fn definitions(library: &str) -> Vec<String> {
    library
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with(';') && !l.starts_with('@'))
        .map(|l| l.split(" ;").next().unwrap().trim().to_string())
        .collect()
}

#[test]
fn learn_writes_every_artifact_with_provenance() {
    let ws = Workspace::new();
    ws.write("toy.jsonl", TOY);
    let out = ws.run_ok(&["--out", "out", "learn", "toy.jsonl"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("learned 2 functions"));
    assert_eq!(definitions(&ws.read("out/library.txt")), ["fn_0() := (list S HZ)", "fn_1() := (fn_0 H H)"]);
    assert!(ws.read("out/library.txt").starts_with("; provenance {"));
    for jsonl in ["out/rewritten.jsonl", "out/trace.jsonl"] {
        let first: Value = serde_json::from_str(ws.read(jsonl).lines().next().unwrap()).unwrap();
        assert_eq!(first["provenance"]["command"], "learn");
        assert_eq!(first["provenance"]["inputs"][0]["path"], "toy.jsonl");
    }
    let report: Value = serde_json::from_str(&ws.read("out/report.json")).unwrap();
    assert_eq!(report["hit_iteration_cap"], false);
    assert_eq!(report["report"]["learned_count"], 2);
    assert_eq!(report["provenance"]["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    let trace = records(&ws.read("out/trace.jsonl"));
    assert_eq!(trace.len(), 2);
    assert_eq!(trace[0]["fn"], "fn_0");
}

#[test]
fn rewrite_reuses_a_learned_library() {
    let ws = Workspace::new();
    ws.write("toy.jsonl", TOY);
    ws.run_ok(&["--out", "out", "learn", "toy.jsonl"]);
    ws.run_ok(&["--out", "again", "rewrite", "toy.jsonl", "--library", "out/library.txt"]);
    assert_eq!(programs(&ws.read("again/rewritten.jsonl")), programs(&ws.read("out/rewritten.jsonl")));
}

#[test]
fn iteration_cap_exits_one_and_keeps_partial_results() {
    let ws = Workspace::new();
    ws.write("toy.jsonl", TOY);
    let out = ws.run(&["--iters", "1", "--out", "out", "learn", "toy.jsonl"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("iteration cap"));
    assert_eq!(definitions(&ws.read("out/library.txt")), ["fn_0() := (list S HZ)"]);
    let report: Value = serde_json::from_str(&ws.read("out/report.json")).unwrap();
    assert_eq!(report["hit_iteration_cap"], true);
}

#[test]
fn bad_input_exits_two() {
    let ws = Workspace::new();
    ws.write("toy.jsonl", TOY);
    ws.write("bad.jsonl", "{\"id\":\"a\",\"program\":\"(list S HZ)\"}\n{\"id\":\"b\",\"program\":\"(list XX)\"}\n");
    assert_eq!(code(&ws.run(&["learn", "missing.jsonl"])), 2);
    let out = ws.run(&["--out", "out", "learn", "bad.jsonl"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("XX"), "{err}");
    assert!(!ws.path("out").exists());
    assert_eq!(code(&ws.run(&["learn", "toy.jsonl", "--no-such-flag"])), 2);
    assert_eq!(code(&ws.run(&["--cost-terminal", "0", "learn", "toy.jsonl"])), 2);
    assert_eq!(code(&ws.run(&["--threads", "0", "learn", "toy.jsonl"])), 2);
}

#[test]
fn one_glyph_corpus_learns_nothing() {
    let ws = Workspace::new();
    ws.write("one.jsonl", "{\"id\":\"a\",\"program\":\"(list S HZ H)\"}\n");
    ws.run_ok(&["--out", "out", "metrics", "one.jsonl"]);
    let rows = csv_rows(&ws.read("out/metrics.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["learned_count"], "0");
    assert_eq!(rows[0]["compression_ratio"], "1.0");
    assert_eq!(rows[0]["corpus_id"], "one");
}

/// Learns the toy corpus into `out/` and writes a gold file.
fn eval_setup(gold: &str) -> Workspace {
    let ws = Workspace::new();
    ws.write("toy.jsonl", TOY).write("gold.jsonl", gold);
    ws.run_ok(&["--out", "out", "learn", "toy.jsonl"]);
    ws
}

fn eval_rows(ws: &Workspace, extra: &[&str]) -> Vec<BTreeMap<String, String>> {
    let mut args = vec!["--out", "ev", "eval", "out/rewritten.jsonl", "--library", "out/library.txt", "--gold", "gold.jsonl"];
    args.extend(extra);
    ws.run_ok(&args);
    csv_rows(&ws.read("ev/scores.csv"))
}

#[test]
fn eval_scores_a_perfect_match_at_one_hundred() {
    let ws = eval_setup(concat!(
        "{\"id\":\"旦\",\"n\":5,\"spans\":[[0,4]]}\n",
        "{\"id\":\"见\",\"n\":4,\"spans\":[[0,2]]}\n",
        "{\"id\":\"日\",\"n\":4,\"spans\":[]}\n",
    ));
    let rows = eval_rows(&ws, &[]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["model"], "library-learning");
    assert_eq!(rows[0]["f1"], "100.0");
    assert_eq!(rows[0]["exact_match"], "100.0");
    let spans = records(&ws.read("ev/spans.jsonl"));
    assert_eq!(spans.len(), 3);
}

#[test]
fn eval_half_covered_gold_gives_half_recall() {
    let ws = eval_setup(concat!(
        "{\"id\":\"旦\",\"n\":5,\"spans\":[[0,4],[0,2]]}\n",
        "{\"id\":\"见\",\"n\":4,\"spans\":[[0,2],[2,4]]}\n",
    ));
    let rows = eval_rows(&ws, &[]);
    assert_eq!(rows[0]["recall"], "50.0");
    assert_eq!(rows[0]["precision"], "100.0");
    assert_eq!(rows[0]["extra_predictions"], "1");
    let through = eval_rows(&ws, &["--through-bodies"]);
    assert_eq!(through[0]["recall"], "75.0");
}

#[test]
fn eval_baselines_and_radicals() {
    let ws = eval_setup(concat!(
        "{\"id\":\"旦\",\"n\":5,\"spans\":[[0,4],[0,2]]}\n",
        "{\"id\":\"见\",\"n\":4,\"spans\":[[0,2],[2,4]]}\n",
        "{\"id\":\"日\",\"n\":4,\"spans\":[[0,2],[2,4]]}\n",
    ));
    ws.write("radicals.jsonl", "{\"id\":\"口\",\"strokes\":[\"S\",\"HZ\",\"H\"]}\n{\"id\":\"日\",\"strokes\":[\"S\",\"HZ\",\"H\",\"H\"]}\n");
    let rows = eval_rows(&ws, &["--baselines", "--radicals", "radicals.jsonl"]);
    let models: Vec<&str> = rows.iter().map(|r| r["model"].as_str()).collect();
    assert_eq!(models, ["library-learning", "balanced", "random", "left", "right"]);
    let scores: Value = serde_json::from_str(&ws.read("ev/scores.json")).unwrap();
    assert_eq!(scores["radicals"]["discovered_fraction"], 0.5);
    assert_eq!(scores["radicals"]["matched"][0], serde_json::json!(["日", "fn_1"]));
}

#[test]
fn eval_rejects_gold_with_crossing_spans() {
    let ws = eval_setup("{\"id\":\"旦\",\"n\":5,\"spans\":[[0,3],[2,4]]}\n");
    let out = ws.run(&["--out", "ev", "eval", "out/rewritten.jsonl", "--library", "out/library.txt", "--gold", "gold.jsonl"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn metrics_keeps_corpus_order_and_compares_every_pair() {
    let ws = Workspace::new();
    let names = ["oracle", "bronze", "seal", "clerical"];
    for (i, name) in names.iter().enumerate() {
        let extra = "H ".repeat(i);
        ws.write(
            &format!("{name}.jsonl"),
            &format!(
                "{{\"id\":\"a\",\"program\":\"(list S HZ {extra}H)\"}}\n{{\"id\":\"b\",\"program\":\"(list S HZ SP)\"}}\n{{\"id\":\"c\",\"program\":\"(list S HZ {extra}N)\"}}\n"
            ),
        );
    }
    let files: Vec<String> = names.iter().map(|n| format!("{n}.jsonl")).collect();
    let mut args = vec!["--out", "m", "metrics"];
    args.extend(files.iter().map(String::as_str));
    ws.run_ok(&args);
    let rows = csv_rows(&ws.read("m/metrics.csv"));
    let ids: Vec<&str> = rows.iter().map(|r| r["corpus_id"].as_str()).collect();
    assert_eq!(ids, names);
    assert_eq!(csv_rows(&ws.read("m/comparisons.csv")).len(), 6);
}

#[test]
fn metrics_pair_reports_gaps_and_checks_alignment() {
    let ws = Workspace::new();
    ws.write("a.jsonl", TOY);
    ws.write("b.jsonl", &TOY.replace("SWG", "N"));
    ws.write("c.jsonl", "{\"id\":\"x\",\"program\":\"(list S HZ)\"}\n");
    ws.run_ok(&["--out", "p", "metrics", "--pair", "a.jsonl", "b.jsonl", "--names", "first,second"]);
    let rows = csv_rows(&ws.read("p/pair.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0]["a"].as_str(), rows[0]["b"].as_str(), rows[0]["aligned"].as_str()), ("first", "second", "3"));
    assert_eq!(rows[0]["dl_base_gap_pct"], "0.0");
    assert_eq!(code(&ws.run(&["--out", "p2", "metrics", "--pair", "a.jsonl", "c.jsonl"])), 2);
    assert_eq!(code(&ws.run(&["--out", "p3", "metrics", "--pair", "a.jsonl"])), 2);
}

fn strokes_file(ws: &Workspace, name: &str, glyphs: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let protos: [[Point; 4]; 3] = [
        [[0.0, 0.0], [0.2, 0.0], [0.4, 0.0], [0.6, 0.0]],
        [[0.0, 0.0], [0.0, 0.2], [0.0, 0.4], [0.0, 0.6]],
        [[0.0, 0.0], [0.2, 0.3], [0.4, 0.3], [0.6, 0.0]],
    ];
    let trajs: Vec<Trajectory> = (0..glyphs)
        .map(|g| {
            let strokes = (0..3)
                .map(|_| {
                    let curve = BezierStroke {
                        control: protos[rng.random_range(0..3)],
                        fit_residual: 0.0,
                    };
                    let off = [rng.random::<f64>(), rng.random::<f64>()];
                    (0..10)
                        .map(|i| {
                            let p = curve.point(i as f64 / 9.0);
                            [p[0] + off[0], p[1] + off[1]]
                        })
                        .collect()
                })
                .collect();
            Trajectory::new(format!("g{g}"), strokes).unwrap()
        })
        .collect();
    ws.write(name, &formats::trajectories_to_jsonl(&trajs));
}

#[test]
fn ingest_derives_an_alphabet_and_encodes_glyphs() {
    let ws = Workspace::new();
    strokes_file(&ws, "demo.strokes.jsonl", 12);
    ws.run_ok(&["--out", "ing", "ingest", "demo.strokes.jsonl", "--k", "3"]);
    let alphabet: Value = serde_json::from_str(&ws.read("ing/demo.alphabet.json")).unwrap();
    assert_eq!(alphabet["centroids"].as_array().unwrap().len(), 3);
    assert_eq!(alphabet["names"], serde_json::json!(["c00", "c01", "c02"]));
    let encoded = programs(&ws.read("ing/demo.corpus.jsonl"));
    assert_eq!(encoded.len(), 12);
    assert!(encoded.values().all(|p| p.starts_with("(list c0") && p.split(' ').count() == 4));
    let report: Value = serde_json::from_str(&ws.read("ing/demo.report.json")).unwrap();
    assert_eq!(report["encoded"], 12);

    // The encoded corpus feeds straight into learning.
    ws.run_ok(&["--out", "learned", "learn", "ing/demo.corpus.jsonl"]);
    assert!(ws.read("learned/library.txt").contains("@alphabet"));
}

#[test]
fn ingest_is_reproducible_and_rejects_too_many_clusters() {
    let ws = Workspace::new();
    strokes_file(&ws, "s.jsonl", 6);
    let files = ["out/s.alphabet.json", "out/s.corpus.jsonl", "out/s.report.json"];
    ws.run_ok(&["--out", "out", "ingest", "s.jsonl", "--k", "3"]);
    let first: Vec<String> = files.iter().map(|f| ws.read(f)).collect();
    ws.run_ok(&["--out", "out", "ingest", "s.jsonl", "--k", "3"]);
    for (f, before) in files.iter().zip(&first) {
        assert_eq!(&ws.read(f), before, "{f}");
    }
    assert_eq!(code(&ws.run(&["--out", "big", "ingest", "s.jsonl", "--k", "19"])), 2);
}

#[test]
fn ingest_with_a_fixed_alphabet_excludes_far_strokes() {
    let ws = Workspace::new();
    strokes_file(&ws, "s.jsonl", 6);
    ws.run_ok(&["--out", "one", "ingest", "s.jsonl", "--k", "3"]);
    ws.run_ok(&["--out", "two", "ingest", "s.jsonl", "--alphabet", "one/s.alphabet.json", "--max-distance", "0"]);
    let report: Value = serde_json::from_str(&ws.read("two/s.report.json")).unwrap();
    assert_eq!(report["glyphs"], 6);
    assert_eq!(
        report["encoded"].as_u64().unwrap() + report["excluded"].as_array().unwrap().len() as u64,
        6
    );
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let ws = Workspace::new();
    ws.write("toy.jsonl", TOY);
    ws.write("capped.toml", "iters = 1\nout = \"from-file\"\n");
    ws.write("typo.toml", "iterations = 1\n");
    assert_eq!(code(&ws.run(&["--config", "capped.toml", "learn", "toy.jsonl"])), 1);
    assert!(Path::new(&ws.path("from-file/library.txt")).exists());
    ws.run_ok(&["--config", "capped.toml", "--iters", "10", "--out", "flag", "learn", "toy.jsonl"]);
    let report: Value = serde_json::from_str(&ws.read("flag/report.json")).unwrap();
    assert_eq!(report["provenance"]["config"]["iters"], 10);
    assert_eq!(report["provenance"]["config"]["out"], "flag");
    assert_eq!(code(&ws.run(&["--config", "typo.toml", "learn", "toy.jsonl"])), 2);
}
