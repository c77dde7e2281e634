use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use linklogic::eval::{ExperimentReport, SweepKind};
use serde_json::Value;

fn linklogic(args: &[&str]) -> Output {
    linklogic_env(args, &[])
}

fn linklogic_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_linklogic"));
    cmd.args(args).env("RUST_LOG", "warn").env_remove("LINKLOGIC_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn linklogic")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Dataset and embeddings shared by the tests.
struct Trained {
    _dir: tempfile::TempDir,
    data: PathBuf,
    emb: PathBuf,
}

fn trained() -> &'static Trained {
    static T: OnceLock<Trained> = OnceLock::new();
    T.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        let emb = dir.path().join("emb.llke");
        ok(&linklogic(&["synth", "--out", s(&data), "--families", "10", "--sibling-edges"]));
        ok(&linklogic(&["train", "--data", s(&data), "--out", s(&emb), "--preset", "desk", "--max-step", "300"]));
        Trained { _dir: dir, data, emb }
    })
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(linklogic(&["--help"]).status.code(), Some(0));
    assert_eq!(linklogic(&["--version"]).status.code(), Some(0));
    assert_eq!(linklogic(&["sweep", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_and_config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    assert_eq!(linklogic(&["synth", "--out", s(&out), "--no-such-flag"]).status.code(), Some(3));
    assert_eq!(linklogic(&["synth"]).status.code(), Some(3));

    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "families = 4\nbogus_key = 1\n").unwrap();
    let r = linklogic(&["synth", "--out", s(&out), "--config", s(&cfg)]);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("bogus_key"));

    std::fs::write(&cfg, "families = [").unwrap();
    assert_eq!(linklogic(&["synth", "--out", s(&out), "--config", s(&cfg)]).status.code(), Some(3));
    assert_eq!(linklogic(&["synth", "--out", s(&out), "--families", "0"]).status.code(), Some(3));
    assert_eq!(linklogic(&["synth", "--out", s(&out), "--jobs", "0"]).status.code(), Some(3));
}

#[test]
fn input_errors_exit_2() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing");
    assert_eq!(linklogic(&["train", "--data", s(&missing), "--out", s(&dir.path().join("e"))]).status.code(), Some(2));
    let explain = |q: &str| linklogic(&["explain", "--embeddings", s(&t.emb), "--data", s(&t.data), "--query", q]);
    assert_eq!(explain("f000_child0 parent nobody").status.code(), Some(2));
    assert_eq!(explain("f000_child0 no_relation f000_father").status.code(), Some(2));
    assert_eq!(explain("f000_child0 parent").status.code(), Some(2));
    let empty = dir.path().join("raw");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(linklogic(&["prepare", "--raw", s(&empty), "--out", s(&dir.path().join("p"))]).status.code(), Some(2));
}

#[test]
fn train_writes_sidecars_and_resolves_precedence() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "lr = 0.01\nseed = 5\n").unwrap();
    let emb = dir.path().join("e.llke");
    let args =
        ["train", "--data", s(&t.data), "--out", s(&emb), "--preset", "desk", "--max-step", "20", "--config", s(&cfg)];
    let read =
        || -> toml::Table { std::fs::read_to_string(dir.path().join("e.llke.config.toml")).unwrap().parse().unwrap() };

    let stdout = ok(&linklogic_env(&[&args[..], &["--seed", "9"]].concat(), &[("LINKLOGIC_SEED", "3")]));
    let line: Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(line["steps"], 20);
    let resolved = read();
    assert_eq!(resolved["seed"].as_integer(), Some(9));
    assert_eq!(resolved["learning_rate"].as_float(), Some(0.01));
    assert_eq!(resolved["hidden_dim"].as_integer(), Some(32));
    for ext in ["json", "loss.csv"] {
        assert!(dir.path().join(format!("e.llke.{ext}")).exists());
    }

    ok(&linklogic_env(&args, &[("LINKLOGIC_SEED", "3")]));
    assert_eq!(read()["seed"].as_integer(), Some(5));
    std::fs::write(&cfg, "lr = 0.01\n").unwrap();
    ok(&linklogic_env(&args, &[("LINKLOGIC_SEED", "3")]));
    assert_eq!(read()["seed"].as_integer(), Some(3));
}

#[test]
fn explain_emits_json_lines() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let holdout = dir.path().join("h.csv");
    let stdout = ok(&linklogic(&[
        "explain",
        "--embeddings",
        s(&t.emb),
        "--data",
        s(&t.data),
        "--query",
        "f001_child0\tparent\tf001_mother",
        "--method",
        "both",
        "--n",
        "200",
        "--lambda",
        "1.0",
        "--exclude-query-inverse",
        "--holdout-csv",
        s(&holdout),
    ]));
    let lines: Vec<Value> = stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["method"], "linklogic");
    assert_eq!(lines[1]["method"], "heuristic");
    assert_eq!(lines[0]["query"][2], "f001_mother");
    assert_eq!(lines[0]["config"]["lambda"], 1.0);
    assert_eq!(lines[0]["exclude_query_inverse"], true);
    let n = lines[0]["n_paths"].as_u64().unwrap() as usize;
    assert_eq!(lines[0]["paths"].as_array().unwrap().len(), n);
    for p in lines[0]["paths"].as_array().unwrap() {
        assert_ne!(p["path"], serde_json::json!(["f001_mother", "child", "f001_child0"]));
    }
    let csv = std::fs::read_to_string(&holdout).unwrap();
    assert_eq!(csv.lines().next(), Some("y_true,y_pred"));
    assert_eq!(csv.lines().count(), 41);

    let out = dir.path().join("e.jsonl");
    let quiet = ok(&linklogic(&[
        "explain",
        "--embeddings",
        s(&t.emb),
        "--data",
        s(&t.data),
        "--query",
        "f001_child0 parent f001_mother",
        "--n",
        "200",
        "--out",
        s(&out),
    ]));
    assert!(quiet.is_empty());
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 1);
}

#[test]
fn benchmark_and_sweeps_write_reports() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("bench");
    ok(&linklogic(&["benchmark", "--data", s(&t.data), "--out", s(&bench)]));
    for f in ["benchmark.jsonl", "histogram.csv", "summary.json", "resolved_config.toml"] {
        assert!(bench.join(f).exists(), "{f}");
    }
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(bench.join("summary.json")).unwrap()).unwrap();
    assert!(summary["queries"].as_u64().unwrap() > 0);

    for (kind, expect) in
        [("parents", SweepKind::Parents), ("tautology", SweepKind::Tautology), ("truth", SweepKind::Truth)]
    {
        let out = dir.path().join(kind);
        ok(&linklogic(&[
            "sweep",
            kind,
            "--embeddings",
            s(&t.emb),
            "--data",
            s(&t.data),
            "--out",
            s(&out),
            "--n",
            "100",
            "--per-relation",
            "3",
            "--methods",
            "linklogic,heuristic@0.8",
        ]));
        let report = ExperimentReport::read(out.join("report.json")).unwrap();
        assert_eq!(report.kind, expect);
        report.verify().unwrap();
        assert!(!report.records.is_empty());
        assert!(out.join("resolved_config.toml").exists());
        let csvs: Vec<_> = std::fs::read_dir(&out)
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
            .collect();
        assert!(!csvs.is_empty(), "{kind} wrote no figure tables");
    }
}
