use std::path::Path;
use std::process::{Command, Output};

fn htim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htim"))
        .current_dir(dir)
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = htim(dir, args);
    assert!(out.status.success(), "htim {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn region() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["synth", "--seed", "42"]);
    std::fs::write(tmp.path().join("run.toml"), "re_epochs = 20\nthreads = 1\n").unwrap();
    tmp
}

fn macro_f1(dir: &Path, out: &str) -> f64 {
    let text = std::fs::read_to_string(dir.join(out).join("report.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    report["macro_f1"].as_f64().unwrap()
}

#[test]
fn eval_prints_score_and_writes_report() {
    let tmp = region();
    let dir = tmp.path();
    let stdout = ok(dir, &["--config", "run.toml", "eval", "--method", "re"]);
    assert!(stdout.starts_with("re member cv: macro-F1 "), "{stdout}");
    let printed: f64 = stdout.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!((printed - macro_f1(dir, "out")).abs() < 1e-4);
    assert!(printed >= 90.0);
    for file in ["report.json", "confusion.csv", "graph_re.vec"] {
        assert!(dir.join("out").join(file).is_file(), "{file}");
    }
}

#[test]
fn text_features_lift_sympathizers_above_interactions_alone() {
    let tmp = region();
    let dir = tmp.path();
    let base = ["--config", "run.toml", "eval", "--tier", "sympathizer", "--method"];
    ok(dir, &[&base[..], &["re", "--out", "re"]].concat());
    ok(dir, &[&base[..], &["re+tfidf", "--out", "hybrid"]].concat());
    assert!(macro_f1(dir, "hybrid") >= macro_f1(dir, "re") + 5.0);
}

#[test]
fn staged_commands_chain_through_files() {
    let tmp = region();
    let dir = tmp.path();
    let args = ["--config", "run.toml"];
    for cmd in ["train-text", "train-graph", "fuse", "train-model", "project"] {
        ok(dir, &[&args[..], &[cmd, "--method", "re+tfidf"]].concat());
    }
    for file in ["text_user_tfidf.vec", "graph_re.vec", "hybrid.csv", "model.json", "projection.svg"] {
        assert!(dir.join("out").join(file).is_file(), "{file}");
    }
}

#[test]
fn repeated_runs_are_identical() {
    let tmp = region();
    let dir = tmp.path();
    for out in ["a", "b"] {
        ok(dir, &["--config", "run.toml", "--seed", "7", "--out", out, "eval", "--method", "re+tfidf"]);
    }
    for file in ["report.json", "confusion.csv", "graph_re.vec", "text_user_tfidf.vec"] {
        let a = std::fs::read(dir.join("a").join(file)).unwrap();
        let b = std::fs::read(dir.join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
}

#[test]
fn exit_codes_separate_usage_from_data_problems() {
    let tmp = region();
    let dir = tmp.path();
    assert_eq!(htim(dir, &["--help"]).status.code(), Some(0));
    assert_eq!(htim(dir, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(htim(dir, &["eval", "--tier", "voter"]).status.code(), Some(1));
    let bad = htim(dir, &["eval", "--method", "contextual:avg", "--level", "user"]);
    assert_eq!(bad.status.code(), Some(1));

    let missing = htim(dir, &["--data", "nowhere", "eval"]);
    assert_eq!(missing.status.code(), Some(2));
    let no_model = htim(dir, &["--out", "empty", "train-model"]);
    assert_eq!(no_model.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&no_model.stderr).contains("htim fuse"));
}
