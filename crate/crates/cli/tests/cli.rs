use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BREAK_SRC: &str = "def f(a):\n    for i in range(len(a)):\n        if a[i] > 2:\n            break\n        a[i] += 1\n    return a\n";

fn pyspdz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pyspdz")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn corpus() -> String {
    format!("{}/../core/data/corpus/corpus.jsonl", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn transpile_emits_both_forms() {
    let dir = tempfile::tempdir().unwrap();
    let src = write(dir.path(), "brk.py", BREAK_SRC);
    let cfp = pyspdz(&["transpile", &src, "--emit-cfp"]);
    assert_eq!(cfp.status.code(), Some(0));
    assert!(stdout(&cfp).contains("__flag_0 = __flag_0 or a[i] > 2"), "{}", stdout(&cfp));
    let spdz = pyspdz(&["transpile", &src]);
    assert_eq!(spdz.status.code(), Some(0));
    let text = stdout(&spdz);
    assert!(text.starts_with("import math\n"));
    assert!(text.contains("def f(a: sfix.Array):"), "{text}");
}

#[test]
fn run_sim_and_trace_audit() {
    let dir = tempfile::tempdir().unwrap();
    let src = write(dir.path(), "brk.py", BREAK_SRC);
    let spdz = write(dir.path(), "brk.mpc", &stdout(&pyspdz(&["transpile", &src])));
    let inputs = write(dir.path(), "in.json", "[[1, 2, 3]]");
    let out = pyspdz(&["run-sim", &spdz, "--inputs", &inputs]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "[2.0, 3.0, 3.0]");
    let pairs = write(dir.path(), "pairs.json", "[[[[1, 2, 3]], [[9, 0, 4]]], [[[5, 5, 5]], [[0, 0, 0]]]]");
    let out = pyspdz(&["trace-audit", &spdz, "--pairs", &pairs]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("oblivious over 2 pair(s)"));
}

#[test]
fn check_reports_failures_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let src = write(dir.path(), "brk.py", BREAK_SRC);
    let good = write(dir.path(), "good.json", r#"[{"inputs": [[1, 2, 3]], "expected": [2, 3, 3]}]"#);
    assert_eq!(pyspdz(&["check", &src, "--cases", &good]).status.code(), Some(0));
    let bad = write(dir.path(), "bad.json", r#"[{"inputs": [[1, 2, 3]], "expected": [0, 0, 0]}]"#);
    assert_eq!(pyspdz(&["check", &src, "--cases", &bad]).status.code(), Some(3));
}

#[test]
fn eval_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("rep");
    let out = pyspdz(&["eval", &corpus(), "--report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("overall"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(report.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["overall"]["entries"], 66);
    assert!(report.join("report.txt").exists());
}

#[test]
fn tokens_compares_pattern_matching() {
    let out = pyspdz(&["tokens", &corpus()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("refactor"));
}

#[test]
fn exit_codes_for_usage_and_corpus_errors() {
    assert_eq!(pyspdz(&["transpile"]).status.code(), Some(1));
    assert_eq!(pyspdz(&["transpile", "/nonexistent.py"]).status.code(), Some(1));
    assert_eq!(pyspdz(&["eval", &corpus(), "--provider", "mock"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.jsonl", "{\"id\": 1}\n");
    assert_eq!(pyspdz(&["eval", &bad]).status.code(), Some(2));
    let empty = write(dir.path(), "empty.jsonl", "\n");
    assert_eq!(pyspdz(&["eval", &empty]).status.code(), Some(2));
}
