//! End-to-end checks of the binary: exit codes, output formats, and the
//! rule-table environment variable.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_compose-patterns"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_corpus(dir: &Path) {
    fs::write(
        dir.join("docker-compose.yml"),
        "services:\n  web:\n    image: nginx\n    extends:\n      service: web\n      file: base.yml\n  db:\n    image: postgres:13\n",
    )
    .unwrap();
    fs::write(
        dir.join("base.yml"),
        "services:\n  web:\n    image: nginx\n",
    )
    .unwrap();
}

#[test]
fn scan_emits_parseable_json_and_exit_zero() {
    let tmp = tempfile::tempdir().unwrap();
    write_corpus(tmp.path());
    let out = run(&["scan", tmp.path().to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["files"].as_array().unwrap().len(), 1);
    assert_eq!(report["histogram"]["Database"], 1);
    // every pattern id is present even at zero
    assert_eq!(report["pattern_counts"].as_object().unwrap().len(), 14);
}

#[test]
fn missing_root_exits_two() {
    let out = run(&["scan", "/no/such/corpus/root"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/no/such/corpus/root"));
}

#[test]
fn bad_flag_and_bad_min_support_exit_one() {
    let out = run(&["scan", ".", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));

    let tmp = tempfile::tempdir().unwrap();
    write_corpus(tmp.path());
    let out = run(&["scan", tmp.path().to_str().unwrap(), "--min-support", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fail_on_pattern_exits_three_but_still_prints_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    write_corpus(tmp.path());
    let out = run(&[
        "scan",
        tmp.path().to_str().unwrap(),
        "--fail-on-pattern",
        "SERVICE_INHERITANCE",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["pattern_counts"]["SERVICE_INHERITANCE"], 1);

    // a pattern that does not fire leaves the exit clean
    let out = run(&[
        "scan",
        tmp.path().to_str().unwrap(),
        "--fail-on-pattern",
        "MAIL_SERVICE_TESTING",
    ]);
    assert!(out.status.success());
}

#[test]
fn rules_env_var_prepends_a_table() {
    let tmp = tempfile::tempdir().unwrap();
    let table = tmp.path().join("corp.tsv");
    fs::write(&table, "exact\tcorp-gateway\tReverseProxy\t5\n").unwrap();

    let out = bin()
        .args(["classify", "corp-gateway:2"])
        .env("COMPOSE_PATTERNS_RULES", &table)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(stdout(&out).contains("Reverse proxy"), "got: {}", stdout(&out));
    assert!(stdout(&out).contains("exact:corp-gateway"));

    // without the table the image means nothing
    let out = run(&["classify", "corp-gateway:2"]);
    assert!(stdout(&out).contains("Unclassified"));
}

#[test]
fn explain_lists_and_resolves_pattern_ids() {
    let out = run(&["explain"]);
    assert!(out.status.success());
    let listing = stdout(&out);
    assert_eq!(listing.lines().count(), 14);
    assert!(listing.contains("SERVICE_INHERITANCE"));

    let out = run(&["explain", "YAML_ANCHOR_ALIAS"]);
    assert!(out.status.success());
    assert!(stdout(&out).to_lowercase().contains("anchor"));

    let out = run(&["explain", "NOT_A_PATTERN"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("SERVICE_INHERITANCE"));
}

#[test]
fn stats_runs_on_plain_number_files() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.txt");
    let b = tmp.path().join("b.txt");
    fs::write(&a, "# replica counts\n1\n2\n3\n\n4\n").unwrap();
    fs::write(&b, "5\n6\n7\n8\n").unwrap();
    let out = run(&[
        "stats",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["n"], 4);
    assert_eq!(v["m"], 4);
    assert!(v["test"]["p_value"].as_f64().unwrap() < 0.05 + 1.0);

    let out = run(&["stats", a.to_str().unwrap(), "/missing.txt"]);
    assert_eq!(out.status.code(), Some(1));
}
