use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn annotrack(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_annotrack"))
        .current_dir(dir)
        .args(["--log-level", "off"])
        .args(args)
        .output()
        .unwrap()
}

fn fixture() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/filter_records.jsonl")
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    for flag in ["--help", "--version"] {
        let out = annotrack(dir.path(), &[flag]);
        assert_eq!(out.status.code(), Some(0), "{flag}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(annotrack(d, &["filter", "--bogus"]).status.code(), Some(1));
    assert_eq!(annotrack(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(annotrack(d, &["filter", "--quota", "eng"]).status.code(), Some(1));
    fs::write(d.join("p.jsonl"), "").unwrap();
    let out = annotrack(d, &["evaluate", "--preds", "p.jsonl", "--threshold", "median"]);
    assert_eq!(out.status.code(), Some(1));
    fs::write(d.join("bad.toml"), "seed = [").unwrap();
    assert_eq!(annotrack(d, &["--config", "bad.toml", "stats"]).status.code(), Some(1));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("broken.jsonl"), "{\"id\": 1\n").unwrap();
    let out = annotrack(d, &["filter", "--in", "broken.jsonl", "--out", "x.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
    assert!(!d.join("x.jsonl").exists());

    let out = annotrack(d, &["stats", "--in", "missing.jsonl"]);
    assert_eq!(out.status.code(), Some(2));

    fs::write(d.join("data.csv"), "text,label\nhello,maybe\n").unwrap();
    let out = annotrack(d, &["ingest", "--dataset", "HateXplain", "--in", "data.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn filter_reads_stdin_and_writes_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_annotrack"))
        .current_dir(dir.path())
        .args(["--log-level", "off", "filter", "--stats", "stats.json"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&fs::read(fixture()).unwrap()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 26);
    let stats: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["kept"], 26);
    assert_eq!(stats["emitted"], 26);
}

#[test]
fn quota_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |seed: &str, out: &str| {
        let f = fixture();
        let args = ["--seed", seed, "filter", "--in", f.to_str().unwrap(), "--out", out, "--quota", "eng=2"];
        assert!(annotrack(d, &args).status.success());
        fs::read(d.join(out)).unwrap()
    };
    assert_eq!(run("7", "a.jsonl"), run("7", "b.jsonl"));
}

#[test]
fn toml_config_supplies_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let f = fixture();
    fs::write(d.join("run.toml"), "seed = 7\n").unwrap();
    let args = ["filter", "--in", f.to_str().unwrap(), "--quota", "eng=2", "--out"];
    let flag = annotrack(d, &[&["--seed", "7"][..], &args, &["flag.jsonl"]].concat());
    let conf = annotrack(d, &[&["--config", "run.toml"][..], &args, &["conf.jsonl"]].concat());
    assert!(flag.status.success() && conf.status.success());
    assert_eq!(fs::read(d.join("flag.jsonl")).unwrap(), fs::read(d.join("conf.jsonl")).unwrap());
}
