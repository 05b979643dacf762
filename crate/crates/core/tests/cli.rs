//! End-to-end runs of the command-line binary.

use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sre-spread"))
}

fn stdout(args: &[&str]) -> (Option<i32>, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn enumerate_commands() {
    let (code, out) = stdout(&["enumerate-group"]);
    assert_eq!(code, Some(0));
    assert!(out.starts_with("11520 distinct elements"));
    let (code, out) = stdout(&["enumerate-spectra"]);
    assert_eq!(code, Some(0));
    assert!(out.trim_end().ends_with("7 classes"));
    let (_, out) = stdout(&["enumerate-spectra", "--psd-only"]);
    assert!(out.trim_end().ends_with("8 classes"));
}

#[test]
fn oracle_check_passes() {
    let (code, out) = stdout(&["oracle-check", "--circuits", "10"]);
    assert_eq!(code, Some(0), "{out}");
    assert!(out.contains("PASS"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let out = out.to_str().unwrap();
    let base = ["run", "--depth", "4", "--samples", "10", "--magic-sites", "2", "--out", out];
    let (code, _) = stdout(&[&base[..], &["--length", "7"]].concat());
    assert_eq!(code, Some(1));
    let (code, _) = stdout(&[&base[..], &["--length", "8", "--circuit", "haar"]].concat());
    assert_eq!(code, Some(1));
    let (code, _) = stdout(&[&base[..], &["--length", "8", "--max-work", "5"]].concat());
    assert_eq!(code, Some(2));
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "length = 8\nunknown-key = 1\n").unwrap();
    let (code, _) = stdout(&["run", "--config", cfg.to_str().unwrap(), "--out", out]);
    assert_eq!(code, Some(1));
}

#[test]
fn config_file_run_and_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "length = 12\ndepth = 6\nsamples = 300\nseed = 4\nmagic-sites = [3, 8]\ncircuit = \"restricted\"\n").unwrap();
    let out = dir.path().join("bundle");
    // flag overrides the file's seed
    let (code, text) = stdout(&["run", "--config", cfg.to_str().unwrap(), "--seed", "5", "--threads", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code, Some(0), "{text}");
    for f in ["profile.csv", "normalized.csv", "fits.json", "metadata.json", "batches.bin"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["seed"], 5);
    assert_eq!(meta["config"]["gate_kind"], "restricted");
    assert!(fs::read_to_string(out.join("normalized.csv")).unwrap().starts_with("# seed=5, config_sha256="));

    let (code, fits) = stdout(&["analyze", out.to_str().unwrap()]);
    assert_eq!(code, Some(0));
    assert_eq!(fits, fs::read_to_string(out.join("fits.json")).unwrap());
}
