//! End-to-end tests of the `gibbslab` binary: artefact reproducibility,
//! exit-code policy, and configuration error reporting.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gibbslab"));
    // Insulate the tests from whatever budget the ambient shell set.
    cmd.env_remove("GIBBSLAB_BUDGET_MB");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should spawn")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const QUICK_CLASSICAL: &str = "samples = 5000\ncutoff = 2.0\nw = [0:1.0]\ncovariance = massive\nseed = 9\n";

#[test]
fn classical_runs_are_byte_identical_and_thread_independent() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "quick.cfg", QUICK_CLASSICAL);

    let mut outputs = Vec::new();
    for (sub, extra) in [("a", vec![]), ("b", vec![]), ("c", vec!["--threads", "1"])] {
        let out_dir = tmp.path().join(sub);
        let mut args = vec![
            "classical",
            "--config",
            cfg.as_str(),
            "--out",
            out_dir.to_str().unwrap(),
        ];
        args.extend(extra);
        let out = run(&args);
        assert!(
            out.status.success(),
            "classical run failed: {}{}",
            stdout(&out),
            stderr(&out)
        );
        let text = stdout(&out);
        let hash_line = text
            .lines()
            .find(|l| l.starts_with("config hash: "))
            .expect("hash line");
        let hash = hash_line.trim_start_matches("config hash: ");
        assert_eq!(hash.len(), 64, "hash should be 64 hex chars: {hash}");
        assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
        assert!(text.lines().any(|l| l == "PASS"), "expected PASS: {text}");
        outputs.push((
            hash.to_string(),
            read(&out_dir.join("report.json")),
            read(&out_dir.join("rows.csv")),
        ));
    }

    let (hash0, report0, rows0) = &outputs[0];
    for (hash, report, rows) in &outputs[1..] {
        assert_eq!(hash, hash0, "config hash drifted between runs");
        assert_eq!(report, report0, "report.json bytes drifted between runs");
        assert_eq!(rows, rows0, "rows.csv bytes drifted between runs");
    }
}

#[test]
fn seed_flag_overrides_the_preset_and_matches_the_config_seed() {
    let tmp = tempfile::tempdir().unwrap();
    // Same instrument, seed given once via the file and once via the flag.
    let with_seed = write_cfg(tmp.path(), "with.cfg", QUICK_CLASSICAL);
    let without_seed = write_cfg(
        tmp.path(),
        "without.cfg",
        "samples = 5000\ncutoff = 2.0\nw = [0:1.0]\ncovariance = massive\n",
    );

    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let out_a = run(&[
        "classical",
        "--config",
        &with_seed,
        "--out",
        a.to_str().unwrap(),
    ]);
    let out_b = run(&[
        "classical",
        "--config",
        &without_seed,
        "--seed",
        "9",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert!(out_a.status.success(), "{}", stderr(&out_a));
    assert!(out_b.status.success(), "{}", stderr(&out_b));
    assert_eq!(
        read(&a.join("report.json")),
        read(&b.join("report.json")),
        "--seed should reproduce the config-file seed exactly"
    );
}

#[test]
fn starved_convergence_run_fails_with_named_gates_and_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "starved.cfg", "samples = 50\nt_grid = 2.0, 4.0\n");
    let out_dir = tmp.path().join("run");
    let out = run(&[
        "converge-1d",
        "--config",
        &cfg,
        "--no-plots",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "want exit 2: {}", stderr(&out));
    let err = stderr(&out);
    assert!(
        err.contains("one_body_gap_decreasing"),
        "stderr should name the failed gate: {err}"
    );
    assert!(stdout(&out).lines().any(|l| l.starts_with("FAIL: ")));
    // Artefacts are still written so a failed run can be inspected.
    assert!(out_dir.join("report.json").exists());
    assert!(out_dir.join("rows.csv").exists());
}

#[test]
fn config_problems_are_all_reported_at_once() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "broken.cfg",
        "bogus = 1\nw = [0:-0.5]\ncovariance = sideways\n",
    );
    let out = run(&["classical", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("3 problem(s)"), "{err}");
    assert!(err.contains("unknown key `bogus`"), "{err}");
    assert!(err.contains("w[0] is negative"), "{err}");
    assert!(err.contains("covariance must be `massive` or `thermal`"), "{err}");
}

#[test]
fn duplicate_interaction_momenta_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "dup.cfg", "w = [0:1.0; 0:2.0]\n");
    let out = run(&["classical", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("duplicate interaction momentum [0]"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn momentum_arity_must_match_the_declared_dimension() {
    let tmp = tempfile::tempdir().unwrap();
    // dim = 2 wants two components per momentum even when dim comes later
    // in the file, and a 1D preset rejects pairs.
    let cfg = write_cfg(tmp.path(), "arity.cfg", "w = [0,0:1.0; 1:0.5]\ndim = 2\n");
    let out = run(&["classical", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("has 1 component(s) but dim = 2"),
        "{}",
        stderr(&out)
    );

    let cfg = write_cfg(tmp.path(), "arity1.cfg", "w = [0,0:1.0]\n");
    let out = run(&["classical", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("has 2 component(s) but dim = 1"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn unknown_subcommands_exit_one_with_usage() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("unrecognized subcommand"), "{err}");
    assert!(err.contains("Usage:"), "{err}");
    // Plain --help stays a success so `gibbslab --help | less` behaves.
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("free-check"));
}

#[test]
fn plots_are_written_by_default_and_skipped_on_request() {
    let tmp = tempfile::tempdir().unwrap();
    let with = tmp.path().join("with");
    let out = run(&["free-check", "--out", with.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(with.join("free_gap.svg").exists());
    let svg = String::from_utf8(read(&with.join("free_gap.svg"))).unwrap();
    assert!(svg.starts_with("<svg"), "plot should be standalone SVG");
    assert!(svg.contains("polyline"), "plot should contain line series");

    let without = tmp.path().join("without");
    let out = run(&[
        "free-check",
        "--no-plots",
        "--out",
        without.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(!without.join("free_gap.svg").exists());
    assert!(without.join("report.json").exists());
}

#[test]
fn invalid_memory_budget_is_a_configuration_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .env("GIBBSLAB_BUDGET_MB", "potato")
        .args(["entropy-suite", "--out"])
        .arg(tmp.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("GIBBSLAB_BUDGET_MB"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn zero_threads_is_rejected_before_any_work() {
    let out = run(&["--threads", "0", "entropy-suite"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("--threads must be at least 1"),
        "{}",
        stderr(&out)
    );
}
