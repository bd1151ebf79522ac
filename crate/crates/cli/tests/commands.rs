use std::path::Path;
use std::process::Command as Process;

use harvest_cli::config::{RunConfig, SCHEMA_VERSION};
use harvest_cli::emit::{BRANCH_HEADER, CURVE_HEADER, CZERO_HEADER};
use harvest_cli::{run, CliError, Command};

fn config(body: &str) -> RunConfig {
    RunConfig::from_toml(&format!("schema_version = \"{SCHEMA_VERSION}\"\n{body}")).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn csv_rows(text: &str, header: &str) -> usize {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(header));
    let width = header.split(',').count();
    lines.map(|l| assert_eq!(l.split(',').count(), width, "{l}")).count()
}

#[test]
fn diagram_writes_three_reproducible_files() {
    let cfg = config("[run]\na = 20.0\nc_max = 200.0\n");
    let (one, two) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let out = run(Command::Diagram, &cfg, Some(one.path()), false).unwrap();
    assert_eq!(out.exit_code, 0);
    assert_eq!(out.files.len(), 3);
    run(Command::Diagram, &cfg, Some(two.path()), false).unwrap();
    for name in ["diagram.json", "branches.csv", "diagram.svg"] {
        assert_eq!(read(one.path(), name), read(two.path(), name), "{name}");
    }
    assert!(csv_rows(&read(one.path(), "branches.csv"), BRANCH_HEADER) > 50);
}

#[test]
fn formats_select_outputs() {
    let cfg = config("[run]\na = 20.0\n[output]\nformats = [\"json\"]\n");
    let dir = tempfile::tempdir().unwrap();
    let out = run(Command::Diagram, &cfg, Some(dir.path()), false).unwrap();
    assert_eq!(out.files, vec![dir.path().join("diagram.json")]);
}

#[test]
fn continue_reaches_the_fold() {
    let cfg = config("[run]\na = 20.0\nc_max = 500.0\n");
    let dir = tempfile::tempdir().unwrap();
    run(Command::Continue, &cfg, Some(dir.path()), false).unwrap();
    let csv = read(dir.path(), "branch.csv");
    assert!(csv_rows(&csv, BRANCH_HEADER) > 10);
    let json: serde_json::Value = serde_json::from_str(&read(dir.path(), "branch.json")).unwrap();
    assert_eq!(json["degenerate_points"].as_array().unwrap().len(), 1);
}

#[test]
fn curve_commands_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("[run]\na = 20.0\na_range = [\"lambda1+0.5\", 30.0]\n");
    run(Command::FoldCurve, &cfg, Some(dir.path()), false).unwrap();
    assert!(csv_rows(&read(dir.path(), "fold_curve.csv"), CURVE_HEADER) > 5);
    run(Command::DsigmaCurve, &config(""), Some(dir.path()), false).unwrap();
    assert!(csv_rows(&read(dir.path(), "dsigma_curve.csv"), CURVE_HEADER) > 5);
    let cfg = config("[run]\nwhich = \"ddagger-plus\"\na_range = [\"lambda2+0.1\", 45.0]\n");
    run(Command::CzeroBranch, &cfg, Some(dir.path()), false).unwrap();
    assert!(csv_rows(&read(dir.path(), "czero_branch.csv"), CZERO_HEADER) > 5);
}

#[test]
fn count_in_the_window_finds_four() {
    let cfg = config("[run]\na = 40.0\nc = [-0.005]\nn_starts = 800\n");
    let dir = tempfile::tempdir().unwrap();
    let out = run(Command::Count, &cfg, Some(dir.path()), false).unwrap();
    assert!(out.summary[0].contains("count=4"), "{:?}", out.summary);
    let json: serde_json::Value = serde_json::from_str(&read(dir.path(), "count.json")).unwrap();
    assert_eq!(json["report"]["counts"][0]["count"], 4);
}

#[test]
fn verify_single_fold_regime_passes() {
    let cfg = config("[run]\nregime = \"theorem1\"\na = 20.0\nc_max = 200.0\n");
    let dir = tempfile::tempdir().unwrap();
    let out = run(Command::Verify, &cfg, Some(dir.path()), false).unwrap();
    assert_eq!(out.exit_code, 0, "{:?}", out.summary);
    let json: serde_json::Value = serde_json::from_str(&read(dir.path(), "verification_report.json")).unwrap();
    assert!(json["report"]["claims"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn verify_with_wrong_regime_exits_two() {
    let cfg = config("[run]\nregime = \"theorem3\"\na = 20.0\ncheck_stability = false\n");
    let dir = tempfile::tempdir().unwrap();
    let out = run(Command::Verify, &cfg, Some(dir.path()), false).unwrap();
    assert_eq!(out.exit_code, 2);
}

#[test]
fn command_mismatch_is_an_error() {
    let cfg = config("[run]\ncommand = \"count\"\na = 20.0\n");
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(run(Command::Diagram, &cfg, Some(dir.path()), false), Err(CliError::Config(_))));
}

#[test]
fn failing_hypotheses_need_force() {
    let cfg = config("[model]\nharvest = \"first-mode\"\n[run]\na = 20.0\n");
    let dir = tempfile::tempdir().unwrap();
    let out = run(Command::CheckHypotheses, &cfg, Some(dir.path()), false).unwrap();
    assert_eq!(out.exit_code, 2);
    assert!(matches!(run(Command::Diagram, &cfg, Some(dir.path()), false), Err(CliError::Hypotheses(_))));
    assert!(run(Command::Diagram, &cfg, Some(dir.path()), true).is_ok());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_bifurcate");
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, format!("schema_version = \"{SCHEMA_VERSION}\"\n{body}")).unwrap();
        p
    };
    let status = |cmd: &str, cfg: &Path| {
        Process::new(bin)
            .args([cmd, "--config", cfg.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()])
            .env("BIFURCATE_THREADS", "2")
            .output()
            .unwrap()
    };
    let ok = write("ok.toml", "[run]\na = 5.0\n");
    assert_eq!(status("check-hypotheses", &ok).status.code(), Some(0));
    let o = status("diagram", &ok);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let bad = write("bad.toml", "[run]\nbogus = 1\n");
    let o = status("diagram", &bad);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
    assert_eq!(status("diagram", &dir.path().join("missing.toml")).status.code(), Some(1));
    let wrong = write("wrong.toml", "[run]\nregime = \"theorem2\"\na = 5.0\ncheck_stability = false\n");
    assert_eq!(status("verify", &wrong).status.code(), Some(2));
}
