//! The `mtlbench` binary: subcommands, exit codes and output files.

use std::path::Path;
use std::process::{Command, Output};

const SMALL: [&str; 8] = ["--counts", "400,100,100", "--epochs", "1", "--eval-rays", "5", "--batch-size", "64"];

fn mtlbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtlbench")).args(args).output().expect("spawn mtlbench")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn selftest_passes() {
    let out = mtlbench(&["selftest"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("[PASS]"));
    assert!(!stdout.contains("[FAIL]"));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(mtlbench(&["run", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(mtlbench(&["run", "--hpo", "bayesian"]).status.code(), Some(1));
    assert_eq!(mtlbench(&["run", "--method", "epo"]).status.code(), Some(1));
    assert_eq!(mtlbench(&["run", "--counts", "1,2"]).status.code(), Some(1));
    assert_eq!(mtlbench(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(mtlbench(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_report_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let missing = dir.path().join("absent.csv");
    let o = mtlbench(&["report", "--input", path(&missing), "--out", path(&out), "--format", "json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn ablate_prints_one_row_per_multiplier() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ablation.csv");
    let mut args = vec!["ablate", "--c", "0.25,1,4", "--seeds", "5", "--out", path(&csv)];
    args.extend(SMALL);
    let o = mtlbench(&args);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    let rows: Vec<&str> = stdout.lines().skip_while(|l| !l.starts_with("c\t")).skip(1).take_while(|l| l.contains('\t')).collect();
    assert_eq!(rows.len(), 3, "{stdout}");
    for (row, c) in rows.iter().zip(["0.25", "1", "4"]) {
        assert!(row.starts_with(&format!("{c}\t")));
    }
    // 2 methods × 3 multipliers × 5 seeds, plus the header.
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 31);
}

#[test]
fn run_then_report_in_every_format() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("results.csv");
    let mut args = vec!["run", "--method", "single_task,uniform,cosmos", "--seeds", "2", "--out", path(&csv)];
    args.extend(SMALL);
    let o = mtlbench(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read(&csv).unwrap();

    // Reruns with the same arguments give the same file.
    assert_eq!(mtlbench(&args).status.code(), Some(0));
    assert_eq!(std::fs::read(&csv).unwrap(), first);

    let json = dir.path().join("results.json");
    let o = mtlbench(&["report", "--input", path(&csv), "--out", path(&json), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["records"].as_array().unwrap().len(), 6);

    let plot = dir.path().join("results.dat");
    let o = mtlbench(&["report", "--input", path(&csv), "--out", path(&plot), "--format", "plotdata", "--method", "cosmos"]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&plot).unwrap();
    assert!(text.lines().skip(1).all(|l| l.contains(",cosmos,")));

    let bad = dir.path().join("bad.txt");
    assert_eq!(mtlbench(&["report", "--input", path(&csv), "--out", path(&bad), "--format", "xml"]).status.code(), Some(1));
}

#[test]
fn hpo_writes_a_trial_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("trials.csv");
    let mut args = vec!["hpo", "--method", "uniform", "--budget", "3", "--out", path(&log)];
    args.extend(SMALL);
    let o = mtlbench(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&log).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("best config"));
    assert_eq!(mtlbench(&["hpo", "--method", "uniform", "--budget", "400", "--out", path(&log)]).status.code(), Some(1));
}

#[test]
fn plan_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.txt");
    std::fs::write(&plan, "# two methods, one seed\nmethods = uniform\nseeds = 7\nc = 0.5\nepochs = 1\neval_rays = 3\n").unwrap();
    let out = dir.path().join("r.csv");
    let o = mtlbench(&["run", "--plan", path(&plan), "--counts", "300,50,50", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("uniform,"), "{row}");
    assert_eq!(text.lines().count(), 2);
}
