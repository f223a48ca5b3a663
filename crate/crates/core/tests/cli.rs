use std::path::Path;
use std::process::{Command, Output};

use rfs_extent::io::{read_estimates, read_scenario_log};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rfs-extent"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_track_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("s3.jsonl");
    let est = dir.path().join("est.jsonl");
    let csv = dir.path().join("eval.csv");

    let out = run(&["simulate", "--scenario", "3", "--out", p(&log)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let scenario = read_scenario_log(std::fs::read(&log).unwrap().as_slice()).unwrap();
    assert_eq!(scenario.steps.len(), 50);

    let out = run(&["track", "--filter", "lmb", "--in", p(&log), "--out", p(&est)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (records, summary) = read_estimates(std::fs::read(&est).unwrap().as_slice()).unwrap();
    assert_eq!(records.len(), 50);
    let summary = summary.expect("summary line");
    assert_eq!(summary.filter, "lmb");
    assert_eq!(summary.steps, 50);
    assert!(records[30].est.iter().all(|e| e.r.is_some()));

    let out = run(&["eval", "--truth", p(&log), "--est", p(&est), "--extended", "--out", p(&csv)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,card_err_mean,card_err_std,ospa_mean,ospa_std,ospa_ext_mean,ospa_ext_std"
    );
    assert_eq!(lines.count(), 50);
}

#[test]
fn simulation_is_reproducible_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let c = dir.path().join("c.jsonl");
    for (path, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        assert!(run(&["simulate", "--scenario", "2", "--seed", seed, "--out", p(path)])
            .status
            .success());
    }
    let read = |x: &Path| std::fs::read(x).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn scenario_spec_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let log = dir.path().join("log.jsonl");
    std::fs::write(
        &spec,
        r#"{
  "steps": 5, "seed": 4,
  "motion": {"model": "constant_velocity", "period": 1.0, "accel_std": 0.1},
  "p_d": 0.9,
  "clutter": {"rate": 2.0, "lower": [-100.0, -100.0], "upper": [100.0, 100.0]},
  "targets": [{"birth": 1, "death": 5,
               "path": {"initial": [0.0, 0.0, 1.0, 0.0]},
               "extent": [[4.0, 0.0], [0.0, 1.0]]}]
}"#,
    )
    .unwrap();
    let out = run(&["simulate", "--scenario", p(&spec), "--out", p(&log)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let scenario = read_scenario_log(std::fs::read(&log).unwrap().as_slice()).unwrap();
    assert_eq!(scenario.steps.len(), 5);
    assert_eq!(scenario.steps[4].truth.len(), 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("s.jsonl");
    assert!(run(&["simulate", "--scenario", "3", "--out", p(&log)]).status.success());
    let code = |args: &[&str]| run(args).status.code().unwrap();

    // Bad arguments or specification.
    let est = dir.path().join("e.jsonl");
    assert_eq!(code(&["track", "--filter", "cphd", "--in", p(&log), "--out", p(&est)]), 2);
    assert_eq!(code(&["simulate", "--scenario", "9", "--out", p(&est)]), 2);
    let bad_spec = dir.path().join("bad.json");
    std::fs::write(&bad_spec, "{\"steps\": 3}").unwrap();
    assert_eq!(code(&["simulate", "--scenario", p(&bad_spec), "--out", p(&est)]), 2);
    let bad_cfg = dir.path().join("cfg.json");
    std::fs::write(&bad_cfg, "{\"p_survive\": 0.9}").unwrap();
    assert_eq!(
        code(&["track", "--filter", "lmb", "--in", p(&log), "--config", p(&bad_cfg), "--out", p(&est)]),
        2
    );
    assert_eq!(code(&["frobnicate"]), 2);

    // I/O failure.
    let missing = dir.path().join("missing.jsonl");
    assert_eq!(code(&["track", "--filter", "lmb", "--in", p(&missing), "--out", p(&est)]), 3);
    let unwritable = dir.path().join("no/such/dir/out.jsonl");
    assert_eq!(code(&["simulate", "--scenario", "3", "--out", p(&unwritable)]), 3);

    // Malformed line, reported with its number.
    let broken = dir.path().join("broken.jsonl");
    let mut text = std::fs::read_to_string(&log).unwrap();
    text.push_str("{\"k\": 51, \"truth\": [\n");
    std::fs::write(&broken, text).unwrap();
    let out = run(&["track", "--filter", "lmb", "--in", p(&broken), "--out", p(&est)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 51"));

    // Truth and estimates disagree on steps.
    assert!(run(&["track", "--filter", "lmb", "--in", p(&log), "--out", p(&est)]).status.success());
    let short = dir.path().join("short.jsonl");
    let lines: Vec<String> = std::fs::read_to_string(&log)
        .unwrap()
        .lines()
        .take(20)
        .map(String::from)
        .collect();
    std::fs::write(&short, lines.join("\n") + "\n").unwrap();
    assert_eq!(code(&["eval", "--truth", p(&short), "--est", p(&est)]), 5);
}

#[test]
fn thread_override_keeps_output_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |out: &Path| -> Vec<String> {
        ["mc", "--runs", "3", "--scenario", "3", "--filter", "lmb-ab", "--seed-base", "5", "--out"]
            .iter()
            .map(|s| s.to_string())
            .chain([p(out).to_string()])
            .collect()
    };
    assert!(bin().args(args(&a)).env("RFS_EXTENT_THREADS", "1").status().unwrap().success());
    assert!(bin().args(args(&b)).env("RFS_EXTENT_THREADS", "3").status().unwrap().success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let side_a = std::fs::read_to_string(dir.path().join("a.r.csv")).unwrap();
    assert!(side_a.starts_with("run,k,label,r\n"));
    assert_eq!(side_a, std::fs::read_to_string(dir.path().join("b.r.csv")).unwrap());

    let status = bin().args(args(&a)).env("RFS_EXTENT_THREADS", "zero").status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn glmb_mc_writes_no_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let status = run(&[
        "mc", "--runs", "2", "--scenario", "3", "--filter", "glmb", "--jobs", "2", "--out", p(&out),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(out.exists());
    assert!(!dir.path().join("g.r.csv").exists());
}
