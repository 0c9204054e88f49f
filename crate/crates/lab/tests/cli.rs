use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bayrn_lab::config;
use bayrn_lab::record::{read_jsonl, BaselineRecord, Method, PolicyFile};
use bayrn_core::bayrn::RunEvent;
use tempfile::TempDir;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bayrn-lab")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// The sim2sim experiment with a budget small enough for a unit test.
fn tiny_config(dir: &Path) -> PathBuf {
    let text = config::SIM2SIM
        .replace("n_init = 5", "n_init = 3")
        .replace("n_iter_max = 15", "n_iter_max = 2")
        .replace("n_pop = 40", "n_pop = 8")
        .replace("n_iter = 60", "n_iter = 4");
    let path = dir.join("tiny.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_config_accepts_shipped_configs() {
    for name in ["furuta", "ballcup", "sim2sim"] {
        let o = lab(&["validate-config", name]);
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
    }
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/furuta.toml");
    assert_eq!(code(&lab(&["validate-config", path])), 0);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, config::FURUTA.replace("j_succ = 375.0\n", "")).unwrap();
    let o = lab(&["validate-config", s(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("bayrn.j_succ"), "{}", stderr(&o));
    assert_eq!(code(&lab(&["bayrn", "run", "--config", s(&bad)])), 1);
    assert_eq!(code(&lab(&["validate-config", "/nonexistent.toml"])), 1);
}

#[test]
fn unknown_flags_print_usage_and_exit_with_one() {
    for args in [&["bayrn", "run", "--config", "furuta", "--bogus"][..], &["frobnicate"], &["sim2sim", "--sed", "7"], &[]] {
        let o = lab(args);
        assert_eq!(code(&o), 1, "{args:?}");
        assert!(stderr(&o).contains("Usage"), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(code(&lab(&["--help"])), 0);
}

#[test]
fn runtime_failures_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let o = lab(&["eval", "--policy-file", s(&dir.path().join("missing.json"))]);
    assert_eq!(code(&o), 2);
    let o = lab(&["export-gp-grid", "--run-record", s(&dir.path().join("run.jsonl")), "--dims", "0,1", "--resolution", "3", "--config", "sim2sim"]);
    assert_ne!(code(&o), 0);
}

#[test]
fn sim2sim_reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = tiny_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = lab(&["sim2sim", "--seed", "7", "--config", s(&cfg), "--out", s(out), "--quiet"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stdout(&o).contains("E[m_p]"));
    }
    let run_a = std::fs::read(a.join("run.jsonl")).unwrap();
    assert_eq!(run_a, std::fs::read(b.join("run.jsonl")).unwrap());
    assert_eq!(std::fs::read(a.join("policy.json")).unwrap(), std::fs::read(b.join("policy.json")).unwrap());

    let other = dir.path().join("c");
    assert_eq!(code(&lab(&["sim2sim", "--seed", "8", "--config", s(&cfg), "--out", s(&other), "--quiet"])), 0);
    assert_ne!(run_a, std::fs::read(other.join("run.jsonl")).unwrap());
}

#[test]
fn bayrn_run_writes_snapshot_record_and_policy() {
    let dir = TempDir::new().unwrap();
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("run");
    let o = lab(&["bayrn", "run", "--config", s(&cfg), "--seed", "3", "--out", s(&out), "--quiet"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let snapshot = bayrn_lab::ExperimentConfig::load(&out.join("config.toml")).unwrap();
    assert_eq!(snapshot.seed, 3);
    assert_eq!(snapshot.out_dir, out);

    let events: Vec<RunEvent> = read_jsonl(&out.join("run.jsonl")).unwrap();
    let timings = std::fs::read_to_string(out.join("timings.jsonl")).unwrap();
    assert_eq!(timings.lines().count(), events.len());
    let Some(RunEvent::Final { iterations, dataset_size, candidate, .. }) = events.last() else { panic!("no final record") };
    assert_eq!(*dataset_size, 3 + iterations);
    assert_eq!(events.len(), dataset_size + 1);

    let policy = PolicyFile::load(&out.join("policy.json")).unwrap();
    assert_eq!(policy.theta, candidate.theta);
    assert_eq!(policy.j_hat, candidate.j_hat);
    assert_eq!(policy.dim, 6);
}

#[test]
fn eval_reproduces_the_logged_return() {
    let dir = TempDir::new().unwrap();
    let cfg = tiny_config(dir.path());
    for method in ["bayrn", "udr", "nominal"] {
        let out = dir.path().join(method);
        let o = lab(&[method, "run", "--config", s(&cfg), "--out", s(&out), "--quiet"]);
        assert_eq!(code(&o), 0, "{method}: {}", stderr(&o));
        let policy = PolicyFile::load(&out.join("policy.json")).unwrap();

        let o = lab(&["eval", "--policy-file", s(&out.join("policy.json"))]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let text = stdout(&o);
        let line = text.lines().find(|l| l.starts_with("J_hat")).unwrap();
        let j: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
        assert_eq!(j.to_bits(), policy.j_hat.to_bits(), "{method}");

        let o = lab(&["eval", "--policy-file", s(&out.join("policy.json")), "--n-tau", "2"]);
        assert_eq!(code(&o), 0);
    }
    let udr: Vec<BaselineRecord> = read_jsonl(&dir.path().join("udr/run.jsonl")).unwrap();
    assert_eq!(udr.len(), 1);
    assert_eq!(udr[0].method, Method::Udr);
    assert!(udr[0].outcome.phi.is_some());
    let nominal: Vec<BaselineRecord> = read_jsonl(&dir.path().join("nominal/run.jsonl")).unwrap();
    assert_eq!(nominal[0].outcome.phi, None);
}

#[test]
fn eval_rejects_a_policy_for_another_task() {
    let dir = TempDir::new().unwrap();
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("run");
    assert_eq!(code(&lab(&["nominal", "run", "--config", s(&cfg), "--out", s(&out), "--quiet"])), 0);
    let o = lab(&["eval", "--policy-file", s(&out.join("policy.json")), "--config", "ballcup"]);
    // `ballcup` is not a path here, so loading fails
    assert_eq!(code(&o), 1);
    let ballcup = dir.path().join("ballcup.toml");
    std::fs::write(&ballcup, config::BALLCUP).unwrap();
    let o = lab(&["eval", "--policy-file", s(&out.join("policy.json")), "--config", s(&ballcup)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("energy_balance"), "{}", stderr(&o));
}

#[test]
fn export_gp_grid_writes_resolution_squared_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("run");
    assert_eq!(code(&lab(&["sim2sim", "--seed", "1", "--config", s(&cfg), "--out", s(&out), "--quiet"])), 0);
    let csv = dir.path().join("grid.csv");
    let o = lab(&["export-gp-grid", "--run-record", s(&out.join("run.jsonl")), "--dims", "0,1", "--resolution", "7", "--out", s(&csv)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "phi1,phi2,mean,std");
    assert_eq!(lines.len(), 1 + 49);
    let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!((first[0], first[1]), (0.0192, 0.076));
    let last: Vec<f64> = lines[49].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!((last[0], last[1]), (0.0288, 0.114));
    assert!(lines[1..].iter().all(|l| l.split(',').nth(3).unwrap().parse::<f64>().unwrap() >= 0.0));

    let o = lab(&["export-gp-grid", "--run-record", s(&out.join("run.jsonl")), "--dims", "1,0", "--resolution", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 5);

    for bad in [["--dims", "0,0"], ["--dims", "0,5"]] {
        let o = lab(&["export-gp-grid", "--run-record", s(&out.join("run.jsonl")), bad[0], bad[1], "--resolution", "3"]);
        assert_eq!(code(&o), 1);
    }
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let dir = TempDir::new().unwrap();
    let cfg = tiny_config(dir.path());
    let full = dir.path().join("full");
    assert_eq!(code(&lab(&["bayrn", "run", "--config", s(&cfg), "--out", s(&full), "--quiet"])), 0);
    let expected = std::fs::read_to_string(full.join("run.jsonl")).unwrap();

    // keep two records plus half of the third, as if the process died mid-write
    let lines: Vec<&str> = expected.split_inclusive('\n').collect();
    let cut = format!("{}{}{}", lines[0], lines[1], &lines[2][..lines[2].len() / 2]);
    std::fs::write(full.join("run.jsonl"), cut).unwrap();
    let o = lab(&["bayrn", "run", "--config", s(&full.join("config.toml")), "--resume", "--quiet"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(full.join("run.jsonl")).unwrap(), expected);

    let o = lab(&["bayrn", "run", "--config", s(&cfg), "--out", s(&full), "--seed", "9", "--resume", "--quiet"]);
    assert_eq!(code(&o), 1, "a different config must not resume");
}
