use std::path::Path;
use std::process::{Command, Output};

fn pdslab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdslab"))
        .args(args)
        .current_dir(cwd)
        .env("PDSLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn config(name: &str) -> String {
    format!("{}/examples/configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn gen_sample_relabel_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    let out = pdslab(&["gen-mdp", "--config", &config("tabular_mdp.json"), "--seed", "4", "--out", "mdp.json"], cwd);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let labeled = pdslab(
        &["sample", "--mdp", "mdp.json", "--n", "300", "--quality", "random", "--noise", "0.1", "--seed", "1", "--out", "d0.jsonl"],
        cwd,
    );
    assert_eq!(code(&labeled), 0);
    let unlabeled = pdslab(
        &["sample", "--mdp", "mdp.json", "--n", "200", "--quality", "expert", "--unlabeled", "--seed", "2", "--out", "d1.jsonl"],
        cwd,
    );
    assert_eq!(code(&unlabeled), 0);
    let raw = std::fs::read_to_string(cwd.join("d1.jsonl")).unwrap();
    assert_eq!(raw.lines().count(), 200);
    assert!(raw.lines().all(|l| l.contains("\"r\":null")));

    let relabel = pdslab(
        &[
            "relabel", "--in", "d1.jsonl", "--out", "d1r.jsonl", "--model", "model.json", "--labeled", "d0.jsonl", "--mdp",
            "mdp.json", "--k", "1.5",
        ],
        cwd,
    );
    assert_eq!(code(&relabel), 0, "{}", String::from_utf8_lossy(&relabel.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&relabel.stdout).unwrap();
    assert_eq!(summary["count"], 200);
    assert_eq!(summary["k"], 1.5);
    let relabeled = std::fs::read_to_string(cwd.join("d1r.jsonl")).unwrap();
    assert!(!relabeled.contains("null"));

    let again = pdslab(&["relabel", "--in", "d1.jsonl", "--out", "d1s.jsonl", "--model", "model.json", "--k", "1.5"], cwd);
    assert_eq!(code(&again), 0);
    assert_eq!(std::fs::read_to_string(cwd.join("d1s.jsonl")).unwrap(), relabeled);
}

#[test]
fn run_then_table() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    let out = pdslab(&["run", "--config", &config("lowrank_sweep.json"), "--seed", "7", "--out", "r.csv", "--format", "md"], cwd);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("| n1 | PDS |"));
    let csv = std::fs::read_to_string(cwd.join("r.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 4 * 5);
    assert!(cwd.join("r.md").exists());

    let table = pdslab(&["table", "--in", "r.csv", "--group-by", "n0,n1", "--format", "csv"], cwd);
    assert_eq!(code(&table), 0);
    assert!(String::from_utf8(table.stdout).unwrap().lines().count() > 1);
}

#[test]
fn bounds_prints_a_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdslab(&["bounds", "--d", "4", "--n0", "1000", "--n1", "10000"], dir.path());
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let total: f64 = row[11].parse().unwrap();
    assert!((total - 112.16372640027121).abs() < 1e-9);
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    std::fs::write(cwd.join("bad.json"), r#"{"version": 1, "mdp": {}}"#).unwrap();
    let cases: [&[&str]; 5] = [
        &["run", "--config", "missing.json"],
        &["run", "--config", "bad.json"],
        &["bounds", "--gamma", "1.5"],
        &["bounds", "--format", "xml"],
        &["frobnicate"],
    ];
    for args in cases {
        assert_eq!(code(&pdslab(args, cwd)), 2, "{args:?}");
    }
}

#[test]
fn malformed_jsonl_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    assert_eq!(code(&pdslab(&["gen-mdp", "--config", &config("tabular_mdp.json"), "--out", "mdp.json"], cwd)), 0);
    assert_eq!(
        code(&pdslab(&["sample", "--mdp", "mdp.json", "--n", "50", "--noise", "0.1", "--out", "d0.jsonl"], cwd)),
        0
    );
    std::fs::write(cwd.join("d1.jsonl"), "{\"s\":0,\"a\":0,\"r\":null,\"sp\":1}\nnot json\n").unwrap();
    let out = pdslab(
        &["relabel", "--in", "d1.jsonl", "--out", "o.jsonl", "--model", "m.json", "--labeled", "d0.jsonl", "--mdp", "mdp.json"],
        cwd,
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("d1.jsonl:2"));
}

#[test]
fn failed_runs_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    let mut cfg: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(config("lowrank_sweep.json")).unwrap()).unwrap();
    cfg["pevi"]["lambda"] = serde_json::json!(-1.0);
    std::fs::write(cwd.join("neg.json"), cfg.to_string()).unwrap();
    let out = pdslab(&["run", "--config", "neg.json", "--seed", "0", "--out", "r.csv"], cwd);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}
