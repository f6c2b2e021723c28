//! A small experiment grid driven by a JSON config, written as CSV plus a
//! markdown summary.

use pdslab::bench::{run_experiment, ExperimentConfig};
use pdslab::pipeline::worker_count;

const CONFIG: &str = r#"{
  "version": 1,
  "mdp": {"kind": "lowrank", "states": 10, "actions": 4, "dim": 4, "gamma": 0.9},
  "data": {
    "n0": [200],
    "n1": [0, 2000, 20000],
    "labeled_quality": ["medium"],
    "unlabeled_quality": ["medium"],
    "noise": 0.1
  },
  "methods": ["PDS", "UDS", "REWARD_PREDICT", "ORACLE", "NO_SHARE"],
  "reward": {"nu": 1.0, "delta": 0.1, "alpha": {"fixed": 0.1}},
  "pevi": {"lambda": 1.0, "beta": {"raw": 0.1}},
  "seeds": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
  "output": "sweep-example/results.csv",
  "group_by": ["n1"]
}"#;

fn main() -> pdslab::Result<()> {
    let mut cfg = ExperimentConfig::from_json(CONFIG)?;
    cfg.output = std::env::temp_dir().join(&cfg.output);
    let outcome = run_experiment(&cfg, worker_count())?;
    println!("{} rows -> {}", outcome.results.len(), outcome.csv_path.display());
    print!("{}", std::fs::read_to_string(&outcome.summary_path)?);
    Ok(())
}
