use super::*;
use crate::pipeline::{read_results_csv, CSV_HEADER};
use crate::pevi::BetaPreset;
use crate::reward::AlphaPreset;

fn config(dir: &Path, methods: Vec<MethodId>, seeds: Vec<u64>) -> ExperimentConfig {
    ExperimentConfig {
        version: CONFIG_VERSION,
        mdp: MdpSpec::lowrank(6, 3, 4, 0.9),
        data: DataSpec {
            n0: vec![100],
            n1: vec![0, 400],
            labeled_quality: vec![Quality::Random],
            unlabeled_quality: vec![Quality::Expert],
            noise: 0.1,
        },
        methods,
        reward: RewardConfig {
            alpha: AlphaPreset::Fixed(0.1),
            ..RewardConfig::default()
        },
        pevi: PeviSettings {
            beta: BetaPreset::Raw(0.1),
            ..PeviSettings::default()
        },
        seeds,
        output: dir.join("results.csv"),
        group_by: vec![GroupKey::N1],
    }
}

fn strip_wall(text: &str) -> String {
    text.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn config_round_trip_is_a_fixed_point() {
    let cfg = config(Path::new("out"), MethodId::ALL.to_vec(), vec![1, 2, 3]);
    let text = cfg.to_json().unwrap();
    let back = ExperimentConfig::from_json(&text).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.to_json().unwrap(), text);
}

#[test]
fn minimal_config_uses_defaults() {
    let text = r#"{
        "version": 1,
        "mdp": {"kind": "tabular", "states": 3, "actions": 2, "gamma": 0.9},
        "data": {"n0": [50], "labeled_quality": ["medium"]},
        "methods": ["NO_SHARE"],
        "seeds": [7],
        "output": "r.csv"
    }"#;
    let cfg = ExperimentConfig::from_json(text).unwrap();
    assert_eq!(cfg.data.n1, vec![0]);
    assert_eq!(cfg.reward, RewardConfig::default());
    assert_eq!(cfg.pevi, PeviSettings::default());
    assert_eq!(cfg.group_by, vec![GroupKey::N0, GroupKey::N1]);
}

#[test]
fn validation_errors() {
    let base = config(Path::new("x"), vec![MethodId::Pds], vec![1]);
    let dup = ExperimentConfig { seeds: vec![3, 4, 3], ..base.clone() };
    assert!(matches!(dup.validate(), Err(Error::Config(m)) if m.contains("duplicate seed 3")));
    let mut no_uq = base.clone();
    no_uq.data.unlabeled_quality.clear();
    assert!(matches!(no_uq.validate(), Err(Error::Config(m)) if m.contains("unlabeled_quality")));
    let no_seeds = ExperimentConfig { seeds: vec![], ..base.clone() };
    assert!(no_seeds.validate().is_err());
    let version = ExperimentConfig { version: 2, ..base.clone() };
    assert!(version.validate().is_err());
    let twice = ExperimentConfig { methods: vec![MethodId::Pds, MethodId::Pds], ..base.clone() };
    assert!(twice.validate().is_err());
    let no_methods = ExperimentConfig { methods: vec![], ..base };
    assert!(no_methods.validate().is_err());
}

#[test]
fn unknown_fields_are_named() {
    let cfg = config(Path::new("x"), vec![MethodId::Pds], vec![1]);
    let mut value: serde_json::Value = serde_json::from_str(&cfg.to_json().unwrap()).unwrap();
    value["pevi"]["lamda"] = serde_json::json!(1.0);
    let err = ExperimentConfig::from_json(&value.to_string()).unwrap_err().to_string();
    assert!(err.contains("lamda"), "{err}");
    let mut value: serde_json::Value = serde_json::from_str(&cfg.to_json().unwrap()).unwrap();
    value["data"]["labeled_quality"] = serde_json::json!(["superb"]);
    let err = ExperimentConfig::from_json(&value.to_string()).unwrap_err().to_string();
    assert!(err.contains("superb"), "{err}");
}

#[test]
fn one_seed_one_method_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), vec![MethodId::Pds], vec![5]);
    cfg.data.n1 = vec![400];
    let out = run_experiment(&cfg, 1).unwrap();
    assert_eq!(out.results.len(), 1);
    assert!(out.failures.is_empty());
    let text = std::fs::read_to_string(&out.csv_path).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let md = std::fs::read_to_string(&out.summary_path).unwrap();
    assert!(md.starts_with("| n1 | PDS |"), "{md}");
}

#[test]
fn summary_means_match_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), MethodId::ALL.to_vec(), (0..10).collect());
    cfg.data.n1 = vec![400];
    let out = run_experiment(&cfg, 3).unwrap();
    assert_eq!(out.results.len(), 50);
    let rows = read_results_csv(&out.csv_path).unwrap();
    let summary = summarize(&rows, &[GroupKey::N1]);
    for (m, cell) in summary.methods.iter().zip(&summary.rows[0].cells) {
        let vals: Vec<f64> = rows.iter().filter(|r| r.method == *m).map(|r| r.subopt_mean).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((cell.unwrap().mean - mean).abs() <= 1e-12);
    }
}

#[test]
fn reruns_are_byte_identical_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), MethodId::ALL.to_vec(), vec![1, 2]);
    let first = std::fs::read_to_string(run_experiment(&cfg, 1).unwrap().csv_path).unwrap();
    let second = std::fs::read_to_string(run_experiment(&cfg, 4).unwrap().csv_path).unwrap();
    assert_eq!(strip_wall(&first), strip_wall(&second));
}

#[test]
fn run_config_reads_from_disk_and_honors_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), vec![MethodId::Uds], vec![1]);
    let path = dir.path().join("exp.json");
    std::fs::write(&path, cfg.to_json().unwrap()).unwrap();
    let out = dir.path().join("nested").join("other.csv");
    let outcome = run_config(&path, Some(&out)).unwrap();
    assert_eq!(outcome.csv_path, out);
    assert!(out.exists() && dir.path().join("nested/other.md").exists());
    let err = run_config(&dir.path().join("absent.json"), None).unwrap_err();
    assert!(matches!(err, Error::Config(m) if m.contains("absent.json")));
}

#[test]
fn bounds_table_formats() {
    let b = BoundInputs {
        d: 4,
        n0: 1000,
        n1: 10_000,
        c0: 0.5,
        c1: 0.5,
        gamma: 0.9,
        r_max: 1.0,
        delta: 0.1,
        c: 1.0,
    };
    let csv = bounds_table(&[b, BoundInputs { n1: 0, ..b }], Format::Csv).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], BOUNDS_HEADER.join(","));
    assert_eq!(lines.len(), 3);
    assert!(lines[2].ends_with(",1,1.1")); // n1 = 0: exact 1, approx 1 + 2(0.1)/2
    let md = bounds_table(&[b], Format::Md).unwrap();
    assert!(md.starts_with("| d | n0 |"));
    assert!("xml".parse::<Format>().is_err());
}
