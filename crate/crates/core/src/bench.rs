//! Experiment configuration files, orchestration and plain-text outputs.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Quality;
use crate::error::{Error, Result};
use crate::pevi::PeviSettings;
use crate::pipeline::{sweep_with_threads, worker_count, write_results_csv, CellFailure, MdpSpec, MethodId, RunResult, SweepGrid};
use crate::report::{summarize, GroupKey};
use crate::reward::RewardConfig;
use crate::theory::{pds_bound, sbr, BoundInputs};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    Csv,
    #[default]
    Md,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "md" => Ok(Format::Md),
            _ => Err(Error::param(format!("format must be csv or md, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub n0: Vec<usize>,
    #[serde(default = "zero_n1")]
    pub n1: Vec<usize>,
    pub labeled_quality: Vec<Quality>,
    #[serde(default)]
    pub unlabeled_quality: Vec<Quality>,
    #[serde(default)]
    pub noise: f64,
}

fn zero_n1() -> Vec<usize> {
    vec![0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub mdp: MdpSpec,
    pub data: DataSpec,
    pub methods: Vec<MethodId>,
    #[serde(default)]
    pub reward: RewardConfig,
    #[serde(default)]
    pub pevi: PeviSettings,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
    #[serde(default = "default_group_by")]
    pub group_by: Vec<GroupKey>,
}

fn default_group_by() -> Vec<GroupKey> {
    vec![GroupKey::N0, GroupKey::N1]
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_prefix(e))))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported version {}, expected {CONFIG_VERSION}", self.version));
        }
        self.mdp.validate().map_err(|e| Error::Config(format!("mdp: {}", strip_prefix(e))))?;
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return bad(format!("duplicate seed {dup}"));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.methods.iter().find(|m| !seen.insert(**m)) {
            return bad(format!("duplicate method {dup}"));
        }
        if self.data.n1.iter().any(|&n| n > 0) && self.data.unlabeled_quality.is_empty() {
            return bad("n1 > 0 requires data.unlabeled_quality".into());
        }
        if !(self.data.noise >= 0.0) {
            return bad(format!("data.noise = {} must be nonnegative", self.data.noise));
        }
        self.grid().validate().map_err(|e| Error::Config(strip_prefix(e)))
    }

    pub fn grid(&self) -> SweepGrid {
        SweepGrid {
            n0: self.data.n0.clone(),
            n1: self.data.n1.clone(),
            labeled_quality: self.data.labeled_quality.clone(),
            unlabeled_quality: self.data.unlabeled_quality.clone(),
            methods: self.methods.clone(),
            seeds: self.seeds.clone(),
            noise: self.data.noise,
            reward: self.reward,
            pevi: self.pevi,
        }
    }
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Parameter(m) | Error::Config(m) => m,
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
    pub results: Vec<RunResult>,
    pub failures: Vec<CellFailure>,
}

/// Summary table path next to a results CSV.
pub fn summary_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("md")
}

/// Runs a validated config and writes its CSV and summary table.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<RunOutcome> {
    cfg.validate()?;
    let report = sweep_with_threads(&cfg.mdp, &cfg.grid(), threads)?;
    let csv_path = cfg.output.clone();
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_results_csv(&csv_path, &report.results)?;
    let summary_path = summary_path(&csv_path);
    std::fs::write(&summary_path, summarize(&report.results, &cfg.group_by).to_markdown())?;
    Ok(RunOutcome {
        csv_path,
        summary_path,
        results: report.results,
        failures: report.failures,
    })
}

/// Loads, validates and runs the config at `path`; `out` overrides its
/// output path.
pub fn run_config(path: &Path, out: Option<&Path>) -> Result<RunOutcome> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(out) = out {
        cfg.output = out.to_path_buf();
    }
    run_experiment(&cfg, worker_count())
}

pub const BOUNDS_HEADER: [&str; 14] = [
    "d",
    "n0",
    "n1",
    "c0",
    "c1",
    "gamma",
    "r_max",
    "delta",
    "c",
    "offline_term",
    "reward_term",
    "total",
    "sbr_exact",
    "sbr_approx",
];

/// One line per input: the bound's terms and both ratio forms.
pub fn bounds_table(inputs: &[BoundInputs], format: Format) -> Result<String> {
    let mut rows = Vec::with_capacity(inputs.len());
    for b in inputs {
        let bound = pds_bound(b)?;
        let (exact, approx) = match sbr(b) {
            Ok(s) => (s.exact, s.approx),
            Err(_) => (f64::NAN, f64::NAN),
        };
        rows.push([
            b.d.to_string(),
            b.n0.to_string(),
            b.n1.to_string(),
            b.c0.to_string(),
            b.c1.to_string(),
            b.gamma.to_string(),
            b.r_max.to_string(),
            b.delta.to_string(),
            b.c.to_string(),
            bound.offline_term.to_string(),
            bound.reward_term.to_string(),
            bound.total.to_string(),
            exact.to_string(),
            approx.to_string(),
        ]);
    }
    Ok(render(&BOUNDS_HEADER, &rows, format))
}

pub(crate) fn render<const N: usize>(header: &[&str; N], rows: &[[String; N]], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            let _ = writeln!(out, "{}", header.join(","));
            for r in rows {
                let _ = writeln!(out, "{}", r.join(","));
            }
        }
        Format::Md => {
            let _ = writeln!(out, "| {} |", header.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(N));
            for r in rows {
                let _ = writeln!(out, "| {} |", r.join(" | "));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;
