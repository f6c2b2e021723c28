use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MethodId, RunContext, RunResult};
use crate::data::{sample_dataset, OfflineDataset, Quality, SampleSpec};
use crate::error::{Error, Result};
use crate::mdp::{make_adversarial_mdp, make_lowrank_mdp, make_tabular_mdp, LinearMdp};
use crate::pevi::PeviSettings;
use crate::reward::RewardConfig;
use crate::seed;

pub const THREADS_ENV: &str = "PDSLAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MdpKind {
    Tabular,
    Lowrank,
    Adversarial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpSpec {
    pub kind: MdpKind,
    #[serde(default = "one")]
    pub states: usize,
    pub actions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub gamma: f64,
    #[serde(default = "unit")]
    pub r_max: f64,
    /// Fixed generator seed. When absent every run seed draws its own MDP.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

impl MdpSpec {
    pub fn tabular(states: usize, actions: usize, gamma: f64) -> Self {
        Self {
            kind: MdpKind::Tabular,
            states,
            actions,
            dim: None,
            gamma,
            r_max: 1.0,
            seed: None,
        }
    }

    pub fn lowrank(states: usize, actions: usize, dim: usize, gamma: f64) -> Self {
        Self {
            kind: MdpKind::Lowrank,
            dim: Some(dim),
            ..Self::tabular(states, actions, gamma)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.states == 0 || self.actions == 0 {
            return Err(Error::param("states and actions must be at least 1"));
        }
        match (self.kind, self.dim) {
            (MdpKind::Tabular, Some(d)) if d != self.states * self.actions => Err(Error::param(
                format!("tabular dim must be states * actions = {}", self.states * self.actions),
            )),
            (MdpKind::Lowrank | MdpKind::Adversarial, None) => {
                Err(Error::param("lowrank and adversarial mdps need a dim"))
            }
            (MdpKind::Adversarial, Some(d)) if self.states != 1 || d >= self.actions => Err(
                Error::param("adversarial mdps have one state and more actions than dim"),
            ),
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            MdpKind::Tabular => self.states * self.actions,
            MdpKind::Lowrank => self.dim.unwrap_or(0),
            MdpKind::Adversarial => self.dim.unwrap_or(0) + 1,
        }
    }

    pub fn mdp_seed(&self, run_seed: u64) -> u64 {
        self.seed.unwrap_or_else(|| seed::derive_str(run_seed, "mdp"))
    }

    pub fn build(&self, run_seed: u64) -> Result<LinearMdp> {
        self.validate()?;
        let s = self.mdp_seed(run_seed);
        match self.kind {
            MdpKind::Tabular => make_tabular_mdp(self.states, self.actions, self.gamma, self.r_max, s),
            MdpKind::Lowrank => make_lowrank_mdp(
                self.states,
                self.actions,
                self.dim.unwrap_or(0),
                self.gamma,
                self.r_max,
                s,
            ),
            MdpKind::Adversarial => Ok(make_adversarial_mdp(
                self.actions,
                self.dim.unwrap_or(0),
                self.gamma,
                self.r_max,
            )?
            .mdp),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub n0: Vec<usize>,
    pub n1: Vec<usize>,
    pub labeled_quality: Vec<Quality>,
    /// May be empty only if every `n1` is zero.
    pub unlabeled_quality: Vec<Quality>,
    pub methods: Vec<MethodId>,
    pub seeds: Vec<u64>,
    /// Half-width of the uniform reward noise on labeled data.
    pub noise: f64,
    pub reward: RewardConfig,
    pub pevi: PeviSettings,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("n0", self.n0.is_empty()),
            ("n1", self.n1.is_empty()),
            ("labeled_quality", self.labeled_quality.is_empty()),
            ("methods", self.methods.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::param(format!("grid axis {name} is empty")));
        }
        if self.n0.contains(&0) {
            return Err(Error::param("n0 must be at least 1"));
        }
        if self.unlabeled_quality.is_empty() && self.n1.iter().any(|&n| n > 0) {
            return Err(Error::param("n1 > 0 needs an unlabeled quality"));
        }
        Ok(())
    }

    fn cells(&self) -> Vec<Cell> {
        let uq: Vec<Option<Quality>> = if self.unlabeled_quality.is_empty() {
            vec![None]
        } else {
            self.unlabeled_quality.iter().copied().map(Some).collect()
        };
        let mut cells = Vec::new();
        for &n0 in &self.n0 {
            for &n1 in &self.n1 {
                for &lq in &self.labeled_quality {
                    for &uq in &uq {
                        for &seed in &self.seeds {
                            cells.push(Cell { n0, n1, lq, uq, seed });
                        }
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    n0: usize,
    n1: usize,
    lq: Quality,
    uq: Option<Quality>,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub n0: usize,
    pub n1: usize,
    pub seed: u64,
    /// `None` when the cell failed before any method ran.
    pub method: Option<MethodId>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepReport {
    pub results: Vec<RunResult>,
    pub failures: Vec<CellFailure>,
}

/// Worker cap from `PDSLAB_THREADS`, else the available parallelism.
pub fn worker_count() -> usize {
    parse_threads(std::env::var(THREADS_ENV).ok().as_deref())
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub(crate) fn parse_threads(value: Option<&str>) -> Option<usize> {
    value.and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0)
}

fn sample_pair(ctx: &RunContext, cell: &Cell, noise: f64) -> Result<(OfflineDataset, OfflineDataset)> {
    let mdp = ctx.mdp();
    let actions = &ctx.optimal().actions;
    let na = mdp.num_actions();
    let spec0 = SampleSpec::new(cell.n0, true, seed::derive(seed::derive_str(cell.seed, "labeled"), cell.n0 as u64))
        .with_noise(noise);
    let d0 = sample_dataset(mdp, &cell.lq.behavior(actions, na)?, &spec0, cell.lq.name())?;
    let d1 = match cell.uq {
        Some(uq) if cell.n1 > 0 => {
            let spec1 = SampleSpec::new(
                cell.n1,
                false,
                seed::derive(seed::derive_str(cell.seed, "unlabeled"), cell.n1 as u64),
            );
            sample_dataset(mdp, &uq.behavior(actions, na)?, &spec1, uq.name())?
        }
        _ => OfflineDataset::empty(false, mdp.num_states(), na),
    };
    Ok((d0, d1))
}

fn run_cell(spec: &MdpSpec, grid: &SweepGrid, cell: &Cell) -> Vec<std::result::Result<RunResult, CellFailure>> {
    let fail = |method, e: Error| CellFailure {
        n0: cell.n0,
        n1: cell.n1,
        seed: cell.seed,
        method,
        message: e.to_string(),
    };
    let prepared = spec.build(cell.seed).and_then(RunContext::new).and_then(|ctx| {
        let (d0, d1) = sample_pair(&ctx, cell, grid.noise)?;
        let cov = (ctx.coverage(&d0)?, ctx.coverage(&d1)?);
        Ok((ctx, d0, d1, cov))
    });
    let (ctx, d0, d1, cov) = match prepared {
        Ok(p) => p,
        Err(e) => return vec![Err(fail(None, e))],
    };
    grid.methods
        .iter()
        .map(|&m| {
            ctx.run_detailed(&d0, &d1, m, &grid.reward, &grid.pevi, cell.seed, cov)
                .map(|detail| detail.result)
                .map_err(|e| fail(Some(m), e))
        })
        .collect()
}

/// Runs every grid cell on at most `threads` workers. Result order follows
/// the grid (n0, n1, labeled quality, unlabeled quality, seed, method)
/// regardless of the worker count.
pub fn sweep_with_threads(spec: &MdpSpec, grid: &SweepGrid, threads: usize) -> Result<SweepReport> {
    spec.validate()?;
    grid.validate()?;
    let cells = grid.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Runtime(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<_> = pool.install(|| cells.par_iter().map(|c| run_cell(spec, grid, c)).collect());
    let mut report = SweepReport::default();
    for outcome in outcomes.into_iter().flatten() {
        match outcome {
            Ok(r) => report.results.push(r),
            Err(f) => report.failures.push(f),
        }
    }
    Ok(report)
}

pub fn sweep(spec: &MdpSpec, grid: &SweepGrid) -> Result<SweepReport> {
    sweep_with_threads(spec, grid, worker_count())
}
