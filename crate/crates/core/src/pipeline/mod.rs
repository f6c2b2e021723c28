//! End-to-end data sharing: learn a reward from labeled data, annotate the
//! reward-free data, solve pessimistically and score against the exact
//! optimum.

mod csv_io;
mod sweep;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use csv_io::{read_results, read_results_csv, write_results, write_results_csv, CSV_HEADER};
pub use sweep::{sweep, sweep_with_threads, worker_count, THREADS_ENV, CellFailure, MdpKind, MdpSpec, SweepGrid, SweepReport};

use crate::data::{coverage_coefficient, mix_datasets, OfflineDataset};
use crate::error::{Error, Result};
use crate::mdp::{exact_optimal, suboptimality_profile, LinearMdp, OptimalSolution};
use crate::pevi::{pevi_solve, PeviSettings, PeviSolution};
use crate::reward::{fit_reward, relabel, Annotator, RewardConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MethodId {
    Pds,
    Uds,
    RewardPredict,
    Oracle,
    NoShare,
}

impl MethodId {
    pub const ALL: [MethodId; 5] = [
        MethodId::Pds,
        MethodId::Uds,
        MethodId::RewardPredict,
        MethodId::Oracle,
        MethodId::NoShare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodId::Pds => "PDS",
            MethodId::Uds => "UDS",
            MethodId::RewardPredict => "REWARD_PREDICT",
            MethodId::Oracle => "ORACLE",
            MethodId::NoShare => "NO_SHARE",
        }
    }

    /// Whether the method sees true rewards for the reward-free data.
    pub fn uses_true_rewards(self) -> bool {
        self == MethodId::Oracle
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub method: MethodId,
    pub n0: usize,
    pub n1: usize,
    pub c0: f64,
    pub c1: f64,
    pub gamma: f64,
    pub d: usize,
    pub seed: u64,
    /// Suboptimality averaged over the initial-state distribution.
    pub subopt_mean: f64,
    /// Worst state.
    pub subopt_max: f64,
    pub vhat_start: f64,
    pub wall_ms: f64,
}

impl RunResult {
    /// Equality ignoring `wall_ms`.
    pub fn same_outcome(&self, other: &RunResult) -> bool {
        RunResult { wall_ms: 0.0, ..self.clone() } == RunResult { wall_ms: 0.0, ..other.clone() }
    }
}

/// Everything produced by one method run.
#[derive(Debug, Clone)]
pub struct RunDetail {
    pub result: RunResult,
    pub training: OfflineDataset,
    pub solution: PeviSolution,
}

/// An MDP together with its exact optimum, shared by every run on it.
#[derive(Debug, Clone)]
pub struct RunContext {
    mdp: LinearMdp,
    optimal: OptimalSolution,
}

impl RunContext {
    pub fn new(mdp: LinearMdp) -> Result<Self> {
        let optimal = exact_optimal(&mdp)?;
        Ok(Self { mdp, optimal })
    }

    pub fn mdp(&self) -> &LinearMdp {
        &self.mdp
    }

    pub fn optimal(&self) -> &OptimalSolution {
        &self.optimal
    }

    /// Coverage of `dataset` relative to the optimal policy; 0 when empty.
    pub fn coverage(&self, dataset: &OfflineDataset) -> Result<f64> {
        if dataset.is_empty() {
            return Ok(0.0);
        }
        Ok(coverage_coefficient(dataset, &self.mdp, &self.optimal.policy)?.c_dagger)
    }

    /// The dataset the solver is trained on for `method`.
    pub fn training_set(
        &self,
        d0: &OfflineDataset,
        d1: &OfflineDataset,
        method: MethodId,
        reward_cfg: &RewardConfig,
    ) -> Result<OfflineDataset> {
        if d0.is_empty() {
            return Err(Error::contract("labeled dataset is empty; no reward can be learned"));
        }
        d0.require_labeled("the labeled dataset")?;
        let features = self.mdp.features();
        let unlabeled = d1.strip_rewards();
        let annotated = match method {
            MethodId::NoShare => return Ok(d0.clone()),
            MethodId::Uds => relabel(&unlabeled, Annotator::Zero, true),
            MethodId::Oracle => relabel(&unlabeled, Annotator::Oracle(&self.mdp), true),
            MethodId::Pds | MethodId::RewardPredict => {
                let model = fit_reward(d0, features, self.mdp.r_max(), reward_cfg)?;
                let annotator = if method == MethodId::Pds {
                    Annotator::Pessimistic(&model, features)
                } else {
                    Annotator::Predicted(&model, features)
                };
                relabel(&unlabeled, annotator, true)
            }
        };
        mix_datasets(d0, &annotated)
    }

    pub fn run(
        &self,
        d0: &OfflineDataset,
        d1: &OfflineDataset,
        method: MethodId,
        reward_cfg: &RewardConfig,
        pevi: &PeviSettings,
        seed: u64,
    ) -> Result<RunResult> {
        let c0 = self.coverage(d0)?;
        let c1 = self.coverage(d1)?;
        Ok(self.run_detailed(d0, d1, method, reward_cfg, pevi, seed, (c0, c1))?.result)
    }

    /// Like [`RunContext::run`] with precomputed coverage `(c0, c1)`.
    #[allow(clippy::too_many_arguments)]
    pub fn run_detailed(
        &self,
        d0: &OfflineDataset,
        d1: &OfflineDataset,
        method: MethodId,
        reward_cfg: &RewardConfig,
        pevi: &PeviSettings,
        seed: u64,
        coverage: (f64, f64),
    ) -> Result<RunDetail> {
        let start = Instant::now();
        let mdp = &self.mdp;
        let training = self.training_set(d0, d1, method, reward_cfg)?;
        let cfg = pevi.resolve(mdp.dim(), training.len(), mdp.gamma(), mdp.r_max())?;
        let solution = pevi_solve(&training, mdp.features(), &cfg)?;
        let gap = suboptimality_profile(mdp, &self.optimal.values, &solution.policy)?;
        let init = mdp.init_dist();
        let result = RunResult {
            method,
            n0: d0.len(),
            n1: d1.len(),
            c0: coverage.0,
            c1: coverage.1,
            gamma: mdp.gamma(),
            d: mdp.dim(),
            seed,
            subopt_mean: init.dot(&gap),
            subopt_max: gap.max(),
            vhat_start: init.dot(&solution.v_hat),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        if result.subopt_max.is_nan() || gap.min() < -1e-8 {
            return Err(Error::Invariant(format!(
                "negative suboptimality {} for {method}",
                gap.min()
            )));
        }
        Ok(RunDetail {
            result,
            training,
            solution,
        })
    }
}

/// One-shot run; prefer [`RunContext`] when scoring several methods on the
/// same MDP.
pub fn run_method(
    mdp: &LinearMdp,
    d0: &OfflineDataset,
    d1: &OfflineDataset,
    method: MethodId,
    reward_cfg: &RewardConfig,
    pevi: &PeviSettings,
    seed: u64,
) -> Result<RunResult> {
    RunContext::new(mdp.clone())?.run(d0, d1, method, reward_cfg, pevi, seed)
}
