//! Closed-form suboptimality bounds for data sharing and the quantities
//! derived from them.

use serde::{Deserialize, Serialize};

use crate::data::OfflineDataset;
use crate::error::{Error, Result};
use crate::pipeline::RunResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    pub d: usize,
    pub n0: usize,
    pub n1: usize,
    pub c0: f64,
    pub c1: f64,
    pub gamma: f64,
    pub r_max: f64,
    pub delta: f64,
    /// Absolute constant of the offline term.
    pub c: f64,
}

impl BoundInputs {
    /// Inputs matching a finished run, with its measured coverage.
    pub fn from_run(run: &RunResult, r_max: f64, delta: f64, c: f64) -> Self {
        Self {
            d: run.d,
            n0: run.n0,
            n1: run.n1,
            c0: run.c0,
            c1: run.c1,
            gamma: run.gamma,
            r_max,
            delta,
            c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n0 == 0 {
            return Err(Error::param("d and n0 must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::param(format!("delta = {} not in (0, 1)", self.delta)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::param(format!("gamma = {} not in [0, 1)", self.gamma)));
        }
        if !(self.c0 >= 0.0 && self.c1 >= 0.0) {
            return Err(Error::param("coverage coefficients must be nonnegative"));
        }
        if !(self.c > 0.0 && self.r_max > 0.0) {
            return Err(Error::param("c and r_max must be positive"));
        }
        Ok(())
    }

    pub fn without_sharing(&self) -> Self {
        Self { n1: 0, ..*self }
    }

    /// `log(4 d (N0 + N1) / ((1 - gamma) delta))`
    pub fn zeta1(&self) -> f64 {
        (4.0 * self.d as f64 * (self.n0 + self.n1) as f64 / ((1.0 - self.gamma) * self.delta)).ln()
    }

    /// `log(2 d N0 / delta)`
    pub fn zeta2(&self) -> f64 {
        (2.0 * self.d as f64 * self.n0 as f64 / self.delta).ln()
    }

    /// `N0 C0 + N1 C1`
    pub fn effective_size(&self) -> f64 {
        let labeled = self.n0 as f64 * self.c0;
        if self.n1 == 0 {
            labeled
        } else {
            labeled + self.n1 as f64 * self.c1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub total: f64,
    /// Pessimistic value iteration on the combined data.
    pub offline_term: f64,
    /// Cost of learning the reward from labeled data alone.
    pub reward_term: f64,
    /// Set when the labeled data does not cover the optimal policy, in which
    /// case the bound is infinite.
    pub uncovered: bool,
}

pub fn pds_bound(inputs: &BoundInputs) -> Result<BoundValue> {
    inputs.validate()?;
    let d = inputs.d as f64;
    let horizon = 1.0 / (1.0 - inputs.gamma);
    let labeled = inputs.n0 as f64 * inputs.c0;
    let effective = inputs.effective_size();
    let offline_term = if effective > 0.0 {
        2.0 * inputs.c * inputs.r_max * horizon * horizon * (d.powi(3) * inputs.zeta1() / effective).sqrt()
    } else {
        f64::INFINITY
    };
    if labeled <= 0.0 {
        return Ok(BoundValue {
            total: f64::INFINITY,
            offline_term,
            reward_term: f64::INFINITY,
            uncovered: true,
        });
    }
    let reward_term = 4.0 * inputs.r_max * horizon * (d * d * inputs.zeta2() / labeled).sqrt();
    Ok(BoundValue {
        total: offline_term + reward_term,
        offline_term,
        reward_term,
        uncovered: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbrValue {
    /// `sqrt(N0 C0 / (N0 C0 + N1 C1))`
    pub finite_sample_term: f64,
    /// `2 (1 - gamma) / (c sqrt(d))`
    pub asymptotic_term: f64,
    /// Sum of the two terms, ignoring logarithmic factors.
    pub approx: f64,
    /// Bound with sharing over the bound with `N1 = 0`.
    pub exact: f64,
}

pub fn sbr(inputs: &BoundInputs) -> Result<SbrValue> {
    let shared = pds_bound(inputs)?;
    let alone = pds_bound(&inputs.without_sharing())?;
    if shared.uncovered {
        return Err(Error::param("the labeled data has zero coverage; the ratio is undefined"));
    }
    let labeled = inputs.n0 as f64 * inputs.c0;
    let finite_sample_term = (labeled / inputs.effective_size()).sqrt();
    let asymptotic_term = 2.0 * (1.0 - inputs.gamma) / (inputs.c * (inputs.d as f64).sqrt());
    Ok(SbrValue {
        finite_sample_term,
        asymptotic_term,
        approx: finite_sample_term + asymptotic_term,
        exact: shared.total / alone.total,
    })
}

/// Mean absolute reward error of zero-filling `d1` and mixing it with `n0`
/// correctly labeled transitions. `d1` must carry true rewards.
pub fn uds_bias(d1: &OfflineDataset, n0: usize) -> Result<f64> {
    d1.require_labeled("the bias computation")?;
    let n1 = d1.len();
    if n0 + n1 == 0 {
        return Err(Error::param("both datasets are empty"));
    }
    if n1 == 0 {
        return Ok(0.0);
    }
    let mean_abs = d1.iter().map(|t| t.reward.unwrap_or(0.0).abs()).sum::<f64>() / n1 as f64;
    Ok(n1 as f64 / (n0 + n1) as f64 * mean_abs)
}

/// Fraction of runs whose worst-state suboptimality is within the bound.
pub fn bound_holds_rate(results: &[RunResult], inputs: &[BoundInputs]) -> Result<f64> {
    if results.len() != inputs.len() {
        return Err(Error::param(format!(
            "{} results but {} bound inputs",
            results.len(),
            inputs.len()
        )));
    }
    if results.is_empty() {
        return Err(Error::param("no runs to check"));
    }
    let mut holds = 0usize;
    for (r, b) in results.iter().zip(inputs) {
        if r.subopt_max <= pds_bound(b)?.total {
            holds += 1;
        }
    }
    Ok(holds as f64 / results.len() as f64)
}
