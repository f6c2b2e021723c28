//! Exact evaluation and control on the materialized transition table.

use nalgebra::{DMatrix, DVector};

use super::{argmax, greedy_actions, LinearMdp, Policy, ValueReport};
use crate::error::{Error, Result};

/// Tolerance used when the oracle itself needs an optimal policy.
const ORACLE_TOL: f64 = 1e-10;

fn q_from_v(mdp: &LinearMdp, v: &DVector<f64>) -> DMatrix<f64> {
    let flat = mdp.rewards() + mdp.transitions() * v * mdp.gamma();
    DMatrix::from_row_slice(mdp.num_states(), mdp.num_actions(), flat.as_slice())
}

/// `V^pi` by a direct solve of `(I - gamma P^pi) V = r^pi`.
pub fn evaluate_policy(mdp: &LinearMdp, policy: &Policy) -> Result<ValueReport> {
    policy.check_shape(mdp)?;
    let ns = mdp.num_states();
    let na = mdp.num_actions();
    let p = mdp.transitions();
    let r = mdp.rewards();
    let mut p_pi = DMatrix::zeros(ns, ns);
    let mut r_pi = DVector::zeros(ns);
    for s in 0..ns {
        for a in 0..na {
            let w = policy.prob(s, a);
            if w == 0.0 {
                continue;
            }
            let idx = s * na + a;
            r_pi[s] += w * r[idx];
            for sp in 0..ns {
                p_pi[(s, sp)] += w * p[(idx, sp)];
            }
        }
    }
    let system = DMatrix::identity(ns, ns) - p_pi * mdp.gamma();
    let v = system
        .lu()
        .solve(&r_pi)
        .ok_or_else(|| Error::Invariant("policy evaluation system is singular".into()))?;
    let q = q_from_v(mdp, &v);
    Ok(ValueReport { v, q })
}

#[derive(Debug, Clone)]
pub struct OptimalSolution {
    pub policy: Policy,
    pub actions: Vec<usize>,
    pub values: ValueReport,
    pub sweeps: usize,
    /// Sup-norm change of `V` per sweep.
    pub residuals: Vec<f64>,
}

/// Value iteration from `V = 0`, stopped once the sweep residual drops below
/// `tol (1 - gamma) / (2 gamma)`, which bounds the sup-norm error of the
/// returned values by `tol`.
pub fn solve_optimal(mdp: &LinearMdp, tol: f64) -> Result<OptimalSolution> {
    if !(tol > 0.0) {
        return Err(Error::param(format!("tol = {tol} must be positive")));
    }
    let gamma = mdp.gamma();
    let stop = if gamma == 0.0 {
        f64::INFINITY
    } else {
        tol * (1.0 - gamma) / (2.0 * gamma)
    };
    let mut v = DVector::zeros(mdp.num_states());
    let mut residuals = Vec::new();
    loop {
        let q = q_from_v(mdp, &v);
        let next = DVector::from_iterator(q.nrows(), q.row_iter().map(|row| row.max()));
        let residual = (&next - &v).amax();
        if !residual.is_finite() {
            return Err(Error::Invariant("value iteration diverged".into()));
        }
        residuals.push(residual);
        v = next;
        if residual < stop {
            break;
        }
    }
    let q = q_from_v(mdp, &v);
    let actions = greedy_actions(&q);
    let policy = Policy::deterministic(&actions, mdp.num_actions())?;
    Ok(OptimalSolution {
        policy,
        actions,
        sweeps: residuals.len(),
        residuals,
        values: ValueReport { v, q },
    })
}

/// Optimal policy with exactly evaluated values: value iteration followed by
/// policy-iteration polishing so that near-ties cannot leave a suboptimal
/// greedy action behind.
pub fn exact_optimal(mdp: &LinearMdp) -> Result<OptimalSolution> {
    let mut sol = solve_optimal(mdp, ORACLE_TOL)?;
    let na = mdp.num_actions();
    for _ in 0..mdp.num_states() * na + 1 {
        let values = evaluate_policy(mdp, &sol.policy)?;
        let mut changed = false;
        for (s, row) in values.q.row_iter().enumerate() {
            let cur = sol.actions[s];
            let best = argmax(row.iter().copied());
            if row[best] > row[cur] + 1e-12 {
                sol.actions[s] = best;
                changed = true;
            }
        }
        if !changed {
            sol.values = values;
            return Ok(sol);
        }
        sol.policy = Policy::deterministic(&sol.actions, na)?;
    }
    Err(Error::Invariant("policy iteration did not stabilize".into()))
}

/// `V*(s) - V^pi(s)` for every state.
pub fn suboptimality_profile(
    mdp: &LinearMdp,
    optimal: &ValueReport,
    policy: &Policy,
) -> Result<DVector<f64>> {
    let values = evaluate_policy(mdp, policy)?;
    Ok(&optimal.v - values.v)
}

pub fn suboptimality(mdp: &LinearMdp, policy: &Policy, state: usize) -> Result<f64> {
    if state >= mdp.num_states() {
        return Err(Error::param(format!("state {state} out of range")));
    }
    let opt = exact_optimal(mdp)?;
    Ok(suboptimality_profile(mdp, &opt.values, policy)?[state])
}
