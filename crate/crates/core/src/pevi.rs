//! Pessimistic value iteration on linear features.
//!
//! Each sweep fits the empirical Bellman backup by ridge regression,
//! `w = Lambda^{-1} sum phi_tau (r_tau + gamma V(s'_tau))`, subtracts the
//! elliptical bonus `beta ||phi||_{Lambda^{-1}}` and clamps into
//! `[0, V_max]`. The Gram matrix and the bonus table are fixed for the whole
//! solve, so the dataset is folded once into `sum phi r` and a `d × |S|`
//! next-state incidence matrix.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::OfflineDataset;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, inverse_norm, regularized_gram};
use crate::mdp::{greedy_actions, row_major, FeatureMap, Policy};

/// `c d sqrt(zeta) r_max / (1 - gamma)` with
/// `zeta = log(4 d N / ((1 - gamma) delta))`.
pub fn theorem_beta(d: usize, n_total: usize, gamma: f64, r_max: f64, delta: f64, c: f64) -> Result<f64> {
    if d == 0 || n_total == 0 || !(r_max > 0.0) || !(c > 0.0) {
        return Err(Error::param("theorem beta needs positive d, N, r_max and c"));
    }
    if !(delta > 0.0 && delta < 1.0) || !(0.0..1.0).contains(&gamma) {
        return Err(Error::param("theorem beta needs 0 < delta < 1 and 0 <= gamma < 1"));
    }
    let zeta = (4.0 * d as f64 * n_total as f64 / ((1.0 - gamma) * delta)).ln();
    Ok(c * d as f64 * zeta.sqrt() * r_max / (1.0 - gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaPreset {
    Theorem { c: f64, delta: f64 },
    Raw(f64),
}

/// Solver settings before they are tied to a dataset size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeviSettings {
    pub lambda: f64,
    pub beta: BetaPreset,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_sweeps: Option<usize>,
}

impl Default for PeviSettings {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            beta: BetaPreset::Theorem { c: 1.0, delta: 0.1 },
            tol: None,
            max_sweeps: None,
        }
    }
}

impl PeviSettings {
    pub fn resolve(&self, dim: usize, n_total: usize, gamma: f64, r_max: f64) -> Result<PeviConfig> {
        let beta = match self.beta {
            BetaPreset::Theorem { c, delta } => theorem_beta(dim, n_total.max(1), gamma, r_max, delta, c)?,
            BetaPreset::Raw(b) => b,
        };
        let mut cfg = PeviConfig::new(self.lambda, beta, gamma, r_max)?;
        if let Some(tol) = self.tol {
            cfg.tol = tol;
            cfg.max_sweeps = default_max_sweeps(gamma, tol);
        }
        if let Some(m) = self.max_sweeps {
            cfg.max_sweeps = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_max_sweeps(gamma: f64, tol: f64) -> usize {
    let horizon = (1.0 / (1.0 - gamma) - 1e-9).ceil().max(1.0);
    (10.0 * horizon * (1.0 / tol).ln().max(1.0)).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeviConfig {
    pub lambda_reg: f64,
    pub beta: f64,
    pub gamma: f64,
    pub v_max: f64,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl PeviConfig {
    /// Defaults: `tol = 1e-8 V_max`, sweep budget sized from the contraction
    /// rate.
    pub fn new(lambda_reg: f64, beta: f64, gamma: f64, r_max: f64) -> Result<Self> {
        let v_max = r_max / (1.0 - gamma);
        let tol = 1e-8 * v_max;
        let cfg = Self {
            lambda_reg,
            beta,
            gamma,
            v_max,
            tol,
            max_sweeps: default_max_sweeps(gamma, tol),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda_reg > 0.0) {
            return Err(Error::param(format!("lambda = {} must be positive", self.lambda_reg)));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::param(format!("beta = {} must be nonnegative", self.beta)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param(format!("tol = {} must be positive", self.tol)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::param(format!("gamma = {} not in [0, 1)", self.gamma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeviSolution {
    pub w_hat: DVector<f64>,
    pub beta: f64,
    pub lambda_matrix: DMatrix<f64>,
    /// `|S| × |A|`
    pub q_hat: DMatrix<f64>,
    pub v_hat: DVector<f64>,
    pub bonus: DMatrix<f64>,
    pub actions: Vec<usize>,
    pub policy: Policy,
    pub sweeps_used: usize,
    pub converged: bool,
    /// Sup-norm change of `V` per sweep.
    pub residuals: Vec<f64>,
}

impl PeviSolution {
    pub fn report(&self) -> PeviReport {
        let mut h = Sha256::new();
        for x in row_major(&self.lambda_matrix) {
            h.update(x.to_le_bytes());
        }
        PeviReport {
            w_hat: self.w_hat.as_slice().to_vec(),
            beta: self.beta,
            lambda_hash: hex::encode(h.finalize()),
            v_hat: self.v_hat.as_slice().to_vec(),
            policy: self.actions.clone(),
            sweeps_used: self.sweeps_used,
            converged: self.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeviReport {
    pub w_hat: Vec<f64>,
    pub beta: f64,
    pub lambda_hash: String,
    pub v_hat: Vec<f64>,
    pub policy: Vec<usize>,
    pub sweeps_used: usize,
    pub converged: bool,
}

pub fn bellman_gram(dataset: &OfflineDataset, features: &FeatureMap, lambda_reg: f64) -> DMatrix<f64> {
    regularized_gram(dataset, features, lambda_reg)
}

/// Ridge fit of `r + gamma v(s')` on the dataset features.
pub fn bellman_regress(
    dataset: &OfflineDataset,
    features: &FeatureMap,
    v: &DVector<f64>,
    gamma: f64,
    lambda_reg: f64,
) -> Result<DVector<f64>> {
    dataset.require_labeled("bellman regression")?;
    if v.len() != features.num_states() {
        return Err(Error::param("value vector length differs from |S|"));
    }
    let chol = cholesky(&bellman_gram(dataset, features, lambda_reg))?;
    let mut rhs = DVector::zeros(features.dim());
    for t in dataset.iter() {
        let target = t.reward.expect("checked above") + gamma * v[t.next_state];
        rhs.axpy(target, &features.phi(t.state, t.action), 1.0);
    }
    Ok(chol.solve(&rhs))
}

pub fn uncertainty_bonus(
    lambda_matrix: &DMatrix<f64>,
    features: &FeatureMap,
    beta: f64,
    state: usize,
    action: usize,
) -> Result<f64> {
    let chol = cholesky(lambda_matrix)?;
    Ok(beta * inverse_norm(&chol, &features.phi(state, action)))
}

pub fn pevi_solve(dataset: &OfflineDataset, features: &FeatureMap, config: &PeviConfig) -> Result<PeviSolution> {
    config.validate()?;
    dataset.require_labeled("pessimistic value iteration")?;
    if (dataset.num_states, dataset.num_actions) != (features.num_states(), features.num_actions()) {
        return Err(Error::param("dataset shape differs from the feature map"));
    }
    let d = features.dim();
    let ns = features.num_states();
    let na = features.num_actions();

    let lambda_matrix = bellman_gram(dataset, features, config.lambda_reg);
    let chol = cholesky(&lambda_matrix)?;
    let mut reward_sum = DVector::zeros(d);
    let mut next_incidence = DMatrix::zeros(d, ns);
    for t in dataset.iter() {
        let phi = features.phi(t.state, t.action);
        reward_sum.axpy(t.reward.expect("checked above"), &phi, 1.0);
        let mut col = next_incidence.column_mut(t.next_state);
        col += &phi;
    }
    // Lambda^{-1} applied once to both pieces
    let reward_part = chol.solve(&reward_sum);
    let transition_part = chol.solve(&next_incidence);

    let phi_all = features.matrix();
    let bonus_flat =
        DVector::from_iterator(ns * na, (0..ns * na).map(|i| config.beta * inverse_norm(&chol, &features.phi_at(i))));

    let mut v = DVector::zeros(ns);
    let mut w = DVector::zeros(d);
    let mut q = DMatrix::zeros(ns, na);
    let mut residuals = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_sweeps.max(1) {
        w = &reward_part + &transition_part * &v * config.gamma;
        let backup = phi_all * &w;
        for i in 0..ns * na {
            q[(i / na, i % na)] = (backup[i] - bonus_flat[i]).clamp(0.0, config.v_max);
        }
        let next = DVector::from_iterator(ns, q.row_iter().map(|row| row.max()));
        let residual = (&next - &v).amax();
        if !residual.is_finite() {
            return Err(Error::Invariant("value estimates are not finite".into()));
        }
        residuals.push(residual);
        v = next;
        if residual < config.tol {
            converged = true;
            break;
        }
    }
    let actions = greedy_actions(&q);
    let policy = Policy::deterministic(&actions, na)?;
    let bonus = DMatrix::from_row_slice(ns, na, bonus_flat.as_slice());
    Ok(PeviSolution {
        w_hat: w,
        beta: config.beta,
        lambda_matrix,
        q_hat: q,
        v_hat: v,
        bonus,
        actions,
        policy,
        sweeps_used: residuals.len(),
        converged,
        residuals,
    })
}
