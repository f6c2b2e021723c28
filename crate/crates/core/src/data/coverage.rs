use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::OfflineDataset;
use crate::error::{Error, Result};
use crate::mdp::{FeatureMap, LinearMdp, Policy};

/// Eigenvalues of `Sigma` at or below this are treated as exact zeros.
const SIGMA_NULL_TOL: f64 = 1e-10;
/// Relative cutoff for the empirical Gram matrix's range.
const GRAM_RANGE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub c_dagger: f64,
    /// `(1/N) sum phi phi^T` over the dataset.
    pub gram: DMatrix<f64>,
    /// Largest feasible `C` per start state; `c_dagger` is their minimum.
    pub per_start_state_values: Vec<f64>,
}

fn policy_kernel(mdp: &LinearMdp, policy: &Policy) -> DMatrix<f64> {
    let ns = mdp.num_states();
    let na = mdp.num_actions();
    let p = mdp.transitions();
    DMatrix::from_fn(ns, ns, |s, sp| {
        (0..na).map(|a| policy.prob(s, a) * p[(s * na + a, sp)]).sum()
    })
}

/// Normalized discounted state occupancy `(1 - gamma) (I - gamma P^pi)^{-1}`;
/// row `s` is the occupancy when starting from `s`.
pub fn state_occupancy(mdp: &LinearMdp, policy: &Policy) -> Result<DMatrix<f64>> {
    policy.check_shape(mdp)?;
    let ns = mdp.num_states();
    let system = DMatrix::identity(ns, ns) - policy_kernel(mdp, policy) * mdp.gamma();
    let inv = system
        .try_inverse()
        .ok_or_else(|| Error::Invariant("occupancy system is singular".into()))?;
    Ok(inv * (1.0 - mdp.gamma()))
}

fn second_moment_from_row(
    features: &FeatureMap,
    policy: &Policy,
    occupancy: impl Iterator<Item = f64>,
) -> DMatrix<f64> {
    let d = features.dim();
    let na = features.num_actions();
    let mut sigma = DMatrix::zeros(d, d);
    for (s, w_s) in occupancy.enumerate() {
        if w_s == 0.0 {
            continue;
        }
        for a in 0..na {
            let w = w_s * policy.prob(s, a);
            if w == 0.0 {
                continue;
            }
            let phi = features.phi(s, a);
            sigma.ger(w, &phi, &phi, 1.0);
        }
    }
    sigma
}

/// `Sigma_{pi,s} = (1 - gamma) sum_t gamma^t E_pi[phi phi^T | s_0 = s]`.
pub fn occupancy_second_moment(
    mdp: &LinearMdp,
    policy: &Policy,
    start_state: usize,
) -> Result<DMatrix<f64>> {
    if start_state >= mdp.num_states() {
        return Err(Error::param(format!("start state {start_state} out of range")));
    }
    let occ = state_occupancy(mdp, policy)?;
    Ok(second_moment_from_row(
        mdp.features(),
        policy,
        occ.row(start_state).iter().copied(),
    ))
}

/// One second-moment matrix per start state.
pub fn occupancy_second_moments(mdp: &LinearMdp, policy: &Policy) -> Result<Vec<DMatrix<f64>>> {
    let occ = state_occupancy(mdp, policy)?;
    Ok(occ
        .row_iter()
        .map(|row| second_moment_from_row(mdp.features(), policy, row.iter().copied()))
        .collect())
}

/// Largest `C >= 0` with `gram - C * sigma` positive semidefinite.
///
/// Works in the eigenbasis of `gram`: if `sigma` has mass outside the range
/// of `gram` no positive `C` is feasible; otherwise the answer is
/// `1 / lambda_max(D^{-1/2} V^T sigma V D^{-1/2})` over the range. Directions
/// in the null space of `sigma` impose no constraint. Returns infinity when
/// `sigma` vanishes.
pub fn dominance_ratio(gram: &DMatrix<f64>, sigma: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(gram.clone());
    let top = eig.eigenvalues.max().max(0.0);
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > GRAM_RANGE_RTOL * top && eig.eigenvalues[i] > 0.0)
        .collect();
    let d = gram.nrows();
    let basis = DMatrix::from_fn(d, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])]);
    let projector = &basis * basis.transpose();
    let complement = DMatrix::<f64>::identity(d, d) - projector;
    let outside = &complement * sigma * &complement;
    let outside_norm = SymmetricEigen::new(outside).eigenvalues.amax();
    if outside_norm > SIGMA_NULL_TOL {
        return 0.0;
    }
    if keep.is_empty() {
        return f64::INFINITY;
    }
    let scale = DVector::from_iterator(keep.len(), keep.iter().map(|&i| eig.eigenvalues[i].sqrt().recip()));
    let mut reduced = basis.transpose() * sigma * &basis;
    for r in 0..keep.len() {
        for c in 0..keep.len() {
            reduced[(r, c)] *= scale[r] * scale[c];
        }
    }
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let lambda_max = SymmetricEigen::new(reduced).eigenvalues.max();
    if lambda_max <= SIGMA_NULL_TOL {
        return f64::INFINITY;
    }
    (1.0 / lambda_max).max(0.0)
}

pub fn empirical_gram(dataset: &OfflineDataset, features: &FeatureMap) -> DMatrix<f64> {
    let d = features.dim();
    let mut gram = DMatrix::zeros(d, d);
    for t in dataset.iter() {
        let phi = features.phi(t.state, t.action);
        gram.ger(1.0, &phi, &phi, 1.0);
    }
    gram / dataset.len() as f64
}

pub fn coverage_coefficient(
    dataset: &OfflineDataset,
    mdp: &LinearMdp,
    optimal: &Policy,
) -> Result<CoverageReport> {
    if dataset.is_empty() {
        return Err(Error::param("coverage of an empty dataset is undefined"));
    }
    let gram = empirical_gram(dataset, mdp.features());
    let per_start_state_values: Vec<f64> = occupancy_second_moments(mdp, optimal)?
        .iter()
        .map(|sigma| dominance_ratio(&gram, sigma))
        .collect();
    let c_dagger = per_start_state_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    Ok(CoverageReport {
        c_dagger,
        gram,
        per_start_state_values,
    })
}
