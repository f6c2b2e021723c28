use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Exp1;

use super::{FeatureMap, LinearMdp, Policy};
use crate::error::{Error, Result};
use crate::seed;

fn check_common(num_states: usize, num_actions: usize, gamma: f64, r_max: f64) -> Result<()> {
    if num_states == 0 || num_actions == 0 {
        return Err(Error::param("num_states and num_actions must be at least 1"));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::param(format!("gamma = {gamma} is not in [0, 1)")));
    }
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::param(format!("r_max = {r_max} must be positive")));
    }
    Ok(())
}

/// Dirichlet(1, ..., 1) draw via normalized exponentials.
fn simplex_point<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut x: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    x
}

fn uniform_init(num_states: usize) -> DVector<f64> {
    DVector::from_element(num_states, 1.0 / num_states as f64)
}

/// Tabular MDP written as a linear MDP with one-hot features over `(s, a)`.
///
/// Row `(s, a)` of `mu`'s transpose is a random next-state distribution, and
/// rewards are drawn uniformly in `[0, r_max]`.
pub fn make_tabular_mdp(
    num_states: usize,
    num_actions: usize,
    gamma: f64,
    r_max: f64,
    seed: u64,
) -> Result<LinearMdp> {
    check_common(num_states, num_actions, gamma, r_max)?;
    let mut rng = seed::rng(seed::derive_str(seed, "tabular"));
    let d = num_states * num_actions;
    let mut mu = DMatrix::zeros(d, num_states);
    for i in 0..d {
        for (s, p) in simplex_point(&mut rng, num_states).into_iter().enumerate() {
            mu[(i, s)] = p;
        }
    }
    let theta = DVector::from_fn(d, |_, _| rng.random_range(0.0..=r_max));
    LinearMdp::new(
        FeatureMap::one_hot(num_states, num_actions)?,
        mu,
        theta,
        gamma,
        r_max,
        uniform_init(num_states),
        Some(seed),
    )
}

/// Low-rank linear MDP: features on the probability simplex in `R^dim`,
/// each row of `mu` a distribution over states.
pub fn make_lowrank_mdp(
    num_states: usize,
    num_actions: usize,
    dim: usize,
    gamma: f64,
    r_max: f64,
    seed: u64,
) -> Result<LinearMdp> {
    check_common(num_states, num_actions, gamma, r_max)?;
    if dim == 0 || dim > num_states * num_actions {
        return Err(Error::param(format!(
            "dim = {dim} must be in [1, {}]",
            num_states * num_actions
        )));
    }
    let mut rng = seed::rng(seed::derive_str(seed, "lowrank"));
    let pairs = num_states * num_actions;
    let mut phi = DMatrix::zeros(pairs, dim);
    for i in 0..pairs {
        for (j, p) in simplex_point(&mut rng, dim).into_iter().enumerate() {
            phi[(i, j)] = p;
        }
    }
    let mut mu = DMatrix::zeros(dim, num_states);
    for j in 0..dim {
        for (s, p) in simplex_point(&mut rng, num_states).into_iter().enumerate() {
            mu[(j, s)] = p;
        }
    }
    let theta = DVector::from_fn(dim, |_, _| rng.random_range(0.0..=r_max));
    LinearMdp::new(
        FeatureMap::new(num_states, num_actions, phi)?,
        mu,
        theta,
        gamma,
        r_max,
        uniform_init(num_states),
        Some(seed),
    )
}

/// Single-state instance whose optimal policy spreads uniformly over `dim`
/// orthogonal feature directions.
///
/// The optimal actions `0..dim` carry features `e_i`, i.e. the textbook
/// `sqrt(dim) * e_i` multiplied by `feature_scale = 1/sqrt(dim)` so that
/// `||phi|| <= 1`. A single-state linear MDP whose optimal features span the
/// whole feature space forces every action to the same reward, so the
/// remaining actions use one extra slack coordinate `e_dim` with reward
/// `r_max / 2`. The feature map therefore has `dim + 1` columns and the
/// optimal-policy second moment is `diag(I_dim / dim, 0)`.
#[derive(Debug, Clone)]
pub struct AdversarialMdp {
    pub mdp: LinearMdp,
    /// Multiplier applied to the unnormalized `sqrt(dim) * e_i` features.
    pub feature_scale: f64,
    /// Number of optimal actions (and of spanned feature directions).
    pub spectral_dim: usize,
}

impl AdversarialMdp {
    pub fn optimal_actions(&self) -> std::ops::Range<usize> {
        0..self.spectral_dim
    }

    /// Uniform over the optimal actions.
    pub fn optimal_policy(&self) -> Policy {
        let mut probs = DMatrix::zeros(1, self.mdp.num_actions());
        for a in self.optimal_actions() {
            probs[(0, a)] = 1.0 / self.spectral_dim as f64;
        }
        Policy::new(probs).expect("uniform over optimal actions is a valid policy")
    }

    /// Undoes the feature rescaling on a second-moment matrix and returns the
    /// block over the optimal directions. Equals the identity for the
    /// optimal policy.
    pub fn unscaled_block(&self, second_moment: &DMatrix<f64>) -> DMatrix<f64> {
        let k = self.spectral_dim;
        second_moment.view((0, 0), (k, k)) / (self.feature_scale * self.feature_scale)
    }
}

pub fn make_adversarial_mdp(
    num_actions: usize,
    dim: usize,
    gamma: f64,
    r_max: f64,
) -> Result<AdversarialMdp> {
    check_common(1, num_actions, gamma, r_max)?;
    if dim == 0 || num_actions <= dim {
        return Err(Error::param(format!(
            "adversarial construction needs num_actions > dim >= 1 (got {num_actions}, {dim})"
        )));
    }
    let feature_scale = 1.0 / (dim as f64).sqrt();
    let raw = (dim as f64).sqrt();
    let width = dim + 1;
    let mut phi = DMatrix::zeros(num_actions, width);
    for a in 0..num_actions {
        if a < dim {
            phi[(a, a)] = raw * feature_scale;
        } else {
            phi[(a, dim)] = 1.0;
        }
    }
    let mut theta = DVector::from_element(width, r_max);
    theta[dim] = 0.5 * r_max;
    let mdp = LinearMdp::new(
        FeatureMap::new(1, num_actions, phi)?,
        DMatrix::from_element(width, 1, 1.0),
        theta,
        gamma,
        r_max,
        DVector::from_element(1, 1.0),
        None,
    )?;
    Ok(AdversarialMdp {
        mdp,
        feature_scale,
        spectral_dim: dim,
    })
}
