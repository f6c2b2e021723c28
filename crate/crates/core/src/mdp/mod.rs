//! Finite linear MDPs.
//!
//! A [`LinearMdp`] is described by a feature table `phi(s, a) ∈ R^d`, a
//! nonnegative `d × |S|` matrix `mu` and a reward vector `theta`, so that
//!
//! ```text
//! P(s' | s, a) = <phi(s, a), mu(·, s')>        r(s, a) = <phi(s, a), theta>
//! ```
//!
//! The transition table and reward vector are materialized once at
//! construction; all oracle computations run on those.

mod build;
mod oracle;

pub use build::{make_adversarial_mdp, make_lowrank_mdp, make_tabular_mdp, AdversarialMdp};
pub use oracle::{
    evaluate_policy, exact_optimal, solve_optimal, suboptimality, suboptimality_profile,
    OptimalSolution,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const NORM_SLACK: f64 = 1e-12;
const ROW_SUM_TOL: f64 = 1e-10;
const NEG_CLAMP_TOL: f64 = 1e-12;

/// Feature table for a finite state-action space. Row `s * num_actions + a`
/// of the backing matrix is `phi(s, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeatureDocument", into = "FeatureDocument")]
pub struct FeatureMap {
    num_states: usize,
    num_actions: usize,
    phi: DMatrix<f64>,
}

impl FeatureMap {
    pub fn new(num_states: usize, num_actions: usize, phi: DMatrix<f64>) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::param("feature map needs at least one state and one action"));
        }
        if phi.ncols() == 0 {
            return Err(Error::param("feature dimension must be at least 1"));
        }
        if phi.nrows() != num_states * num_actions {
            return Err(Error::param(format!(
                "feature table has {} rows, expected {}",
                phi.nrows(),
                num_states * num_actions
            )));
        }
        for (i, row) in phi.row_iter().enumerate() {
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invariant(format!("phi row {i} is not finite")));
            }
            let norm = row.norm();
            if norm > 1.0 + NORM_SLACK {
                return Err(Error::Invariant(format!(
                    "||phi(s={}, a={})|| = {norm} exceeds 1",
                    i / num_actions,
                    i % num_actions
                )));
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            phi,
        })
    }

    /// Builds from a row-major `(|S|·|A|) × d` array.
    pub fn from_row_major(
        num_states: usize,
        num_actions: usize,
        dim: usize,
        values: &[f64],
    ) -> Result<Self> {
        if values.len() != num_states * num_actions * dim {
            return Err(Error::param(format!(
                "phi has {} entries, expected {}",
                values.len(),
                num_states * num_actions * dim
            )));
        }
        Self::new(
            num_states,
            num_actions,
            DMatrix::from_row_slice(num_states * num_actions, dim, values),
        )
    }

    /// One-hot features over all state-action pairs (`d = |S|·|A|`).
    pub fn one_hot(num_states: usize, num_actions: usize) -> Result<Self> {
        let n = num_states * num_actions;
        Self::new(num_states, num_actions, DMatrix::identity(n, n))
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn dim(&self) -> usize {
        self.phi.ncols()
    }

    pub fn num_pairs(&self) -> usize {
        self.phi.nrows()
    }

    #[inline]
    pub fn index(&self, state: usize, action: usize) -> usize {
        debug_assert!(state < self.num_states && action < self.num_actions);
        state * self.num_actions + action
    }

    pub fn check_pair(&self, state: usize, action: usize) -> Result<()> {
        if state >= self.num_states || action >= self.num_actions {
            return Err(Error::param(format!(
                "(s={state}, a={action}) outside {}x{} space",
                self.num_states, self.num_actions
            )));
        }
        Ok(())
    }

    pub fn phi(&self, state: usize, action: usize) -> DVector<f64> {
        self.phi.row(self.index(state, action)).transpose()
    }

    pub fn phi_at(&self, pair: usize) -> DVector<f64> {
        self.phi.row(pair).transpose()
    }

    /// The full `(|S|·|A|) × d` feature matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        row_major(&self.phi)
    }
}

pub fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpDocument", into = "MdpDocument")]
pub struct LinearMdp {
    features: FeatureMap,
    mu: DMatrix<f64>,
    theta: DVector<f64>,
    gamma: f64,
    r_max: f64,
    init_dist: DVector<f64>,
    seed: Option<u64>,
    // derived
    transitions: DMatrix<f64>,
    rewards: DVector<f64>,
}

impl LinearMdp {
    /// Validates the linear structure and materializes `P` and `r`.
    pub fn new(
        features: FeatureMap,
        mu: DMatrix<f64>,
        theta: DVector<f64>,
        gamma: f64,
        r_max: f64,
        init_dist: DVector<f64>,
        seed: Option<u64>,
    ) -> Result<Self> {
        let d = features.dim();
        let ns = features.num_states();
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::param(format!("gamma = {gamma} is not in [0, 1)")));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::param(format!("r_max = {r_max} must be positive")));
        }
        if mu.nrows() != d || mu.ncols() != ns {
            return Err(Error::param(format!(
                "mu is {}x{}, expected {d}x{ns}",
                mu.nrows(),
                mu.ncols()
            )));
        }
        if theta.len() != d {
            return Err(Error::param(format!("theta has length {}, expected {d}", theta.len())));
        }
        if init_dist.len() != ns {
            return Err(Error::param("initial distribution length differs from |S|"));
        }
        if init_dist.iter().any(|&p| p < 0.0) || (init_dist.sum() - 1.0).abs() > 1e-12 {
            return Err(Error::Invariant("initial distribution is not a probability vector".into()));
        }
        if mu.iter().any(|&m| !(0.0..=1.0).contains(&m)) {
            return Err(Error::Invariant("mu entries must lie in [0, 1]".into()));
        }
        let theta_bound = (d as f64).sqrt() * r_max;
        if theta.norm() > theta_bound + 1e-9 {
            return Err(Error::Invariant(format!(
                "||theta|| = {} exceeds sqrt(d) * r_max = {theta_bound}",
                theta.norm()
            )));
        }

        let mut transitions = features.matrix() * &mu;
        for (i, mut row) in transitions.row_iter_mut().enumerate() {
            let min = row.min();
            if min < -NEG_CLAMP_TOL {
                return Err(Error::Invariant(format!(
                    "P row {i} has negative entry {min}"
                )));
            }
            let sum = row.sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Invariant(format!("P row {i} sums to {sum}")));
            }
            if min < 0.0 {
                row.iter_mut().for_each(|x| *x = x.max(0.0));
                let s = row.sum();
                row /= s;
            }
        }

        let rewards = features.matrix() * &theta;
        for (i, &r) in rewards.iter().enumerate() {
            if r < -NORM_SLACK || r > r_max + NORM_SLACK {
                return Err(Error::Invariant(format!(
                    "reward {r} at pair {i} outside [0, {r_max}]"
                )));
            }
        }

        Ok(Self {
            features,
            mu,
            theta,
            gamma,
            r_max,
            init_dist,
            seed,
            transitions,
            rewards,
        })
    }

    pub fn features(&self) -> &FeatureMap {
        &self.features
    }

    pub fn num_states(&self) -> usize {
        self.features.num_states()
    }

    pub fn num_actions(&self) -> usize {
        self.features.num_actions()
    }

    pub fn dim(&self) -> usize {
        self.features.dim()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Upper bound on any discounted return, `r_max / (1 - gamma)`.
    pub fn v_max(&self) -> f64 {
        self.r_max / (1.0 - self.gamma)
    }

    pub fn mu(&self) -> &DMatrix<f64> {
        &self.mu
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn init_dist(&self) -> &DVector<f64> {
        &self.init_dist
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `(|S|·|A|) × |S|` transition table.
    pub fn transitions(&self) -> &DMatrix<f64> {
        &self.transitions
    }

    /// Mean reward per state-action pair, `phi · theta`.
    pub fn rewards(&self) -> &DVector<f64> {
        &self.rewards
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.rewards[self.features.index(state, action)]
    }

    /// Hex SHA-256 of the canonical JSON document.
    pub fn content_hash(&self) -> String {
        let doc = serde_json::to_vec(&MdpDocument::from(self.clone()))
            .expect("mdp document serializes");
        hex::encode(Sha256::digest(&doc))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureDocument {
    num_states: usize,
    num_actions: usize,
    dim: usize,
    phi: Vec<f64>,
}

impl From<FeatureMap> for FeatureDocument {
    fn from(f: FeatureMap) -> Self {
        Self {
            num_states: f.num_states,
            num_actions: f.num_actions,
            dim: f.dim(),
            phi: f.to_row_major(),
        }
    }
}

impl TryFrom<FeatureDocument> for FeatureMap {
    type Error = Error;

    fn try_from(doc: FeatureDocument) -> Result<Self> {
        FeatureMap::from_row_major(doc.num_states, doc.num_actions, doc.dim, &doc.phi)
    }
}

/// On-disk layout of an MDP. Matrices are row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpDocument {
    pub num_states: usize,
    pub num_actions: usize,
    pub dim: usize,
    pub gamma: f64,
    pub r_max: f64,
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
    pub theta: Vec<f64>,
    pub init_dist: Vec<f64>,
    pub seed: Option<u64>,
}

impl From<LinearMdp> for MdpDocument {
    fn from(m: LinearMdp) -> Self {
        MdpDocument {
            num_states: m.num_states(),
            num_actions: m.num_actions(),
            dim: m.dim(),
            gamma: m.gamma,
            r_max: m.r_max,
            phi: m.features.to_row_major(),
            mu: row_major(&m.mu),
            theta: m.theta.as_slice().to_vec(),
            init_dist: m.init_dist.as_slice().to_vec(),
            seed: m.seed,
        }
    }
}

impl TryFrom<MdpDocument> for LinearMdp {
    type Error = Error;

    fn try_from(doc: MdpDocument) -> Result<Self> {
        let features = FeatureMap::from_row_major(doc.num_states, doc.num_actions, doc.dim, &doc.phi)?;
        if doc.mu.len() != doc.dim * doc.num_states {
            return Err(Error::param("mu length differs from dim * num_states"));
        }
        LinearMdp::new(
            features,
            DMatrix::from_row_slice(doc.dim, doc.num_states, &doc.mu),
            DVector::from_vec(doc.theta),
            doc.gamma,
            doc.r_max,
            DVector::from_vec(doc.init_dist),
            doc.seed,
        )
    }
}

/// A stationary stochastic policy, stored as a row-stochastic `|S| × |A|`
/// matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    probs: DMatrix<f64>,
}

impl Policy {
    pub fn new(probs: DMatrix<f64>) -> Result<Self> {
        if probs.nrows() == 0 || probs.ncols() == 0 {
            return Err(Error::param("policy table is empty"));
        }
        for (s, row) in probs.row_iter().enumerate() {
            if row.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::Invariant(format!("policy row {s} has a negative entry")));
            }
            if (row.sum() - 1.0).abs() > 1e-12 {
                return Err(Error::Invariant(format!("policy row {s} sums to {}", row.sum())));
            }
        }
        Ok(Self { probs })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Self {
            probs: DMatrix::from_element(num_states, num_actions, 1.0 / num_actions as f64),
        }
    }

    pub fn deterministic(actions: &[usize], num_actions: usize) -> Result<Self> {
        let mut probs = DMatrix::zeros(actions.len(), num_actions);
        for (s, &a) in actions.iter().enumerate() {
            if a >= num_actions {
                return Err(Error::param(format!("action {a} out of range at state {s}")));
            }
            probs[(s, a)] = 1.0;
        }
        Self::new(probs)
    }

    /// Plays `base[s]` with probability `1 - epsilon`, otherwise a uniformly
    /// random action.
    pub fn epsilon_greedy(base: &[usize], epsilon: f64, num_actions: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::param(format!("epsilon = {epsilon} not in [0, 1]")));
        }
        let mut probs = DMatrix::from_element(base.len(), num_actions, epsilon / num_actions as f64);
        for (s, &a) in base.iter().enumerate() {
            if a >= num_actions {
                return Err(Error::param(format!("action {a} out of range at state {s}")));
            }
            probs[(s, a)] += 1.0 - epsilon;
        }
        Ok(Self { probs })
    }

    pub fn num_states(&self) -> usize {
        self.probs.nrows()
    }

    pub fn num_actions(&self) -> usize {
        self.probs.ncols()
    }

    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.probs[(state, action)]
    }

    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub(crate) fn check_shape(&self, mdp: &LinearMdp) -> Result<()> {
        if self.num_states() != mdp.num_states() || self.num_actions() != mdp.num_actions() {
            return Err(Error::param(format!(
                "policy is {}x{}, mdp is {}x{}",
                self.num_states(),
                self.num_actions(),
                mdp.num_states(),
                mdp.num_actions()
            )));
        }
        Ok(())
    }
}

/// Greedy action per row, lowest index on ties.
pub fn greedy_actions(q: &DMatrix<f64>) -> Vec<usize> {
    q.row_iter().map(|row| argmax(row.iter().copied())).collect()
}

/// Index of the first maximum.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, x) in values.into_iter().enumerate() {
        if x > best_val {
            best = i;
            best_val = x;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueReport {
    pub v: DVector<f64>,
    /// `|S| × |A|`
    pub q: DMatrix<f64>,
}

impl ValueReport {
    /// Expected state value under a start distribution.
    pub fn expected(&self, dist: &DVector<f64>) -> f64 {
        self.v.dot(dist)
    }
}
