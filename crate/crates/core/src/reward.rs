//! Ridge reward regression with an elliptical confidence set, and the
//! pessimistic reward used to annotate reward-free transitions.
//!
//! With `Lambda = nu I + sum phi phi^T` over the labeled data and
//! `theta_hat = Lambda^{-1} sum phi r`, the confidence set is
//! `{theta : ||theta - theta_hat||_Lambda <= alpha}`. Every member satisfies
//! `|phi^T theta - phi^T theta_hat| <= alpha ||phi||_{Lambda^{-1}}`, so
//! subtracting that width gives a lower bound on the reward of any
//! parameter in the set.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::data::{sample_dataset, OfflineDataset, SampleSpec, Transition};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, inverse_norm, regularized_gram, weighted_norm};
use crate::mdp::{row_major, FeatureMap, LinearMdp, Policy};
use crate::seed;

/// Radius of the confidence ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaPreset {
    /// `sqrt(nu) + r_max sqrt(2 log(1/delta) + d log(1 + N0/(nu d)))`
    Lemma,
    /// `2 r_max sqrt(d log(2 d N0 / delta))`
    Theorem,
    Fixed(f64),
}

impl AlphaPreset {
    pub fn radius(self, d: usize, n0: usize, nu: f64, delta: f64, r_max: f64) -> Result<f64> {
        let d = d as f64;
        let n = n0 as f64;
        match self {
            AlphaPreset::Lemma => Ok(nu.sqrt()
                + r_max * (2.0 * (1.0 / delta).ln() + d * (1.0 + n / (nu * d)).ln()).sqrt()),
            AlphaPreset::Theorem => {
                if n0 == 0 {
                    return Err(Error::param("theorem radius needs at least one labeled sample"));
                }
                Ok(2.0 * r_max * (d * (2.0 * d * n / delta).ln()).sqrt())
            }
            AlphaPreset::Fixed(a) if a >= 0.0 => Ok(a),
            AlphaPreset::Fixed(a) => Err(Error::param(format!("alpha = {a} must be nonnegative"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfig {
    pub nu: f64,
    pub delta: f64,
    #[serde(default = "default_alpha")]
    pub alpha: AlphaPreset,
    /// Overwrite observed labels too when relabeling.
    #[serde(default)]
    pub strict: bool,
}

fn default_alpha() -> AlphaPreset {
    AlphaPreset::Lemma
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            nu: 1.0,
            delta: 0.1,
            alpha: AlphaPreset::Lemma,
            strict: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RewardModelDocument", into = "RewardModelDocument")]
pub struct RewardModel {
    pub theta_hat: DVector<f64>,
    pub lambda_matrix: DMatrix<f64>,
    pub alpha: f64,
    pub nu: f64,
    pub delta: f64,
    pub n_labeled: usize,
    pub r_max: f64,
    chol: Cholesky<f64, Dyn>,
}

impl PartialEq for RewardModel {
    fn eq(&self, other: &Self) -> bool {
        self.theta_hat == other.theta_hat
            && self.lambda_matrix == other.lambda_matrix
            && self.alpha == other.alpha
            && self.nu == other.nu
            && self.delta == other.delta
            && self.n_labeled == other.n_labeled
            && self.r_max == other.r_max
    }
}

pub fn fit_reward(
    labeled: &OfflineDataset,
    features: &FeatureMap,
    r_max: f64,
    cfg: &RewardConfig,
) -> Result<RewardModel> {
    labeled.require_labeled("reward regression")?;
    if !(cfg.nu > 0.0) {
        return Err(Error::param(format!("nu = {} must be positive", cfg.nu)));
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::param(format!("delta = {} not in (0, 1)", cfg.delta)));
    }
    let lambda_matrix = regularized_gram(labeled, features, cfg.nu);
    let mut rhs = DVector::zeros(features.dim());
    for t in labeled.iter() {
        rhs.axpy(t.reward.expect("checked above"), &features.phi(t.state, t.action), 1.0);
    }
    let chol = cholesky(&lambda_matrix)?;
    let theta_hat = chol.solve(&rhs);
    let alpha = cfg
        .alpha
        .radius(features.dim(), labeled.len(), cfg.nu, cfg.delta, r_max)?;
    Ok(RewardModel {
        theta_hat,
        lambda_matrix,
        alpha,
        nu: cfg.nu,
        delta: cfg.delta,
        n_labeled: labeled.len(),
        r_max,
        chol,
    })
}

impl RewardModel {
    pub fn dim(&self) -> usize {
        self.theta_hat.len()
    }

    /// Unclipped linear prediction `phi^T theta_hat`.
    pub fn raw_prediction(&self, features: &FeatureMap, state: usize, action: usize) -> f64 {
        features.phi(state, action).dot(&self.theta_hat)
    }

    /// Prediction clamped into `[0, r_max]`.
    pub fn predicted_reward(&self, features: &FeatureMap, state: usize, action: usize) -> f64 {
        self.raw_prediction(features, state, action).clamp(0.0, self.r_max)
    }

    /// `||phi||_{Lambda^{-1}}`.
    pub fn width(&self, phi: &DVector<f64>) -> f64 {
        inverse_norm(&self.chol, phi)
    }

    /// Whether `theta` lies in the confidence ellipsoid.
    pub fn contains(&self, theta: &DVector<f64>) -> bool {
        self.ellipsoid_distance(theta) <= self.alpha
    }

    pub fn ellipsoid_distance(&self, theta: &DVector<f64>) -> f64 {
        weighted_norm(&self.lambda_matrix, &(theta - &self.theta_hat))
    }

    /// Same fit with a different radius.
    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            alpha,
            ..self.clone()
        }
    }
}

/// `alpha * ||phi(s, a)||_{Lambda^{-1}}`: the largest reward deviation of
/// any parameter in the confidence set.
pub fn reward_deviation(model: &RewardModel, features: &FeatureMap, state: usize, action: usize) -> f64 {
    model.alpha * model.width(&features.phi(state, action))
}

/// `max(phi^T theta_hat - deviation, 0)`, also capped at `r_max`.
pub fn pessimistic_reward(model: &RewardModel, features: &FeatureMap, state: usize, action: usize) -> f64 {
    (model.raw_prediction(features, state, action) - reward_deviation(model, features, state, action))
        .clamp(0.0, model.r_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelabelMode {
    Pds,
    Uds,
    Predict,
    Oracle,
}

/// Source of rewards for reward-free transitions.
#[derive(Debug, Clone, Copy)]
pub enum Annotator<'a> {
    Pessimistic(&'a RewardModel, &'a FeatureMap),
    Zero,
    Predicted(&'a RewardModel, &'a FeatureMap),
    Oracle(&'a LinearMdp),
}

impl Annotator<'_> {
    pub fn mode(&self) -> RelabelMode {
        match self {
            Annotator::Pessimistic(..) => RelabelMode::Pds,
            Annotator::Zero => RelabelMode::Uds,
            Annotator::Predicted(..) => RelabelMode::Predict,
            Annotator::Oracle(_) => RelabelMode::Oracle,
        }
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        match *self {
            Annotator::Pessimistic(m, f) => pessimistic_reward(m, f, state, action),
            Annotator::Zero => 0.0,
            Annotator::Predicted(m, f) => m.predicted_reward(f, state, action),
            Annotator::Oracle(mdp) => mdp.reward(state, action),
        }
    }
}

/// Returns a fully labeled copy. Observed rewards are kept unless `strict`,
/// in which case every transition is annotated.
pub fn relabel(dataset: &OfflineDataset, annotator: Annotator<'_>, strict: bool) -> OfflineDataset {
    let transitions = dataset
        .iter()
        .map(|t| match t.reward {
            Some(_) if !strict => *t,
            _ => t.with_reward(annotator.reward(t.state, t.action)),
        })
        .collect::<Vec<Transition>>();
    OfflineDataset {
        transitions,
        labeled: true,
        ..dataset.clone()
    }
}

/// Fraction of `trials` fresh uniform-behavior datasets of size `n0` whose
/// fitted ellipsoid contains the true reward parameter.
pub fn confidence_coverage_trial(
    mdp: &LinearMdp,
    n0: usize,
    noise: f64,
    cfg: &RewardConfig,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    let behavior = Policy::uniform(mdp.num_states(), mdp.num_actions());
    let mut hits = 0usize;
    for trial in 0..trials {
        let spec = SampleSpec::new(n0, true, seed::derive(seed, trial as u64)).with_noise(noise);
        let data = sample_dataset(mdp, &behavior, &spec, "uniform")?;
        let model = fit_reward(&data, mdp.features(), mdp.r_max(), cfg)?;
        if model.contains(mdp.theta()) {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RewardModelDocument {
    theta_hat: Vec<f64>,
    lambda_matrix: Vec<f64>,
    alpha: f64,
    nu: f64,
    delta: f64,
    n_labeled: usize,
    r_max: f64,
}

impl From<RewardModel> for RewardModelDocument {
    fn from(m: RewardModel) -> Self {
        Self {
            theta_hat: m.theta_hat.as_slice().to_vec(),
            lambda_matrix: row_major(&m.lambda_matrix),
            alpha: m.alpha,
            nu: m.nu,
            delta: m.delta,
            n_labeled: m.n_labeled,
            r_max: m.r_max,
        }
    }
}

impl TryFrom<RewardModelDocument> for RewardModel {
    type Error = Error;

    fn try_from(doc: RewardModelDocument) -> Result<Self> {
        let d = doc.theta_hat.len();
        if doc.lambda_matrix.len() != d * d {
            return Err(Error::param("lambda_matrix is not d x d"));
        }
        let lambda_matrix = DMatrix::from_row_slice(d, d, &doc.lambda_matrix);
        let chol = cholesky(&lambda_matrix)?;
        Ok(Self {
            theta_hat: DVector::from_vec(doc.theta_hat),
            lambda_matrix,
            alpha: doc.alpha,
            nu: doc.nu,
            delta: doc.delta,
            n_labeled: doc.n_labeled,
            r_max: doc.r_max,
            chol,
        })
    }
}
