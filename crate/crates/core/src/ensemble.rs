//! Bootstrap reward ensembles and their pessimistic estimates, usable as a
//! standalone relabeler for reward-free JSON-lines datasets.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::io::{parse_line, write_line};
use crate::data::{OfflineDataset, Transition};
use crate::error::{Error, Result};
use crate::mdp::FeatureMap;
use crate::reward::{fit_reward, AlphaPreset, RewardConfig};
use crate::seed;

pub const DEFAULT_MEMBERS: usize = 10;
pub const DEFAULT_AUTO_A: f64 = 25.0;
pub const DEFAULT_EPSILON: f64 = 1e-8;
pub const K_CAP: f64 = 1e6;

/// Penalty weight on the ensemble spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyK {
    /// Scaled by the drop of the predicted unlabeled mean below the labeled mean.
    Auto,
    Fixed(f64),
}

impl FromStr for PenaltyK {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(PenaltyK::Auto);
        }
        match s.parse::<f64>() {
            Ok(k) if k >= 0.0 => Ok(PenaltyK::Fixed(k)),
            _ => Err(Error::param(format!("k must be \"auto\" or a nonnegative number, got {s:?}"))),
        }
    }
}

impl fmt::Display for PenaltyK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PenaltyK::Auto => f.write_str("auto"),
            PenaltyK::Fixed(k) => write!(f, "{k}"),
        }
    }
}

impl Serialize for PenaltyK {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PenaltyK::Auto => s.serialize_str("auto"),
            PenaltyK::Fixed(k) => s.serialize_f64(*k),
        }
    }
}

impl<'de> Deserialize<'de> for PenaltyK {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Word(String),
        }
        match Repr::deserialize(d)? {
            Repr::Number(k) if k >= 0.0 => Ok(PenaltyK::Fixed(k)),
            Repr::Number(k) => Err(serde::de::Error::custom(format!("k = {k} is negative"))),
            Repr::Word(w) => w.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Which member statistic the spread penalty is subtracted from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// `max(min_j f_j - k sigma, 0)`
    Min,
    /// `max(mean_j f_j - k sigma, 0)`
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleRewardModel {
    pub members: Vec<Vec<f64>>,
    pub penalty_k: PenaltyK,
    pub auto_a: f64,
    pub epsilon: f64,
    pub estimator: Estimator,
    /// Mean observed reward of the labeled data the ensemble was fit on.
    pub labeled_mean: f64,
    pub features: FeatureMap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleStats {
    pub mu: f64,
    /// Population standard deviation over members.
    pub sigma: f64,
    pub min_member: f64,
}

/// Fits `members` ridge regressions, each on a bootstrap resample of
/// `labeled` of the same size.
pub fn fit_ensemble(
    labeled: &OfflineDataset,
    features: &FeatureMap,
    members: usize,
    nu: f64,
    seed: u64,
) -> Result<EnsembleRewardModel> {
    if members < 2 {
        return Err(Error::param(format!("an ensemble needs at least 2 members, got {members}")));
    }
    labeled.require_labeled("ensemble fitting")?;
    if labeled.is_empty() {
        return Err(Error::contract("cannot fit an ensemble on an empty dataset"));
    }
    let cfg = RewardConfig {
        nu,
        alpha: AlphaPreset::Fixed(0.0),
        ..RewardConfig::default()
    };
    let n = labeled.len();
    let fitted = (0..members)
        .map(|j| {
            let mut rng = seed::rng(seed::derive(seed::derive_str(seed, "bootstrap"), j as u64));
            let resample = OfflineDataset {
                transitions: (0..n).map(|_| labeled.transitions[rng.random_range(0..n)]).collect(),
                ..labeled.clone()
            };
            Ok(fit_reward(&resample, features, f64::INFINITY, &cfg)?.theta_hat.as_slice().to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    let labeled_mean = labeled.iter().map(|t| t.reward.unwrap_or(0.0)).sum::<f64>() / n as f64;
    Ok(EnsembleRewardModel {
        members: fitted,
        penalty_k: PenaltyK::Auto,
        auto_a: DEFAULT_AUTO_A,
        epsilon: DEFAULT_EPSILON,
        estimator: Estimator::Min,
        labeled_mean,
        features: features.clone(),
    })
}

impl EnsembleRewardModel {
    pub fn validate(&self) -> Result<()> {
        if self.members.len() < 2 {
            return Err(Error::param("an ensemble needs at least 2 members"));
        }
        if let Some(m) = self.members.iter().find(|m| m.len() != self.features.dim()) {
            return Err(Error::param(format!(
                "member has {} weights, features have dim {}",
                m.len(),
                self.features.dim()
            )));
        }
        if !(self.auto_a > 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::param("auto_a and epsilon must be positive"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn predictions(&self, state: usize, action: usize) -> Result<Vec<f64>> {
        self.features.check_pair(state, action)?;
        let phi = self.features.phi(state, action);
        Ok(self
            .members
            .iter()
            .map(|w| DVector::from_column_slice(w).dot(&phi))
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }
}

pub fn ensemble_stats(model: &EnsembleRewardModel, state: usize, action: usize) -> Result<EnsembleStats> {
    let preds = model.predictions(state, action)?;
    let l = preds.len() as f64;
    let min_member = preds.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = preds.iter().map(|p| p - min_member).sum::<f64>() / l;
    let mu = min_member + shift;
    let var = preds.iter().map(|p| (p - min_member - shift).powi(2)).sum::<f64>() / l;
    Ok(EnsembleStats {
        mu,
        sigma: var.sqrt(),
        min_member,
    })
}

/// `Phi^{-1}((L - pi/8) / (L - pi/4 + 1))`, the approximate number of
/// standard deviations between the mean and the minimum of `L` normals.
pub fn gaussian_min_coefficient(members: usize) -> Result<f64> {
    if members == 0 {
        return Err(Error::param("need at least one member"));
    }
    let l = members as f64;
    let p = (l - std::f64::consts::PI / 8.0) / (l - std::f64::consts::PI / 4.0 + 1.0);
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(p))
}

/// `a max(mu - mu_hat, 0) / (|mu| + eps)`, capped at [`K_CAP`].
pub fn auto_k(model: &EnsembleRewardModel, labeled_mean: f64, unlabeled_pred_mean: f64) -> f64 {
    let k = model.auto_a * (labeled_mean - unlabeled_pred_mean).max(0.0) / (labeled_mean.abs() + model.epsilon);
    k.min(K_CAP)
}

/// Mean ensemble prediction over the pairs of `dataset`.
pub fn predicted_mean<'a>(
    model: &EnsembleRewardModel,
    pairs: impl IntoIterator<Item = &'a Transition>,
) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for t in pairs {
        sum += ensemble_stats(model, t.state, t.action)?.mu;
        n += 1;
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// Resolves the penalty weight for relabeling `unlabeled`; `k_override`
/// wins over the model's own setting.
pub fn resolve_k<'a>(
    model: &EnsembleRewardModel,
    k_override: Option<PenaltyK>,
    unlabeled: impl IntoIterator<Item = &'a Transition>,
) -> Result<f64> {
    match k_override.unwrap_or(model.penalty_k) {
        PenaltyK::Fixed(k) => Ok(k),
        PenaltyK::Auto => Ok(auto_k(model, model.labeled_mean, predicted_mean(model, unlabeled)?)),
    }
}

/// `max(base - k sigma, 0)` where `base` is the member minimum or mean.
pub fn pessimistic_ensemble_reward(model: &EnsembleRewardModel, state: usize, action: usize, k: f64) -> Result<f64> {
    if !(k >= 0.0) {
        return Err(Error::param(format!("k = {k} must be nonnegative")));
    }
    let st = ensemble_stats(model, state, action)?;
    let base = match model.estimator {
        Estimator::Min => st.min_member,
        Estimator::Mean => st.mu,
    };
    let penalty = if st.sigma == 0.0 { 0.0 } else { k * st.sigma };
    Ok((base - penalty).max(0.0))
}

/// Relabels every reward-free transition of `dataset`; labeled ones are kept.
pub fn relabel_with_ensemble(
    dataset: &OfflineDataset,
    model: &EnsembleRewardModel,
    k_override: Option<PenaltyK>,
) -> Result<(OfflineDataset, f64)> {
    let k = resolve_k(model, k_override, dataset.iter().filter(|t| t.reward.is_none()))?;
    let transitions = dataset
        .iter()
        .map(|t| match t.reward {
            Some(_) => Ok(*t),
            None => Ok(t.with_reward(pessimistic_ensemble_reward(model, t.state, t.action, k)?)),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        OfflineDataset {
            transitions,
            labeled: true,
            ..dataset.clone()
        },
        k,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelabelSummary {
    /// Rewards written.
    pub count: usize,
    /// Lines that already carried a reward and were copied unchanged.
    pub passthrough: usize,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub k: f64,
}

/// Streams `input` to `output`, filling null rewards with the pessimistic
/// ensemble estimate.
pub fn relabel_file(
    input: &Path,
    output: &Path,
    model: &EnsembleRewardModel,
    k_mode: Option<PenaltyK>,
) -> Result<RelabelSummary> {
    model.validate()?;
    let reader = BufReader::new(File::open(input)?);
    let mut lines: Vec<(usize, Transition)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t = parse_line(input, i + 1, &line)?;
        if model.features.check_pair(t.state, t.action).is_err() {
            return Err(Error::Malformed {
                path: input.to_path_buf(),
                line: i + 1,
                message: format!("no features for state {} action {}", t.state, t.action),
            });
        }
        lines.push((i + 1, t));
    }
    let k = resolve_k(model, k_mode, lines.iter().map(|(_, t)| t).filter(|t| t.reward.is_none()))?;
    let mut out = BufWriter::new(File::create(output)?);
    let mut written: Vec<f64> = Vec::new();
    let mut passthrough = 0;
    for (_, t) in &lines {
        let t = match t.reward {
            Some(_) => {
                passthrough += 1;
                *t
            }
            None => {
                let r = pessimistic_ensemble_reward(model, t.state, t.action, k)?;
                written.push(r);
                t.with_reward(r)
            }
        };
        write_line(&mut out, &t)?;
    }
    out.flush()?;
    let count = written.len();
    let nonempty = count > 0;
    Ok(RelabelSummary {
        count,
        passthrough,
        mean: nonempty.then(|| written.iter().sum::<f64>() / count as f64),
        min: nonempty.then(|| written.iter().copied().fold(f64::INFINITY, f64::min)),
        max: nonempty.then(|| written.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        k,
    })
}
