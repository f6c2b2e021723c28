use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{OfflineDataset, Transition};
use crate::error::{Error, Result};
use crate::mdp::{LinearMdp, Policy};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub n: usize,
    /// Trajectories restart from the initial distribution every this many steps.
    pub horizon_reset: usize,
    pub labeled: bool,
    /// Half-width of additive uniform reward noise; observed rewards are
    /// clipped back into `[0, r_max]`. Zero gives exact rewards.
    pub noise: f64,
    pub seed: u64,
}

impl SampleSpec {
    pub fn new(n: usize, labeled: bool, seed: u64) -> Self {
        Self {
            n,
            horizon_reset: 100,
            labeled,
            noise: 0.0,
            seed,
        }
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_horizon(mut self, horizon_reset: usize) -> Self {
        self.horizon_reset = horizon_reset;
        self
    }
}

/// Behavior-policy presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quality {
    /// epsilon-greedy around the optimal policy with epsilon = 0.05
    Expert,
    /// epsilon = 0.3
    Medium,
    /// uniform
    Random,
}

impl Quality {
    pub fn epsilon(self) -> f64 {
        match self {
            Quality::Expert => 0.05,
            Quality::Medium => 0.3,
            Quality::Random => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Quality::Expert => "expert",
            Quality::Medium => "medium",
            Quality::Random => "random",
        }
    }

    pub fn behavior(self, optimal_actions: &[usize], num_actions: usize) -> Result<Policy> {
        Policy::epsilon_greedy(optimal_actions, self.epsilon(), num_actions)
    }
}

impl std::str::FromStr for Quality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expert" => Ok(Quality::Expert),
            "medium" => Ok(Quality::Medium),
            "random" => Ok(Quality::Random),
            other => Err(Error::param(format!("unknown quality preset `{other}`"))),
        }
    }
}

fn draw<R: Rng>(rng: &mut R, weights: impl Iterator<Item = f64>) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

pub fn sample_dataset(
    mdp: &LinearMdp,
    behavior: &Policy,
    spec: &SampleSpec,
    source_tag: impl Into<String>,
) -> Result<OfflineDataset> {
    if spec.n == 0 || spec.horizon_reset == 0 {
        return Err(Error::param("n and horizon_reset must be at least 1"));
    }
    if !(spec.noise >= 0.0 && spec.noise.is_finite()) {
        return Err(Error::param(format!("noise = {} must be nonnegative", spec.noise)));
    }
    if behavior.num_states() != mdp.num_states() || behavior.num_actions() != mdp.num_actions() {
        return Err(Error::param("behavior policy shape differs from the mdp"));
    }
    let mut rng = seed::rng(seed::derive_str(spec.seed, "sample"));
    let na = mdp.num_actions();
    let p = mdp.transitions();
    let init = mdp.init_dist();
    let mut transitions = Vec::with_capacity(spec.n);
    let mut state = draw(&mut rng, init.iter().copied());
    let mut step = 0;
    while transitions.len() < spec.n {
        if step == spec.horizon_reset {
            state = draw(&mut rng, init.iter().copied());
            step = 0;
        }
        let action = draw(&mut rng, (0..na).map(|a| behavior.prob(state, a)));
        let idx = state * na + action;
        let next_state = draw(&mut rng, p.row(idx).iter().copied());
        let reward = if spec.labeled {
            let mean = mdp.rewards()[idx];
            let r = if spec.noise > 0.0 {
                (mean + rng.random_range(-spec.noise..=spec.noise)).clamp(0.0, mdp.r_max())
            } else {
                mean
            };
            Some(r)
        } else {
            None
        };
        transitions.push(Transition {
            state,
            action,
            reward,
            next_state,
        });
        state = next_state;
        step += 1;
    }
    Ok(OfflineDataset {
        transitions,
        labeled: spec.labeled,
        source_tag: source_tag.into(),
        num_states: mdp.num_states(),
        num_actions: na,
    })
}
