//! Offline datasets: sampling, mixing, JSON-lines persistence and the
//! coverage coefficient.

mod coverage;
pub(crate) mod io;
mod sample;

pub use coverage::{
    coverage_coefficient, dominance_ratio, occupancy_second_moment, occupancy_second_moments,
    empirical_gram, state_occupancy, CoverageReport,
};
pub use io::{read_jsonl, write_jsonl, DatasetHeader};
pub use sample::{sample_dataset, Quality, SampleSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    #[serde(rename = "s")]
    pub state: usize,
    #[serde(rename = "a")]
    pub action: usize,
    #[serde(rename = "r")]
    pub reward: Option<f64>,
    #[serde(rename = "sp")]
    pub next_state: usize,
}

impl Transition {
    pub fn unlabeled(&self) -> Self {
        Self {
            reward: None,
            ..*self
        }
    }

    pub fn with_reward(&self, reward: f64) -> Self {
        Self {
            reward: Some(reward),
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfflineDataset {
    pub transitions: Vec<Transition>,
    pub labeled: bool,
    pub source_tag: String,
    pub num_states: usize,
    pub num_actions: usize,
}

impl OfflineDataset {
    /// Checks ids against the shape and that `labeled` implies every reward
    /// is present.
    pub fn new(
        transitions: Vec<Transition>,
        labeled: bool,
        source_tag: impl Into<String>,
        num_states: usize,
        num_actions: usize,
    ) -> Result<Self> {
        for (i, t) in transitions.iter().enumerate() {
            if t.state >= num_states || t.next_state >= num_states || t.action >= num_actions {
                return Err(Error::param(format!("transition {i} has out-of-range ids")));
            }
            if labeled && t.reward.is_none() {
                return Err(Error::contract(format!(
                    "transition {i} has no reward in a labeled dataset"
                )));
            }
        }
        Ok(Self {
            transitions,
            labeled,
            source_tag: source_tag.into(),
            num_states,
            num_actions,
        })
    }

    pub fn empty(labeled: bool, num_states: usize, num_actions: usize) -> Self {
        Self {
            transitions: Vec::new(),
            labeled,
            source_tag: String::new(),
            num_states,
            num_actions,
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Transition> {
        self.transitions.iter()
    }

    pub fn require_labeled(&self, what: &str) -> Result<()> {
        if let Some(i) = self.transitions.iter().position(|t| t.reward.is_none()) {
            return Err(Error::contract(format!(
                "{what} needs labeled data, transition {i} has no reward"
            )));
        }
        Ok(())
    }

    pub fn strip_rewards(&self) -> Self {
        Self {
            transitions: self.transitions.iter().map(Transition::unlabeled).collect(),
            labeled: false,
            ..self.clone()
        }
    }
}

/// `a` followed by `b`; labeled only if both are.
pub fn mix_datasets(a: &OfflineDataset, b: &OfflineDataset) -> Result<OfflineDataset> {
    if (a.num_states, a.num_actions) != (b.num_states, b.num_actions) {
        return Err(Error::param(format!(
            "cannot mix {}x{} with {}x{} datasets",
            a.num_states, a.num_actions, b.num_states, b.num_actions
        )));
    }
    let mut transitions = Vec::with_capacity(a.len() + b.len());
    transitions.extend_from_slice(&a.transitions);
    transitions.extend_from_slice(&b.transitions);
    let source_tag = match (a.source_tag.is_empty(), b.source_tag.is_empty()) {
        (true, _) => b.source_tag.clone(),
        (_, true) => a.source_tag.clone(),
        _ => format!("{}+{}", a.source_tag, b.source_tag),
    };
    Ok(OfflineDataset {
        transitions,
        labeled: a.labeled && b.labeled,
        source_tag,
        num_states: a.num_states,
        num_actions: a.num_actions,
    })
}
