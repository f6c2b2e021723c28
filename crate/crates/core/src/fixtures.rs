//! Deterministic instances with exactly known empirical statistics.

use nalgebra::DMatrix;

use crate::data::{OfflineDataset, Transition};
use crate::error::{Error, Result};
use crate::mdp::{make_tabular_mdp, FeatureMap, LinearMdp};

/// Largest-remainder rounding of `probs * total` to integers summing to `total`.
fn apportion(probs: &[f64], total: usize) -> Vec<usize> {
    let scaled: Vec<f64> = probs.iter().map(|p| p * total as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Random tabular MDP whose transition probabilities are multiples of
/// `1 / resolution`, so that [`exhaustive_dataset`] with `visits` a multiple
/// of `resolution` reproduces the kernel exactly.
pub fn quantized_tabular_mdp(
    num_states: usize,
    num_actions: usize,
    gamma: f64,
    r_max: f64,
    resolution: usize,
    seed: u64,
) -> Result<LinearMdp> {
    if resolution == 0 {
        return Err(Error::param("resolution must be positive"));
    }
    let base = make_tabular_mdp(num_states, num_actions, gamma, r_max, seed)?;
    let d = num_states * num_actions;
    let mut mu = DMatrix::zeros(d, num_states);
    for i in 0..d {
        let row: Vec<f64> = base.mu().row(i).iter().copied().collect();
        for (s, c) in apportion(&row, resolution).into_iter().enumerate() {
            mu[(i, s)] = c as f64 / resolution as f64;
        }
    }
    LinearMdp::new(
        FeatureMap::one_hot(num_states, num_actions)?,
        mu,
        base.theta().clone(),
        gamma,
        r_max,
        base.init_dist().clone(),
        Some(seed),
    )
}

/// `visits` transitions per state-action pair with next states apportioned
/// by the exact kernel and noiseless rewards, in `(s, a, s')` order.
pub fn exhaustive_dataset(mdp: &LinearMdp, visits: usize) -> OfflineDataset {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut transitions = Vec::with_capacity(ns * na * visits);
    for s in 0..ns {
        for a in 0..na {
            let row: Vec<f64> = mdp.transitions().row(s * na + a).iter().copied().collect();
            for (sp, c) in apportion(&row, visits).into_iter().enumerate() {
                let t = Transition {
                    state: s,
                    action: a,
                    reward: Some(mdp.reward(s, a)),
                    next_state: sp,
                };
                transitions.extend(std::iter::repeat_n(t, c));
            }
        }
    }
    OfflineDataset {
        transitions,
        labeled: true,
        source_tag: "exhaustive".into(),
        num_states: ns,
        num_actions: na,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apportion_preserves_total() {
        let c = apportion(&[0.335, 0.333, 0.332], 10);
        assert_eq!(c.iter().sum::<usize>(), 10);
        assert_eq!(apportion(&[0.25, 0.75], 200), vec![50, 150]);
    }

    #[test]
    fn exhaustive_counts_reproduce_quantized_kernel() {
        let mdp = quantized_tabular_mdp(4, 2, 0.9, 1.0, 200, 3).unwrap();
        let ds = exhaustive_dataset(&mdp, 200);
        assert_eq!(ds.len(), 8 * 200);
        let mut counts = DMatrix::<f64>::zeros(8, 4);
        for t in ds.iter() {
            counts[(t.state * 2 + t.action, t.next_state)] += 1.0;
        }
        assert_eq!(counts / 200.0, mdp.transitions().clone());
    }
}
