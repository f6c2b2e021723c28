//! Ridge reward estimates, their confidence ellipsoid and the pessimistic
//! reward built from it.

use pdslab::data::{sample_dataset, SampleSpec};
use pdslab::mdp::{make_lowrank_mdp, Policy};
use pdslab::reward::{confidence_coverage_trial, fit_reward, pessimistic_reward, AlphaPreset, RewardConfig};

fn main() -> pdslab::Result<()> {
    let mdp = make_lowrank_mdp(10, 3, 4, 0.9, 1.0, 11)?;
    let behavior = Policy::uniform(10, 3);
    let cfg = RewardConfig::default();

    for n0 in [10, 100, 1000, 10_000] {
        let data = sample_dataset(&mdp, &behavior, &SampleSpec::new(n0, true, 5).with_noise(0.2), "uniform")?;
        let model = fit_reward(&data, mdp.features(), mdp.r_max(), &cfg)?;
        let (s, a) = (0, 1);
        println!(
            "n0={n0:<6} alpha={:.3}  |theta_hat - theta|={:.4}  inside={}  r(0,1)={:.3} pred={:.3} pess={:.3}",
            model.alpha,
            (&model.theta_hat - mdp.theta()).norm(),
            model.contains(mdp.theta()),
            mdp.reward(s, a),
            model.predicted_reward(mdp.features(), s, a),
            pessimistic_reward(&model, mdp.features(), s, a),
        );
    }

    for alpha in [AlphaPreset::Lemma, AlphaPreset::Theorem, AlphaPreset::Fixed(0.5)] {
        let cfg = RewardConfig { alpha, ..cfg };
        let rate = confidence_coverage_trial(&mdp, 200, 0.3, &cfg, 200, 9)?;
        println!("{alpha:?}: ellipsoid contains theta in {:.1}% of 200 trials", 100.0 * rate);
    }
    Ok(())
}
