//! Labeled random-policy data plus reward-free expert data, scored for every
//! sharing method.

use pdslab::data::{sample_dataset, Quality, SampleSpec};
use pdslab::mdp::make_lowrank_mdp;
use pdslab::pevi::{BetaPreset, PeviSettings};
use pdslab::pipeline::{MethodId, RunContext};
use pdslab::reward::{AlphaPreset, RewardConfig};

fn main() -> pdslab::Result<()> {
    let reward = RewardConfig {
        alpha: AlphaPreset::Fixed(0.1),
        ..RewardConfig::default()
    };
    let pevi = PeviSettings {
        beta: BetaPreset::Raw(0.1),
        ..PeviSettings::default()
    };
    let mut totals = [0.0; 5];
    let seeds = 10;
    for seed in 0..seeds {
        let ctx = RunContext::new(make_lowrank_mdp(10, 4, 4, 0.9, 1.0, seed)?)?;
        let mdp = ctx.mdp();
        let actions = &ctx.optimal().actions;
        let d0 = sample_dataset(
            mdp,
            &Quality::Random.behavior(actions, 4)?,
            &SampleSpec::new(200, true, seed).with_noise(0.1),
            "random",
        )?;
        let d1 = sample_dataset(mdp, &Quality::Expert.behavior(actions, 4)?, &SampleSpec::new(10_000, false, seed), "expert")?;
        for (i, m) in MethodId::ALL.into_iter().enumerate() {
            totals[i] += ctx.run(&d0, &d1, m, &reward, &pevi, seed)?.subopt_mean;
        }
    }
    println!("mean suboptimality over {seeds} seeds (random labeled 200, expert unlabeled 10k)");
    for (m, t) in MethodId::ALL.iter().zip(totals) {
        println!("  {:15} {:.4}", m.name(), t / seeds as f64);
    }
    Ok(())
}
