//! How well datasets of different quality cover the optimal policy.

use pdslab::data::{coverage_coefficient, occupancy_second_moment, sample_dataset, Quality, SampleSpec};
use pdslab::mdp::{exact_optimal, make_adversarial_mdp, make_lowrank_mdp};

fn main() -> pdslab::Result<()> {
    let mdp = make_lowrank_mdp(12, 4, 5, 0.9, 1.0, 3)?;
    let opt = exact_optimal(&mdp)?;
    println!("coverage of the optimal policy, lowrank |S|=12 |A|=4 d=5");
    for quality in [Quality::Expert, Quality::Medium, Quality::Random] {
        let behavior = quality.behavior(&opt.actions, mdp.num_actions())?;
        for n in [100, 1000, 10_000] {
            let data = sample_dataset(&mdp, &behavior, &SampleSpec::new(n, false, 1), quality.name())?;
            let report = coverage_coefficient(&data, &mdp, &opt.policy)?;
            println!("  {:7} n={n:<6} C = {:.4}", quality.name(), report.c_dagger);
        }
    }

    let adv = make_adversarial_mdp(8, 3, 0.9, 1.0)?;
    let sigma = occupancy_second_moment(&adv.mdp, &adv.optimal_policy(), 0)?;
    println!("adversarial instance, rescaled optimal block:\n{}", adv.unscaled_block(&sigma));
    Ok(())
}
