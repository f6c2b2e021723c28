//! Pessimistic value iteration against the exact optimum.

use pdslab::data::{sample_dataset, Quality, SampleSpec};
use pdslab::mdp::{evaluate_policy, exact_optimal, make_lowrank_mdp};
use pdslab::pevi::{pevi_solve, theorem_beta, PeviConfig};

fn main() -> pdslab::Result<()> {
    let mdp = make_lowrank_mdp(15, 4, 5, 0.9, 1.0, 21)?;
    let opt = exact_optimal(&mdp)?;
    let init = mdp.init_dist();
    let behavior = Quality::Medium.behavior(&opt.actions, mdp.num_actions())?;
    let data = sample_dataset(&mdp, &behavior, &SampleSpec::new(2000, true, 4).with_noise(0.1), "medium")?;

    println!("V*(s0) = {:.4}", opt.values.expected(init));
    let theory = theorem_beta(mdp.dim(), data.len(), mdp.gamma(), mdp.r_max(), 0.1, 1.0)?;
    for beta in [0.0, 0.1, 0.5, 2.0, theory] {
        let cfg = PeviConfig::new(1.0, beta, mdp.gamma(), mdp.r_max())?;
        let sol = pevi_solve(&data, mdp.features(), &cfg)?;
        let achieved = evaluate_policy(&mdp, &sol.policy)?.expected(init);
        println!(
            "beta={beta:<8.3} V_hat(s0)={:.4}  V_pi(s0)={achieved:.4}  sweeps={} converged={}",
            init.dot(&sol.v_hat),
            sol.sweeps_used,
            sol.converged,
        );
    }
    Ok(())
}
