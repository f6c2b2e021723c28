//! Build a few linear MDPs and solve them exactly.

use pdslab::mdp::{evaluate_policy, exact_optimal, make_lowrank_mdp, make_tabular_mdp, Policy};

fn main() -> pdslab::Result<()> {
    let tabular = make_tabular_mdp(5, 3, 0.9, 1.0, 7)?;
    let lowrank = make_lowrank_mdp(20, 4, 6, 0.95, 1.0, 7)?;

    for (name, mdp) in [("tabular", &tabular), ("lowrank", &lowrank)] {
        let opt = exact_optimal(mdp)?;
        let uniform = evaluate_policy(mdp, &Policy::uniform(mdp.num_states(), mdp.num_actions()))?;
        let init = mdp.init_dist();
        println!(
            "{name:8} |S|={:<3} |A|={} d={:<3} gamma={}  V*(s0)={:.4}  V_unif(s0)={:.4}  sweeps={}",
            mdp.num_states(),
            mdp.num_actions(),
            mdp.dim(),
            mdp.gamma(),
            opt.values.expected(init),
            uniform.expected(init),
            opt.sweeps,
        );
        println!("         greedy actions {:?}", &opt.actions[..opt.actions.len().min(10)]);
    }

    let json = tabular.to_json()?;
    let back = pdslab::mdp::LinearMdp::from_json(&json)?;
    assert_eq!(back.content_hash(), tabular.content_hash());
    println!("tabular hash {}", tabular.content_hash());
    Ok(())
}
