//! Fit a bootstrap reward ensemble and relabel a reward-free JSON-lines file.

use pdslab::data::{read_jsonl, sample_dataset, write_jsonl, Quality, SampleSpec};
use pdslab::ensemble::{ensemble_stats, fit_ensemble, gaussian_min_coefficient, relabel_file, PenaltyK};
use pdslab::mdp::{exact_optimal, make_lowrank_mdp};

fn main() -> pdslab::Result<()> {
    let dir = std::env::temp_dir().join("pdslab-ensemble-example");
    std::fs::create_dir_all(&dir)?;
    let mdp = make_lowrank_mdp(10, 4, 4, 0.9, 1.0, 2)?;
    let opt = exact_optimal(&mdp)?;
    let labeled = sample_dataset(
        &mdp,
        &Quality::Random.behavior(&opt.actions, 4)?,
        &SampleSpec::new(300, true, 1).with_noise(0.2),
        "random",
    )?;
    let unlabeled = sample_dataset(&mdp, &Quality::Expert.behavior(&opt.actions, 4)?, &SampleSpec::new(1000, false, 2), "expert")?;
    let input = dir.join("unlabeled.jsonl");
    write_jsonl(&input, &unlabeled, None)?;

    let model = fit_ensemble(&labeled, mdp.features(), 10, 1.0, 3)?;
    let st = ensemble_stats(&model, 0, 0)?;
    println!("(0,0): mean {:.4} std {:.4} min {:.4}, true {:.4}", st.mu, st.sigma, st.min_member, mdp.reward(0, 0));
    println!("min-of-10 coefficient {:.6}", gaussian_min_coefficient(10)?);

    for k in [PenaltyK::Auto, PenaltyK::Fixed(0.0), PenaltyK::Fixed(5.0)] {
        let out = dir.join(format!("relabeled-{k}.jsonl"));
        let summary = relabel_file(&input, &out, &model, Some(k))?;
        let (data, _) = read_jsonl(&out)?;
        let err: f64 = data.iter().map(|t| (t.reward.unwrap_or(0.0) - mdp.reward(t.state, t.action)).abs()).sum::<f64>()
            / data.len() as f64;
        println!(
            "k={k:<5} resolved {:.3}: mean {:.4} min {:.4} max {:.4}, mean |error| {err:.4}",
            summary.k,
            summary.mean.unwrap_or(0.0),
            summary.min.unwrap_or(0.0),
            summary.max.unwrap_or(0.0),
        );
    }
    Ok(())
}
