//! Suboptimality bound terms and how much sharing tightens them.

use pdslab::bench::{bounds_table, Format};
use pdslab::theory::{sbr, BoundInputs};

fn main() -> pdslab::Result<()> {
    let base = BoundInputs {
        d: 8,
        n0: 1000,
        n1: 0,
        c0: 0.5,
        c1: 0.5,
        gamma: 0.9,
        r_max: 1.0,
        delta: 0.1,
        c: 1.0,
    };
    let rows: Vec<BoundInputs> = [0, 1_000, 10_000, 100_000, 1_000_000]
        .into_iter()
        .map(|n1| BoundInputs { n1, ..base })
        .collect();
    print!("{}", bounds_table(&rows, Format::Md)?);

    println!();
    for c in [0.5, 1.0, 4.0] {
        let s = sbr(&BoundInputs { n1: 1_000_000, c, ..base })?;
        println!("c={c}: ratio floor {:.4}, approx {:.4}, exact {:.4}", s.asymptotic_term, s.approx, s.exact);
    }
    Ok(())
}
