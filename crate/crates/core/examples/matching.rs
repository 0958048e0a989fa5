//! Optimal matchings and auction certificates on a small weight matrix.

use qsim::harness::cmd_solve;
use qsim::matching::{brute_force_matching, max_weight_matching, WeightMatrix};

fn main() -> qsim::Result<()> {
    let w = WeightMatrix::from_rows(&[
        vec![9.0, 3.6, 3.6],
        vec![4.5, 2.0, 1.8],
        vec![0.0, 0.0, 0.0],
        vec![7.2, 7.2, 2.8],
    ])?;
    let (m, v) = max_weight_matching(&w);
    let (_, brute) = brute_force_matching(&w)?;
    println!("hungarian {:?} = {v}, brute force = {brute}\n", m.assignment);

    for step in [0.5, 1.0 / 16.0] {
        println!("price step {step}:");
        println!("{}", cmd_solve(&w, step)?);
    }
    Ok(())
}
