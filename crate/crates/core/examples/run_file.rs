//! Drive a run from a TOML file, e.g.
//! `cargo run --example run_file -- crates/core/configs/two_by_two.toml`.

use std::path::Path;

use qsim::harness::{cmd_run, Experiment};

fn main() -> qsim::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/two_by_two.toml").into());
    let exp = Experiment::load(Path::new(&path))?;
    println!("{} with {} over {} slots, {} seeds", exp.name, exp.spec.policy.kind, exp.spec.horizon, exp.seeds);
    let report = cmd_run(&exp, Path::new("out"))?;
    print!("{}", report.summary);
    Ok(())
}
