//! Parallel seeds with plot-ready CSV output.

use std::path::PathBuf;

use qsim::catalog;
use qsim::harness::{cmd_run, Experiment};
use qsim::policy::PolicyKind;

fn main() -> qsim::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out".into()));
    let mut exp = Experiment::from_catalog(&catalog::f4());
    exp.seeds = 15;
    for kind in [PolicyKind::DamUcb, PolicyKind::MaxWeight] {
        exp.spec.policy.kind = kind;
        let report = cmd_run(&exp, &out)?;
        print!("{}", report.summary);
        println!("→ {}\n", report.slot_csv.display());
    }
    Ok(())
}
