//! Two queues pinned to the same server: no fixed assignment keeps up.

use qsim::catalog;
use qsim::policy::{PolicyKind, PolicySpec};
use qsim::sim::{run_replications, SimulationSpec};

fn main() -> qsim::Result<()> {
    let e = catalog::ex_failure();
    let horizon = e.horizon;
    let policies = [
        ("both on server 1", e.policy.clone()),
        ("one per server", PolicySpec::new(PolicyKind::Fixed).with_fixed_targets(vec![0, 1])),
        ("auction, learned", PolicySpec::new(PolicyKind::DamUcb)),
    ];
    for (label, policy) in policies {
        let reps = run_replications(&SimulationSpec::new(e.config.clone(), policy, horizon, 1), 10)?;
        let total: f64 = reps.runs.iter().map(|r| r.final_queues.iter().flatten().sum::<u64>() as f64).sum::<f64>() / 10.0;
        println!("{label:<17} mean ΣQ(T)/T = {:.3}", total / horizon as f64);
    }
    Ok(())
}
