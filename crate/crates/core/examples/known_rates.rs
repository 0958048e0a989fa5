//! Decentralized auctions with known rates against centralized MaxWeight.

use qsim::catalog;
use qsim::policy::{PolicyKind, PolicySpec};
use qsim::sim::{run, SimulationSpec};

fn main() -> qsim::Result<()> {
    let e = catalog::f2();
    for kind in [PolicyKind::DamK, PolicyKind::MaxWeight, PolicyKind::Random] {
        let m = run(&SimulationSpec::new(e.config.clone(), PolicySpec::new(kind), 200_000, 1))?;
        println!(
            "{:<10} avg Σλ·Q = {:>10.1}  quarters {:>9.0} {:>9.0} {:>9.0} {:>9.0}",
            kind.to_string(),
            m.objective(),
            m.quarter_weighted(0),
            m.quarter_weighted(1),
            m.quarter_weighted(2),
            m.quarter_weighted(3)
        );
    }

    let m = run(&SimulationSpec::new(e.config, PolicySpec::new(PolicyKind::DamK), 200_000, 1))?;
    println!("\nepoch  converged  weight/OPT  certified");
    for r in &m.epochs {
        let conv = r.converge_slot.map_or("-".to_string(), |s| (s - r.start).to_string());
        println!("{:>5}  {conv:>9}  {:>10.4}  {}", r.epoch, r.weight_ratio, r.slackness_ok);
    }
    Ok(())
}
