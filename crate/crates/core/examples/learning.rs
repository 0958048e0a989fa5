//! Learning unknown service rates: forced exploration against optimism.

use qsim::catalog;
use qsim::policy::{PolicyKind, PolicySpec};
use qsim::sim::{Simulation, SimulationSpec};

fn main() -> qsim::Result<()> {
    let e = catalog::f6();
    let cfg = e.config.clone();
    for kind in [PolicyKind::DamFe, PolicyKind::DamUcb] {
        let mut sim = Simulation::new(SimulationSpec::new(cfg.clone(), PolicySpec::new(kind), 300_000, 3))?;
        while !sim.is_finished() {
            sim.step();
        }
        println!("{kind}: final queues {:?}", sim.queues());
        for i in 0..cfg.n_queues {
            let est = sim.agent_estimates(i).expect("learning agent");
            println!("  queue {i}: true {:?}  μ̂ {:.3?}  n {:?}", cfg.service_rates[i], est.mean, est.count);
        }
        println!("  avg Σλ·Q = {:.1}", sim.finish().objective());
    }
    Ok(())
}
