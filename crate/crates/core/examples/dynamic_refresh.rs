//! Queue 2 is replaced by a fresh copy at every epoch start. Exploration
//! restarts with every newcomer and starves queue 1; optimism does not.

use qsim::catalog;
use qsim::policy::{PolicyKind, PolicySpec};
use qsim::sim::{run, SimulationSpec};

fn main() -> qsim::Result<()> {
    let e = catalog::f6();
    let horizon = 100_000;
    for kind in [PolicyKind::DynDamFe, PolicyKind::DynDamUcb] {
        let spec = SimulationSpec::new(e.config.clone(), PolicySpec::new(kind), horizon, 1).with_refresh(1.0);
        let m = run(&spec)?;
        println!("{kind}");
        for (slot, q) in m.trajectory().step_by(10_000) {
            let q: Vec<String> = q.iter().map(|x| x.map_or("-".into(), |v| v.to_string())).collect();
            println!("  t = {slot:>6}  Q = [{}]", q.join(", "));
        }
        println!("  Q₁(T)/T = {:.3}", m.final_queues[0].unwrap_or(0) as f64 / horizon as f64);
    }
    Ok(())
}
