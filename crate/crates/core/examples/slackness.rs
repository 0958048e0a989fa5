//! How much headroom does each reference instance have?

use qsim::catalog;
use qsim::model::{check_slackness, max_slackness, symmetric_gap, symmetric_slack_from_gap};

fn main() -> qsim::Result<()> {
    for e in catalog::catalog() {
        let c = &e.config;
        let max = max_slackness(c)?;
        println!(
            "{:<11} declared ε = {:.4}  largest ε = {:.4}  ok = {}",
            e.name,
            c.slackness,
            max,
            check_slackness(c, c.slackness)?
        );
    }

    // With identical rows the LP has a closed form through the sorted gap.
    let lambda = [0.4; 8];
    let servers = [0.9, 0.9, 0.4, 0.4, 0.4, 0.4, 0.4, 0.4];
    let gap = symmetric_gap(&lambda, &servers);
    println!("\nsymmetric gap {gap:.4} → slackness at least {:.4}", symmetric_slack_from_gap(gap, servers.len()));
    Ok(())
}
