//! Epoch lengths for a few settings, theoretical next to tuned.

use qsim::harness::cmd_params;
use qsim::params::LogBase;

fn main() -> qsim::Result<()> {
    for (eps, delta, n, k) in [(1.0, 0.5, 1, 1), (0.25, 0.1875, 4, 4), (0.3125, 0.4, 8, 8)] {
        println!("{}", cmd_params(eps, delta, n, k, LogBase::Natural)?);
    }
    // Base-2 logs stretch T_c and T_s when N > 2.
    println!("base-2 logs:");
    print!("{}", cmd_params(0.3125, 0.4, 8, 8, LogBase::Two)?);
    Ok(())
}
