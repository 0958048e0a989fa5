//! One converge phase where every selected request succeeds. The agents
//! only ever see their own outcomes, yet settle on a near-optimal matching.

use rand::Rng;

use qsim::matching::{check_complementary_slackness, max_weight_matching, WeightMatrix, DEFAULT_TOL};
use qsim::params::compute_theoretical_params;
use qsim::rng::{stream, StreamKey};
use qsim::sim::run_converge_phase;

fn main() -> qsim::Result<()> {
    let (n, k, eps, delta) = (5, 4, 0.5, 0.3);
    let mut rng = stream(42, StreamKey::Controller);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let q = rng.gen_range(1..=100) as f64;
            (0..k).map(|_| q * rng.gen_range(delta..=1.0)).collect()
        })
        .collect();
    let w = WeightMatrix::from_rows(&rows)?;
    let p = compute_theoretical_params(eps, delta, n, k)?;
    let etas: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 1e-9).collect();

    let out = run_converge_phase(&w, p.price_step(), p.check_period, p.converge_len, &etas);
    let (_, opt) = max_weight_matching(&w);
    println!("T_c = {}, bound = {} slots", p.check_period, p.converge_len);
    println!("converged after {:?} slots, stable = {}", out.converge_offset, out.stable);
    println!("assignment {:?}", out.matching.assignment);
    println!("weight {:.2} of optimum {opt:.2}", out.matching.value(&w));
    println!("prices {:.2?}", out.certificate.prices);
    let v = check_complementary_slackness(&out.matching, &out.certificate, &w, p.price_step(), DEFAULT_TOL);
    println!("slackness violations: {v:?}");
    Ok(())
}
