//! The converge phase in isolation: agents bid on a fixed weight matrix and
//! every selected request succeeds.

use crate::matching::{DualCertificate, Matching, WeightMatrix};
use crate::model::{resolve_all, Request};
use crate::policy::ConvergeState;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeOutcome {
    /// Slots from the phase start until every server first had at most one
    /// request, or `None` if that never happened within the budget.
    pub converge_offset: Option<u64>,
    /// The request profile stayed unchanged for the observation window after convergence.
    pub stable: bool,
    pub matching: Matching,
    /// Prices are the highest bid at each server, payoffs the best surplus.
    pub certificate: DualCertificate,
    pub slots_run: u64,
}

/// Runs the auction from slot 1 for at most `max_slots` slots. After
/// convergence it keeps going for `2·(T_c + 1)` slots to confirm the profile
/// no longer moves.
pub fn run_converge_phase(
    w: &WeightMatrix,
    step_fraction: f64,
    check_period: u64,
    max_slots: u64,
    etas: &[f64],
) -> ConvergeOutcome {
    let (n, k) = (w.rows(), w.cols());
    assert_eq!(etas.len(), n, "one perturbation per agent");
    let mut agents: Vec<ConvergeState> = (0..n)
        .map(|i| ConvergeState::new(w.row(i).to_vec(), 1, check_period, step_fraction, etas[i]))
        .collect();
    let mut requests = Vec::with_capacity(n);
    let mut converged_at: Option<(u64, Vec<Request>)> = None;
    let mut stable = true;
    let mut t = 1;
    while t <= max_slots {
        requests.clear();
        for (i, a) in agents.iter_mut().enumerate() {
            let (target, bid) = a.converge_step(t);
            requests.push(Request { agent: i, target, bid });
        }
        let selected = resolve_all(&requests, k);
        let mut served = vec![false; n];
        for (j, s) in selected.iter().enumerate() {
            if let Some(i) = *s {
                served[i] = w.get(i, j) > 0.0;
            }
        }
        for (i, a) in agents.iter_mut().enumerate() {
            a.converge_observe(t, served[i]);
        }

        match &converged_at {
            None => {
                let mut load = vec![0usize; k];
                requests.iter().filter_map(|r| r.target).for_each(|j| load[j] += 1);
                if load.iter().all(|&c| c <= 1) {
                    converged_at = Some((t, requests.clone()));
                }
            }
            Some((t_c, profile)) => {
                if *profile != requests {
                    stable = false;
                }
                if t >= t_c + 2 * (check_period + 1) {
                    break;
                }
            }
        }
        t += 1;
    }
    let slots_run = t.min(max_slots);

    let Some((t_conv, profile)) = converged_at else {
        return ConvergeOutcome {
            converge_offset: None,
            stable: false,
            matching: Matching::empty(n),
            certificate: DualCertificate::from_prices(w, vec![0.0; k]),
            slots_run,
        };
    };
    let mut assignment = vec![None; n];
    let mut prices = vec![0.0; k];
    for r in &profile {
        if let Some(j) = r.target {
            assignment[r.agent] = Some(j);
            prices[j] = f64::max(prices[j], r.bid);
        }
    }
    ConvergeOutcome {
        converge_offset: Some(t_conv - 1),
        stable,
        matching: Matching { assignment },
        certificate: DualCertificate::from_prices(w, prices),
        slots_run,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::{check_complementary_slackness, DEFAULT_TOL};

    #[test]
    fn two_by_two_converges_to_diagonal() {
        let w = WeightMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let out = run_converge_phase(&w, 1.0 / 16.0, 3, 10_000, &[1e-10, 2e-10]);
        assert_eq!(out.converge_offset, Some(0));
        assert!(out.stable);
        assert_eq!(out.matching.assignment, vec![Some(0), Some(1)]);
        assert!(check_complementary_slackness(&out.matching, &out.certificate, &w, 1.0 / 16.0, DEFAULT_TOL)
            .is_empty());
    }

    #[test]
    fn contention_resolves() {
        let w = WeightMatrix::from_rows(&[vec![5.0, 4.0], vec![5.0, 1.0], vec![5.0, 4.5]]).unwrap();
        let out = run_converge_phase(&w, 0.25, 3, 100_000, &[1e-10, 3e-10, 2e-10]);
        assert!(out.converge_offset.is_some());
        assert!(out.stable);
        assert!(out.matching.is_matching());
        assert!(check_complementary_slackness(&out.matching, &out.certificate, &w, 0.25, DEFAULT_TOL)
            .is_empty());
    }
}
