//! Per-agent auction state for the converge phase and the committed request
//! that follows it.

/// One agent's private auction memory within an epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeState {
    weights: Vec<f64>,
    prices: Vec<f64>,
    /// Last slot in which a price changed or the request was served.
    last_event: u64,
    eta: f64,
    step_fraction: f64,
    check_period: u64,
    phase_start: u64,
    target: Option<usize>,
    bid: f64,
    price_changed: bool,
}

impl ConvergeState {
    /// Fresh state at epoch start `t0`: prices zero, event log at `t0 − 1`.
    ///
    /// `step_fraction` is the multiplier `c·ε` of the increment `c·ε·(1−η)·w`.
    pub fn new(weights: Vec<f64>, t0: u64, check_period: u64, step_fraction: f64, eta: f64) -> Self {
        let k = weights.len();
        ConvergeState {
            weights,
            prices: vec![0.0; k],
            last_event: t0 - 1,
            eta,
            step_fraction,
            check_period,
            phase_start: t0,
            target: None,
            bid: 0.0,
            price_changed: false,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn last_event(&self) -> u64 {
        self.last_event
    }

    pub fn current(&self) -> (Option<usize>, f64) {
        (self.target, self.bid)
    }

    /// Decides the request for slot `t`.
    pub fn converge_step(&mut self, t: u64) -> (Option<usize>, f64) {
        self.price_changed = false;
        if t > self.phase_start && t - self.last_event <= self.check_period {
            return (self.target, self.bid);
        }
        let (j_star, payoff) = self
            .weights
            .iter()
            .zip(&self.prices)
            .map(|(w, p)| w - p)
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if payoff > 0.0 {
            self.prices[j_star] += self.step_fraction * (1.0 - self.eta) * self.weights[j_star];
            self.price_changed = true;
            self.target = Some(j_star);
            self.bid = self.prices[j_star];
        } else {
            self.target = None;
            self.bid = 0.0;
        }
        (self.target, self.bid)
    }

    /// Records the outcome of the slot-`t` request.
    pub fn converge_observe(&mut self, t: u64, served: bool) {
        if self.price_changed || served {
            self.last_event = t;
        }
    }

    /// The request carried into the commit phase.
    pub fn committed(&self) -> (Option<usize>, f64) {
        (self.target, self.bid)
    }
}

/// Commit-phase request: the same `(server, bid)` every slot.
#[inline]
pub fn commit_step(committed: (Option<usize>, f64)) -> (Option<usize>, f64) {
    committed
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_queue_idles() {
        let mut s = ConvergeState::new(vec![0.0, 0.0], 1, 3, 1.0 / 16.0, 0.0);
        assert_eq!(s.converge_step(1), (None, 0.0));
        s.converge_observe(1, false);
        assert_eq!(s.last_event(), 0);
    }

    #[test]
    fn first_bid_is_one_increment() {
        let eta = 5e-10;
        let mut s = ConvergeState::new(vec![10.0, 1.0], 1, 3, 1.0 / 16.0, eta);
        let (target, bid) = s.converge_step(1);
        assert_eq!(target, Some(0));
        assert_eq!(bid, (1.0 / 16.0) * (1.0 - eta) * 10.0);
    }

    #[test]
    fn repeats_within_check_period_after_service() {
        let mut s = ConvergeState::new(vec![10.0, 1.0], 1, 3, 0.5, 0.0);
        let first = s.converge_step(1);
        s.converge_observe(1, false);
        assert_eq!(s.last_event(), 1);
        for t in 2..=4 {
            assert_eq!(s.converge_step(t), first);
            s.converge_observe(t, t == 2);
        }
        // Served at 2, so slots 3..=5 repeat; slot 6 raises the price again.
        assert_eq!(s.last_event(), 2);
        assert_eq!(s.converge_step(5), first);
        s.converge_observe(5, false);
        let (_, bid) = s.converge_step(6);
        assert!(bid > first.1);
    }

    #[test]
    fn event_log_rules() {
        let mut s = ConvergeState::new(vec![4.0], 10, 2, 0.5, 0.0);
        s.converge_step(10);
        s.converge_observe(10, false);
        assert_eq!(s.last_event(), 10);
        s.converge_step(11);
        s.converge_observe(11, false);
        assert_eq!(s.last_event(), 10);
        s.converge_step(12);
        s.converge_observe(12, true);
        assert_eq!(s.last_event(), 12);
    }

    #[test]
    fn stops_when_no_positive_payoff() {
        let mut s = ConvergeState::new(vec![1.0], 1, 0, 0.5, 0.0);
        let mut bids = Vec::new();
        for t in 1..=4 {
            bids.push(s.converge_step(t));
            s.converge_observe(t, false);
        }
        assert_eq!(bids[0], (Some(0), 0.5));
        assert_eq!(bids[1], (Some(0), 1.0));
        assert_eq!(bids[2], (None, 0.0));
        assert_eq!(s.prices(), &[1.0]);
    }

    #[test]
    fn commit_repeats_the_same_request() {
        for c in [(None, 0.0), (Some(1), 3.7)] {
            assert!((0..100).all(|_| commit_step(c) == c));
        }
    }
}
