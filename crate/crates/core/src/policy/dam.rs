//! The decentralized auction agent in its three flavours: known rates,
//! forced exploration and optimistic (UCB) estimates.

use rand::distributions::{Distribution, Open01};
use rand::Rng;

use super::converge::{commit_step, ConvergeState};
use super::estimator::{EstimatorState, SampleWindow};
use super::{Agent, AgentView};
use crate::params::EpochParams;
use crate::rng::SimRng;

/// Upper end of the per-agent tie-breaking perturbation `η`.
pub const ETA_SCALE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Learning {
    /// The agent is told its own service rates.
    Known(Vec<f64>),
    /// Explore a uniform server with probability `min(1, K/ℓ^γ)`.
    ForcedExploration { gamma: f64, harvest: bool },
    /// Optimistic estimates floored at `δ`.
    Ucb { delta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
enum Phase {
    Inert,
    Converge(ConvergeState),
    Commit((Option<usize>, f64)),
    Explore((usize, f64)),
}

#[derive(Debug)]
pub struct DamAgent {
    learning: Learning,
    params: EpochParams,
    k: usize,
    eta: f64,
    rng: SimRng,
    /// First slot of the agent's first epoch.
    start: u64,
    join_slot: u64,
    /// Shift clocks to the join slot.
    dynamic: bool,
    phase: Phase,
    epoch_start: u64,
    estimates: EstimatorState,
    exploration_estimates: EstimatorState,
    window: Option<SampleWindow>,
    last_request: Option<usize>,
}

impl DamAgent {
    pub fn new(
        learning: Learning,
        params: EpochParams,
        k: usize,
        join_slot: u64,
        dynamic: bool,
        mut rng: SimRng,
    ) -> Self {
        let u: f64 = Open01.sample(&mut rng);
        DamAgent {
            learning,
            params,
            k,
            eta: u * ETA_SCALE,
            rng,
            start: params.next_epoch_start(join_slot.max(1)),
            join_slot: join_slot.max(1),
            dynamic,
            phase: Phase::Inert,
            epoch_start: 0,
            estimates: EstimatorState::new(k),
            exploration_estimates: EstimatorState::new(k),
            window: None,
            last_request: None,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn start_slot(&self) -> u64 {
        self.start
    }

    /// Epoch index counted from the agent's own first epoch.
    fn local_epoch(&self, t0: u64) -> u64 {
        (t0 - self.start) / self.params.epoch_len + 1
    }

    fn clock(&self, t0: u64) -> u64 {
        if self.dynamic {
            t0 - self.join_slot + 1
        } else {
            t0
        }
    }

    fn begin_epoch(&mut self, t0: u64, queue_length: u64) {
        self.epoch_start = t0;
        self.window = None;
        let rates = match &self.learning {
            Learning::Known(mu) => mu.clone(),
            Learning::ForcedExploration { gamma, .. } => {
                let ell = if self.dynamic { self.local_epoch(t0) } else { self.params.epoch_of(t0) };
                let p = (self.k as f64 / (ell as f64).powf(*gamma)).min(1.0);
                if self.rng.gen::<f64>() < p {
                    let server = self.rng.gen_range(0..self.k);
                    let bid = (t0 + self.params.epoch_len + 1) as f64 * (1.0 + self.eta);
                    self.phase = Phase::Explore((server, bid));
                    self.window = Some(SampleWindow::new(server));
                    return;
                }
                self.estimates.forced_exploration_rates(t0)
            }
            Learning::Ucb { delta } => self.estimates.ucb_rates(self.clock(t0), *delta),
        };
        let q = queue_length as f64;
        let weights = rates.iter().map(|m| m * q).collect();
        self.phase = Phase::Converge(ConvergeState::new(
            weights,
            t0,
            self.params.check_period,
            self.params.price_step(),
            self.eta,
        ));
    }

    fn harvests_commit(&self) -> bool {
        match self.learning {
            Learning::Known(_) => false,
            Learning::ForcedExploration { harvest, .. } => harvest,
            Learning::Ucb { .. } => true,
        }
    }

    pub fn converge_state(&self) -> Option<&ConvergeState> {
        match &self.phase {
            Phase::Converge(s) => Some(s),
            _ => None,
        }
    }
}

impl Agent for DamAgent {
    fn act(&mut self, view: &AgentView) -> Option<(usize, f64)> {
        let t = view.slot;
        if t < self.start {
            self.last_request = None;
            return None;
        }
        let l = self.params.epoch_len;
        if (t - 1).is_multiple_of(l) {
            self.begin_epoch(t, view.own_queue_length);
        }
        let commit_from = self.epoch_start + self.params.converge_len;
        if t == commit_from {
            if let Phase::Converge(s) = &self.phase {
                let committed = s.committed();
                if let (Some(j), true) = (committed.0, self.harvests_commit()) {
                    self.window = Some(SampleWindow::new(j));
                }
                self.phase = Phase::Commit(committed);
            }
        }
        let (target, bid) = match &mut self.phase {
            Phase::Inert => (None, 0.0),
            Phase::Converge(s) => s.converge_step(t),
            Phase::Commit(c) => commit_step(*c),
            Phase::Explore((j, b)) => (Some(*j), *b),
        };
        self.last_request = target;
        target.map(|j| (j, bid))
    }

    fn observe(&mut self, view: &AgentView, served: bool) {
        let t = view.slot;
        if t < self.start {
            return;
        }
        if let Phase::Converge(s) = &mut self.phase {
            s.converge_observe(t, served);
        }
        if let (Some(w), Some(j)) = (self.window.as_mut(), self.last_request) {
            debug_assert_eq!(w.server, j);
            w.push(served);
        }
        if t == self.epoch_start + self.params.epoch_len - 1 {
            if let Some(w) = self.window.take() {
                if matches!(self.phase, Phase::Explore(_)) {
                    w.fold_into(&mut self.exploration_estimates);
                }
                w.fold_into(&mut self.estimates);
            }
        }
    }

    fn is_exploring(&self) -> bool {
        matches!(self.phase, Phase::Explore(_))
    }

    fn estimates(&self) -> Option<&EstimatorState> {
        match self.learning {
            Learning::Known(_) => None,
            _ => Some(&self.estimates),
        }
    }

    fn exploration_estimates(&self) -> Option<&EstimatorState> {
        match self.learning {
            Learning::ForcedExploration { .. } => Some(&self.exploration_estimates),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::compute_tuned_params;
    use crate::rng::{stream, StreamKey};

    fn params() -> EpochParams {
        // T_c = 24, T_s = 6, L = 12
        compute_tuned_params(1.0, 0.5, 1, 1).unwrap()
    }

    fn view(slot: u64, q: u64) -> AgentView {
        AgentView { own_queue_length: q, last_served: false, slot, slots_since_join: slot }
    }

    fn agent(learning: Learning, join: u64, dynamic: bool) -> DamAgent {
        let rng = stream(1, StreamKey::Agent { queue: 0, join_slot: join });
        DamAgent::new(learning, params(), 2, join, dynamic, rng)
    }

    #[test]
    fn eta_is_tiny_and_positive() {
        let a = agent(Learning::Known(vec![1.0, 0.4]), 1, false);
        assert!(a.eta() > 0.0 && a.eta() < ETA_SCALE);
    }

    #[test]
    fn known_rates_weight_the_queue() {
        let mut a = agent(Learning::Known(vec![1.0, 0.4]), 1, false);
        let (j, bid) = a.act(&view(1, 10)).unwrap();
        assert_eq!(j, 0);
        assert!((bid - 0.5 * (1.0 - a.eta()) * 10.0).abs() < 1e-12);
        assert_eq!(a.converge_state().unwrap().weights(), &[10.0, 4.0]);
    }

    #[test]
    fn empty_queue_idles_whole_epoch() {
        let mut a = agent(Learning::Known(vec![1.0, 0.4]), 1, false);
        for t in 1..=12 {
            assert_eq!(a.act(&view(t, 0)), None);
            a.observe(&view(t, 0), false);
        }
    }

    #[test]
    fn prices_reset_each_epoch() {
        let mut a = agent(Learning::Known(vec![1.0, 0.4]), 1, false);
        for t in 1..=12 {
            a.act(&view(t, 10));
            a.observe(&view(t, 10), true);
        }
        a.act(&view(13, 3));
        let s = a.converge_state().unwrap();
        assert_eq!(s.weights()[0], 3.0);
        assert!((s.weights()[1] - 1.2).abs() < 1e-12);
        assert!(s.prices()[1] == 0.0 && s.prices()[0] > 0.0 && s.prices()[0] < 3.0);
    }

    #[test]
    fn commit_phase_is_constant() {
        let mut a = agent(Learning::Known(vec![1.0, 0.4]), 1, false);
        let mut reqs = Vec::new();
        for t in 1..=12 {
            reqs.push(a.act(&view(t, 10)));
            a.observe(&view(t, 10), t % 3 == 0);
        }
        assert!(reqs[6..].windows(2).all(|w| w[0] == w[1]));
        assert_eq!(reqs[5], reqs[6]);
    }

    #[test]
    fn dynamic_agent_waits_for_next_epoch() {
        let mut a = agent(Learning::Ucb { delta: 0.3 }, 6, true);
        assert_eq!(a.start_slot(), 13);
        for t in 6..=12 {
            assert_eq!(a.act(&view(t, 5)), None);
        }
        assert!(a.act(&view(13, 5)).is_some());

        let b = agent(Learning::Ucb { delta: 0.3 }, 1, true);
        assert_eq!(b.start_slot(), 1);
    }

    #[test]
    fn forced_exploration_explores_first_epoch_with_dominant_bid() {
        let mut a = agent(Learning::ForcedExploration { gamma: 0.8, harvest: true }, 1, false);
        let (j, bid) = a.act(&view(1, 0)).unwrap();
        assert!(a.is_exploring());
        assert!(bid > 14.0 && bid < 14.0 * (1.0 + ETA_SCALE));
        for t in 2..=12 {
            assert_eq!(a.act(&view(t, 0)), Some((j, bid)));
            a.observe(&view(t, 0), true);
        }
        // Slot 1 was never observed as served; slot 2 is the first success.
        let est = a.exploration_estimates().unwrap();
        assert_eq!(est.count[j], 10);
        assert_eq!(est.mean[j], 1.0);
        assert_eq!(a.estimates().unwrap().count[j], 10);
    }

    #[test]
    fn ucb_harvests_commit_window_only() {
        let mut a = agent(Learning::Ucb { delta: 0.3 }, 1, false);
        for t in 1..=12 {
            a.act(&view(t, 10));
            a.observe(&view(t, 10), true);
        }
        let est = a.estimates().unwrap();
        // Commit window is slots 7..=12; the first success is discarded.
        assert_eq!(est.count.iter().sum::<u64>(), 5);
    }
}
