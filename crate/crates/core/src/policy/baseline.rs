//! Naive agents used as negative controls.

use rand::Rng;

use super::{Agent, AgentView};
use crate::rng::SimRng;

/// Always requests one server, bidding its own queue length.
#[derive(Debug, Clone)]
pub struct FixedAgent {
    pub server: usize,
}

impl Agent for FixedAgent {
    fn act(&mut self, view: &AgentView) -> Option<(usize, f64)> {
        Some((self.server, view.own_queue_length as f64))
    }

    fn observe(&mut self, _view: &AgentView, _served: bool) {}
}

/// Requests a uniformly random server every slot, bidding its queue length.
#[derive(Debug)]
pub struct RandomAgent {
    k: usize,
    rng: SimRng,
}

impl RandomAgent {
    pub fn new(k: usize, rng: SimRng) -> Self {
        RandomAgent { k, rng }
    }
}

impl Agent for RandomAgent {
    fn act(&mut self, view: &AgentView) -> Option<(usize, f64)> {
        Some((self.rng.gen_range(0..self.k), view.own_queue_length as f64))
    }

    fn observe(&mut self, _view: &AgentView, _served: bool) {}
}
