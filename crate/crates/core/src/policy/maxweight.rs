//! Centralized MaxWeight: each slot, serve a max-weight matching on `Q·μ`.

use crate::matching::{max_weight_matching, WeightMatrix};
use crate::model::SystemConfig;

#[derive(Debug, Clone)]
pub struct MaxWeightController {
    mu: Vec<Vec<f64>>,
}

impl MaxWeightController {
    pub fn new(cfg: &SystemConfig) -> Self {
        MaxWeightController { mu: cfg.service_rates.clone() }
    }

    /// Assignment for the current queue lengths; absent queues pass `None`.
    pub fn assign(&self, queues: &[Option<u64>]) -> Vec<Option<usize>> {
        let n = queues.len();
        let k = self.mu.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * k);
        for (i, q) in queues.iter().enumerate() {
            let q = q.unwrap_or(0) as f64;
            data.extend(self.mu[i].iter().map(|m| m * q));
        }
        let w = WeightMatrix::new(n, k, data).expect("queue lengths and rates are finite");
        max_weight_matching(&w).0.assignment
    }
}
