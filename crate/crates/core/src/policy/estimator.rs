//! Service-rate estimates built from samples taken after the first success
//! of a constant-bid window.

/// Sample means `μ̂` and counts `n`, one per server. `μ̂` is 0 when `n = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub mean: Vec<f64>,
    pub count: Vec<u64>,
}

impl EstimatorState {
    pub fn new(k: usize) -> Self {
        EstimatorState { mean: vec![0.0; k], count: vec![0; k] }
    }

    /// Folds one window of service flags for `server`: everything up to and
    /// including the first success is discarded.
    pub fn dam_update(&mut self, server: usize, samples: &[bool]) {
        let Some(first) = samples.iter().position(|&y| y) else { return };
        let tail = &samples[first + 1..];
        let successes = tail.iter().filter(|&&y| y).count() as u64;
        self.fold(server, tail.len() as u64, successes);
    }

    fn fold(&mut self, server: usize, n: u64, successes: u64) {
        if n == 0 {
            return;
        }
        let old = self.count[server];
        let total = old + n;
        self.mean[server] = (old as f64 * self.mean[server] + successes as f64) / total as f64;
        self.count[server] = total;
    }

    /// `min(1, μ̂ + √(3 ln t₀ / n))` for sampled servers, 0 otherwise. The log
    /// argument is floored at `e`.
    pub fn forced_exploration_rates(&self, t0: u64) -> Vec<f64> {
        let log = (t0 as f64).max(std::f64::consts::E).ln();
        self.mean
            .iter()
            .zip(&self.count)
            .map(|(&m, &n)| if n == 0 { 0.0 } else { (m + (3.0 * log / n as f64).sqrt()).min(1.0) })
            .collect()
    }

    /// `max(δ, min(1, μ̂ + √(3 ln(t₀ + K) / n)))`; unsampled servers get 1.
    pub fn ucb_rates(&self, t0: u64, delta: f64) -> Vec<f64> {
        let k = self.mean.len() as f64;
        let log = (t0 as f64 + k).ln();
        self.mean
            .iter()
            .zip(&self.count)
            .map(|(&m, &n)| {
                let upper = if n == 0 { 1.0 } else { (m + (3.0 * log / n as f64).sqrt()).min(1.0) };
                upper.max(delta)
            })
            .collect()
    }
}

/// Streaming form of [`EstimatorState::dam_update`] for one window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleWindow {
    pub server: usize,
    seen_success: bool,
    n: u64,
    successes: u64,
}

impl SampleWindow {
    pub fn new(server: usize) -> Self {
        SampleWindow { server, seen_success: false, n: 0, successes: 0 }
    }

    pub fn push(&mut self, served: bool) {
        if self.seen_success {
            self.n += 1;
            self.successes += u64::from(served);
        } else if served {
            self.seen_success = true;
        }
    }

    pub fn fold_into(self, est: &mut EstimatorState) {
        est.fold(self.server, self.n, self.successes);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_examples() {
        let mut e = EstimatorState::new(1);
        e.dam_update(0, &[false, false, false]);
        assert_eq!((e.mean[0], e.count[0]), (0.0, 0));

        e.dam_update(0, &[false, false, true, true, false, true]);
        assert!((e.mean[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.count[0], 3);

        let mut e = EstimatorState { mean: vec![0.5], count: vec![10] };
        e.dam_update(0, &[true, true, true]);
        assert!((e.mean[0] - 7.0 / 12.0).abs() < 1e-15);
        assert_eq!(e.count[0], 12);
    }

    #[test]
    fn window_matches_batch_update() {
        let flags = [false, true, false, true, true, false, false, true];
        let mut batch = EstimatorState { mean: vec![0.25, 0.0], count: vec![4, 0] };
        let mut stream = batch.clone();
        batch.dam_update(0, &flags);
        let mut w = SampleWindow::new(0);
        flags.iter().for_each(|&f| w.push(f));
        w.fold_into(&mut stream);
        assert_eq!(batch, stream);
    }

    #[test]
    fn forced_exploration_rates() {
        let e = EstimatorState { mean: vec![0.5, 0.0], count: vec![1_000_000, 0] };
        let r = e.forced_exploration_rates(1);
        // ln floored at e gives radius √(3/10⁶).
        assert!((r[0] - (0.5 + (3.0f64 / 1e6).sqrt())).abs() < 1e-12);
        assert_eq!(r[1], 0.0);
    }

    #[test]
    fn ucb_rates() {
        let e = EstimatorState { mean: vec![0.5, 0.0, 0.2], count: vec![12, 0, 100_000] };
        let r = e.ucb_rates(1, 0.4);
        // √(3 ln 4 / 12) ≈ 0.589 pushes the first arm to 1.
        assert_eq!(r[0], 1.0);
        assert_eq!(r[1], 1.0);
        assert_eq!(r[2], 0.4);
    }
}
