//! Slot-by-slot simulation.
//!
//! Each slot runs, in order: dynamic departures then joins, metric
//! recording of `Q(t)`, agent requests, server resolution, arrival and
//! service draws, the queue update, and finally agent feedback.

mod converge;
mod engine;
mod metrics;
mod refresh;
mod replicate;

use serde::{Deserialize, Serialize};

pub use converge::{run_converge_phase, ConvergeOutcome};
pub use engine::Simulation;
pub use metrics::{EpochRecord, MetricsSeries};
pub use refresh::dynamic_refresh_process;
pub use replicate::{mean_stderr, run_replications, AggregateSeries, Replications};

use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::policy::PolicySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ServiceMode {
    #[default]
    Stochastic,
    /// Every selected request with `μ > 0` succeeds.
    Forced,
}

/// Presence of one occupant of queue slot `queue` over `[join, leave]`.
/// `leave = None` means the occupant never departs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lifetime {
    pub queue: usize,
    pub join: u64,
    #[serde(default)]
    pub leave: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub config: SystemConfig,
    pub policy: PolicySpec,
    pub horizon: u64,
    pub master_seed: u64,
    pub service_mode: ServiceMode,
    /// Oblivious join/leave schedule. Without one every queue is present
    /// throughout.
    pub dynamic_schedule: Option<Vec<Lifetime>>,
    /// Refresh queue 2 at each epoch start with this probability. Ignored
    /// when an explicit schedule is given.
    pub refresh_probability: Option<f64>,
    /// Backlog at slot 1 for queues present from the start.
    pub initial_queues: Option<Vec<u64>>,
    /// Per-queue trajectory sampling interval; chosen from the horizon when unset.
    pub trajectory_stride: Option<u64>,
}

impl SimulationSpec {
    pub fn new(config: SystemConfig, policy: PolicySpec, horizon: u64, master_seed: u64) -> Self {
        SimulationSpec {
            config,
            policy,
            horizon,
            master_seed,
            service_mode: ServiceMode::Stochastic,
            dynamic_schedule: None,
            refresh_probability: None,
            initial_queues: None,
            trajectory_stride: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_refresh(mut self, p: f64) -> Self {
        self.refresh_probability = Some(p);
        self
    }

    pub fn with_initial_queues(mut self, q: Vec<u64>) -> Self {
        self.initial_queues = Some(q);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.config.ensure_valid()?;
        self.policy.validate(&self.config)?;
        let mut problems = Vec::new();
        if self.horizon == 0 {
            problems.push("horizon must be at least 1".to_string());
        }
        if let Some(p) = self.refresh_probability {
            if !(0.0..=1.0).contains(&p) {
                problems.push(format!("refresh probability {p} outside [0, 1]"));
            }
            if self.config.n_queues < 2 {
                problems.push("refresh needs at least two queues".to_string());
            }
        }
        if let Some(q) = &self.initial_queues {
            if q.len() != self.config.n_queues {
                problems.push(format!("{} initial lengths for {} queues", q.len(), self.config.n_queues));
            }
        }
        if self.trajectory_stride == Some(0) {
            problems.push("trajectory stride must be positive".to_string());
        }
        if let Some(schedule) = &self.dynamic_schedule {
            problems.extend(schedule_problems(schedule, self.config.n_queues));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems))
        }
    }
}

fn schedule_problems(schedule: &[Lifetime], n: usize) -> Vec<String> {
    let mut out = Vec::new();
    for l in schedule {
        if l.queue >= n {
            out.push(format!("lifetime for unknown queue {}", l.queue));
        }
        if l.join == 0 {
            out.push(format!("queue {} joins at slot 0; slots start at 1", l.queue));
        }
        if let Some(e) = l.leave {
            if e < l.join {
                out.push(format!("queue {} leaves at {e} before joining at {}", l.queue, l.join));
            }
        }
    }
    for q in 0..n {
        let mut spans: Vec<&Lifetime> = schedule.iter().filter(|l| l.queue == q).collect();
        spans.sort_by_key(|l| l.join);
        for pair in spans.windows(2) {
            match pair[0].leave {
                Some(e) if e < pair[1].join => {}
                _ => out.push(format!("overlapping lifetimes on queue {q}")),
            }
        }
    }
    out
}

/// The same spec with every selected request succeeding whenever `μ > 0`.
pub fn forced_good_event_mode(spec: &SimulationSpec) -> SimulationSpec {
    SimulationSpec { service_mode: ServiceMode::Forced, ..spec.clone() }
}

/// Convenience wrapper: build and run to the horizon.
pub fn run(spec: &SimulationSpec) -> Result<MetricsSeries> {
    Ok(Simulation::new(spec.clone())?.run_to_end())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PolicyKind;

    fn spec() -> SimulationSpec {
        let cfg = SystemConfig::new(vec![0.2, 0.2], vec![vec![0.9, 0.5], vec![0.5, 0.9]], 0.5, 0.5);
        SimulationSpec::new(cfg, PolicySpec::new(PolicyKind::DamK), 100, 1)
    }

    #[test]
    fn schedule_validation() {
        let mut s = spec();
        s.dynamic_schedule = Some(vec![
            Lifetime { queue: 0, join: 1, leave: Some(10) },
            Lifetime { queue: 0, join: 11, leave: None },
        ]);
        assert!(s.validate().is_ok());
        s.dynamic_schedule = Some(vec![
            Lifetime { queue: 0, join: 1, leave: Some(10) },
            Lifetime { queue: 0, join: 10, leave: None },
        ]);
        assert!(s.validate().is_err());
        s.dynamic_schedule = Some(vec![Lifetime { queue: 1, join: 5, leave: Some(4) }]);
        assert!(s.validate().is_err());
        s.dynamic_schedule = Some(vec![Lifetime { queue: 2, join: 1, leave: None }]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn forced_mode_only_changes_service() {
        let s = spec();
        let f = forced_good_event_mode(&s);
        assert_eq!(f.service_mode, ServiceMode::Forced);
        assert_eq!(SimulationSpec { service_mode: ServiceMode::Stochastic, ..f }, s);
    }

    #[test]
    fn rejects_zero_horizon() {
        let mut s = spec();
        s.horizon = 0;
        assert!(s.validate().is_err());
    }
}
