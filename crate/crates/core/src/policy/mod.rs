//! Agent-side decision rules.
//!
//! A decentralized agent sees only an [`AgentView`] of its own queue and
//! its own service history. MaxWeight is the one centralized controller.

mod baseline;
mod converge;
mod dam;
mod estimator;
mod maxweight;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use baseline::{FixedAgent, RandomAgent};
pub use converge::{commit_step, ConvergeState};
pub use dam::{DamAgent, Learning, ETA_SCALE};
pub use estimator::{EstimatorState, SampleWindow};
pub use maxweight::MaxWeightController;

use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::params::{compute_params, EpochParams, LogBase, ParamMode};
use crate::rng::SimRng;

/// Everything an agent may know when deciding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentView {
    pub own_queue_length: u64,
    /// Whether the agent's request in the previous slot was served.
    pub last_served: bool,
    pub slot: u64,
    /// `t − t_s + 1`; equals `slot` for queues present from the start.
    pub slots_since_join: u64,
}

pub trait Agent: Send {
    /// The request for this slot as `(server, bid)`, or `None` for ⊥.
    fn act(&mut self, view: &AgentView) -> Option<(usize, f64)>;

    /// Feedback on this slot's request.
    fn observe(&mut self, view: &AgentView, served: bool);

    fn is_exploring(&self) -> bool {
        false
    }

    fn estimates(&self) -> Option<&EstimatorState> {
        None
    }

    /// Estimates built from exploration epochs alone.
    fn exploration_estimates(&self) -> Option<&EstimatorState> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    DamK,
    DamFe,
    DamUcb,
    DynDamUcb,
    DynDamFe,
    #[serde(rename = "maxweight")]
    MaxWeight,
    Fixed,
    Random,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 8] = [
        PolicyKind::DamK,
        PolicyKind::DamFe,
        PolicyKind::DamUcb,
        PolicyKind::DynDamUcb,
        PolicyKind::DynDamFe,
        PolicyKind::MaxWeight,
        PolicyKind::Fixed,
        PolicyKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::DamK => "dam-k",
            PolicyKind::DamFe => "dam-fe",
            PolicyKind::DamUcb => "dam-ucb",
            PolicyKind::DynDamUcb => "dyn-dam-ucb",
            PolicyKind::DynDamFe => "dyn-dam-fe",
            PolicyKind::MaxWeight => "maxweight",
            PolicyKind::Fixed => "fixed",
            PolicyKind::Random => "random",
        }
    }

    /// Runs in epochs of the auction mechanism.
    pub fn is_auction(self) -> bool {
        matches!(
            self,
            PolicyKind::DamK | PolicyKind::DamFe | PolicyKind::DamUcb | PolicyKind::DynDamUcb | PolicyKind::DynDamFe
        )
    }

    pub fn is_ucb(self) -> bool {
        matches!(self, PolicyKind::DamUcb | PolicyKind::DynDamUcb)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown policy `{s}`")))
    }
}

fn default_gamma() -> f64 {
    0.8
}

fn default_true() -> bool {
    true
}

/// A policy together with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// Exploration exponent of forced exploration.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub mode: ParamMode,
    /// Forced exploration also learns from commit windows.
    #[serde(default = "default_true")]
    pub harvest: bool,
    #[serde(default)]
    pub log_base: LogBase,
    /// Server per queue for the fixed baseline; defaults to `i mod K`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_targets: Option<Vec<usize>>,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        PolicySpec {
            kind,
            gamma: default_gamma(),
            mode: ParamMode::default(),
            harvest: true,
            log_base: LogBase::default(),
            fixed_targets: None,
        }
    }

    pub fn with_mode(mut self, mode: ParamMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_fixed_targets(mut self, targets: Vec<usize>) -> Self {
        self.fixed_targets = Some(targets);
        self
    }

    pub fn epoch_params(&self, cfg: &SystemConfig) -> Result<EpochParams> {
        compute_params(self.mode, cfg.slackness, cfg.rate_floor, cfg.n_queues, cfg.n_servers, self.log_base)
    }

    /// Builds the decentralized agent occupying `queue`. Returns `None` for
    /// the centralized controller.
    pub fn build_agent(
        &self,
        cfg: &SystemConfig,
        params: &EpochParams,
        queue: usize,
        join_slot: u64,
        rng: SimRng,
    ) -> Option<Box<dyn Agent>> {
        let k = cfg.n_servers;
        let fe = Learning::ForcedExploration { gamma: self.gamma, harvest: self.harvest };
        let ucb = Learning::Ucb { delta: cfg.rate_floor };
        let (learning, dynamic) = match self.kind {
            PolicyKind::DamK => (Learning::Known(cfg.service_rates[queue].clone()), false),
            PolicyKind::DamFe => (fe, false),
            PolicyKind::DynDamFe => (fe, true),
            PolicyKind::DamUcb => (ucb, false),
            PolicyKind::DynDamUcb => (ucb, true),
            _ => return self.build_baseline(k, queue, rng),
        };
        Some(Box::new(DamAgent::new(learning, *params, k, join_slot, dynamic, rng)))
    }

    fn build_baseline(&self, k: usize, queue: usize, rng: SimRng) -> Option<Box<dyn Agent>> {
        match self.kind {
            PolicyKind::Fixed => {
                let server = self
                    .fixed_targets
                    .as_ref()
                    .and_then(|t| t.get(queue).copied())
                    .unwrap_or(queue % k);
                Some(Box::new(FixedAgent { server }))
            }
            PolicyKind::Random => Some(Box::new(RandomAgent::new(k, rng))),
            _ => None,
        }
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParameter(format!("γ must lie in (0, 1), got {}", self.gamma)));
        }
        if let Some(t) = &self.fixed_targets {
            if t.len() != cfg.n_queues || t.iter().any(|&j| j >= cfg.n_servers) {
                return Err(Error::InvalidParameter(
                    "fixed targets need one valid server per queue".into(),
                ));
            }
        }
        Ok(())
    }
}
