//! Decentralized auction scheduling for bipartite queueing systems.
//!
//! A system has `N` queues (agents) and `K` servers. Every slot each queue
//! may send one request, carrying a bid, to one server; each server picks the
//! highest bid and serves that queue with probability `μ[i][j]`. Queues see
//! only their own length and whether their own request succeeded.
//!
//! The crate provides:
//!
//! - [`model`]: the instance, the per-slot primitives and traffic slackness.
//! - [`params`]: epoch structure (check period, converge length, epoch length).
//! - [`matching`]: max-weight matching solvers and dual certificates.
//! - [`policy`]: agent state machines (the auction family, MaxWeight, baselines).
//! - [`sim`]: the slot loop, replications, metrics and the refresh process.
//! - [`catalog`] and [`harness`]: the reference instances and experiment drivers
//!   used by the `qsim` binary.

pub mod catalog;
pub mod error;
pub mod harness;
pub mod lp;
pub mod matching;
pub mod model;
pub mod params;
pub mod policy;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use matching::{DualCertificate, Matching, WeightMatrix};
pub use model::{Request, SystemConfig};
pub use params::{EpochParams, ParamMode};
pub use policy::{PolicyKind, PolicySpec};
pub use sim::{MetricsSeries, ServiceMode, SimulationSpec};
