//! The queueing system: instance definition, per-slot primitives and the
//! traffic-slackness test.

use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LpOutcome};

/// Absolute tolerance used when deciding LP feasibility.
pub const SLACKNESS_TOL: f64 = 1e-9;

/// Cap on the service scaling factor so that an all-zero arrival vector
/// still gives a bounded LP.
const SCALING_CAP: f64 = 1e6;

/// Arrival rates that cycle through fixed phases, each held for `period` slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSchedule {
    pub period: u64,
    pub phases: Vec<Vec<f64>>,
}

/// An immutable problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_queues: usize,
    pub n_servers: usize,
    pub arrival_rates: Vec<f64>,
    /// `service_rates[i][j]` is the success probability of queue `i` at server `j`.
    pub service_rates: Vec<Vec<f64>>,
    pub slackness: f64,
    pub rate_floor: f64,
    /// Optional time-varying arrival rates. Policies are never told about it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival_schedule: Option<ArrivalSchedule>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigViolation {
    Dimensions(String),
    ArrivalRateOutOfRange { queue: usize, value: f64 },
    ServiceRateOutOfRange { queue: usize, server: usize, value: f64 },
    ServiceRateBelowFloor { queue: usize, server: usize, value: f64, floor: f64 },
    SlacknessOutOfRange(f64),
    RateFloorOutOfRange(f64),
    Schedule(String),
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigViolation::Dimensions(msg) => write!(f, "dimension mismatch: {msg}"),
            ConfigViolation::ArrivalRateOutOfRange { queue, value } => {
                write!(f, "arrival rate out of range: λ[{queue}] = {value}")
            }
            ConfigViolation::ServiceRateOutOfRange { queue, server, value } => {
                write!(f, "service rate out of range: μ[{queue}][{server}] = {value}")
            }
            ConfigViolation::ServiceRateBelowFloor { queue, server, value, floor } => write!(
                f,
                "μ below floor: μ[{queue}][{server}] = {value} is nonzero but below δ = {floor}"
            ),
            ConfigViolation::SlacknessOutOfRange(v) => {
                write!(f, "slackness out of range: ε = {v} not in (0, 1]")
            }
            ConfigViolation::RateFloorOutOfRange(v) => {
                write!(f, "rate floor out of range: δ = {v} not in (0, 1]")
            }
            ConfigViolation::Schedule(msg) => write!(f, "arrival schedule: {msg}"),
        }
    }
}

impl SystemConfig {
    pub fn new(
        arrival_rates: Vec<f64>,
        service_rates: Vec<Vec<f64>>,
        slackness: f64,
        rate_floor: f64,
    ) -> Self {
        SystemConfig {
            n_queues: arrival_rates.len(),
            n_servers: service_rates.first().map_or(0, Vec::len),
            arrival_rates,
            service_rates,
            slackness,
            rate_floor,
            arrival_schedule: None,
        }
    }

    pub fn with_schedule(mut self, schedule: ArrivalSchedule) -> Self {
        self.arrival_schedule = Some(schedule);
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SystemConfig = toml::from_str(text)?;
        cfg.ensure_valid()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    #[inline]
    pub fn mu(&self, queue: usize, server: usize) -> f64 {
        self.service_rates[queue][server]
    }

    /// Arrival rate of `queue` in slot `t` (slots are 1-based).
    pub fn arrival_rate_at(&self, queue: usize, t: u64) -> f64 {
        match &self.arrival_schedule {
            Some(s) if !s.phases.is_empty() && s.period > 0 => {
                let phase = (t.saturating_sub(1) / s.period) as usize % s.phases.len();
                s.phases[phase][queue]
            }
            _ => self.arrival_rates[queue],
        }
    }

    /// Every arrival vector the instance can present: the static rates plus
    /// each schedule phase.
    pub fn arrival_phases(&self) -> Vec<&[f64]> {
        match &self.arrival_schedule {
            Some(s) if !s.phases.is_empty() => s.phases.iter().map(Vec::as_slice).collect(),
            _ => vec![self.arrival_rates.as_slice()],
        }
    }

    pub fn has_zero_rate(&self) -> bool {
        self.service_rates.iter().flatten().any(|&m| m == 0.0)
    }

    /// Returns every invariant violation; an empty list means the config is valid.
    pub fn validate(&self) -> Vec<ConfigViolation> {
        let mut out = Vec::new();
        if self.arrival_rates.len() != self.n_queues {
            out.push(ConfigViolation::Dimensions(format!(
                "{} arrival rates for {} queues",
                self.arrival_rates.len(),
                self.n_queues
            )));
        }
        if self.service_rates.len() != self.n_queues {
            out.push(ConfigViolation::Dimensions(format!(
                "{} service-rate rows for {} queues",
                self.service_rates.len(),
                self.n_queues
            )));
        }
        for (i, row) in self.service_rates.iter().enumerate() {
            if row.len() != self.n_servers {
                out.push(ConfigViolation::Dimensions(format!(
                    "service-rate row {i} has {} entries for {} servers",
                    row.len(),
                    self.n_servers
                )));
            }
        }
        let rate_ok = |v: f64| (0.0..=1.0).contains(&v);
        for (i, &l) in self.arrival_rates.iter().enumerate() {
            if !rate_ok(l) {
                out.push(ConfigViolation::ArrivalRateOutOfRange { queue: i, value: l });
            }
        }
        for (i, row) in self.service_rates.iter().enumerate() {
            for (j, &m) in row.iter().enumerate() {
                if !rate_ok(m) {
                    out.push(ConfigViolation::ServiceRateOutOfRange { queue: i, server: j, value: m });
                } else if m != 0.0 && m < self.rate_floor {
                    out.push(ConfigViolation::ServiceRateBelowFloor {
                        queue: i,
                        server: j,
                        value: m,
                        floor: self.rate_floor,
                    });
                }
            }
        }
        if !(self.slackness > 0.0 && self.slackness <= 1.0) {
            out.push(ConfigViolation::SlacknessOutOfRange(self.slackness));
        }
        if !(self.rate_floor > 0.0 && self.rate_floor <= 1.0) {
            out.push(ConfigViolation::RateFloorOutOfRange(self.rate_floor));
        }
        if let Some(s) = &self.arrival_schedule {
            if s.period == 0 {
                out.push(ConfigViolation::Schedule("period must be positive".into()));
            }
            if s.phases.is_empty() {
                out.push(ConfigViolation::Schedule("no phases".into()));
            }
            for (p, phase) in s.phases.iter().enumerate() {
                if phase.len() != self.n_queues {
                    out.push(ConfigViolation::Schedule(format!(
                        "phase {p} has {} rates for {} queues",
                        phase.len(),
                        self.n_queues
                    )));
                }
                for (i, &l) in phase.iter().enumerate() {
                    if !rate_ok(l) {
                        out.push(ConfigViolation::ArrivalRateOutOfRange { queue: i, value: l });
                    }
                }
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(violations.iter().map(ToString::to_string).collect()))
        }
    }
}

/// Per-queue backlog together with the current slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueState {
    pub lengths: Vec<u64>,
    pub time: u64,
}

impl QueueState {
    pub fn empty(n: usize) -> Self {
        QueueState { lengths: vec![0; n], time: 1 }
    }

    pub fn advance(&mut self, arrivals: &[bool], served: &[bool]) {
        for ((q, &a), &s) in self.lengths.iter_mut().zip(arrivals).zip(served) {
            *q = advance_queue(*q, a, s);
        }
        self.time += 1;
    }
}

/// One agent→server message. `target == None` is a no-op request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Request {
    pub agent: usize,
    pub target: Option<usize>,
    pub bid: f64,
}

impl Request {
    pub fn idle(agent: usize) -> Self {
        Request { agent, target: None, bid: 0.0 }
    }
}

/// Everything that happened in one slot.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SlotOutcome {
    pub arrivals: Vec<bool>,
    /// The agent each server selected, if any.
    pub selected: Vec<Option<usize>>,
    pub served: Vec<bool>,
}

/// Independent Bernoulli arrivals for slot `t`, one draw per queue in id order.
pub fn sample_arrivals<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R, t: u64) -> Vec<bool> {
    (0..cfg.n_queues)
        .map(|i| bernoulli(rng, cfg.arrival_rate_at(i, t)))
        .collect()
}

#[inline]
pub(crate) fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.gen::<f64>() < p
}

/// Picks the highest bid among `requests`; exact ties go to the lowest agent id.
pub fn resolve_server<'a, I>(requests: I) -> Option<usize>
where
    I: IntoIterator<Item = &'a Request>,
{
    let mut best: Option<&Request> = None;
    for r in requests {
        best = match best {
            None => Some(r),
            Some(b) if r.bid > b.bid || (r.bid == b.bid && r.agent < b.agent) => Some(r),
            keep => keep,
        };
    }
    best.map(|r| r.agent)
}

/// Resolves every server at once. Requests with no target are ignored.
pub fn resolve_all(requests: &[Request], n_servers: usize) -> Vec<Option<usize>> {
    let mut best: Vec<Option<&Request>> = vec![None; n_servers];
    for r in requests {
        let Some(j) = r.target else { continue };
        let slot = &mut best[j];
        *slot = match *slot {
            None => Some(r),
            Some(b) if r.bid > b.bid || (r.bid == b.bid && r.agent < b.agent) => Some(r),
            keep => keep,
        };
    }
    best.into_iter().map(|b| b.map(|r| r.agent)).collect()
}

/// Service outcome at server `j`. An idle server emits no event.
pub fn sample_service<R: Rng + ?Sized>(
    selected: Option<usize>,
    server: usize,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Option<bool> {
    selected.map(|i| bernoulli(rng, cfg.mu(i, server)))
}

/// `(q + a - s)⁺`
#[inline]
pub fn advance_queue(q: u64, arrival: bool, served: bool) -> u64 {
    (q + u64::from(arrival)).saturating_sub(u64::from(served))
}

/// Largest `θ` such that `θ·λ` is achievable by some doubly substochastic
/// flow, i.e. `θλ_i ≤ Σ_j μ_ij φ_ij` for all `i`. Returns `f64::INFINITY`
/// when `λ = 0`.
pub fn max_service_scaling(arrivals: &[f64], service_rates: &[Vec<f64>]) -> Result<f64> {
    let n = arrivals.len();
    let k = service_rates.first().map_or(0, Vec::len);
    if arrivals.iter().all(|&l| l == 0.0) {
        return Ok(f64::INFINITY);
    }
    let nv = n * k + 1;
    let theta = n * k;
    let mut a = Vec::with_capacity(2 * n + k + 1);
    let mut b = Vec::with_capacity(2 * n + k + 1);
    for i in 0..n {
        let mut row = vec![0.0; nv];
        row[i * k..(i + 1) * k].fill(1.0);
        a.push(row);
        b.push(1.0);
    }
    for j in 0..k {
        let mut row = vec![0.0; nv];
        for i in 0..n {
            row[i * k + j] = 1.0;
        }
        a.push(row);
        b.push(1.0);
    }
    for i in 0..n {
        let mut row = vec![0.0; nv];
        for j in 0..k {
            row[i * k + j] = -service_rates[i][j];
        }
        row[theta] = arrivals[i];
        a.push(row);
        b.push(0.0);
    }
    let mut cap = vec![0.0; nv];
    cap[theta] = 1.0;
    a.push(cap);
    b.push(SCALING_CAP);

    let mut c = vec![0.0; nv];
    c[theta] = 1.0;
    match lp::maximize(&c, &a, &b)? {
        LpOutcome::Optimal { value, .. } => Ok(value),
        LpOutcome::Unbounded => Ok(f64::INFINITY),
    }
}

/// The largest slackness the instance admits over all of its arrival phases.
pub fn max_slackness(cfg: &SystemConfig) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for lambda in cfg.arrival_phases() {
        worst = worst.min(max_service_scaling(lambda, &cfg.service_rates)? - 1.0);
    }
    Ok(worst)
}

/// Whether `(1 + ε)λ` lies in the capacity region for every arrival phase.
pub fn check_slackness(cfg: &SystemConfig, eps: f64) -> Result<bool> {
    if eps < 0.0 {
        return Err(Error::InvalidParameter(format!("slackness must be ≥ 0, got {eps}")));
    }
    Ok(max_slackness(cfg)? >= eps - SLACKNESS_TOL)
}

/// For symmetric rates (`μ_ij = μ_j`), the capacity gap
/// `Δ = min_n Σ_{j ≤ min(n,K)} μ_(j) − Σ_{i ≤ n} λ_(i)` with both sorted
/// in decreasing order.
pub fn symmetric_gap(arrivals: &[f64], server_rates: &[f64]) -> f64 {
    let mut lam = arrivals.to_vec();
    let mut mu = server_rates.to_vec();
    lam.sort_by(|a, b| b.total_cmp(a));
    mu.sort_by(|a, b| b.total_cmp(a));
    let mut best = f64::INFINITY;
    let (mut sl, mut sm) = (0.0, 0.0);
    for n in 0..lam.len() {
        sl += lam[n];
        if n < mu.len() {
            sm += mu[n];
        }
        best = best.min(sm - sl);
    }
    best
}

/// A symmetric system with gap `Δ` has traffic slackness `Δ / K`.
pub fn symmetric_slack_from_gap(gap: f64, n_servers: usize) -> f64 {
    gap / n_servers as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamKey};

    fn single(lambda: f64, mu: f64, delta: f64) -> SystemConfig {
        SystemConfig::new(vec![lambda], vec![vec![mu]], 1.0, delta)
    }

    #[test]
    fn validate_examples() {
        assert!(single(0.5, 1.0, 0.5).validate().is_empty());

        let v = single(0.5, 0.1, 0.4).validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("μ below floor"));

        let v = single(1.2, 1.0, 0.5).validate();
        assert!(v.iter().any(|x| x.to_string().contains("arrival rate out of range")));
    }

    #[test]
    fn zero_service_rate_is_allowed_below_floor() {
        let cfg = SystemConfig::new(vec![0.2, 0.2], vec![vec![0.0, 0.5], vec![0.5, 0.0]], 0.5, 0.5);
        assert!(cfg.validate().is_empty());
    }

    #[test]
    fn degenerate_arrivals() {
        let cfg = SystemConfig::new(vec![0.0, 1.0], vec![vec![1.0], vec![1.0]], 0.1, 0.5);
        let mut rng = stream(3, StreamKey::Environment);
        for t in 1..2000 {
            let a = sample_arrivals(&cfg, &mut rng, t);
            assert!(!a[0] && a[1]);
        }
    }

    #[test]
    fn arrival_frequency_matches_rate() {
        // 3σ = 3·sqrt(0.21 / 1e6) ≈ 0.00137 < 0.002
        let cfg = SystemConfig::new(vec![0.7], vec![vec![1.0]], 0.1, 0.5);
        let mut rng = stream(11, StreamKey::Environment);
        let n = 1_000_000u64;
        let hits = (1..=n).filter(|&t| sample_arrivals(&cfg, &mut rng, t)[0]).count();
        let mean = hits as f64 / n as f64;
        assert!((mean - 0.7).abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn resolve_server_examples() {
        let r = |agent, bid| Request { agent, target: Some(0), bid };
        assert_eq!(resolve_server(&[r(1, 5.0), r(2, 3.0)]), Some(1));
        assert_eq!(resolve_server(&[] as &[Request]), None);
        assert_eq!(resolve_server(&[r(2, 2.0), r(1, 2.0)]), Some(1));
    }

    #[test]
    fn resolve_all_ignores_idle_requests() {
        let reqs = [
            Request { agent: 0, target: Some(1), bid: 1.0 },
            Request::idle(1),
            Request { agent: 2, target: Some(1), bid: 4.0 },
            Request { agent: 3, target: Some(0), bid: 0.5 },
        ];
        assert_eq!(resolve_all(&reqs, 3), vec![Some(3), Some(2), None]);
    }

    #[test]
    fn service_examples() {
        let cfg = SystemConfig::new(vec![0.5, 0.5], vec![vec![1.0], vec![0.0]], 0.1, 0.5);
        let mut rng = stream(5, StreamKey::Environment);
        for _ in 0..1000 {
            assert_eq!(sample_service(Some(0), 0, &cfg, &mut rng), Some(true));
            assert_eq!(sample_service(Some(1), 0, &cfg, &mut rng), Some(false));
            assert_eq!(sample_service(None, 0, &cfg, &mut rng), None);
        }
        // 3σ = 3·sqrt(0.09 / 1e5) ≈ 0.00285 < 0.003
        let cfg = single(0.5, 0.9, 0.5);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| sample_service(Some(0), 0, &cfg, &mut rng) == Some(true))
            .count();
        let mean = hits as f64 / n as f64;
        assert!((mean - 0.9).abs() < 0.003, "mean {mean}");
    }

    #[test]
    fn advance_queue_examples() {
        assert_eq!(advance_queue(0, false, true), 0);
        assert_eq!(advance_queue(5, true, false), 6);
        assert_eq!(advance_queue(3, true, true), 3);
    }

    #[test]
    fn slackness_examples() {
        assert!(check_slackness(&single(0.5, 1.0, 0.5), 1.0).unwrap());
        assert!(!check_slackness(&single(0.5, 1.0, 0.5), 1.1).unwrap());

        let n = 4.0;
        let lam = vec![(n + 1.0) / (n * n); 4];
        let row = vec![1.0, (n - 1.0) / (n * n), (n - 1.0) / (n * n), (n - 1.0) / (n * n)];
        let cfg = SystemConfig::new(lam, vec![row; 4], 0.25, 0.1875);
        assert!(check_slackness(&cfg, 0.25).unwrap());
        assert!(!check_slackness(&cfg, 0.26).unwrap());
    }

    #[test]
    fn zero_arrivals_are_always_feasible() {
        let cfg = SystemConfig::new(vec![0.0, 0.0], vec![vec![0.5], vec![0.5]], 1.0, 0.5);
        assert!(check_slackness(&cfg, 1.0).unwrap());
    }

    #[test]
    fn symmetric_slack_examples() {
        assert!((symmetric_slack_from_gap(0.5, 5) - 0.1).abs() < 1e-15);
        assert_eq!(symmetric_slack_from_gap(0.0, 3), 0.0);
        assert!((symmetric_slack_from_gap(1.25, 4) - 0.3125).abs() < 1e-15);
    }

    #[test]
    fn symmetric_gap_implies_slackness_on_reference_rates() {
        // N = K = 8, λ = 0.4, μ = (0.9, 0.9, 0.4, ...)
        let lam = vec![0.4; 8];
        let mu: Vec<f64> = [0.9, 0.9].into_iter().chain([0.4; 6]).collect();
        let gap = symmetric_gap(&lam, &mu);
        assert!((gap - 0.5).abs() < 1e-12);
        let cfg = SystemConfig::new(lam, vec![mu; 8], 0.3125, 0.4);
        let eps = symmetric_slack_from_gap(gap, 8);
        assert!(check_slackness(&cfg, eps).unwrap());
        assert!(check_slackness(&cfg, 0.3125).unwrap());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let text = r#"
            n_queues = 2
            n_servers = 2
            slackness = 0.25
            rate_floor = 0.3
            arrival_rates = [0.7, 0.4]
            service_rates = [[0.9, 0.3], [0.3, 0.9]]
        "#;
        let cfg = SystemConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.n_queues, 2);
        assert_eq!(cfg.service_rates[1][1], 0.9);
        let back = SystemConfig::from_toml_str(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);

        let bad = text.replace("0.7, 0.4", "1.7, 0.4");
        assert!(matches!(SystemConfig::from_toml_str(&bad), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn schedule_cycles_through_phases() {
        let cfg = SystemConfig::new(vec![0.1], vec![vec![1.0]], 0.5, 0.5).with_schedule(
            ArrivalSchedule { period: 10, phases: vec![vec![0.2], vec![0.3]] },
        );
        assert_eq!(cfg.arrival_rate_at(0, 1), 0.2);
        assert_eq!(cfg.arrival_rate_at(0, 10), 0.2);
        assert_eq!(cfg.arrival_rate_at(0, 11), 0.3);
        assert_eq!(cfg.arrival_rate_at(0, 21), 0.2);
    }
}
