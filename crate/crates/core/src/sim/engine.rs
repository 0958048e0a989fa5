use log::warn;

use super::metrics::{EpochRecord, MetricsSeries};
use super::refresh::dynamic_refresh_process;
use super::{Lifetime, ServiceMode, SimulationSpec};
use crate::error::Result;
use crate::matching::{
    check_complementary_slackness, max_weight_matching, DualCertificate, Matching, WeightMatrix,
    DEFAULT_TOL,
};
use crate::model::{advance_queue, bernoulli, resolve_all, Request, SlotOutcome};
use crate::params::EpochParams;
use crate::policy::{Agent, AgentView, EstimatorState, MaxWeightController};
use crate::rng::{stream, SimRng, StreamKey};

/// Per-queue trajectories are kept every slot below this horizon.
const FULL_TRAJECTORY_LIMIT: u64 = 1_000_000;

/// State of the epoch currently being diagnosed.
#[derive(Debug)]
struct EpochWatch {
    epoch: u64,
    start: u64,
    q0: Vec<Option<u64>>,
    n_explorers: usize,
    profile: Vec<Option<usize>>,
    last_change: u64,
}

/// A running simulation. Use [`Simulation::step`] to advance one slot or
/// [`Simulation::run_to_end`] to finish the horizon.
pub struct Simulation {
    spec: SimulationSpec,
    params: Option<EpochParams>,
    t: u64,
    queues: Vec<Option<u64>>,
    last_served: Vec<bool>,
    join_slot: Vec<u64>,
    agents: Vec<Option<Box<dyn Agent>>>,
    controller: Option<MaxWeightController>,
    env: SimRng,
    joins: Vec<Lifetime>,
    next_join: usize,
    leave_at: Vec<Option<u64>>,
    metrics: MetricsSeries,
    watch: Option<EpochWatch>,
    requests: Vec<Request>,
    exploring: Vec<bool>,
    last: SlotOutcome,
}

impl Simulation {
    pub fn new(spec: SimulationSpec) -> Result<Self> {
        spec.validate()?;
        let cfg = &spec.config;
        let n = cfg.n_queues;
        let params = if spec.policy.kind.is_auction() || spec.refresh_probability.is_some() {
            Some(spec.policy.epoch_params(cfg)?)
        } else {
            spec.policy.epoch_params(cfg).ok()
        };
        let stride = spec.trajectory_stride.unwrap_or_else(|| {
            if spec.horizon < FULL_TRAJECTORY_LIMIT {
                1
            } else {
                params.map_or(1000, |p| p.epoch_len)
            }
        });

        let schedule = match (&spec.dynamic_schedule, spec.refresh_probability) {
            (Some(s), _) => s.clone(),
            (None, Some(p)) => {
                let mut rng = stream(spec.master_seed, StreamKey::Refresh);
                let l = params.expect("refresh needs epoch parameters").epoch_len;
                dynamic_refresh_process(n, 1, p, l, spec.horizon, &mut rng)
            }
            (None, None) => (0..n).map(|queue| Lifetime { queue, join: 1, leave: None }).collect(),
        };
        let mut joins = schedule;
        joins.sort_by_key(|l| (l.join, l.queue));

        let mut metrics = MetricsSeries::new(n, spec.horizon, stride);
        if spec.policy.kind.is_ucb() && cfg.has_zero_rate() {
            let msg = "DAM.UCB assumes every service rate is positive; this instance has a zero rate"
                .to_string();
            warn!("{msg}");
            metrics.warnings.push(msg);
        }
        let controller = (spec.policy.kind == crate::policy::PolicyKind::MaxWeight)
            .then(|| MaxWeightController::new(cfg));

        Ok(Simulation {
            env: stream(spec.master_seed, StreamKey::Environment),
            params,
            t: 1,
            queues: vec![None; n],
            last_served: vec![false; n],
            join_slot: vec![0; n],
            agents: (0..n).map(|_| None).collect(),
            controller,
            joins,
            next_join: 0,
            leave_at: vec![None; n],
            metrics,
            watch: None,
            requests: Vec::with_capacity(n),
            exploring: vec![false; n],
            last: SlotOutcome::default(),
            spec,
        })
    }

    pub fn slot(&self) -> u64 {
        self.t
    }

    pub fn is_finished(&self) -> bool {
        self.t > self.spec.horizon
    }

    pub fn params(&self) -> Option<&EpochParams> {
        self.params.as_ref()
    }

    pub fn queues(&self) -> &[Option<u64>] {
        &self.queues
    }

    pub fn metrics(&self) -> &MetricsSeries {
        &self.metrics
    }

    /// Requests sent in the most recent slot.
    pub fn last_requests(&self) -> &[Request] {
        &self.requests
    }

    /// Arrivals, selections and services of the most recent slot.
    pub fn last_outcome(&self) -> &SlotOutcome {
        &self.last
    }

    pub fn agent_estimates(&self, queue: usize) -> Option<&EstimatorState> {
        self.agents[queue].as_ref()?.estimates()
    }

    pub fn agent_exploration_estimates(&self, queue: usize) -> Option<&EstimatorState> {
        self.agents[queue].as_ref()?.exploration_estimates()
    }

    pub fn run_to_end(mut self) -> MetricsSeries {
        while !self.is_finished() {
            self.step();
        }
        self.finish()
    }

    pub fn finish(mut self) -> MetricsSeries {
        self.metrics.final_queues = self.queues.clone();
        self.metrics
    }

    fn apply_lifecycle(&mut self) {
        let t = self.t;
        for i in 0..self.queues.len() {
            if self.leave_at[i].is_some_and(|e| e < t) {
                self.queues[i] = None;
                self.agents[i] = None;
                self.leave_at[i] = None;
                self.exploring[i] = false;
            }
        }
        while let Some(l) = self.joins.get(self.next_join).copied() {
            if l.join > t {
                break;
            }
            self.next_join += 1;
            if l.join < t {
                continue;
            }
            let i = l.queue;
            let initial = match &self.spec.initial_queues {
                Some(q) if t == 1 => q[i],
                _ => 0,
            };
            self.queues[i] = Some(initial);
            self.leave_at[i] = l.leave;
            self.last_served[i] = false;
            self.join_slot[i] = t;
            let rng = stream(self.spec.master_seed, StreamKey::Agent { queue: i, join_slot: t });
            let params = self.params.unwrap_or_else(placeholder_params);
            self.agents[i] = self.spec.policy.build_agent(&self.spec.config, &params, i, t, rng);
        }
    }

    fn view(&self, i: usize, q: u64) -> AgentView {
        AgentView {
            own_queue_length: q,
            last_served: self.last_served[i],
            slot: self.t,
            slots_since_join: self.t - self.join_slot[i] + 1,
        }
    }

    /// Advances one slot.
    pub fn step(&mut self) {
        if self.is_finished() {
            return;
        }
        let t = self.t;
        self.apply_lifecycle();
        let cfg = &self.spec.config;
        self.metrics.record(t, |i| cfg.arrival_rate_at(i, t), &self.queues);

        // Requests.
        self.requests.clear();
        if let Some(c) = &self.controller {
            for (i, s) in c.assign(&self.queues).into_iter().enumerate() {
                if let (Some(j), Some(q)) = (s, self.queues[i]) {
                    self.requests.push(Request { agent: i, target: Some(j), bid: q as f64 });
                }
            }
        } else {
            for i in 0..self.queues.len() {
                let Some(q) = self.queues[i] else { continue };
                let view = self.view(i, q);
                let agent = self.agents[i].as_mut().expect("present queues have agents");
                if let Some((j, bid)) = agent.act(&view) {
                    self.requests.push(Request { agent: i, target: Some(j), bid });
                }
                self.exploring[i] = agent.is_exploring();
            }
        }
        let k = self.spec.config.n_servers;
        let selected = resolve_all(&self.requests, k);
        self.check_dominance();
        self.track_epoch(&selected);

        // Environment: arrivals first, then services.
        let cfg = &self.spec.config;
        let arrivals: Vec<bool> = (0..cfg.n_queues)
            .map(|i| bernoulli(&mut self.env, cfg.arrival_rate_at(i, t)))
            .collect();
        let mut served = vec![false; cfg.n_queues];
        for (j, sel) in selected.iter().enumerate() {
            if let Some(i) = *sel {
                let mu = cfg.mu(i, j);
                served[i] = match self.spec.service_mode {
                    ServiceMode::Stochastic => bernoulli(&mut self.env, mu),
                    ServiceMode::Forced => mu > 0.0,
                };
            }
        }

        for i in 0..self.queues.len() {
            let Some(q) = self.queues[i] else { continue };
            let view = self.view(i, q);
            if let Some(agent) = self.agents[i].as_mut() {
                agent.observe(&view, served[i]);
            }
            self.queues[i] = Some(advance_queue(q, arrivals[i], served[i]));
            self.last_served[i] = served[i];
        }
        self.last = SlotOutcome { arrivals, selected, served };
        self.t += 1;
    }

    /// Flags any server where an exploiting bid reaches an exploring one.
    fn check_dominance(&mut self) {
        if !self.exploring.iter().any(|&e| e) {
            return;
        }
        let k = self.spec.config.n_servers;
        let mut min_explore = vec![f64::INFINITY; k];
        let mut max_exploit = vec![f64::NEG_INFINITY; k];
        for r in &self.requests {
            let Some(j) = r.target else { continue };
            if self.exploring[r.agent] {
                min_explore[j] = min_explore[j].min(r.bid);
            } else {
                max_exploit[j] = max_exploit[j].max(r.bid);
            }
        }
        let violations = (0..k).filter(|&j| max_exploit[j] >= min_explore[j]).count() as u64;
        if violations > 0 {
            if self.metrics.dominance_violations == 0 {
                let msg = format!("slot {}: an exploiting bid reached an exploring bid", self.t);
                warn!("{msg}");
                self.metrics.warnings.push(msg);
            }
            self.metrics.dominance_violations += violations;
        }
    }

    fn track_epoch(&mut self, selected: &[Option<usize>]) {
        if !self.spec.policy.kind.is_auction() {
            return;
        }
        let Some(p) = self.params else { return };
        let t = self.t;
        let n = self.queues.len();
        if (t - 1).is_multiple_of(p.epoch_len) {
            self.watch = Some(EpochWatch {
                epoch: p.epoch_of(t),
                start: t,
                q0: self.queues.clone(),
                n_explorers: self.exploring.iter().filter(|&&e| e).count(),
                profile: vec![None; n],
                last_change: t,
            });
        }
        let Some(watch) = self.watch.as_mut() else { return };
        let last_converge = watch.start + p.converge_len - 1;
        if t > last_converge {
            return;
        }
        let mut profile = vec![None; n];
        for r in &self.requests {
            profile[r.agent] = r.target;
        }
        if t == watch.start || profile != watch.profile {
            watch.profile = profile;
            watch.last_change = t;
        }
        if t == last_converge {
            let watch = self.watch.take().expect("present");
            let record = evaluate_epoch(&self.spec, &p, &watch, &self.requests, selected);
            self.metrics.epochs.push(record);
        }
    }
}

fn placeholder_params() -> EpochParams {
    EpochParams {
        check_period: 3,
        converge_len: 1,
        epoch_len: 2,
        xi: 0.0,
        mode: crate::params::ParamMode::Tuned,
        slackness: 1.0,
    }
}

fn evaluate_epoch(
    spec: &SimulationSpec,
    p: &EpochParams,
    watch: &EpochWatch,
    requests: &[Request],
    selected: &[Option<usize>],
) -> EpochRecord {
    let cfg = &spec.config;
    let (n, k) = (cfg.n_queues, cfg.n_servers);
    let mut data = Vec::with_capacity(n * k);
    for i in 0..n {
        let q = watch.q0[i].unwrap_or(0) as f64;
        data.extend(cfg.service_rates[i].iter().map(|m| m * q));
    }
    let w = WeightMatrix::new(n, k, data).expect("finite weights");
    let opt = max_weight_matching(&w).1;

    let mut assignment = vec![None; n];
    let mut prices = vec![0.0; k];
    let mut load = vec![0usize; k];
    for r in requests {
        if let Some(j) = r.target {
            load[j] += 1;
            prices[j] = f64::max(prices[j], r.bid);
        }
    }
    for (j, s) in selected.iter().enumerate() {
        if let Some(i) = *s {
            assignment[i] = Some(j);
        }
    }
    let sigma = Matching { assignment };
    let weight = sigma.value(&w);
    let converged = load.iter().all(|&c| c <= 1);
    let slackness_ok = converged
        && check_complementary_slackness(
            &sigma,
            &DualCertificate::from_prices(&w, prices),
            &w,
            p.price_step(),
            DEFAULT_TOL,
        )
        .is_empty();
    EpochRecord {
        epoch: watch.epoch,
        start: watch.start,
        converge_slot: converged.then_some(watch.last_change),
        matching_weight: weight,
        opt_weight: opt,
        weight_ratio: if opt > 0.0 { weight / opt } else { 1.0 },
        slackness_ok,
        n_explorers: watch.n_explorers,
    }
}
