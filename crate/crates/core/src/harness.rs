//! Experiment plumbing behind the `qsim` binary: run files, sweeps, the
//! parameter table and the matching debugger.
//!
//! A run file is TOML with the system keys at top level and optional
//! `[policy]`, `[simulation]` and `[[dynamic]]` tables:
//!
//! ```toml
//! n_queues = 2
//! n_servers = 2
//! slackness = 0.25
//! rate_floor = 0.3
//! arrival_rates = [0.7, 0.4]
//! service_rates = [[0.9, 0.3], [0.3, 0.9]]
//!
//! [policy]
//! kind = "dyn-dam-ucb"
//!
//! [simulation]
//! horizon = 100000
//! seeds = 5
//! refresh_probability = 1.0
//! ```

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::catalog::{self, InstanceCatalogEntry};
use crate::error::{Error, Result};
use crate::matching::{
    centralized_auction, check_complementary_slackness, max_weight_matching, WeightMatrix, DEFAULT_TOL,
};
use crate::model::{max_slackness, SystemConfig, SLACKNESS_TOL};
use crate::params::{compute_params, LogBase, ParamMode};
use crate::policy::{PolicyKind, PolicySpec};
use crate::sim::{run_replications, Lifetime, Replications, ServiceMode, SimulationSpec};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulationTable {
    horizon: Option<u64>,
    seed: Option<u64>,
    seeds: Option<usize>,
    #[serde(default)]
    service_mode: Option<ServiceMode>,
    refresh_probability: Option<f64>,
    initial_queues: Option<Vec<u64>>,
    trajectory_stride: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
struct RunFile {
    #[serde(flatten)]
    system: SystemConfig,
    policy: Option<PolicySpec>,
    #[serde(default)]
    simulation: SimulationTable,
    dynamic: Option<Vec<Lifetime>>,
}

/// A fully resolved experiment: spec plus replication count and a label.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub spec: SimulationSpec,
    pub seeds: usize,
}

impl Experiment {
    pub fn from_catalog(entry: &InstanceCatalogEntry) -> Self {
        let mut spec = SimulationSpec::new(entry.config.clone(), entry.policy.clone(), entry.horizon, 1);
        spec.refresh_probability = entry.refresh_probability;
        Experiment { name: entry.name.to_string(), spec, seeds: 1 }
    }

    pub fn from_toml_str(name: &str, text: &str) -> Result<Self> {
        let file: RunFile = toml::from_str(text)?;
        file.system.ensure_valid()?;
        let sim = file.simulation;
        let mut spec = SimulationSpec::new(
            file.system,
            file.policy.unwrap_or_else(|| PolicySpec::new(PolicyKind::DamUcb)),
            sim.horizon.unwrap_or(catalog::DEFAULT_HORIZON),
            sim.seed.unwrap_or(1),
        );
        spec.service_mode = sim.service_mode.unwrap_or_default();
        spec.refresh_probability = sim.refresh_probability;
        spec.initial_queues = sim.initial_queues;
        spec.trajectory_stride = sim.trajectory_stride;
        spec.dynamic_schedule = file.dynamic;
        spec.validate()?;
        Ok(Experiment { name: name.to_string(), spec, seeds: sim.seeds.unwrap_or(1) })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
        Self::from_toml_str(name, &std::fs::read_to_string(path)?)
    }
}

/// Command-line overrides applied on top of an instance or run file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub policy: Option<PolicyKind>,
    pub horizon: Option<u64>,
    pub seeds: Option<usize>,
    pub seed: Option<u64>,
    pub service_mode: Option<ServiceMode>,
    pub mode: Option<ParamMode>,
    pub gamma: Option<f64>,
    pub stride: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, exp: &mut Experiment) {
        let spec = &mut exp.spec;
        if let Some(kind) = self.policy {
            if kind != spec.policy.kind {
                let targets = spec.policy.fixed_targets.take();
                spec.policy = PolicySpec { kind, fixed_targets: targets, ..spec.policy.clone() };
            }
        }
        if let Some(h) = self.horizon {
            spec.horizon = h;
        }
        if let Some(s) = self.seed {
            spec.master_seed = s;
        }
        if let Some(m) = self.service_mode {
            spec.service_mode = m;
        }
        if let Some(m) = self.mode {
            spec.policy.mode = m;
        }
        if let Some(g) = self.gamma {
            spec.policy.gamma = g;
        }
        if let Some(s) = self.stride {
            spec.trajectory_stride = Some(s);
        }
        if let Some(n) = self.seeds {
            exp.seeds = n;
        }
    }
}

/// Refuses configs whose declared slackness is not attainable.
pub fn ensure_slack(cfg: &SystemConfig) -> Result<()> {
    let max = max_slackness(cfg)?;
    if max < cfg.slackness - SLACKNESS_TOL {
        return Err(Error::InfeasibleSlackness { eps: cfg.slackness, max });
    }
    Ok(())
}

#[derive(Debug)]
pub struct RunReport {
    pub replications: Replications,
    pub slot_csv: PathBuf,
    pub epoch_csv: PathBuf,
    pub summary: String,
}

pub fn cmd_run(exp: &Experiment, out_dir: &Path) -> Result<RunReport> {
    ensure_slack(&exp.spec.config)?;
    if exp.seeds == 0 {
        return Err(Error::InvalidParameter("need at least one seed".into()));
    }
    let reps = run_replications(&exp.spec, exp.seeds)?;
    std::fs::create_dir_all(out_dir)?;
    let stem = format!("{}_{}", exp.name, exp.spec.policy.kind);
    let slot_csv = out_dir.join(format!("{stem}_slots.csv"));
    let epoch_csv = out_dir.join(format!("{stem}_epochs.csv"));
    reps.aggregate.write_csv(BufWriter::new(File::create(&slot_csv)?))?;
    reps.write_epoch_csv(BufWriter::new(File::create(&epoch_csv)?))?;
    let summary = summarize(&exp.name, exp.spec.policy.kind, &reps);
    Ok(RunReport { replications: reps, slot_csv, epoch_csv, summary })
}

fn summarize(name: &str, kind: PolicyKind, reps: &Replications) -> String {
    let (obj, se) = reps.objective_summary();
    let finals: Vec<f64> = reps.runs.iter().map(|r| r.total.last().copied().unwrap_or(0) as f64).collect();
    let final_mean = finals.iter().sum::<f64>() / finals.len().max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(s, "{:<12} {:<12} {:>6} {:>14} {:>10} {:>14}", "instance", "policy", "seeds", "avg Σλ·Q", "stderr", "final ΣQ");
    let _ = writeln!(s, "{:<12} {:<12} {:>6} {:>14.3} {:>10.3} {:>14.1}", name, kind, reps.runs.len(), obj, se, final_mean);
    let mut warned = std::collections::BTreeSet::new();
    for w in reps.runs.iter().flat_map(|r| &r.warnings) {
        if warned.insert(w.split(':').next_back().unwrap_or(w).trim().to_string()) {
            let _ = writeln!(s, "warning: {w}");
        }
    }
    s
}

/// Refresh probabilities `2^-19, …, 2^0`.
pub fn default_refresh_grid() -> Vec<f64> {
    (0..=19).rev().map(|e| 0.5f64.powi(e)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub p: f64,
    pub policy: PolicyKind,
    /// `(1/T) Σ_t Σ_{i present} Q_i(t)`, mean and stderr over seeds.
    pub mean_total: f64,
    pub stderr_total: f64,
}

pub fn cmd_sweep_refresh(
    base: &Experiment,
    probabilities: &[f64],
    policies: &[PolicyKind],
    out: &Path,
) -> Result<Vec<SweepRow>> {
    ensure_slack(&base.spec.config)?;
    let mut rows = Vec::new();
    for &p in probabilities {
        for &kind in policies {
            let mut spec = base.spec.clone().with_refresh(p);
            spec.policy = PolicySpec { kind, ..spec.policy.clone() };
            let reps = run_replications(&spec, base.seeds.max(1))?;
            let per_run: Vec<f64> = reps
                .runs
                .iter()
                .map(|r| r.total.iter().sum::<u64>() as f64 / r.total.len().max(1) as f64)
                .collect();
            let (mean_total, stderr_total) = crate::sim::mean_stderr(&per_run);
            rows.push(SweepRow { p, policy: kind, mean_total, stderr_total });
        }
    }
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(out)?));
    w.write_record(["p", "policy", "mean_total_queue", "stderr_total_queue"])?;
    for r in &rows {
        w.write_record([r.p.to_string(), r.policy.to_string(), r.mean_total.to_string(), r.stderr_total.to_string()])?;
    }
    w.flush()?;
    Ok(rows)
}

/// Side-by-side theoretical and tuned parameters.
pub fn cmd_params(eps: f64, delta: f64, n: usize, k: usize, base: LogBase) -> Result<String> {
    let th = compute_params(ParamMode::Theoretical, eps, delta, n, k, base)?;
    let tu = compute_params(ParamMode::Tuned, eps, delta, n, k, base)?;
    let mut s = String::new();
    let _ = writeln!(s, "ε = {eps}, δ = {delta}, N = {n}, K = {k}");
    let _ = writeln!(s, "{:<14} {:>16} {:>16}", "", "theoretical", "tuned");
    let _ = writeln!(s, "{:<14} {:>16} {:>16}", "T_c", th.check_period, tu.check_period);
    let _ = writeln!(s, "{:<14} {:>16} {:>16}", "T_s", th.converge_len, tu.converge_len);
    let _ = writeln!(s, "{:<14} {:>16} {:>16}", "L", th.epoch_len, tu.epoch_len);
    let _ = writeln!(s, "{:<14} {:>16.6e} {:>16.6e}", "ξ", th.xi, tu.xi);
    let _ = writeln!(s, "{:<14} {:>16} {:>16}", "price step", format!("{}·w", th.price_step()), format!("{}·w", tu.price_step()));
    Ok(s)
}

/// Reads a headerless CSV of nonnegative weights, one queue per row.
pub fn read_weight_matrix(path: &Path) -> Result<WeightMatrix> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|c| c.parse::<f64>().map_err(|e| Error::InvalidParameter(format!("bad weight `{c}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    WeightMatrix::from_rows(&rows)
}

/// Optimal matching plus an auction certificate for one weight matrix.
pub fn cmd_solve(w: &WeightMatrix, step: f64) -> Result<String> {
    let (opt, value) = max_weight_matching(w);
    let (m, cert) = centralized_auction(w, step)?;
    let violations = check_complementary_slackness(&m, &cert, w, step, DEFAULT_TOL);
    let fmt = |a: &[Option<usize>]| {
        a.iter().map(|s| s.map_or("-".to_string(), |j| j.to_string())).collect::<Vec<_>>().join(" ")
    };
    let mut s = String::new();
    let _ = writeln!(s, "hungarian  σ = [{}]  value = {value}", fmt(&opt.assignment));
    let _ = writeln!(s, "auction    σ = [{}]  value = {}", fmt(&m.assignment), m.value(w));
    let _ = writeln!(s, "prices   p̂ = {:?}", cert.prices);
    let _ = writeln!(s, "payoffs  π̂ = {:?}", cert.payoffs);
    if violations.is_empty() {
        let _ = writeln!(s, "{step}-complementary slackness: ok");
    } else {
        for v in violations {
            let _ = writeln!(s, "violation: {v}");
        }
    }
    Ok(s)
}

/// One line per catalog entry.
pub fn cmd_catalog() -> Result<String> {
    let mut s = String::new();
    let _ = writeln!(s, "{:<11} {:>3} {:>3} {:>8} {:>7} {:>9} {:>12}  summary", "name", "N", "K", "ε", "δ", "max ε", "policy");
    for e in catalog::catalog() {
        let c = &e.config;
        let _ = writeln!(
            s,
            "{:<11} {:>3} {:>3} {:>8.4} {:>7.4} {:>9.4} {:>12}  {}",
            e.name,
            c.n_queues,
            c.n_servers,
            c.slackness,
            c.rate_floor,
            max_slackness(c)?,
            e.policy.kind,
            e.summary
        );
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RUN: &str = r#"
        n_queues = 2
        n_servers = 2
        slackness = 0.25
        rate_floor = 0.3
        arrival_rates = [0.7, 0.4]
        service_rates = [[0.9, 0.3], [0.3, 0.9]]

        [policy]
        kind = "dyn-dam-fe"
        gamma = 0.5

        [simulation]
        horizon = 500
        seeds = 3
        service_mode = "forced"

        [[dynamic]]
        queue = 0
        join = 1

        [[dynamic]]
        queue = 1
        join = 20
        leave = 40
    "#;

    #[test]
    fn run_file_parses() {
        let e = Experiment::from_toml_str("demo", RUN).unwrap();
        assert_eq!(e.seeds, 3);
        assert_eq!(e.spec.horizon, 500);
        assert_eq!(e.spec.policy.kind, PolicyKind::DynDamFe);
        assert_eq!(e.spec.policy.gamma, 0.5);
        assert_eq!(e.spec.service_mode, ServiceMode::Forced);
        let d = e.spec.dynamic_schedule.as_ref().unwrap();
        assert_eq!(d[1], Lifetime { queue: 1, join: 20, leave: Some(40) });
    }

    #[test]
    fn run_file_rejects_bad_rates() {
        let bad = RUN.replace("[0.7, 0.4]", "[1.7, 0.4]");
        assert!(matches!(Experiment::from_toml_str("x", &bad), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn overrides_keep_fixed_targets() {
        let mut e = Experiment::from_catalog(&catalog::ex_failure());
        Overrides { policy: Some(PolicyKind::Random), seeds: Some(4), ..Default::default() }.apply(&mut e);
        assert_eq!(e.spec.policy.kind, PolicyKind::Random);
        assert_eq!(e.spec.policy.fixed_targets, Some(vec![0, 0]));
        assert_eq!(e.seeds, 4);
    }

    #[test]
    fn infeasible_slackness_is_refused() {
        let mut cfg = catalog::f1().config;
        cfg.slackness = 0.3;
        assert!(matches!(ensure_slack(&cfg), Err(Error::InfeasibleSlackness { .. })));
    }

    #[test]
    fn params_table_handles_single_queue() {
        let t = cmd_params(1.0, 0.5, 1, 1, LogBase::Natural).unwrap();
        assert!(t.contains("78408"));
        assert!(t.contains("12"));
        assert!(cmd_params(1.0, 1.0, 1, 1, LogBase::Natural).is_err());
    }

    #[test]
    fn refresh_grid_spans_twenty_values() {
        let g = default_refresh_grid();
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 0.5f64.powi(19));
        assert_eq!(*g.last().unwrap(), 1.0);
    }
}
