use std::process::Command;

use qsim::catalog;
use qsim::harness::{cmd_sweep_refresh, Experiment};
use qsim::model::SystemConfig;
use qsim::params::ParamMode;
use qsim::policy::{PolicyKind, PolicySpec};
use qsim::sim::{mean_stderr, run, run_replications, ServiceMode, SimulationSpec};

fn qsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qsim"))
}

#[test]
fn single_replication_has_no_spread() {
    let e = catalog::f6();
    let spec = SimulationSpec::new(e.config, PolicySpec::new(PolicyKind::DynDamUcb), 5_000, 9).with_refresh(0.5);
    let reps = run_replications(&spec, 1).unwrap();
    let solo = run(&spec).unwrap();
    assert_eq!(reps.runs[0], solo);
    assert!(reps.aggregate.stderr_total.iter().all(|&s| s == 0.0));
    assert_eq!(reps.objective_summary(), (solo.objective(), 0.0));
}

#[test]
fn fifteen_replications_and_shrinking_error() {
    let e = catalog::f1();
    let spec = SimulationSpec::new(e.config, PolicySpec::new(PolicyKind::MaxWeight), 2_000, 1);
    assert_eq!(run_replications(&spec, 15).unwrap().runs.len(), 15);

    let mut small = Vec::new();
    let mut large = Vec::new();
    for rep in 0..20u64 {
        let s = spec.clone().with_seed(1_000 * rep);
        small.push(run_replications(&s, 4).unwrap().objective_summary().1);
        large.push(run_replications(&s, 8).unwrap().objective_summary().1);
    }
    assert!(mean_stderr(&large).0 <= mean_stderr(&small).0);
}

#[test]
fn forced_auction_epochs_meet_the_weight_bound() {
    let cfg = SystemConfig::new(vec![0.2, 0.3], vec![vec![1.0, 0.5], vec![0.5, 1.0]], 1.0, 0.5);
    let policy = PolicySpec::new(PolicyKind::DamK).with_mode(ParamMode::Theoretical);
    let p = policy.epoch_params(&cfg).unwrap();
    let mut spec = SimulationSpec::new(cfg, policy, 2 * p.epoch_len + p.converge_len, 4);
    spec.service_mode = ServiceMode::Forced;
    spec.initial_queues = Some(vec![40, 7]);
    let m = run(&spec).unwrap();
    assert_eq!(m.epochs.len(), 3);
    for e in &m.epochs {
        assert!(e.converge_slot.is_some());
        assert!(e.weight_ratio >= 1.0 - 1.0 / 16.0, "{e:?}");
        assert!(e.slackness_ok);
    }
}

#[test]
fn empty_first_epoch_counts_as_optimal() {
    let e = catalog::f6();
    let m = run(&SimulationSpec::new(e.config, PolicySpec::new(PolicyKind::DamUcb), 3_000, 2)).unwrap();
    let first = &m.epochs[0];
    assert_eq!((first.opt_weight, first.weight_ratio), (0.0, 1.0));
}

#[test]
fn exploring_bids_dominate_on_instance_two() {
    let e = catalog::f2();
    let m = run(&SimulationSpec::new(e.config, PolicySpec::new(PolicyKind::DamFe), 120_000, 5)).unwrap();
    assert_eq!(m.dominance_violations, 0, "{:?}", m.warnings);
    assert!(m.epochs.iter().all(|r| r.n_explorers <= 8));
    assert!(m.epochs.iter().any(|r| r.n_explorers > 0));
}

#[test]
fn refreshed_queue_breaks_forced_exploration() {
    // Queue 2 explores every epoch and takes server 1 about half the time, so
    // queue 1 is served at rate ≤ 0.6 < 0.7.
    let e = catalog::f6();
    let horizon = 60_000;
    let fe = run(&SimulationSpec::new(e.config.clone(), PolicySpec::new(PolicyKind::DynDamFe), horizon, 3).with_refresh(1.0))
        .unwrap();
    let ucb = run(&SimulationSpec::new(e.config, PolicySpec::new(PolicyKind::DynDamUcb), horizon, 3).with_refresh(1.0))
        .unwrap();
    assert!(fe.final_queues[0].unwrap() as f64 >= 0.05 * horizon as f64);
    assert!(ucb.final_queues[0].unwrap() < fe.final_queues[0].unwrap() / 4);
}

#[test]
fn refresh_sweep_end_points() {
    let mut base = Experiment::from_catalog(&catalog::f6());
    base.spec.horizon = 100_000;
    base.seeds = 2;
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let kinds = [PolicyKind::DynDamFe, PolicyKind::DynDamUcb];
    let rows = cmd_sweep_refresh(&base, &[0.0, 1.0], &kinds, &out).unwrap();
    assert_eq!(rows.len(), 4);
    let get = |p: f64, k| rows.iter().find(|r| r.p == p && r.policy == k).unwrap().mean_total;
    assert!(get(1.0, PolicyKind::DynDamFe) > 5.0 * get(1.0, PolicyKind::DynDamUcb));

    // With p = 0 nobody is ever replaced, so the run matches the static system.
    for kind in kinds {
        let mut spec = base.spec.clone();
        spec.policy = PolicySpec::new(kind);
        spec.refresh_probability = None;
        let reps = run_replications(&spec, 2).unwrap();
        let per_run: Vec<f64> =
            reps.runs.iter().map(|r| r.total.iter().sum::<u64>() as f64 / r.total.len() as f64).collect();
        assert_eq!(mean_stderr(&per_run).0, get(0.0, kind));
    }
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("p,policy,mean_total_queue,stderr_total_queue\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn every_catalog_entry_runs_under_every_policy() {
    for e in catalog::catalog() {
        for kind in PolicyKind::ALL {
            let mut policy = PolicySpec::new(kind);
            if kind == PolicyKind::Fixed {
                policy.fixed_targets = e.policy.fixed_targets.clone();
            }
            let m = run(&SimulationSpec::new(e.config.clone(), policy, 1_500, 1)).unwrap();
            assert_eq!(m.horizon(), 1_500, "{} {kind}", e.name);
        }
    }
}

#[test]
fn cli_run_writes_two_csvs_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = qsim()
        .args(["run", "--instance", "f2", "--policy", "dam-ucb", "--horizon", "3000", "--seeds", "2", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("f2") && stdout.contains("dam-ucb"));
    let slots = std::fs::read_to_string(dir.path().join("f2_dam-ucb_slots.csv")).unwrap();
    assert_eq!(slots.lines().count(), 3001);
    assert!(dir.path().join("f2_dam-ucb_epochs.csv").exists());
}

#[test]
fn cli_seed_falls_back_to_environment() {
    let run_with = |env: Option<&str>, flag: Option<&str>| {
        let dir = tempfile::tempdir().unwrap();
        let mut c = qsim();
        c.args(["run", "--instance", "f6", "--horizon", "2000", "--out-dir"]).arg(dir.path());
        if let Some(s) = flag {
            c.args(["--seed", s]);
        }
        match env {
            Some(s) => c.env("QSIM_SEED", s),
            None => c.env_remove("QSIM_SEED"),
        };
        assert!(c.status().unwrap().success());
        std::fs::read(dir.path().join("f6_dyn-dam-ucb_slots.csv")).unwrap()
    };
    assert_eq!(run_with(Some("77"), None), run_with(None, Some("77")));
    assert_ne!(run_with(Some("77"), None), run_with(Some("78"), None));
}

#[test]
fn cli_warns_about_zero_rates_under_ucb() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.toml");
    std::fs::write(
        &cfg,
        "n_queues = 2\nn_servers = 2\nslackness = 0.2\nrate_floor = 0.5\n\
         arrival_rates = [0.3, 0.3]\nservice_rates = [[0.9, 0.0], [0.0, 0.9]]\n\
         [policy]\nkind = \"dam-ucb\"\n[simulation]\nhorizon = 1000\n",
    )
    .unwrap();
    let out = qsim().arg("run").arg("--config").arg(&cfg).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("warning"));
}

#[test]
fn cli_forced_service_mode_changes_the_run() {
    let read = |mode: &str| {
        let dir = tempfile::tempdir().unwrap();
        let ok = qsim()
            .args(["run", "--instance", "ex-failure", "--horizon", "2000", "--service-mode", mode, "--out-dir"])
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(ok.success());
        std::fs::read_to_string(dir.path().join("ex-failure_fixed_slots.csv")).unwrap()
    };
    let forced = read("forced");
    // Both queues share the server that now always succeeds, so service keeps pace with arrivals.
    let last = forced.lines().last().unwrap().split(',').nth(3).unwrap().parse::<f64>().unwrap();
    assert!(last < 50.0, "{last}");
    assert_ne!(forced, read("stochastic"));
}

#[test]
fn cli_refuses_infeasible_slackness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.toml");
    std::fs::write(
        &cfg,
        "n_queues = 1\nn_servers = 1\nslackness = 1.0\nrate_floor = 0.5\n\
         arrival_rates = [0.6]\nservice_rates = [[1.0]]\n",
    )
    .unwrap();
    let out = qsim().arg("run").arg("--config").arg(&cfg).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("slackness"));
}

#[test]
fn cli_params_solve_and_catalog() {
    let out = qsim().args(["params", "--eps", "1", "--delta", "0.5", "-n", "1", "-k", "1"]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("78408") && text.contains("2376"));

    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("w.csv");
    std::fs::write(&m, "2,1\n1,2\n").unwrap();
    let out = qsim().arg("solve").arg(&m).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("value = 4"), "{text}");
    assert!(text.contains("complementary slackness: ok"));

    let out = qsim().arg("catalog").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    for e in catalog::catalog() {
        assert!(text.contains(e.name));
    }
}
