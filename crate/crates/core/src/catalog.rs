//! Reference instances.
//!
//! `f1`–`f6` are the benchmark systems; `ex-failure` is the two-queue
//! system on which any fixed assignment is unstable.

use crate::error::{Error, Result};
use crate::model::{ArrivalSchedule, SystemConfig};
use crate::policy::{PolicyKind, PolicySpec};

pub const DEFAULT_HORIZON: u64 = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceCatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub config: SystemConfig,
    pub horizon: u64,
    pub policy: PolicySpec,
    pub refresh_probability: Option<f64>,
}

fn entry(
    name: &'static str,
    summary: &'static str,
    config: SystemConfig,
    policy: PolicySpec,
) -> InstanceCatalogEntry {
    InstanceCatalogEntry { name, summary, config, horizon: DEFAULT_HORIZON, policy, refresh_probability: None }
}

/// N = K = 4, one fast server shared by all queues.
pub fn f1() -> InstanceCatalogEntry {
    let n = 4.0;
    let slow = (n - 1.0) / (n * n);
    let row = vec![1.0, slow, slow, slow];
    let cfg = SystemConfig::new(vec![(n + 1.0) / (n * n); 4], vec![row; 4], 0.25, 0.1875);
    entry("f1", "N=K=4, small slackness and rate floor", cfg, PolicySpec::new(PolicyKind::DamUcb))
}

/// N = K = 8 with two fast servers.
pub fn f2() -> InstanceCatalogEntry {
    let row: Vec<f64> = [0.9, 0.9].into_iter().chain([0.4; 6]).collect();
    let cfg = SystemConfig::new(vec![0.4; 8], vec![row; 8], 0.3125, 0.4);
    entry("f2", "N=K=8, two fast servers", cfg, PolicySpec::new(PolicyKind::DamUcb))
}

/// N = 64, K = 4: four busy queues and sixty light ones.
pub fn f3() -> InstanceCatalogEntry {
    let lambda: Vec<f64> = (0..64).map(|i| if i < 4 { 0.3 } else { 1.0 / 600.0 }).collect();
    let row = vec![1.0, 0.4, 0.4, 0.4];
    // The largest feasible slackness is exactly 9/13, just under 0.7.
    let cfg = SystemConfig::new(lambda, vec![row; 64], 9.0 / 13.0, 0.4);
    entry("f3", "N=64, K=4, many light queues", cfg, PolicySpec::new(PolicyKind::DamUcb))
}

/// N = K = 3 with arrival rates cycling every 10⁴ slots.
pub fn f4() -> InstanceCatalogEntry {
    let row = vec![1.0, 0.5, 0.3];
    let phases = vec![vec![0.7, 0.5, 0.3], vec![0.5, 0.5, 0.5], vec![0.4, 0.8, 0.2]];
    let cfg = SystemConfig::new(phases[0].clone(), vec![row; 3], 0.2, 0.3)
        .with_schedule(ArrivalSchedule { period: 10_000, phases });
    entry("f4", "N=K=3, periodically switching arrivals", cfg, PolicySpec::new(PolicyKind::DamUcb))
}

/// N = K = 4 where queue 1 is equally fast everywhere.
pub fn f5() -> InstanceCatalogEntry {
    let mut mu = vec![vec![1.0; 4]];
    mu.extend((1..4).map(|_| vec![1.0, 0.5, 0.4, 0.2]));
    let cfg = SystemConfig::new(vec![5.0 / 6.0, 0.7, 0.5, 0.4], mu, 0.1875, 0.2);
    entry("f5", "N=K=4, asymmetric service rates", cfg, PolicySpec::new(PolicyKind::DamUcb))
}

/// Two queues, two servers; queue 2 is replaced at epoch starts.
pub fn f6() -> InstanceCatalogEntry {
    let cfg = SystemConfig::new(vec![0.7, 0.4], vec![vec![0.9, 0.3], vec![0.3, 0.9]], 2.0 / 7.0, 0.3);
    InstanceCatalogEntry {
        horizon: 100_000,
        refresh_probability: Some(1.0),
        ..entry("f6", "2x2 with queue 2 refreshed each epoch", cfg, PolicySpec::new(PolicyKind::DynDamUcb))
    }
}

/// Two queues that both stick to the fast server.
pub fn ex_failure() -> InstanceCatalogEntry {
    let cfg = SystemConfig::new(vec![0.5, 0.5], vec![vec![0.8, 0.4], vec![0.8, 0.4]], 0.2, 0.4);
    InstanceCatalogEntry {
        horizon: 100_000,
        ..entry(
            "ex-failure",
            "2x2 where every fixed assignment is unstable",
            cfg,
            PolicySpec::new(PolicyKind::Fixed).with_fixed_targets(vec![0, 0]),
        )
    }
}

pub fn catalog() -> Vec<InstanceCatalogEntry> {
    vec![f1(), f2(), f3(), f4(), f5(), f6(), ex_failure()]
}

pub fn lookup(name: &str) -> Result<InstanceCatalogEntry> {
    catalog()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownInstance(name.to_string()))
}
