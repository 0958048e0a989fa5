//! Epoch structure: check period `T_c`, converge length `T_s`, epoch length `L`.
//!
//! ```text
//! ξ   = ε² / (3200 K² (log N + K))
//! T_c = ⌈max(3, (2 / ln(1−δ))², 2 ln ξ / ln(1−δ))⌉
//!
//! theoretical:  T_s = ⌈99 K T_c (log N + K) / ε⌉       L = ⌈(32/ε + 1) T_s⌉
//! tuned:        T_s = ⌈K T_c (log N + K) / (4ε)⌉        L = ⌈2 T_s / ε⌉
//! ```
//!
//! The price increment of the converge phase is `(1/16)·ε·w` in theoretical
//! mode and `0.5·ε·w` in tuned mode.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ParamMode {
    Theoretical,
    #[default]
    Tuned,
}

/// Base of the `log N` term in `ξ` and `T_s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochParams {
    pub check_period: u64,
    pub converge_len: u64,
    pub epoch_len: u64,
    pub xi: f64,
    pub mode: ParamMode,
    /// The `ε` the parameters were derived from.
    pub slackness: f64,
}

impl EpochParams {
    /// Multiplier `c` in the price increment `c·ε·w`.
    pub fn step_coefficient(&self) -> f64 {
        match self.mode {
            ParamMode::Theoretical => 1.0 / 16.0,
            ParamMode::Tuned => 0.5,
        }
    }

    /// Price increment as a fraction of the weight, `c·ε`.
    pub fn price_step(&self) -> f64 {
        self.step_coefficient() * self.slackness
    }

    /// Start slot of 1-based epoch `index`.
    pub fn epoch_start(&self, index: u64) -> u64 {
        (index - 1) * self.epoch_len + 1
    }

    /// 1-based epoch containing slot `t`.
    pub fn epoch_of(&self, t: u64) -> u64 {
        (t - 1) / self.epoch_len + 1
    }

    /// First epoch start at or after slot `t`.
    pub fn next_epoch_start(&self, t: u64) -> u64 {
        (t - 1).div_ceil(self.epoch_len) * self.epoch_len + 1
    }
}

fn check_inputs(eps: f64, delta: f64, n: usize, k: usize) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("ε must lie in (0, 1], got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "δ must lie in (0, 1) so that ln(1 − δ) is finite and nonzero, got {delta}"
        )));
    }
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter("N and K must be at least 1".into()));
    }
    Ok(())
}

/// Returns `(ξ, T_c)`.
fn check_period(eps: f64, delta: f64, n: usize, k: usize, base: LogBase) -> (f64, u64) {
    let kf = k as f64;
    let xi = eps * eps / (3200.0 * kf * kf * (base.log(n as f64) + kf));
    let ln_miss = (1.0 - delta).ln();
    let tc = 3f64
        .max((2.0 / ln_miss).powi(2))
        .max(2.0 * xi.ln() / ln_miss)
        .ceil();
    (xi, tc as u64)
}

pub fn compute_params(
    mode: ParamMode,
    eps: f64,
    delta: f64,
    n: usize,
    k: usize,
    base: LogBase,
) -> Result<EpochParams> {
    check_inputs(eps, delta, n, k)?;
    let (xi, tc) = check_period(eps, delta, n, k, base);
    let kf = k as f64;
    let spread = base.log(n as f64) + kf;
    let (ts, l) = match mode {
        ParamMode::Theoretical => {
            let ts = (99.0 * kf * tc as f64 * spread / eps).ceil();
            (ts, ((32.0 / eps + 1.0) * ts).ceil())
        }
        ParamMode::Tuned => {
            let ts = (kf * tc as f64 * spread / (4.0 * eps)).ceil();
            (ts, (2.0 * ts / eps).ceil())
        }
    };
    Ok(EpochParams {
        check_period: tc,
        converge_len: ts as u64,
        epoch_len: l as u64,
        xi,
        mode,
        slackness: eps,
    })
}

pub fn compute_theoretical_params(eps: f64, delta: f64, n: usize, k: usize) -> Result<EpochParams> {
    compute_params(ParamMode::Theoretical, eps, delta, n, k, LogBase::Natural)
}

pub fn compute_tuned_params(eps: f64, delta: f64, n: usize, k: usize) -> Result<EpochParams> {
    compute_params(ParamMode::Tuned, eps, delta, n, k, LogBase::Natural)
}
