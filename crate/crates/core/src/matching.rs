//! Max-weight bipartite matching between queues (rows) and servers (columns),
//! plus the dual certificates used to verify approximate optimality.
//!
//! Unmatched queues are allowed on both sides, matching the `≤ 1` constraints
//! of the assignment LP. A queue is never reported as matched through a
//! zero-weight edge.

use std::fmt;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Dense `N × K` matrix of nonnegative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "weight matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "weights must be finite and nonnegative, got {bad}"
            )));
        }
        Ok(WeightMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter("ragged weight matrix".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        WeightMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        WeightMatrix { rows: self.cols, cols: self.rows, data }
    }

    pub fn scaled(&self, c: f64) -> Self {
        WeightMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|w| w * c).collect(),
        }
    }
}

/// `assignment[i]` is the server of queue `i`, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub assignment: Vec<Option<usize>>,
}

impl Matching {
    pub fn empty(n: usize) -> Self {
        Matching { assignment: vec![None; n] }
    }

    /// No two queues share a server.
    pub fn is_matching(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.assignment.iter().flatten().all(|j| seen.insert(*j))
    }

    pub fn value(&self, w: &WeightMatrix) -> f64 {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|j| w.get(i, j)))
            .sum()
    }

    /// `owner[j]` is the queue matched to server `j`.
    pub fn owners(&self, n_servers: usize) -> Vec<Option<usize>> {
        let mut owner = vec![None; n_servers];
        for (i, s) in self.assignment.iter().enumerate() {
            if let Some(j) = *s {
                owner[j] = Some(i);
            }
        }
        owner
    }
}

/// Server prices `p̂` and queue payoffs `π̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub prices: Vec<f64>,
    pub payoffs: Vec<f64>,
}

impl DualCertificate {
    /// Completes a price vector with the payoffs `π̂_i = max(max_j w_ij − p̂_j, 0)`.
    pub fn from_prices(w: &WeightMatrix, prices: Vec<f64>) -> Self {
        let payoffs = (0..w.rows())
            .map(|i| best_payoff(w.row(i), &prices))
            .collect();
        DualCertificate { prices, payoffs }
    }
}

fn best_payoff(row: &[f64], prices: &[f64]) -> f64 {
    row.iter()
        .zip(prices)
        .map(|(w, p)| w - p)
        .fold(0.0, f64::max)
}

/// Optimal matching by the Hungarian method on the zero-padded square matrix.
pub fn max_weight_matching(w: &WeightMatrix) -> (Matching, f64) {
    let (n, k) = (w.rows(), w.cols());
    let size = n.max(k);
    if n == 0 || k == 0 {
        return (Matching::empty(n), 0.0);
    }
    // Minimize −w; padded cells cost 0.
    let cost = |i: usize, j: usize| if i < n && j < k { -w.get(i, j) } else { 0.0 };
    let row_of_col = hungarian_min(size, cost);

    let mut assignment = vec![None; n];
    for (j, &i) in row_of_col.iter().enumerate() {
        if i < n && j < k && w.get(i, j) > 0.0 {
            assignment[i] = Some(j);
        }
    }
    let m = Matching { assignment };
    let value = m.value(w);
    (m, value)
}

/// Square assignment by successive shortest paths with potentials.
/// Returns, for each column, the row assigned to it.
fn hungarian_min(size: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    const NONE: usize = usize::MAX;
    // 1-based internal indexing with a virtual column 0.
    let mut u = vec![0.0f64; size + 1];
    let mut v = vec![0.0f64; size + 1];
    let mut col_row = vec![NONE; size + 1];
    let mut way = vec![0usize; size + 1];

    for row in 1..=size {
        col_row[0] = row;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[j0] = true;
            let i0 = col_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=size {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=size {
                if used[j] {
                    u[col_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_row[j0] == NONE {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_row[j0] = col_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    col_row[1..].iter().map(|&r| r - 1).collect()
}

/// Exhaustive search over all partial injective assignments.
pub fn brute_force_matching(w: &WeightMatrix) -> Result<(Matching, f64)> {
    let small = w.rows().min(w.cols());
    if small > 8 {
        return Err(Error::TooLargeForBruteForce(small));
    }
    if w.rows() > w.cols() {
        let (mt, value) = brute_force_matching(&w.transpose())?;
        let mut assignment = vec![None; w.rows()];
        for (j, s) in mt.assignment.iter().enumerate() {
            if let Some(i) = *s {
                assignment[i] = Some(j);
            }
        }
        return Ok((Matching { assignment }, value));
    }

    struct Search<'a> {
        w: &'a WeightMatrix,
        used: Vec<bool>,
        current: Vec<Option<usize>>,
        best: Vec<Option<usize>>,
        best_value: f64,
    }
    impl Search<'_> {
        fn go(&mut self, i: usize, acc: f64) {
            if i == self.w.rows() {
                if acc > self.best_value {
                    self.best_value = acc;
                    self.best = self.current.clone();
                }
                return;
            }
            self.current[i] = None;
            self.go(i + 1, acc);
            for j in 0..self.w.cols() {
                let wij = self.w.get(i, j);
                if !self.used[j] && wij > 0.0 {
                    self.used[j] = true;
                    self.current[i] = Some(j);
                    self.go(i + 1, acc + wij);
                    self.used[j] = false;
                }
            }
            self.current[i] = None;
        }
    }

    let mut s = Search {
        w,
        used: vec![false; w.cols()],
        current: vec![None; w.rows()],
        best: vec![None; w.rows()],
        best_value: 0.0,
    };
    s.go(0, 0.0);
    Ok((Matching { assignment: s.best }, s.best_value))
}

#[derive(Debug, Clone, PartialEq)]
pub enum CsViolation {
    NotAMatching,
    Dimensions,
    NegativeDual,
    /// Condition (i): an unmatched server carries a positive price.
    UnmatchedServerPriced { server: usize, price: f64 },
    /// Condition (ii): payoff is not the best surplus at the given prices.
    PayoffNotBestSurplus { queue: usize, payoff: f64, expected: f64 },
    /// Condition (iii): an unmatched queue has a positive payoff.
    UnmatchedQueuePayoff { queue: usize, payoff: f64 },
    /// Condition (iii): a queue is matched through a zero-weight edge.
    ZeroWeightMatch { queue: usize },
    /// Condition (iii): `π̂_i + p̂_σ(i) > (1 + α) w_iσ(i)`.
    SurplusTooLarge { queue: usize, lhs: f64, rhs: f64 },
}

impl fmt::Display for CsViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CsViolation::NotAMatching => write!(f, "assignment is not a matching"),
            CsViolation::Dimensions => write!(f, "dimension mismatch"),
            CsViolation::NegativeDual => write!(f, "negative price or payoff"),
            CsViolation::UnmatchedServerPriced { server, price } => {
                write!(f, "(i) unmatched server {server} has price {price}")
            }
            CsViolation::PayoffNotBestSurplus { queue, payoff, expected } => {
                write!(f, "(ii) queue {queue} payoff {payoff} != {expected}")
            }
            CsViolation::UnmatchedQueuePayoff { queue, payoff } => {
                write!(f, "(iii) unmatched queue {queue} has payoff {payoff}")
            }
            CsViolation::ZeroWeightMatch { queue } => {
                write!(f, "(iii) queue {queue} matched through a zero weight")
            }
            CsViolation::SurplusTooLarge { queue, lhs, rhs } => {
                write!(f, "(iii) queue {queue}: π̂ + p̂ = {lhs} > (1+α)w = {rhs}")
            }
        }
    }
}

/// Checks α-complementary slackness with absolute tolerance `tol`.
pub fn check_complementary_slackness(
    sigma: &Matching,
    cert: &DualCertificate,
    w: &WeightMatrix,
    alpha: f64,
    tol: f64,
) -> Vec<CsViolation> {
    let (n, k) = (w.rows(), w.cols());
    if sigma.assignment.len() != n
        || cert.prices.len() != k
        || cert.payoffs.len() != n
        || sigma.assignment.iter().flatten().any(|&j| j >= k)
    {
        return vec![CsViolation::Dimensions];
    }
    let mut out = Vec::new();
    if !sigma.is_matching() {
        out.push(CsViolation::NotAMatching);
    }
    if cert.prices.iter().chain(&cert.payoffs).any(|v| *v < -tol) {
        out.push(CsViolation::NegativeDual);
    }
    let owners = sigma.owners(k);
    for (j, owner) in owners.iter().enumerate() {
        if owner.is_none() && cert.prices[j].abs() > tol {
            out.push(CsViolation::UnmatchedServerPriced { server: j, price: cert.prices[j] });
        }
    }
    for i in 0..n {
        let payoff = cert.payoffs[i];
        let expected = best_payoff(w.row(i), &cert.prices);
        if (payoff - expected).abs() > tol {
            out.push(CsViolation::PayoffNotBestSurplus { queue: i, payoff, expected });
        }
        match sigma.assignment[i] {
            None => {
                if payoff.abs() > tol {
                    out.push(CsViolation::UnmatchedQueuePayoff { queue: i, payoff });
                }
            }
            Some(j) => {
                let wij = w.get(i, j);
                if wij <= 0.0 {
                    out.push(CsViolation::ZeroWeightMatch { queue: i });
                }
                let lhs = payoff + cert.prices[j];
                let rhs = (1.0 + alpha) * wij;
                if lhs > rhs + tol {
                    out.push(CsViolation::SurplusTooLarge { queue: i, lhs, rhs });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxReport {
    pub value: f64,
    pub optimum: f64,
    /// `value / optimum`, defined as 1 when the optimum is 0.
    pub ratio: f64,
    pub alpha: f64,
    pub holds: bool,
}

/// Compares `Σ w_iσ(i)` with `(1 − α)·OPT`.
pub fn slackness_implies_approx(sigma: &Matching, w: &WeightMatrix, alpha: f64) -> ApproxReport {
    let value = sigma.value(w);
    let optimum = match brute_force_matching(w) {
        Ok((_, v)) => v,
        Err(_) => max_weight_matching(w).1,
    };
    let ratio = if optimum > 0.0 { value / optimum } else { 1.0 };
    ApproxReport {
        value,
        optimum,
        ratio,
        alpha,
        holds: value >= (1.0 - alpha) * optimum - DEFAULT_TOL,
    }
}

/// Ascending auction with global prices and synchronous rounds. Every
/// unmatched queue with a positive best surplus bids `p_j + step·w_ij` on its
/// best server; each server keeps its highest bidder. The result satisfies
/// `step`-complementary slackness.
pub fn centralized_auction(w: &WeightMatrix, step: f64) -> Result<(Matching, DualCertificate)> {
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::InvalidParameter(format!("step fraction must lie in (0, 1), got {step}")));
    }
    let (n, k) = (w.rows(), w.cols());
    let mut prices = vec![0.0; k];
    let mut owner: Vec<Option<usize>> = vec![None; k];
    let mut assignment: Vec<Option<usize>> = vec![None; n];
    let mut retired = vec![false; n];

    let (max_w, min_pos) = w.data.iter().fold((0.0f64, f64::INFINITY), |(mx, mn), &x| {
        (mx.max(x), if x > 0.0 { mn.min(x) } else { mn })
    });
    let cap = if min_pos.is_finite() {
        let per_server = ((1.0 + step) * max_w / (step * min_pos)).ceil() as usize + 1;
        per_server.saturating_mul(k).saturating_add(n + 2)
    } else {
        1
    };

    let mut bids: Vec<Option<(usize, f64)>> = vec![None; k];
    for _ in 0..=cap {
        bids.iter_mut().for_each(|b| *b = None);
        let mut any = false;
        for i in 0..n {
            if assignment[i].is_some() || retired[i] {
                continue;
            }
            let row = w.row(i);
            let (j_star, surplus) = (0..k)
                .map(|j| (j, row[j] - prices[j]))
                .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
            if surplus <= 0.0 {
                // Prices only rise, so this queue never bids again.
                retired[i] = true;
                continue;
            }
            any = true;
            let bid = prices[j_star] + step * row[j_star];
            let slot = &mut bids[j_star];
            if slot.is_none_or(|(_, b)| bid > b) {
                *slot = Some((i, bid));
            }
        }
        if !any {
            let cert = DualCertificate::from_prices(w, prices);
            return Ok((Matching { assignment }, cert));
        }
        for (j, b) in bids.iter().enumerate() {
            if let Some((i, bid)) = *b {
                if let Some(prev) = owner[j] {
                    assignment[prev] = None;
                }
                owner[j] = Some(i);
                assignment[i] = Some(j);
                prices[j] = bid;
            }
        }
    }
    Err(Error::AuctionNonTermination(cap))
}
