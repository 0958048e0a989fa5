use std::io::Write;

use crate::error::Result;

/// Stored in place of a queue length while the queue is absent.
const ABSENT: u32 = u32::MAX;

/// One epoch of the auction mechanism, evaluated on the true rates.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: u64,
    pub start: u64,
    /// Slot from which the converge-phase request profile stopped changing,
    /// if that profile gives every server at most one request.
    pub converge_slot: Option<u64>,
    pub matching_weight: f64,
    pub opt_weight: f64,
    /// `matching_weight / opt_weight`, 1 when the optimum is 0.
    pub weight_ratio: f64,
    /// The converged profile passes the slackness check with the epoch's price step.
    pub slackness_ok: bool,
    pub n_explorers: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsSeries {
    pub n_queues: usize,
    /// `Σ_i λ_i(t) Q_i(t)` for every slot.
    pub weighted_sum: Vec<f64>,
    /// `Σ_i Q_i(t)` for every slot.
    pub total: Vec<u64>,
    pub trajectory_stride: u64,
    /// Row-major `Q_i(t)` at every `stride`-th slot, starting at slot 1.
    trajectory: Vec<u32>,
    pub epochs: Vec<EpochRecord>,
    pub dominance_violations: u64,
    pub warnings: Vec<String>,
    /// Queue lengths after the last slot.
    pub final_queues: Vec<Option<u64>>,
}

impl MetricsSeries {
    pub fn new(n_queues: usize, horizon: u64, stride: u64) -> Self {
        let cap = horizon.min(1 << 24) as usize;
        MetricsSeries {
            n_queues,
            weighted_sum: Vec::with_capacity(cap),
            total: Vec::with_capacity(cap),
            trajectory_stride: stride,
            ..Default::default()
        }
    }

    pub(crate) fn record(&mut self, t: u64, lambda: impl Fn(usize) -> f64, queues: &[Option<u64>]) {
        let mut weighted = 0.0;
        let mut total = 0;
        for (i, q) in queues.iter().enumerate() {
            if let Some(q) = *q {
                weighted += lambda(i) * q as f64;
                total += q;
            }
        }
        self.weighted_sum.push(weighted);
        self.total.push(total);
        if (t - 1).is_multiple_of(self.trajectory_stride) {
            self.trajectory
                .extend(queues.iter().map(|q| q.map_or(ABSENT, |v| v.min(ABSENT as u64 - 1) as u32)));
        }
    }

    pub fn horizon(&self) -> u64 {
        self.weighted_sum.len() as u64
    }

    /// Sampled trajectory rows as `(slot, lengths)`.
    pub fn trajectory(&self) -> impl Iterator<Item = (u64, Vec<Option<u64>>)> + '_ {
        let n = self.n_queues.max(1);
        self.trajectory.chunks(n).enumerate().map(move |(r, row)| {
            let slot = r as u64 * self.trajectory_stride + 1;
            (slot, row.iter().map(|&v| (v != ABSENT).then_some(v as u64)).collect())
        })
    }

    /// `(1/T) Σ_t Σ_i λ_i Q_i(t)`.
    pub fn objective(&self) -> f64 {
        mean(&self.weighted_sum)
    }

    /// Mean weighted sum over quarter `q ∈ {0, 1, 2, 3}` of the horizon.
    pub fn quarter_weighted(&self, q: usize) -> f64 {
        mean(quarter(&self.weighted_sum, q))
    }

    pub fn quarter_total(&self, q: usize) -> f64 {
        let part = quarter(&self.total, q);
        part.iter().map(|&v| v as f64).sum::<f64>() / part.len().max(1) as f64
    }

    /// Writes `slot,weighted_sum,total_queue,q0..` with queue cells filled on sampled slots.
    pub fn write_slot_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["slot".to_string(), "weighted_sum".into(), "total_queue".into()];
        header.extend((0..self.n_queues).map(|i| format!("q{i}")));
        w.write_record(&header)?;
        let mut rows = self.trajectory().peekable();
        for (idx, (ws, tot)) in self.weighted_sum.iter().zip(&self.total).enumerate() {
            let slot = idx as u64 + 1;
            let mut rec = vec![slot.to_string(), ws.to_string(), tot.to_string()];
            match rows.peek() {
                Some((s, _)) if *s == slot => {
                    let (_, qs) = rows.next().expect("peeked");
                    rec.extend(qs.iter().map(|q| q.map_or(String::new(), |v| v.to_string())));
                }
                _ => rec.extend(std::iter::repeat_n(String::new(), self.n_queues)),
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_epoch_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(EPOCH_HEADER)?;
        for e in &self.epochs {
            w.write_record(epoch_fields(e))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) const EPOCH_HEADER: [&str; 8] = [
    "epoch",
    "start",
    "converge_slot",
    "matching_weight",
    "opt_weight",
    "weight_ratio",
    "slackness_ok",
    "n_explorers",
];

pub(crate) fn epoch_fields(e: &EpochRecord) -> Vec<String> {
    vec![
        e.epoch.to_string(),
        e.start.to_string(),
        e.converge_slot.map_or(String::new(), |s| s.to_string()),
        e.matching_weight.to_string(),
        e.opt_weight.to_string(),
        e.weight_ratio.to_string(),
        e.slackness_ok.to_string(),
        e.n_explorers.to_string(),
    ]
}

fn quarter<T>(v: &[T], q: usize) -> &[T] {
    let n = v.len();
    &v[n * q / 4..n * (q + 1) / 4]
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}
