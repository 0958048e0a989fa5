use std::io::Write;

use rayon::prelude::*;

use super::metrics::{epoch_fields, MetricsSeries, EPOCH_HEADER};
use super::{Simulation, SimulationSpec};
use crate::error::Result;

/// Pointwise mean and standard error across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSeries {
    pub seeds: Vec<u64>,
    pub mean_weighted: Vec<f64>,
    pub stderr_weighted: Vec<f64>,
    pub mean_total: Vec<f64>,
    pub stderr_total: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Replications {
    pub runs: Vec<MetricsSeries>,
    pub aggregate: AggregateSeries,
}

impl Replications {
    /// Per-run objectives `(1/T) Σ_t Σ_i λ_i Q_i(t)`.
    pub fn objectives(&self) -> Vec<f64> {
        self.runs.iter().map(MetricsSeries::objective).collect()
    }

    /// Mean and standard error of the per-run objectives.
    pub fn objective_summary(&self) -> (f64, f64) {
        mean_stderr(&self.objectives())
    }

    pub fn write_epoch_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["seed"];
        header.extend(EPOCH_HEADER);
        w.write_record(&header)?;
        for (seed, run) in self.aggregate.seeds.iter().zip(&self.runs) {
            for e in &run.epochs {
                let mut rec = vec![seed.to_string()];
                rec.extend(epoch_fields(e));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

impl AggregateSeries {
    pub fn from_runs(seeds: Vec<u64>, runs: &[MetricsSeries]) -> Self {
        let len = runs.iter().map(|r| r.weighted_sum.len()).min().unwrap_or(0);
        let mut out = AggregateSeries {
            seeds,
            mean_weighted: Vec::with_capacity(len),
            stderr_weighted: Vec::with_capacity(len),
            mean_total: Vec::with_capacity(len),
            stderr_total: Vec::with_capacity(len),
        };
        let mut buf = Vec::with_capacity(runs.len());
        for t in 0..len {
            buf.clear();
            buf.extend(runs.iter().map(|r| r.weighted_sum[t]));
            let (m, s) = mean_stderr(&buf);
            out.mean_weighted.push(m);
            out.stderr_weighted.push(s);
            buf.clear();
            buf.extend(runs.iter().map(|r| r.total[t] as f64));
            let (m, s) = mean_stderr(&buf);
            out.mean_total.push(m);
            out.stderr_total.push(s);
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["slot", "mean_weighted_sum", "stderr_weighted_sum", "mean_total_queue", "stderr_total_queue"])?;
        for t in 0..self.mean_weighted.len() {
            w.write_record([
                (t + 1).to_string(),
                self.mean_weighted[t].to_string(),
                self.stderr_weighted[t].to_string(),
                self.mean_total[t].to_string(),
                self.stderr_total[t].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sample mean and standard error (`s/√n`, 0 for a single value).
pub fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Runs seeds `master_seed, …, master_seed + n − 1` in parallel. Results are
/// ordered by seed, so output does not depend on scheduling.
pub fn run_replications(spec: &SimulationSpec, n_seeds: usize) -> Result<Replications> {
    let seeds: Vec<u64> = (0..n_seeds as u64).map(|s| spec.master_seed.wrapping_add(s)).collect();
    let runs = seeds
        .par_iter()
        .map(|&seed| Ok(Simulation::new(spec.clone().with_seed(seed))?.run_to_end()))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = AggregateSeries::from_runs(seeds, &runs);
    Ok(Replications { runs, aggregate })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_stderr_examples() {
        assert_eq!(mean_stderr(&[3.0]), (3.0, 0.0));
        let (m, s) = mean_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
