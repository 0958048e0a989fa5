use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qsim::catalog;
use qsim::harness::{self, Experiment, Overrides};
use qsim::params::{LogBase, ParamMode};
use qsim::policy::PolicyKind;
use qsim::sim::ServiceMode;

#[derive(Parser)]
#[command(name = "qsim", version, about = "Auction scheduling for bipartite queueing systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one instance or run file over several seeds.
    Run(RunArgs),
    /// Sweep the refresh probability for the dynamic learners.
    SweepRefresh(SweepArgs),
    /// Print theoretical and tuned epoch parameters.
    Params(ParamsArgs),
    /// Solve a weight matrix read from CSV.
    Solve(SolveArgs),
    /// List the built-in instances.
    Catalog,
}

#[derive(Args)]
struct Source {
    /// Built-in instance name (see `qsim catalog`).
    #[arg(long, conflicts_with = "config")]
    instance: Option<String>,
    /// TOML run file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    policy: Option<PolicyKind>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long, env = "QSIM_SEED")]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    service_mode: Option<ServiceArg>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Queue snapshot interval in slots.
    #[arg(long)]
    stride: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: Source,
    /// Comma-separated probabilities; defaults to 2^-19 … 1.
    #[arg(long, value_delimiter = ',')]
    probabilities: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_value = "dyn-dam-fe,dyn-dam-ucb")]
    policies: Vec<PolicyKind>,
    #[arg(long, default_value = "out/sweep_refresh.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct ParamsArgs {
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(short, long)]
    n: usize,
    #[arg(short, long)]
    k: usize,
    /// Use log base 2 inside T_c and T_s.
    #[arg(long)]
    log2: bool,
}

#[derive(Args)]
struct SolveArgs {
    /// Headerless CSV, one queue per row.
    matrix: PathBuf,
    /// Auction price step as a fraction of the weight.
    #[arg(long, default_value_t = 0.0625)]
    step: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ServiceArg {
    Stochastic,
    Forced,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Theoretical,
    Tuned,
}

impl Source {
    fn experiment(&self) -> qsim::Result<Experiment> {
        let mut exp = match (&self.instance, &self.config) {
            (_, Some(path)) => Experiment::load(path)?,
            (Some(name), None) => Experiment::from_catalog(&catalog::lookup(name)?),
            (None, None) => Experiment::from_catalog(&catalog::f2()),
        };
        Overrides {
            policy: self.policy,
            horizon: self.horizon,
            seeds: self.seeds,
            seed: self.seed,
            service_mode: self.service_mode.map(|m| match m {
                ServiceArg::Stochastic => ServiceMode::Stochastic,
                ServiceArg::Forced => ServiceMode::Forced,
            }),
            mode: self.mode.map(|m| match m {
                ModeArg::Theoretical => ParamMode::Theoretical,
                ModeArg::Tuned => ParamMode::Tuned,
            }),
            gamma: self.gamma,
            stride: self.stride,
        }
        .apply(&mut exp);
        Ok(exp)
    }
}

fn dispatch(cmd: Cmd) -> qsim::Result<()> {
    match cmd {
        Cmd::Run(a) => {
            let exp = a.source.experiment()?;
            let report = harness::cmd_run(&exp, &a.out_dir)?;
            print!("{}", report.summary);
            println!("wrote {} and {}", report.slot_csv.display(), report.epoch_csv.display());
        }
        Cmd::SweepRefresh(a) => {
            let mut exp = a.source.experiment()?;
            if a.source.instance.is_none() && a.source.config.is_none() {
                exp = Experiment::from_catalog(&catalog::f6());
                if let Some(n) = a.source.seeds {
                    exp.seeds = n;
                }
            }
            let grid = a.probabilities.unwrap_or_else(harness::default_refresh_grid);
            for r in harness::cmd_sweep_refresh(&exp, &grid, &a.policies, &a.out)? {
                println!("{:<12.3e} {:<12} {:>12.3} ± {:.3}", r.p, r.policy, r.mean_total, r.stderr_total);
            }
            println!("wrote {}", a.out.display());
        }
        Cmd::Params(a) => {
            let base = if a.log2 { LogBase::Two } else { LogBase::Natural };
            print!("{}", harness::cmd_params(a.eps, a.delta, a.n, a.k, base)?);
        }
        Cmd::Solve(a) => {
            let w = harness::read_weight_matrix(&a.matrix)?;
            print!("{}", harness::cmd_solve(&w, a.step)?);
        }
        Cmd::Catalog => print!("{}", harness::cmd_catalog()?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
