use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use irs_twr::optimizers::Method;
use irs_twr::sim::{
    load_config, run_convergence_trace, run_distance_sweep, run_size_sweep, write_csv, write_csv_to, ExperimentConfig,
    RateMetric,
};
use irs_twr::{Error, Result};

/// Monte Carlo experiments for IRS-aided two-way decode-and-forward relaying.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rate versus the IRS/relay horizontal offset d.
    SweepDistance(Overrides),
    /// Rate versus the number of IRS elements N.
    SweepSize(Overrides),
    /// Per-iteration GPI objective and slot-1 sum rate.
    Convergence(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// TOML configuration; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// IRS elements; a comma-separated list for sweep-size and convergence.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Relay antennas.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    d_min: Option<f64>,
    #[arg(long)]
    d_max: Option<f64>,
    #[arg(long)]
    d_step: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated subset of gpi, maxmin, evd, random, only_rs.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    seed: Option<u64>,
    /// system, slot1_sum or slot1_min.
    #[arg(long)]
    metric: Option<RateMetric>,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn config(&self, single_n: bool) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(n) = &self.n {
            if single_n {
                match n.as_slice() {
                    [one] => cfg.n_elements = *one,
                    _ => return Err(Error::Config("--n takes a single value for sweep-distance".into())),
                }
            } else {
                cfg.element_counts = Some(n.clone());
            }
        }
        if let Some(m) = self.m {
            cfg.m_antennas = m;
        }
        if let Some(v) = self.d_min {
            cfg.d_min = v;
        }
        if let Some(v) = self.d_max {
            cfg.d_max = v;
        }
        if let Some(v) = self.d_step {
            cfg.d_step = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = &self.methods {
            cfg.methods = Some(v.clone());
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.metric {
            cfg.rate_metric = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn emit<T: serde::Serialize>(&self, rows: &[T]) -> Result<()> {
        match &self.out {
            Some(path) => write_csv(rows, path),
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                write_csv_to(rows, &mut lock)?;
                lock.flush()?;
                Ok(())
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SweepDistance(o) => o.emit(&run_distance_sweep(&o.config(true)?)?),
        Command::SweepSize(o) => o.emit(&run_size_sweep(&o.config(false)?)?),
        Command::Convergence(o) => o.emit(&run_convergence_trace(&o.config(false)?)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
