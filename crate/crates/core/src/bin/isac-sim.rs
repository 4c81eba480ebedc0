use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};

use isac_v2i::config::SimConfig;
use isac_v2i::experiment::{run_experiment, ExperimentSpec};
use isac_v2i::metrics::Scheme;
use isac_v2i::plots::emit_plot_data;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    IsacDb,
    IsacAb,
    EkfPoint,
    Abp,
    All,
}

impl SchemeArg {
    fn schemes(self) -> Vec<Scheme> {
        match self {
            SchemeArg::IsacDb => vec![Scheme::IsacDb],
            SchemeArg::IsacAb => vec![Scheme::IsacAb],
            SchemeArg::EkfPoint => vec![Scheme::EkfPoint],
            SchemeArg::Abp => vec![Scheme::Abp],
            SchemeArg::All => Scheme::ALL.to_vec(),
        }
    }
}

/// Monte Carlo simulator for sensing-assisted predictive beamforming towards
/// an extended vehicle.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// TOML configuration; unspecified keys keep the reference scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    scheme: SchemeArg,
    /// Monte Carlo runs; defaults to the configured count.
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated speeds in m/s for the outage sweep.
    #[arg(long, value_delimiter = ',')]
    velocity_sweep: Vec<f64>,
    /// Outage threshold in bits/s/Hz.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Force every noise source to zero.
    #[arg(long)]
    zero_noise: bool,
}

fn run(args: Args) -> anyhow::Result<()> {
    let mut cfg = match &args.config {
        Some(path) => SimConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => SimConfig::default(),
    };
    if args.zero_noise {
        cfg.zero_noise = true;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
    if let Some(gamma) = args.gamma {
        cfg.gamma = gamma;
    }
    let spec = ExperimentSpec {
        schemes: args.scheme.schemes(),
        runs: cfg.runs,
        seed: cfg.seed,
        velocity_sweep: args.velocity_sweep,
        gamma: cfg.gamma,
        out_dir: args.out,
    };
    run_experiment(&spec, &cfg).context("running experiment")?;
    emit_plot_data(&spec.out_dir).context("writing plot data")?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
