//! `ctl` — experiment runner for one-dimensional convex transport costs.
//!
//! One subcommand per experiment; each runs a built-in verification config
//! unless `--config` points at a JSON file. Exit code 0 iff every margin in
//! the run is above −1e−9.

use clap::{Parser, Subcommand};
use ctl::cli::{self, ExperimentConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ctl",
    about = "transport-cost experiments between one-dimensional laws",
    version
)]
struct Args {
    #[command(subcommand)]
    experiment: Experiment,
    /// JSON experiment config (defaults to a built-in verification grid)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// worker-pool size for grid points
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// RNG seed override (Monte Carlo experiments)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// output directory for the CSV table and JSON summary
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Experiment {
    /// exact Poisson-normal costs vs the uniform-in-lambda constants
    PoissonW2,
    /// Monte Carlo second moment of the dyadic Poisson-normal coupling
    DyadicMc,
    /// exact transport costs of S_n vs the matching uniform-in-n bound
    Cost,
    /// parameterized bound families over exact transport values
    BoundCheck,
    /// convergence of kappa(S_n, G_n) to its asymptotic constant
    Converge,
    /// maximal-tail and weak-moment checks on the coupling law Z_n
    Tails,
    /// dump every named constant with its verification row
    Constants,
}

impl Experiment {
    fn tag(&self) -> &'static str {
        match self {
            Experiment::PoissonW2 => "poisson_w2",
            Experiment::DyadicMc => "dyadic_mc",
            Experiment::Cost => "cost",
            Experiment::BoundCheck => "bound_check",
            Experiment::Converge => "converge",
            Experiment::Tails => "tails",
            Experiment::Constants => "constants",
        }
    }
}

fn load_config(args: &Args) -> ctl::Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let cfg = ExperimentConfig::from_json(&text)?;
            if cfg.spec.tag() != args.experiment.tag() {
                return Err(ctl::Error::Config(format!(
                    "config is for '{}' but the subcommand is '{}'",
                    cfg.spec.tag(),
                    args.experiment.tag()
                )));
            }
            cfg
        }
        None => cli::default_config(args.experiment.tag())?,
    };
    if let Some(jobs) = args.jobs {
        config.jobs = Some(jobs);
    }
    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }
    if let Some(out) = &args.out {
        config.out_dir = Some(out.clone());
    }
    if config.out_dir.is_none() {
        config.out_dir = Some(PathBuf::from("."));
    }
    Ok(config)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match load_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("ctl: {e}");
            return ExitCode::from(2);
        }
    };
    match cli::run(&config) {
        Ok(summary) => {
            println!(
                "{}: {} rows, {} pass, {} fail ({:.1} s){}",
                summary.experiment,
                summary.rows,
                summary.passes,
                summary.failures,
                summary.wall_seconds,
                summary
                    .csv_path
                    .as_deref()
                    .map(|p| format!(" -> {p}"))
                    .unwrap_or_default()
            );
            if summary.all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("ctl: {e}");
            ExitCode::from(2)
        }
    }
}
