//! Command-line front end for valforge.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use valforge::synthesis::Parity;

use crate::commands::{Output, Settings};
use crate::config::ExperimentConfig;
pub use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "valforge",
    version,
    about = "Mixed volumes, spanning ellipsoid families and valuation synthesis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON experiment configuration; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Sphere grid degree.
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for output files.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the spanning ellipsoid family and certify it on a grid.
    SpanningCheck {
        #[command(flatten)]
        common: Common,
        /// Replace the family by unit balls (negative control).
        #[arg(long, hide = true)]
        all_balls: bool,
    },
    /// Mixed volume of the configured bodies by every applicable route.
    MixedVolume {
        #[command(flatten)]
        common: Common,
    },
    /// Synthesize a finite combination for the configured kernel and verify it.
    Synthesize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_parity)]
        parity: Option<Parity>,
        #[arg(long)]
        test_bodies: Option<usize>,
    },
    /// Re-check a saved combination against its kernel.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long)]
        test_bodies: Option<usize>,
    },
    /// Divergence sweep for the non-uniformly-continuous valuation.
    Counterexample {
        #[command(flatten)]
        common: Common,
        /// `start:stop:count`, log-spaced.
        #[arg(long)]
        eps_sweep: Option<String>,
        /// Single eps instead of a sweep.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Steiner polynomial coefficients of one configured body.
    Steiner {
        #[command(flatten)]
        common: Common,
    },
}

fn parse_parity(s: &str) -> Result<Parity, String> {
    match s {
        "even" => Ok(Parity::Even),
        "odd" => Ok(Parity::Odd),
        "none" => Ok(Parity::None),
        _ => Err(format!("expected even, odd or none, got {s:?}")),
    }
}

fn settings(c: &Common) -> CliResult<Settings> {
    let config = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    Settings::new(config, c.n, c.k, c.degree, c.tol, c.seed, c.out.clone())
}

/// Runs a command and writes its files into the output directory, if any.
pub fn run(cli: &Cli) -> CliResult<Output> {
    let (s, out) = match &cli.command {
        Command::SpanningCheck { common, all_balls } => {
            let s = settings(common)?;
            let o = commands::spanning_check(&s, *all_balls)?;
            (s, o)
        }
        Command::MixedVolume { common } => {
            let s = settings(common)?;
            let o = commands::mixed_volume(&s)?;
            (s, o)
        }
        Command::Synthesize {
            common,
            parity,
            test_bodies,
        } => {
            let s = settings(common)?;
            let o = commands::synthesize_and_verify(&s, *parity, *test_bodies)?;
            (s, o)
        }
        Command::Verify {
            common,
            artifact,
            test_bodies,
        } => {
            let s = settings(common)?;
            let o = commands::verify(&s, artifact, common.degree, *test_bodies)?;
            (s, o)
        }
        Command::Counterexample {
            common,
            eps_sweep,
            eps,
        } => {
            let s = settings(common)?;
            let o = commands::counterexample(&s, eps_sweep.as_deref(), *eps)?;
            (s, o)
        }
        Command::Steiner { common } => {
            let s = settings(common)?;
            let o = commands::steiner(&s)?;
            (s, o)
        }
    };
    if let Some(dir) = &s.out {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in &out.files {
            std::fs::write(dir.join(name), contents)?;
        }
    }
    Ok(out)
}

/// Caps the global thread pool from `VALFORGE_THREADS`.
pub fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("VALFORGE_THREADS") else {
        return Ok(());
    };
    let threads: usize = v.trim().parse().ok().filter(|t| *t > 0).ok_or_else(|| {
        CliError::Input(format!(
            "VALFORGE_THREADS must be a positive integer, got {v:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(CliError::input)
}
