//! Command-line surface of the common-midpoint imaging laboratory.
//!
//! Subcommands: `simulate` (scene -> sinogram), `reconstruct`
//! (sinogram -> image + peak table), `diagnose` (canonical-relation
//! classification tables), `verify` (identity/oracle/cutoff suites) and
//! `selftest` (fast end-to-end smoke test). Exit code 0 means every
//! enabled check passed its threshold.

mod adjoint_check;
mod cmd_diagnose;
mod cmd_reconstruct;
mod cmd_selftest;
mod cmd_simulate;
mod cmd_verify;
mod config;
mod oracle;
mod report;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "cmsar",
    about = "Common-midpoint SAR imaging laboratory",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration (defaults apply when omitted)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one config entry by dotted path, e.g.
    /// --set pulse.center_frequency=12
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,

    /// Output directory (overrides the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Random seed (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; CMSAR_WORKERS is the fallback, default all cores
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Also write 8-bit PGM previews of grids and sinograms
    #[arg(long, global = true)]
    emit_pgm: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize a scene and run the forward model
    Simulate {
        /// Scene spec JSON (overrides scene_path in the config)
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Check per-row peak times against the point's bistatic range
        #[arg(long)]
        self_test: bool,
    },
    /// Backproject a sinogram and tabulate peaks against predicted
    /// artifact locations
    Reconstruct {
        /// Sinogram file (default: OUT/sinogram.cmsar)
        #[arg(long)]
        sinogram: Option<PathBuf>,
        /// Scene spec used for artifact predictions
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Run the forward/adjoint dot-product test as well
        #[arg(long)]
        adjoint_test: bool,
    },
    /// Sample the canonical relation and classify both projections
    Diagnose,
    /// Run the identity, generator, composition-oracle and
    /// cutoff-constant suites
    Verify,
    /// Fast end-to-end smoke test at small sizes
    Selftest,
}

/// Shared command context.
pub struct Ctx {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub emit_pgm: bool,
}

fn main() {
    let code = match run() {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("one or more checks failed");
            1
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    };
    std::process::exit(code);
}

fn run() -> Result<bool> {
    let cli = Cli::parse();

    let workers = cli.workers.or_else(|| {
        std::env::var("CMSAR_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("initializing the worker pool")?;
    }

    let mut cfg = config::load_config(cli.config.as_deref(), &cli.sets)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.display().to_string();
    }
    let ctx = Ctx {
        out: PathBuf::from(&cfg.out_dir),
        emit_pgm: cli.emit_pgm,
        cfg,
    };

    match &cli.command {
        Command::Simulate { scene, self_test } => {
            cmd_simulate::run(&ctx, scene.as_deref(), *self_test)
        }
        Command::Reconstruct {
            sinogram,
            scene,
            adjoint_test,
        } => cmd_reconstruct::run(&ctx, sinogram.as_deref(), scene.as_deref(), *adjoint_test),
        Command::Diagnose => cmd_diagnose::run(&ctx),
        Command::Verify => cmd_verify::run(&ctx),
        Command::Selftest => cmd_selftest::run(&ctx),
    }
}
