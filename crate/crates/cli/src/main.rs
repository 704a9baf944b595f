//! Monte-Carlo BER experiments from the command line.
//!
//! Three subcommands mirror the experiment engine: `sweep` runs the
//! configured SNR grid, `iters` profiles BER over message-passing
//! iterations at one SNR point, `prune` compares pruning sizes with
//! common random numbers. Each writes a CSV table and a TOML run-header
//! into the output directory.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use otfs_core::error::Error;
use otfs_core::harness::{
    run_ber_sweep, run_iteration_profile, run_pruning_profile, write_results, DetectorKind,
    ResultTable, SimConfig,
};

#[derive(Parser)]
#[command(
    name = "otfs-sim",
    version,
    about = "Delay-Doppler link simulation with sum-product detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER sweep over the configured SNR grid.
    Sweep(CommonArgs),
    /// BER after each detector iteration at one SNR point.
    Iters {
        #[command(flatten)]
        common: CommonArgs,
        /// SNR point to profile, in dB.
        #[arg(long)]
        snr_db: f64,
        /// Pruning size; defaults to the configured detector's n_i.
        #[arg(long)]
        n_i: Option<usize>,
    },
    /// Paired BER comparison across pruning sizes.
    Prune {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated pruning sizes; `full` means NM-1.
        #[arg(long, value_delimiter = ',', required = true)]
        n_i_list: Vec<String>,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file (mirrors the SimConfig fields).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: `paper` (64x128) or `desk` (16x32).
    #[arg(long)]
    preset: Option<String>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the result table and run header.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Detector override: lc-spa, canonical-spa, lmmse or map-bruteforce.
    #[arg(long)]
    detector: Option<String>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    workers: Option<usize>,
    /// SNR grid override, comma-separated dB values.
    #[arg(long, value_delimiter = ',')]
    snr_list: Option<Vec<f64>>,
    /// Stop rule override: bit errors to collect per SNR point.
    #[arg(long)]
    min_errors: Option<u64>,
    /// Stop rule override: frame cap per SNR point.
    #[arg(long)]
    max_frames: Option<u64>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let common = match &cli.command {
        Command::Sweep(c) => c,
        Command::Iters { common, .. } => common,
        Command::Prune { common, .. } => common,
    };
    let cfg = resolve_config(common)?;
    if let Some(workers) = common.workers {
        if workers == 0 {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    }

    let table = match &cli.command {
        Command::Sweep(_) => run_ber_sweep(&cfg)?,
        Command::Iters { snr_db, n_i, .. } => {
            let n_i = n_i.unwrap_or(cfg.detector.n_i);
            run_iteration_profile(&cfg, *snr_db, n_i)?
        }
        Command::Prune { n_i_list, .. } => {
            let full = cfg.n_doppler * cfg.m_delay - 1;
            let list: Result<Vec<usize>, Error> = n_i_list
                .iter()
                .map(|s| {
                    if s == "full" {
                        Ok(full)
                    } else {
                        s.parse::<usize>()
                            .map_err(|_| Error::Config(format!("bad n_i value '{s}'")))
                    }
                })
                .collect();
            run_pruning_profile(&cfg, &list?)?
        }
    };

    print_table(&table);
    for warning in &table.meta.warnings {
        eprintln!("warning: {warning}");
    }
    let (csv_path, meta_path) = write_results(&table, &common.out)?;
    println!("results: {}", csv_path.display());
    println!("run header: {}", meta_path.display());
    Ok(())
}

fn resolve_config(common: &CommonArgs) -> Result<SimConfig, Error> {
    let mut cfg = match (&common.preset, &common.config) {
        (Some(name), _) => match name.as_str() {
            "paper" => SimConfig::paper_preset(),
            "desk" => SimConfig::desk_preset(),
            other => {
                return Err(Error::Config(format!(
                    "unknown preset '{other}' (expected paper or desk)"
                )))
            }
        },
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            SimConfig::from_toml_str(&text)?
        }
        (None, None) => SimConfig::desk_preset(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(kind) = &common.detector {
        cfg.detector_kind = kind.parse::<DetectorKind>()?;
    }
    if let Some(snr) = &common.snr_list {
        cfg.snr_grid_db = snr.clone();
    }
    if let Some(min_errors) = common.min_errors {
        cfg.min_bit_errors = min_errors;
    }
    if let Some(max_frames) = common.max_frames {
        cfg.max_frames = max_frames;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_table(table: &ResultTable) {
    println!(
        "{:>8} {:>14} {:>5} {:>6} {:>8} {:>10} {:>11} {:>12} {:>9}",
        "snr_db", "detector", "n_i", "iters", "frames", "bits", "bit_errors", "ber", "seconds"
    );
    for r in &table.rows {
        println!(
            "{:>8} {:>14} {:>5} {:>6} {:>8} {:>10} {:>11} {:>12.4e} {:>9.2}",
            r.snr_db, r.detector, r.n_i, r.iters, r.frames, r.bits, r.bit_errors, r.ber, r.seconds
        );
    }
}
