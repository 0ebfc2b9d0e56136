//! `ionprobe`: runs the probe simulations and writes figure-ready tables.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use config::{Overrides, Preset, RunConfig, Settings};
use ionprobe::EstimationTarget;
use output::Output;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ionprobe", version, about = "Single-probe noise metrology simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Noise-free preset: no dephasing, perfect preparation, instantaneous pulses.
    #[arg(long, global = true, conflicts_with = "imperfect")]
    ideal: bool,
    /// Laboratory preset: 80 us Gaussian dephasing, 10% preparation error,
    /// pulses filling 30% of the spacing (the default).
    #[arg(long, global = true)]
    imperfect: bool,
    /// Run only the controlled variant.
    #[arg(long, global = true, conflicts_with = "uncontrolled")]
    controlled: bool,
    /// Run only the uncontrolled variant.
    #[arg(long, global = true)]
    uncontrolled: bool,
    /// Parameter to estimate.
    #[arg(long, global = true, value_parser = parse_target)]
    target: Option<EstimationTarget>,
}

#[derive(Subcommand)]
enum Command {
    /// Fisher information bound against observation time.
    QfiCurve,
    /// Monte-Carlo inverse sensitivity against observation time, with fits.
    Sensitivity,
    /// QFI over control frequency and phase.
    Scan2d,
    /// Log-log fit and chi-square map of a sensitivity table.
    Fit(FitArgs),
    /// Dark matter coupling reach.
    Alp,
}

#[derive(Args)]
struct FitArgs {
    /// Table written by `sensitivity`.
    dataset: PathBuf,
    /// Slope axis of the map, `lo,hi`.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    slope_range: Option<[f64; 2]>,
    /// Intercept axis of the map, `lo,hi`.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    intercept_range: Option<[f64; 2]>,
    /// Grid points per axis.
    #[arg(long)]
    resolution: Option<usize>,
}

fn parse_target(s: &str) -> Result<EstimationTarget, String> {
    s.parse().map_err(|e: ionprobe::Error| e.to_string())
}

fn parse_range(s: &str) -> Result<[f64; 2], String> {
    let (lo, hi) = s.split_once(',').ok_or("expected lo,hi")?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}"));
    Ok([parse(lo)?, parse(hi)?])
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    let file = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut flags = Overrides {
        seed: c.seed,
        preset: match (c.ideal, c.imperfect) {
            (true, _) => Some(Preset::Ideal),
            (_, true) => Some(Preset::Imperfect),
            _ => None,
        },
        controlled: match (c.controlled, c.uncontrolled) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        },
        target: c.target,
        ..Overrides::default()
    };
    if let Command::Fit(args) = &cli.command {
        flags.slope_range = args.slope_range;
        flags.intercept_range = args.intercept_range;
        flags.resolution = args.resolution;
    }
    let settings = Settings::resolve(file, &flags).context("invalid configuration")?;
    let name = match &cli.command {
        Command::QfiCurve => "qfi-curve",
        Command::Sensitivity => "sensitivity",
        Command::Scan2d => "scan2d",
        Command::Fit(_) => "fit",
        Command::Alp => "alp",
    };
    log::info!("running {name} ({} mode, {} threads)", ionprobe::par::MODE, ionprobe::par::num_threads());
    let mut out = Output::new(&c.out, name, &settings)?;
    let result = match &cli.command {
        Command::QfiCurve => commands::qfi_curve_cmd(&settings, &mut out),
        Command::Sensitivity => commands::sensitivity_cmd(&settings, &mut out),
        Command::Scan2d => commands::scan2d_cmd(&settings, &mut out),
        Command::Fit(args) => commands::fit_cmd(&settings, &args.dataset, &mut out),
        Command::Alp => commands::alp_cmd(&settings, &mut out),
    };
    for path in out.written() {
        println!("{}", path.display());
    }
    result.map_err(|e| anyhow!("{name}: {e:#}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
