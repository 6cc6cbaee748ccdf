//! Experiment harness: instance generation, attacks, sweeps and galleries
//! of exceptional polynomials, all writing CSV.

mod commands;
mod config;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{CliError, CliResult, Settings};

#[derive(Parser)]
#[command(name = "noisy-interp", version, about = "Noisy polynomial interpolation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Write a seeded random instance (poly.txt, observations.csv, instance.cfg).
    Gen,
    /// Exact coefficient recovery, on an instance directory or on seeded trials.
    Attack,
    /// Approximate recovery on [0, 2h) with an error profile.
    Approx,
    /// The predictor S over a range of d.
    Predict,
    /// Flat polynomial and its value profile.
    Flat,
    /// Oscillating polynomial and the audit of f = d + p c.
    Oscillate,
    /// Brute-force N_F(I, J) next to its reference bound.
    Nfij,
    /// Approximate-recovery success across a range of d.
    Sweep,
}

#[derive(Args, Default)]
struct Flags {
    #[arg(long, global = true)]
    n: Option<String>,
    #[arg(long, global = true)]
    k: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    h: Option<String>,
    #[arg(long, global = true)]
    delta: Option<String>,
    #[arg(long = "delta-exp", global = true)]
    delta_exp: Option<String>,
    #[arg(long = "prime-bits", global = true)]
    prime_bits: Option<String>,
    #[arg(long, global = true)]
    prime: Option<String>,
    #[arg(long, global = true)]
    d: Option<String>,
    #[arg(long = "d-min", global = true)]
    d_min: Option<String>,
    #[arg(long = "d-max", global = true)]
    d_max: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    trials: Option<String>,
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Output file (a directory for `gen`); CSV goes to stdout when absent.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Instance directory written by `gen`.
    #[arg(long, global = true)]
    instance: Option<String>,
    /// uniform, extremal or exact.
    #[arg(long, global = true)]
    noise: Option<String>,
    /// Profile extent in multiples of h.
    #[arg(long, global = true)]
    extent: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    d0: Option<String>,
    /// random or power.
    #[arg(long, global = true)]
    poly: Option<String>,
    #[arg(long = "interval-start", global = true, allow_hyphen_values = true)]
    interval_start: Option<String>,
    #[arg(long = "target-start", global = true, allow_hyphen_values = true)]
    target_start: Option<String>,
    #[arg(long = "target-len", global = true)]
    target_len: Option<String>,
    /// key=value file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

impl Flags {
    fn into_map(self) -> BTreeMap<String, String> {
        let pairs = [
            ("n", self.n),
            ("k", self.k),
            ("h", self.h),
            ("delta", self.delta),
            ("delta-exp", self.delta_exp),
            ("prime-bits", self.prime_bits),
            ("prime", self.prime),
            ("d", self.d),
            ("d-min", self.d_min),
            ("d-max", self.d_max),
            ("seed", self.seed),
            ("trials", self.trials),
            ("grid", self.grid),
            ("out", self.out),
            ("instance", self.instance),
            ("noise", self.noise),
            ("extent", self.extent),
            ("d0", self.d0),
            ("poly", self.poly),
            ("interval-start", self.interval_start),
            ("target-start", self.target_start),
            ("target-len", self.target_len),
        ];
        pairs.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))).collect()
    }
}

fn run(cli: Cli) -> CliResult<bool> {
    let file = cli.flags.config.clone();
    let settings = Settings::load(file.as_deref(), cli.flags.into_map())?;
    let report = match cli.command {
        Command::Gen => commands::gen(&settings)?,
        Command::Attack => commands::attack(&settings)?,
        Command::Approx => commands::approx(&settings)?,
        Command::Predict => commands::predict(&settings)?,
        Command::Flat => commands::flat(&settings)?,
        Command::Oscillate => commands::oscillate(&settings)?,
        Command::Nfij => commands::nfij(&settings)?,
        Command::Sweep => commands::sweep(&settings)?,
    };
    let summary = report.summary.to_string();
    let out = match cli.command {
        Command::Gen => None,
        _ => settings.opt::<PathBuf>("out")?,
    };
    match (report.csv, out) {
        (Some(csv), Some(path)) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            }
            std::fs::write(&path, csv).map_err(|e| CliError::io(&path, e))?;
            println!("{summary}");
        }
        (Some(csv), None) => {
            print!("{csv}");
            eprintln!("{summary}");
        }
        (None, _) => println!("{summary}"),
    }
    Ok(!report.negative)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
