use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use otfs_sim::{
    config::{AngleMode, ExperimentConfig, PropagationMode},
    experiments, selftest, to_csv, to_json, ResultRecord, SimError,
};

#[derive(Parser)]
#[command(name = "otfs-sim", version, about = "OTFS large-array receiver simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory to write `<subcommand>.<format>` into; stdout otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Full-size frame (M=512, N=128) instead of desk scale.
    #[arg(long, global = true)]
    full: bool,

    /// Propagation model.
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,

    /// Beam directions: true path angles or scanned peaks.
    #[arg(long, global = true, value_enum)]
    angles: Option<AnglesArg>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Bit and symbol error rates over the SNR sweep.
    Ber,
    /// Channel-estimation MSE over the pilot SNR sweep.
    Mse,
    /// Pilot and guard overhead of every pattern.
    Overhead,
    /// Array gain table, closed form checked against the direct sum.
    Arraygain,
    /// Detection runtime against B*M*N.
    Scaling,
    /// Oracle-equivalence checks, one PASS/FAIL line each.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Ber => "ber",
            Command::Mse => "mse",
            Command::Overhead => "overhead",
            Command::Arraygain => "arraygain",
            Command::Scaling => "scaling",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(ValueEnum, Clone, Copy)]
enum ModeArg {
    Ideal,
    Time,
}

#[derive(ValueEnum, Clone, Copy)]
enum AnglesArg {
    Genie,
    Scan,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, SimError> {
    let base = if cli.full {
        ExperimentConfig::full()
    } else {
        ExperimentConfig::desk()
    };
    let mut cfg = match &cli.config {
        Some(path) => base.apply_text(&std::fs::read_to_string(path)?)?,
        None => base,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = cli.mode {
        cfg.mode = match mode {
            ModeArg::Ideal => PropagationMode::Ideal,
            ModeArg::Time => PropagationMode::Time,
        };
    }
    if let Some(angles) = cli.angles {
        cfg.angles = match angles {
            AnglesArg::Genie => AngleMode::Genie,
            AnglesArg::Scan => AngleMode::Scan,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(cli: &Cli, records: &[ResultRecord]) -> Result<(), SimError> {
    let (text, ext) = match cli.format {
        Format::Csv => (to_csv(records)?, "csv"),
        Format::Json => (to_json(records)?, "json"),
    };
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(format!("{}.{ext}", cli.command.name())), text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, SimError> {
    let cfg = load_config(cli)?;
    let records = match cli.command {
        Command::Ber => experiments::run_ber(&cfg)?,
        Command::Mse => experiments::run_mse(&cfg)?,
        Command::Overhead => experiments::run_overhead(&cfg)?,
        Command::Arraygain => experiments::run_arraygain(&cfg)?,
        Command::Scaling => experiments::run_scaling(&cfg)?,
        Command::Selftest => {
            let checks = selftest::run_checks(cfg.seed)?;
            for c in &checks {
                println!("{}", c.line());
            }
            if cli.out.is_some() {
                emit(cli, &selftest::records(&checks, cfg.seed))?;
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
    };
    emit(cli, &records)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: usage: {first}");
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: selftest: at least one check failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
