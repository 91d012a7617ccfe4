//! `bsgame`: runs paired joint/fixed association experiments and writes
//! plot-ready CSV, or checks the 3-SAT reduction on a DIMACS file.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use bsgame_core::experiment::{emit_outputs, run_experiment, ExperimentPlan};
use bsgame_core::gadget::{check_reduction, ThreeSatInstance};
use bsgame_core::{Error, GameMode, ScenarioConfig};
use clap::{Parser, ValueEnum};

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_IO: u8 = 1;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Joint,
    Fixed,
    Both,
}

#[derive(Debug, Parser)]
#[command(name = "bsgame", version, about = "Joint BS association and covariance game for uplink MIMO HetNets")]
struct Args {
    /// Scenario file in `key = value` format; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "both")]
    mode: ModeArg,

    #[arg(long, default_value_t = 5)]
    trials: u64,

    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,

    /// Comma separated SNR values in dB.
    #[arg(long, value_delimiter = ',', default_value = "0,10,20,30", allow_hyphen_values = true)]
    snr_list: Vec<f64>,

    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Check the 3-SAT reduction on a DIMACS CNF file instead of running trials.
    #[arg(long, value_name = "SATFILE")]
    np_check: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) | Error::InvalidPlacement(_) | Error::InvalidCnf(_) => EXIT_CONFIG,
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
        _ => EXIT_SOLVER,
    }
}

fn fail(context: &str, e: Error, code: u8) -> ExitCode {
    eprintln!("bsgame: {context}: {e}");
    ExitCode::from(code)
}

fn np_check(path: &PathBuf) -> ExitCode {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(&path.display().to_string(), e.into(), EXIT_CONFIG),
    };
    let sat = match ThreeSatInstance::parse_dimacs(&text) {
        Ok(s) => s,
        Err(e) => return fail(&path.display().to_string(), e, EXIT_CONFIG),
    };
    match check_reduction(&sat) {
        Ok(report) => {
            print!("{}", report.verdict());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = exit_code(&e);
            fail("reduction check", e, code)
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(path) = &args.np_check {
        return np_check(path);
    }

    let mut cfg = match &args.config {
        Some(path) => match ScenarioConfig::from_path(path) {
            Ok(c) => c,
            Err(e) => return fail(&path.display().to_string(), e, EXIT_CONFIG),
        },
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let plan = ExperimentPlan {
        trials: args.trials,
        snr_db: args.snr_list.clone(),
        modes: match args.mode {
            ModeArg::Joint => vec![GameMode::Joint],
            ModeArg::Fixed => vec![GameMode::Fixed],
            ModeArg::Both => vec![GameMode::Joint, GameMode::Fixed],
        },
    };
    if plan.trials == 0 || plan.snr_db.is_empty() {
        eprintln!("bsgame: need at least one trial and one SNR value");
        return ExitCode::from(EXIT_CONFIG);
    }

    let results = match run_experiment(&cfg, &plan) {
        Ok(r) => r,
        Err(e) => {
            let code = exit_code(&e);
            return fail("experiment", e, code);
        }
    };
    if let Err(e) = emit_outputs(&results, &args.out) {
        return fail(&args.out.display().to_string(), e, EXIT_IO);
    }
    let unconverged = results.iter().filter(|r| !r.trace.converged).count();
    println!(
        "{} runs written to {} ({} hit the sweep limit)",
        results.len(),
        args.out.display(),
        unconverged
    );
    ExitCode::SUCCESS
}
