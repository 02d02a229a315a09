//! Command-line front end: calibration, planning, weight sweeps and slot simulation.

mod calibrate;
mod error;
mod plan;
mod simulate;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lbcac::model::{ObjectiveWeights, Scenario, ScenarioFile};

use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "lbcac", version, about = "Load-balanced call admission planning for SIP server networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit resource cost coefficients to a measurement dataset.
    Calibrate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = Target::Both)]
        target: Target,
        /// Also write the fitted coefficients as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic calibration dataset generated from known coefficients.
    GenDataset {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Upper bound of the additive measurement noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// alpha1,alpha2,beta1,beta2; defaults to the reference testbed values.
        #[arg(long, value_delimiter = ',', num_args = 4)]
        coeffs: Option<Vec<f64>>,
    },
    /// Write one of the bundled load scenarios as a scenario file.
    Fixture {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        number: u8,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the admission model for one scenario and write the plan.
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario's weights (exactly one gamma:phi pair).
        #[arg(long, value_delimiter = ',', value_parser = parse_weights)]
        weights: Vec<ObjectiveWeights<f64>>,
        /// Round the plan down to whole calls before writing it.
        #[arg(long)]
        round: bool,
        /// Cross-check the optimum against the path-based formulation.
        #[arg(long)]
        oracle_check: bool,
        /// Longest path the cross-check enumerates; defaults to n - 1.
        #[arg(long)]
        max_hops: Option<usize>,
        /// Also write the linear program as `model.lp`.
        #[arg(long)]
        dump_lp: bool,
    },
    /// Solve one scenario for several weight pairs and report the trend.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// gamma:phi pairs; defaults to the four-point f1..f4 sweep.
        #[arg(long, value_delimiter = ',', value_parser = parse_weights)]
        weights: Vec<ObjectiveWeights<f64>>,
    },
    /// Replay the controller's duty cycle over a number of time slots.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        slots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Expected fraction of admitted calls that fail on the servers.
        #[arg(long, default_value_t = 0.0)]
        overhead: f64,
        #[arg(long, value_delimiter = ',', value_parser = parse_weights)]
        weights: Vec<ObjectiveWeights<f64>>,
        /// Re-queue blocked calls for the next slot.
        #[arg(long)]
        hold_on: bool,
        /// Perturb each slot's demand by a uniform factor in [1 - s, 1 + s].
        #[arg(long)]
        spread: Option<f64>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    Cpu,
    Mem,
    Both,
}

fn parse_weights(s: &str) -> Result<ObjectiveWeights<f64>, String> {
    let (g, p) = s.split_once(':').ok_or_else(|| format!("expected gamma:phi, got '{s}'"))?;
    let gamma: f64 = g.trim().parse().map_err(|_| format!("bad gamma '{g}'"))?;
    let phi: f64 = p.trim().parse().map_err(|_| format!("bad phi '{p}'"))?;
    ObjectiveWeights::new(gamma, phi).map_err(|e| e.to_string())
}

/// Loads a scenario file and applies an optional single weight override.
pub(crate) fn load_scenario(path: &Path, weights: &[ObjectiveWeights<f64>]) -> CliResult<(String, Scenario<f64>)> {
    let file = ScenarioFile::load(path)?;
    let mut scenario = file.into_scenario::<f64>()?;
    match weights {
        [] => {}
        [w] => scenario = scenario.with_weights(*w),
        _ => return Err(CliError::input("--weights takes a single gamma:phi pair here")),
    }
    let name = file
        .name
        .clone()
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_default();
    Ok((name, scenario))
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Calibrate { dataset, target, out } => {
            let (cpu, mem) = match target {
                Target::Cpu => (true, false),
                Target::Mem => (false, true),
                Target::Both => (true, true),
            };
            calibrate::calibrate(&dataset, cpu, mem, out.as_deref())
        }
        Command::GenDataset { out, samples, seed, noise, coeffs } => {
            calibrate::gen_dataset(&out, samples, seed, noise, coeffs.as_deref())
        }
        Command::Fixture { number, out } => {
            std::fs::write(out, lbcac::fixtures::scenario_file(number as usize).to_json())?;
            Ok(())
        }
        Command::Plan { scenario, out, weights, round, oracle_check, max_hops, dump_lp } => {
            let opts = plan::PlanOptions { round, oracle_check, max_hops, dump_lp };
            plan::plan(&scenario, &out, &weights, &opts)
        }
        Command::Sweep { scenario, out, weights } => sweep::sweep(&scenario, &out, &weights),
        Command::Simulate { scenario, out, slots, seed, overhead, weights, hold_on, spread } => {
            let opts = simulate::SimOptions { slots, seed, overhead, hold_on, spread };
            simulate::simulate(&scenario, &out, &weights, &opts)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
