//! `cryomos`: extraction, fitting, model emission and circuit benchmarks for
//! cryogenic MOSFETs.
//!
//! Exit codes: 0 success, 1 I/O or parse failure, 2 partial extraction,
//! 3 unconverged or out-of-tolerance fit.

mod bench;
mod extract;
mod fit;
mod model;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::output::Failure;

#[derive(Parser, Debug)]
#[command(name = "cryomos", version, about = "Cryogenic MOSFET modeling toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for the optimizer's restart perturbations.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write result files into this directory instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Emit JSON instead of CSV or parameter text.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract threshold, swing, transconductance and mobility from sweep CSVs.
    Extract(extract::ExtractArgs),
    /// Fit model parameters to sweeps listed in a fit config.
    Fit(fit::FitArgs),
    /// Emit model transfer or output characteristics.
    Model(model::ModelArgs),
    /// Compare technologies on ring oscillator, flip-flop and power benchmarks.
    Bench(bench::BenchArgs),
    /// Emit the freeze-out threshold shift of a gate stack.
    Physics(model::PhysicsArgs),
    /// Recalibrate the reference library from its anchor table.
    Calibrate,
}

fn main() -> ExitCode {
    // Usage errors share exit code 1 with other bad input; 2 is reserved.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(output::EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let g = &cli.global;
    let result = match &cli.command {
        Command::Extract(a) => extract::run(a, g),
        Command::Fit(a) => fit::run(a, g),
        Command::Model(a) => model::run(a, g),
        Command::Bench(a) => bench::run(a, g),
        Command::Physics(a) => model::run_physics(a, g),
        Command::Calibrate => fit::run_calibrate(g),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("cryomos: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

impl From<cryomos::Error> for Failure {
    fn from(e: cryomos::Error) -> Self {
        Failure::input(e.to_string())
    }
}
