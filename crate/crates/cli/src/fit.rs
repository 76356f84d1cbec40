use std::path::PathBuf;

use clap::Args;
use cryomos::fitting::{calibrate, FitProblem};
use cryomos::formats::{parse_fit_config, parse_sweep, write_error_table, write_fit_result, write_library};
use cryomos::library::{calibrate_reference_sets, default_anchor_table, default_calibration_options};
use cryomos::optimize::Options;
use cryomos::Error;
use rayon::prelude::*;

use crate::output::{at, emit, emit_side, json, read, relative_to, CliResult, Failure, EXIT_UNCONVERGED};
use crate::Global;

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Fit config: a [fit] section listing sweeps and free parameters, and the
    /// starting [model].
    pub config: PathBuf,
    /// Largest acceptable mean relative current error; overrides the config.
    #[arg(long)]
    pub threshold: Option<f64>,
}

pub fn run(args: &FitArgs, g: &Global) -> CliResult<()> {
    let cfg = at(&args.config, parse_fit_config(&read(&args.config)?))?;
    let sweeps = cfg
        .sweeps
        .par_iter()
        .map(|s| {
            let p = relative_to(&args.config, s);
            at(&p, parse_sweep(&read(&p)?))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let problem = FitProblem { sweeps, free: cfg.free.clone(), initial: cfg.initial };
    let defaults = Options::default();
    let opts = Options {
        seed: g.seed.unwrap_or(defaults.seed),
        max_iter: cfg.max_iter.unwrap_or(defaults.max_iter),
        restarts: cfg.restarts.unwrap_or(defaults.restarts),
        ..defaults
    };
    let result = calibrate(&problem, &opts)?;

    if g.json {
        emit(g, &format!("{}.json", cfg.name), &json(&result))?;
    } else {
        emit(g, &format!("{}.params", cfg.name), &write_fit_result(&cfg.name, &result))?;
        emit_side(g, &format!("{}.errors.csv", cfg.name), &write_error_table(&result.per_temperature))?;
    }

    let threshold = args.threshold.unwrap_or(cfg.threshold);
    let within = result.mean_rel_error < threshold || result.mean_rel_error == 0.0;
    if result.converged && within {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_UNCONVERGED,
            message: format!(
                "fit {}: mean relative error {:.4e} (threshold {threshold}), converged = {}; best parameters written",
                cfg.name, result.mean_rel_error, result.converged
            ),
        })
    }
}

pub fn run_calibrate(g: &Global) -> CliResult<()> {
    let mut opts = default_calibration_options();
    if let Some(seed) = g.seed {
        opts.seed = seed;
    }
    match calibrate_reference_sets(&default_anchor_table(), &opts) {
        Ok(lib) => {
            if g.json {
                emit(g, "reference.json", &json(&lib))
            } else {
                emit(g, "reference.params", &write_library(&lib))
            }
        }
        Err(Error::Infeasible(unmet)) => Err(Failure {
            code: EXIT_UNCONVERGED,
            message: format!("anchors not met: {}", unmet.join("; ")),
        }),
        Err(e) => Err(e.into()),
    }
}
