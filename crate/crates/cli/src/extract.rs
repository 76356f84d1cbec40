use std::path::{Path, PathBuf};

use clap::Args;
use cryomos::extraction::{extract_all, extract_single, ExtractionReport, Y_MAX_VDS};
use cryomos::formats::{parse_sweep, write_reports_csv};
use cryomos::sweep::IvSweep;
use rayon::prelude::*;

use crate::output::{at, emit, json, read, CliResult, Failure, EXIT_PARTIAL};
use crate::Global;

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// Sweep CSV files or directories of them.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    /// On/off ratio for the required-overdrive figure.
    #[arg(long, default_value_t = 1e7)]
    pub ratio: f64,
}

fn collect(paths: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = std::fs::read_dir(p).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?;
            for entry in entries {
                let path = entry.map_err(|e| Failure::input(e.to_string()))?.path();
                if path.is_file() && path.extension().is_some_and(|x| x == "csv") {
                    files.push(path);
                }
            }
        } else {
            files.push(p.clone());
        }
    }
    files.sort();
    files.dedup();
    Ok(files)
}

fn device_name(path: &Path, s: &IvSweep) -> String {
    s.device
        .clone()
        .unwrap_or_else(|| path.file_stem().map_or_else(String::new, |x| x.to_string_lossy().into_owned()))
}

/// Sweeps of one device at one temperature. A linear/saturation pair is
/// extracted jointly; anything else sweep by sweep.
fn extract_group(device: &str, sweeps: &[&IvSweep], ratio: f64) -> cryomos::Result<Vec<ExtractionReport>> {
    if let [a, b] = sweeps {
        let (lin, sat) = if a.vds <= b.vds { (a, b) } else { (b, a) };
        if lin.vds <= Y_MAX_VDS && sat.vds > Y_MAX_VDS && lin.geom == sat.geom {
            return Ok(vec![extract_all(device, lin, sat, ratio)?]);
        }
    }
    sweeps.iter().map(|s| extract_single(device, s, ratio)).collect()
}

pub fn run(args: &ExtractArgs, g: &Global) -> CliResult<()> {
    let files = collect(&args.paths)?;
    if files.is_empty() {
        return Err(Failure::input("no sweep files found"));
    }
    let sweeps = files
        .par_iter()
        .map(|p| at(p, parse_sweep(&read(p)?)))
        .collect::<CliResult<Vec<IvSweep>>>()?;

    // Groups keep the order of their first file.
    let mut groups: Vec<(String, u64, Vec<&IvSweep>)> = Vec::new();
    for (path, s) in files.iter().zip(&sweeps) {
        let name = device_name(path, s);
        match groups.iter_mut().find(|(n, t, _)| *n == name && *t == s.t.to_bits()) {
            Some(grp) => grp.2.push(s),
            None => groups.push((name, s.t.to_bits(), vec![s])),
        }
    }
    let reports: Vec<ExtractionReport> = groups
        .par_iter()
        .map(|(name, _, members)| extract_group(name, members, args.ratio))
        .collect::<cryomos::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    if g.json {
        emit(g, "reports.json", &json(&reports))?;
    } else {
        emit(g, "reports.csv", &write_reports_csv(&reports))?;
    }
    let partial: Vec<&str> = reports.iter().filter(|r| !r.is_complete()).map(|r| r.device.as_str()).collect();
    if partial.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_PARTIAL,
            message: format!("some extractors failed for: {}", partial.join(", ")),
        })
    }
}
