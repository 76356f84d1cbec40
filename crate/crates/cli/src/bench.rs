use std::path::PathBuf;

use clap::Args;
use cryomos::circuits::{compare_technologies, ComparisonRow, Technology};
use cryomos::formats::{parse_bench_config, parse_library, write_bench_csv};
use cryomos::library::{bench_summary, shipped, ReferenceLibrary, Verdict};
use serde::Serialize;

use crate::output::{at, emit, emit_side, json, read, relative_to, CliResult};
use crate::Global;

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Scenario config: a [bench] section and an optional [circuit] override.
    pub config: PathBuf,
    /// Reference library; overrides the config. Defaults to the shipped one.
    #[arg(long)]
    pub library: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report<'a> {
    rows: &'a [ComparisonRow],
    summary: &'a [Verdict],
}

fn summary_text(v: &[Verdict]) -> String {
    let mut out = String::new();
    for x in v {
        let tag = if x.pass { "PASS" } else { "FAIL" };
        let r = |v: f64| (v * 1e6).round() / 1e6;
        out.push_str(&format!("{tag} {}: {:.4} in [{}, {}]\n", x.label, x.value, r(x.lo), r(x.hi)));
    }
    out
}

pub fn run(args: &BenchArgs, g: &Global) -> CliResult<()> {
    let cfg = at(&args.config, parse_bench_config(&read(&args.config)?))?;
    let lib_path = args
        .library
        .clone()
        .or_else(|| cfg.library.as_deref().map(|p| relative_to(&args.config, p)));
    let mut lib: ReferenceLibrary = match &lib_path {
        Some(p) => at(p, parse_library(&read(p)?))?,
        None => shipped()?,
    };
    if let Some(c) = cfg.circuit {
        lib.bench = Some(c);
    }
    let setup = lib.bench()?;
    let techs = cfg
        .technologies
        .iter()
        .map(|t| lib.technology(t))
        .collect::<cryomos::Result<Vec<Technology>>>()?;
    let grid: Vec<(f64, f64)> = cfg.vdd.iter().flat_map(|&v| cfg.t.iter().map(move |&t| (v, t))).collect();
    let rows = compare_technologies(&techs, &grid, &setup)?;
    let summary = bench_summary(&lib)?;

    if g.json {
        emit(g, "bench.json", &json(&Report { rows: &rows, summary: &summary }))
    } else {
        emit(g, "bench.csv", &write_bench_csv(&rows))?;
        emit_side(g, "bench_summary.txt", &summary_text(&summary))
    }
}
