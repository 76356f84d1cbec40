use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use cryomos::formats::{
    fmt9, geometry_from_section, parse_document, parse_models, parse_stacks, write_freezeout_csv, write_sweep,
};
use cryomos::library::{reference_geometry, shipped};
use cryomos::model::{drain_current_signed, iv_sweep_synthesize, linear_grid, DeviceGeometry, ModelParams};
use cryomos::physics::{vth_freezeout_curve, MosStack, SiliconConstants};
use serde::Serialize;

use crate::output::{at, emit, json, read, CliResult, Failure};
use crate::Global;

#[derive(Args, Debug)]
pub struct ModelArgs {
    /// Parameter file with [model] sections; defaults to the shipped reference library.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Which [model] section to use; optional when the file has only one.
    #[arg(long)]
    pub set: Option<String>,
    /// Gate bias magnitudes: `start:stop:step`, `a,b,c` or a single value.
    #[arg(long, allow_hyphen_values = true)]
    pub vgs: String,
    /// Drain bias magnitudes, same syntax as `--vgs`.
    #[arg(long, allow_hyphen_values = true)]
    pub vds: String,
    /// Temperature (K).
    #[arg(long = "T", allow_hyphen_values = true)]
    pub t: f64,
}

#[derive(Args, Debug)]
pub struct PhysicsArgs {
    /// File with [stack] sections; defaults to the built-in bulk NMOS stack.
    #[arg(long)]
    pub stacks: Option<PathBuf>,
    /// Which [stack] section to use; optional when the file has only one.
    #[arg(long)]
    pub stack: Option<String>,
    /// Temperatures (K), same syntax as the model bias flags.
    #[arg(long = "T", default_value = "10,20,40,77,150,200,298")]
    pub t: String,
}

/// A bias axis: a swept grid, or a list of fixed values.
struct Axis {
    values: Vec<f64>,
    swept: bool,
}

fn parse_axis(flag: &str, spec: &str) -> CliResult<Axis> {
    let bad = |why: String| Failure::input(format!("--{flag} `{spec}`: {why}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("`{s}` is not a number")));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [a, b, s] => {
            let values = linear_grid(num(a)?, num(b)?, num(s)?).map_err(|e| bad(e.to_string()))?;
            Ok(Axis { values, swept: true })
        }
        [_] => {
            let values = spec.split(',').map(num).collect::<CliResult<Vec<_>>>()?;
            Ok(Axis { values, swept: false })
        }
        _ => Err(bad("expected start:stop:step or a comma-separated list".into())),
    }
}

fn pick<'a, T>(items: &'a BTreeMap<String, T>, name: Option<&str>, what: &str) -> CliResult<(&'a String, &'a T)> {
    match name {
        Some(n) => items
            .get_key_value(n)
            .ok_or_else(|| Failure::input(format!("no {what} named `{n}`"))),
        None if items.len() == 1 => Ok(items.iter().next().expect("one entry")),
        None => Err(Failure::input(format!(
            "several {what}s available ({}); choose one",
            items.keys().cloned().collect::<Vec<_>>().join(", ")
        ))),
    }
}

fn load_params(args: &ModelArgs) -> CliResult<(String, ModelParams, DeviceGeometry)> {
    let (sets, geom) = match &args.params {
        Some(path) => {
            let text = read(path)?;
            let doc = at(path, parse_document(&text))?;
            let geom = match at(path, doc.single("geometry"))? {
                Some(sec) => at(path, geometry_from_section(sec))?,
                None => reference_geometry(),
            };
            (at(path, parse_models(&text))?, geom)
        }
        None => {
            let lib = shipped()?;
            (lib.sets, lib.geometry)
        }
    };
    let (name, p) = pick(&sets, args.set.as_deref(), "parameter set")?;
    Ok((name.clone(), *p, geom))
}

#[derive(Serialize)]
struct Curve {
    fixed: f64,
    ids: Vec<f64>,
}

#[derive(Serialize)]
struct Family<'a> {
    set: &'a str,
    t: f64,
    axis: &'a str,
    fixed: &'a str,
    values: &'a [f64],
    curves: Vec<Curve>,
}

fn family_csv(f: &Family) -> String {
    let mut out = format!("# set={}\n# T_K={}\n{}", f.set, fmt9(f.t), f.axis);
    for c in &f.curves {
        out.push_str(&format!(",ids_A@{}={}", f.fixed, fmt9(c.fixed)));
    }
    out.push('\n');
    for (k, v) in f.values.iter().enumerate() {
        out.push_str(&fmt9(*v));
        for c in &f.curves {
            out.push(',');
            out.push_str(&fmt9(c.ids[k]));
        }
        out.push('\n');
    }
    out
}

pub fn run(args: &ModelArgs, g: &Global) -> CliResult<()> {
    let (name, p, geom) = load_params(args)?;
    let vgs = parse_axis("vgs", &args.vgs)?;
    let vds = parse_axis("vds", &args.vds)?;

    // A single transfer curve is a regular sweep file.
    if vds.values.len() == 1 && (vgs.swept || vgs.values.len() > 1) {
        let mut s = iv_sweep_synthesize(&p, &geom, vds.values[0], args.t, &vgs.values)?;
        s.device = Some(name);
        return if g.json { emit(g, "model.json", &json(&s)) } else { emit(g, "model.csv", &write_sweep(&s)) };
    }

    let transfer = match (vgs.swept, vds.swept) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => return Err(Failure::input("sweep either --vgs or --vds, not both")),
        (false, false) => vgs.values.len() >= vds.values.len(),
    };
    let (axis, fixed) = if transfer { (&vgs, &vds) } else { (&vds, &vgs) };
    // Presentation signs follow the device polarity.
    let s = p.polarity.sign();
    let curves = fixed
        .values
        .iter()
        .map(|&f| {
            let ids = axis
                .values
                .iter()
                .map(|&v| {
                    let (vg, vd) = if transfer { (v, f) } else { (f, v) };
                    drain_current_signed(&p, &geom, s * vg, s * vd, args.t)
                })
                .collect::<cryomos::Result<Vec<_>>>()?;
            Ok(Curve { fixed: s * f, ids })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let signed: Vec<f64> = axis.values.iter().map(|v| s * v).collect();
    let fam = Family {
        set: &name,
        t: args.t,
        axis: if transfer { "vgs_V" } else { "vds_V" },
        fixed: if transfer { "vds_V" } else { "vgs_V" },
        values: &signed,
        curves,
    };
    if g.json {
        emit(g, "model.json", &json(&fam))
    } else {
        emit(g, "model.csv", &family_csv(&fam))
    }
}

pub fn run_physics(args: &PhysicsArgs, g: &Global) -> CliResult<()> {
    let stack = match &args.stacks {
        Some(path) => {
            let stacks = at(path, parse_stacks(&read(path)?))?;
            *pick(&stacks, args.stack.as_deref(), "stack")?.1
        }
        None => MosStack::default(),
    };
    let grid = parse_axis("T", &args.t)?.values;
    let curve = vth_freezeout_curve(&SiliconConstants::SILICON, &stack, &grid)?;
    if g.json {
        emit(g, "freezeout.json", &json(&curve))
    } else {
        emit(g, "freezeout.csv", &write_freezeout_csv(&curve))
    }
}
