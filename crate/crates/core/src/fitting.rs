//! Fitting model parameters to measured sweeps.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::Y_MAX_VDS;
use crate::model::{drain_current, BiasPoint, ModelParams};
use crate::optimize::{minimize, Bound, Options};
use crate::sweep::IvSweep;

/// Denominator floor of the relative error (A).
pub const I_FLOOR: f64 = 1e-12;

/// A scalar entry of [`ModelParams`] that can be fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Vth0,
    CVth,
    Mu0,
    AlphaPh,
    MuC,
    N0,
    SsFloor,
    VSat,
    LambdaClm,
    IOffRef,
    Eta,
}

impl Param {
    pub const ALL: [Param; 11] = [
        Param::Vth0,
        Param::CVth,
        Param::Mu0,
        Param::AlphaPh,
        Param::MuC,
        Param::N0,
        Param::SsFloor,
        Param::VSat,
        Param::LambdaClm,
        Param::IOffRef,
        Param::Eta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::Vth0 => "vth0",
            Param::CVth => "c_vth",
            Param::Mu0 => "mu0",
            Param::AlphaPh => "alpha_ph",
            Param::MuC => "mu_c",
            Param::N0 => "n0",
            Param::SsFloor => "ss_floor",
            Param::VSat => "v_sat",
            Param::LambdaClm => "lambda_clm",
            Param::IOffRef => "i_off_ref",
            Param::Eta => "eta",
        }
    }

    pub fn get(self, p: &ModelParams) -> f64 {
        match self {
            Param::Vth0 => p.vth0,
            Param::CVth => p.c_vth,
            Param::Mu0 => p.mu0,
            Param::AlphaPh => p.alpha_ph,
            Param::MuC => p.mu_c,
            Param::N0 => p.n0,
            Param::SsFloor => p.ss_floor,
            Param::VSat => p.v_sat,
            Param::LambdaClm => p.lambda_clm,
            Param::IOffRef => p.i_off_ref,
            Param::Eta => p.eta,
        }
    }

    pub fn set(self, p: &mut ModelParams, v: f64) {
        let slot = match self {
            Param::Vth0 => &mut p.vth0,
            Param::CVth => &mut p.c_vth,
            Param::Mu0 => &mut p.mu0,
            Param::AlphaPh => &mut p.alpha_ph,
            Param::MuC => &mut p.mu_c,
            Param::N0 => &mut p.n0,
            Param::SsFloor => &mut p.ss_floor,
            Param::VSat => &mut p.v_sat,
            Param::LambdaClm => &mut p.lambda_clm,
            Param::IOffRef => &mut p.i_off_ref,
            Param::Eta => &mut p.eta,
        };
        *slot = v;
    }

    /// Search range used when a fit does not state one.
    pub fn default_bound(self) -> Bound {
        match self {
            Param::Vth0 => Bound::linear(0.001, 1.2),
            Param::CVth => Bound::linear(-2e-3, 3e-3),
            Param::Mu0 => Bound::log(1.0, 2000.0),
            Param::AlphaPh => Bound::linear(0.0, 3.0),
            Param::MuC => Bound::log(10.0, 1e5),
            Param::N0 => Bound::linear(1.0, 4.0),
            Param::SsFloor => Bound::linear(0.0, 60.0),
            Param::VSat => Bound::log(1e5, 1e9),
            Param::LambdaClm => Bound::linear(0.0, 2.0),
            Param::IOffRef => Bound::log(1e-16, 1e-5),
            Param::Eta => Bound::log(1.0, 1000.0),
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown model parameter '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeParam {
    pub param: Param,
    pub bound: Bound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitProblem {
    pub sweeps: Vec<IvSweep>,
    pub free: Vec<FreeParam>,
    pub initial: ModelParams,
}

impl FitProblem {
    pub fn validate(&self) -> Result<()> {
        self.initial.validate()?;
        if self.sweeps.is_empty() {
            return Err(Error::Precondition("fit problem has no sweeps".into()));
        }
        for s in &self.sweeps {
            s.validate()?;
        }
        let mut temps: Vec<f64> = self.sweeps.iter().map(|s| s.t).collect();
        temps.sort_by(f64::total_cmp);
        temps.dedup();
        if temps.len() < 2 {
            return Err(Error::Precondition("fit needs sweeps at two or more temperatures".into()));
        }
        let lin = self.sweeps.iter().any(|s| s.vds <= Y_MAX_VDS);
        let sat = self.sweeps.iter().any(|s| s.vds > Y_MAX_VDS);
        if !(lin && sat) {
            return Err(Error::Precondition(
                "fit needs both linear-region and saturation sweeps".into(),
            ));
        }
        let mut seen = Vec::new();
        for fp in &self.free {
            if seen.contains(&fp.param) {
                return Err(Error::Precondition(format!("{} listed twice", fp.param)));
            }
            seen.push(fp.param);
            fp.bound.validate()?;
            let v = fp.param.get(&self.initial);
            if !fp.bound.contains(v) {
                return Err(Error::Precondition(format!(
                    "initial {} = {v} outside [{}, {}]",
                    fp.param, fp.bound.lo, fp.bound.hi
                )));
            }
        }
        Ok(())
    }
}

/// Error summary for one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepError {
    pub index: usize,
    pub t: f64,
    pub vds: f64,
    pub points: usize,
    pub mean_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveReport {
    /// Mean over all points of all sweeps.
    pub mean: f64,
    pub per_sweep: Vec<SweepError>,
}

fn sweep_error_sum(p: &ModelParams, s: &IvSweep) -> f64 {
    s.points
        .iter()
        .map(|pt| {
            let bias = BiasPoint { vgs: pt.vgs, vds: s.vds, t: s.t };
            let model = drain_current(p, &s.geom, &bias);
            (model - pt.ids).abs() / pt.ids.abs().max(I_FLOOR)
        })
        .sum()
}

/// Mean relative current error of `params` against `sweeps`.
pub fn objective(params: &ModelParams, sweeps: &[IvSweep]) -> ObjectiveReport {
    let sums: Vec<f64> = sweeps.par_iter().map(|s| sweep_error_sum(params, s)).collect();
    let mut total = 0.0;
    let mut count = 0usize;
    let per_sweep = sweeps
        .iter()
        .zip(&sums)
        .enumerate()
        .map(|(index, (s, &sum))| {
            total += sum;
            count += s.len();
            SweepError {
                index,
                t: s.t,
                vds: s.vds,
                points: s.len(),
                mean_rel_error: if s.is_empty() { 0.0 } else { sum / s.len() as f64 },
            }
        })
        .collect();
    ObjectiveReport {
        mean: if count == 0 { 0.0 } else { total / count as f64 },
        per_sweep,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureError {
    pub t: f64,
    pub points: usize,
    pub mean_rel_error: f64,
    /// Linear-region sweeps only.
    pub linear: Option<f64>,
    /// Saturation sweeps only.
    pub saturation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ModelParams,
    pub mean_rel_error: f64,
    pub per_temperature: Vec<TemperatureError>,
    pub per_sweep: Vec<SweepError>,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective after each optimizer iteration.
    pub trace: Vec<f64>,
}

/// Group per-sweep errors by temperature, splitting by drain-bias family.
pub fn temperature_table(report: &ObjectiveReport) -> Vec<TemperatureError> {
    // Key on the bit pattern so equal temperatures group exactly.
    let mut groups: BTreeMap<u64, [(f64, usize); 3]> = BTreeMap::new();
    for s in &report.per_sweep {
        let g = groups.entry(s.t.to_bits()).or_insert([(0.0, 0); 3]);
        let sum = s.mean_rel_error * s.points as f64;
        let family = if s.vds <= Y_MAX_VDS { 1 } else { 2 };
        for k in [0, family] {
            g[k].0 += sum;
            g[k].1 += s.points;
        }
    }
    let mean = |(sum, n): (f64, usize)| if n == 0 { None } else { Some(sum / n as f64) };
    let mut rows: Vec<TemperatureError> = groups
        .into_iter()
        .map(|(bits, g)| TemperatureError {
            t: f64::from_bits(bits),
            points: g[0].1,
            mean_rel_error: mean(g[0]).unwrap_or(0.0),
            linear: mean(g[1]),
            saturation: mean(g[2]),
        })
        .collect();
    rows.sort_by(|a, b| a.t.total_cmp(&b.t));
    rows
}

fn apply(initial: &ModelParams, free: &[FreeParam], x: &[f64]) -> ModelParams {
    let mut p = *initial;
    for (fp, &v) in free.iter().zip(x) {
        fp.param.set(&mut p, v);
    }
    p
}

/// Fit the free parameters of `problem` by bounded simplex search.
pub fn calibrate(problem: &FitProblem, opts: &Options) -> Result<FitResult> {
    problem.validate()?;
    let free = &problem.free;
    let x0: Vec<f64> = free.iter().map(|fp| fp.param.get(&problem.initial)).collect();
    let bounds: Vec<Bound> = free.iter().map(|fp| fp.bound).collect();
    let f = |x: &[f64]| {
        let p = apply(&problem.initial, free, x);
        if p.validate().is_err() {
            return f64::INFINITY;
        }
        objective(&p, &problem.sweeps).mean
    };
    let out = minimize(&f, &x0, &bounds, opts)?;
    let params = apply(&problem.initial, free, &out.x);
    let report = objective(&params, &problem.sweeps);
    Ok(FitResult {
        params,
        mean_rel_error: report.mean,
        per_temperature: temperature_table(&report),
        per_sweep: report.per_sweep,
        iterations: out.iterations,
        converged: out.converged,
        trace: out.trace,
    })
}
