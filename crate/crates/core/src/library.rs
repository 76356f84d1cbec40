//! Reference parameter sets and the anchor-driven calibration that
//! produces them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circuits::{
    dff_delay, inverter_delay, module_power, relative_reduction, ro_frequency, ro_frequency_from_delay, BenchSetup,
    DffSpec, InverterCell, PowerScenario, RingOscillatorSpec, Technology, Transistor,
};
use crate::error::{Error, Result};
use crate::extraction::{vth_constant_current, vth_y_function};
use crate::fitting::{FreeParam, Param};
use crate::model::{
    drain_current, iv_sweep_synthesize, linear_grid, on_off_ratio, ss_of_t, transconductance, vth_of_t,
    BiasPoint, DeviceGeometry, ModelParams, Polarity,
};
use crate::optimize::{minimize, Bound, Options};
use crate::sweep::IvSweep;

pub const LIBRARY_VERSION: &str = "cryomos-reference/1";

pub const CRYO_NMOS: &str = "CryoNMOS-ref";
pub const CRYO_PMOS: &str = "CryoPMOS-ref";
pub const RVT_NMOS: &str = "RVT-NMOS-ref";
pub const RVT_PMOS: &str = "RVT-PMOS-ref";
pub const ULVT_NMOS: &str = "uLVT-NMOS-ref";
pub const ULVT_PMOS: &str = "uLVT-PMOS-ref";

pub const REFERENCE_SETS: [&str; 6] = [CRYO_NMOS, CRYO_PMOS, RVT_NMOS, RVT_PMOS, ULVT_NMOS, ULVT_PMOS];

/// Technology name with its NMOS and PMOS set names.
pub const TECHNOLOGIES: [(&str, &str, &str); 3] = [
    ("Cryo", CRYO_NMOS, CRYO_PMOS),
    ("RVT", RVT_NMOS, RVT_PMOS),
    ("uLVT", ULVT_NMOS, ULVT_PMOS),
];

/// Drain bias of saturation sweeps (V).
pub const VDS_SAT: f64 = 0.9;
/// Drain bias of linear-region sweeps (V).
pub const VDS_LIN: f64 = 0.05;
/// Temperatures on which threshold bounds are checked (K).
pub const VTH_CHECK_TEMPS: [f64; 4] = [10.0, 77.0, 150.0, 298.0];

/// W/L = 0.1/0.03 µm.
pub fn reference_geometry() -> DeviceGeometry {
    DeviceGeometry { w: 0.1, l: 0.03, c_ox: 2e-6 }
}

/// Gate grid of synthetic transfer sweeps.
pub fn sweep_grid() -> Vec<f64> {
    linear_grid(-0.4, 0.9, 0.005).expect("static grid")
}

pub fn synth(p: &ModelParams, geom: &DeviceGeometry, vds: f64, t: f64) -> Result<IvSweep> {
    iv_sweep_synthesize(p, geom, vds, t, &sweep_grid())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceLibrary {
    pub version: String,
    pub geometry: DeviceGeometry,
    pub sets: BTreeMap<String, ModelParams>,
    pub bench: Option<BenchSetup>,
}

impl ReferenceLibrary {
    pub fn get(&self, name: &str) -> Result<&ModelParams> {
        self.sets.get(name).ok_or_else(|| Error::MissingSet(name.to_string()))
    }

    pub fn transistor(&self, name: &str) -> Result<Transistor> {
        Ok(Transistor { params: *self.get(name)?, geom: self.geometry })
    }

    /// Complementary pair for one of [`TECHNOLOGIES`].
    pub fn technology(&self, tech: &str) -> Result<Technology> {
        let (_, n, p) = TECHNOLOGIES
            .iter()
            .find(|(name, _, _)| *name == tech)
            .ok_or_else(|| Error::MissingSet(tech.to_string()))?;
        Ok(Technology { name: tech.to_string(), nmos: self.transistor(n)?, pmos: self.transistor(p)? })
    }

    pub fn bench(&self) -> Result<BenchSetup> {
        self.bench.ok_or_else(|| Error::MissingSet("circuit".into()))
    }

    /// Every set validates and carries the polarity its name implies.
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        for (name, p) in &self.sets {
            p.validate()?;
            let expect = if name.contains("PMOS") { Polarity::Pmos } else { Polarity::Nmos };
            if p.polarity != expect {
                return Err(Error::Precondition(format!("{name} has polarity {}", p.polarity.as_str())));
            }
        }
        Ok(())
    }
}

/// The library shipped with the crate.
pub fn shipped() -> Result<ReferenceLibrary> {
    crate::formats::parse_library(SHIPPED_TEXT)
}

/// Text of the shipped library file.
pub const SHIPPED_TEXT: &str = include_str!("../data/reference.params");

/// A quantity computed from one or more parameter sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum Metric {
    /// Constant-current threshold from a saturation sweep (V).
    VthCc { set: String, t: f64 },
    /// Y-function threshold from a linear-region sweep (V).
    VthY { set: String, t: f64 },
    /// Model threshold `vth_of_t` (V).
    VthModel { set: String, t: f64 },
    /// Largest of |model|, |cc| and |Y| thresholds over [`VTH_CHECK_TEMPS`] (V).
    VthMaxAbs { set: String },
    /// Model subthreshold swing (mV/dec).
    Swing { set: String, t: f64 },
    /// `I_DS(V_DD, V_DD) / W` (mA/µm).
    Drive { set: String, vdd: f64, t: f64 },
    /// `log10` of the on/off ratio at `V_DD`.
    OnOffLog { set: String, vdd: f64, t: f64 },
    /// Peak transconductance over V_GS in [0, 0.9] V at V_DS = 0.9 V (mS).
    GmMax { set: String, t: f64 },
    /// g_m at `vgs` relative to the peak.
    GmShare { set: String, vgs: f64, t: f64 },
    /// Peak g_m at `cold` over peak g_m at `warm`.
    GmGain { set: String, cold: f64, warm: f64 },
    /// `I_num / I_den` at equal overdrive above each model threshold, V_DS = 0.9 V.
    MatchedOverdrive { num: String, den: String, v_ov: f64, t: f64 },
    /// `V_TN + |V_TP|` from the model (V).
    ThresholdSum { nmos: String, pmos: String, t: f64 },
    /// Model threshold of `a` minus that of `b` (V).
    ThresholdGap { a: String, b: String, t: f64 },
    /// Inverter delay of the slow pair over that of the fast pair.
    DelayRatio { fast: (String, String), slow: (String, String), vdd: f64, t: f64 },
}

fn set<'a>(sets: &'a BTreeMap<String, ModelParams>, name: &str) -> Result<&'a ModelParams> {
    sets.get(name).ok_or_else(|| Error::MissingSet(name.to_string()))
}

fn gm_profile(p: &ModelParams, g: &DeviceGeometry, t: f64) -> Vec<(f64, f64)> {
    linear_grid(0.0, 0.9, 0.01)
        .expect("static grid")
        .into_iter()
        .map(|v| (v, transconductance(p, g, &BiasPoint { vgs: v, vds: VDS_SAT, t })))
        .collect()
}

fn gm_max(p: &ModelParams, g: &DeviceGeometry, t: f64) -> f64 {
    gm_profile(p, g, t).iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max)
}

impl Metric {
    pub fn evaluate(&self, sets: &BTreeMap<String, ModelParams>, g: &DeviceGeometry) -> Result<f64> {
        match self {
            Metric::VthCc { set: s, t } => vth_constant_current(&synth(set(sets, s)?, g, VDS_SAT, *t)?),
            Metric::VthY { set: s, t } => Ok(vth_y_function(&synth(set(sets, s)?, g, VDS_LIN, *t)?)?.vth),
            Metric::VthModel { set: s, t } => Ok(vth_of_t(set(sets, s)?, *t)),
            Metric::VthMaxAbs { set: s } => {
                let p = set(sets, s)?;
                let mut worst: f64 = 0.0;
                for t in VTH_CHECK_TEMPS {
                    let cc = vth_constant_current(&synth(p, g, VDS_SAT, t)?)?;
                    let y = vth_y_function(&synth(p, g, VDS_LIN, t)?)?.vth;
                    worst = worst.max(vth_of_t(p, t).abs()).max(cc.abs()).max(y.abs());
                }
                Ok(worst)
            }
            Metric::Swing { set: s, t } => Ok(ss_of_t(set(sets, s)?, *t)),
            Metric::Drive { set: s, vdd, t } => {
                let p = set(sets, s)?;
                let i = drain_current(p, g, &BiasPoint::new(*vdd, *vdd, *t)?);
                Ok(i / g.w * 1e3)
            }
            Metric::OnOffLog { set: s, vdd, t } => Ok(on_off_ratio(set(sets, s)?, g, *vdd, *t)?.log10()),
            Metric::GmMax { set: s, t } => Ok(gm_max(set(sets, s)?, g, *t) * 1e3),
            Metric::GmShare { set: s, vgs, t } => {
                let p = set(sets, s)?;
                let at = transconductance(p, g, &BiasPoint::new(*vgs, VDS_SAT, *t)?);
                Ok(at / gm_max(p, g, *t))
            }
            Metric::GmGain { set: s, cold, warm } => {
                let p = set(sets, s)?;
                Ok(gm_max(p, g, *cold) / gm_max(p, g, *warm))
            }
            Metric::MatchedOverdrive { num, den, v_ov, t } => {
                let current = |name: &str| -> Result<f64> {
                    let p = set(sets, name)?;
                    Ok(drain_current(p, g, &BiasPoint::new(vth_of_t(p, *t) + v_ov, VDS_SAT, *t)?))
                };
                Ok(current(num)? / current(den)?)
            }
            Metric::ThresholdSum { nmos, pmos, t } => {
                Ok(vth_of_t(set(sets, nmos)?, *t) + vth_of_t(set(sets, pmos)?, *t))
            }
            Metric::ThresholdGap { a, b, t } => Ok(vth_of_t(set(sets, a)?, *t) - vth_of_t(set(sets, b)?, *t)),
            Metric::DelayRatio { fast, slow, vdd, t } => {
                let cell = |pair: &(String, String)| -> Result<InverterCell> {
                    Ok(InverterCell {
                        nmos: Transistor { params: *set(sets, &pair.0)?, geom: *g },
                        pmos: Transistor { params: *set(sets, &pair.1)?, geom: *g },
                        c_load: 1e-15,
                    })
                };
                let d_fast = inverter_delay(&cell(fast)?, *vdd, *t)?.t_pd;
                let d_slow = inverter_delay(&cell(slow)?, *vdd, *t)?.t_pd;
                Ok(d_slow / d_fast)
            }
        }
    }
}

/// A metric with its acceptance band `[lo, hi]`. The calibration aims for
/// the band shrunk by `margin` on each finite side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub label: String,
    pub metric: Metric,
    pub lo: f64,
    pub hi: f64,
    pub margin: f64,
}

impl Anchor {
    pub fn new(label: &str, metric: Metric, lo: f64, hi: f64, margin: f64) -> Self {
        Anchor { label: label.to_string(), metric, lo, hi, margin }
    }

    pub fn accepts(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    fn penalty(&self, v: f64) -> f64 {
        if !v.is_finite() {
            return 1e6;
        }
        let below = (self.lo + self.margin) - v;
        let above = v - (self.hi - self.margin);
        let d = below.max(above).max(0.0) / self.margin;
        d * d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetSpec {
    pub name: String,
    pub initial: ModelParams,
    pub free: Vec<FreeParam>,
}

/// Sets solved jointly against a group of anchors. Anchors may refer to
/// sets solved in earlier stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub sets: Vec<SetSpec>,
    pub anchors: Vec<Anchor>,
}

/// Circuit-level calibration targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTargets {
    pub ro_stages: usize,
    pub dff_stages: usize,
    /// Technology whose ring frequency sets the load capacitance.
    pub ro_technology: String,
    pub ro_vdd: Vec<f64>,
    pub ro_t: f64,
    /// Geometric mean of the ring frequency over `ro_vdd` (Hz).
    pub ro_center: f64,
    pub f_clk: f64,
    pub w_n: f64,
    pub w_p: f64,
    /// Technology, supply and temperature at which the power is pinned.
    pub power_technology: String,
    pub power_vdd: f64,
    pub power_t: f64,
    pub power_target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorTable {
    pub geometry: DeviceGeometry,
    pub stages: Vec<Stage>,
    pub bench: Option<BenchTargets>,
}

/// Value of every anchor of `table` on `lib`.
pub fn anchor_report(table: &AnchorTable, lib: &ReferenceLibrary) -> Vec<(Anchor, Result<f64>)> {
    table
        .stages
        .iter()
        .flat_map(|s| s.anchors.iter())
        .map(|a| (a.clone(), a.metric.evaluate(&lib.sets, &lib.geometry)))
        .collect()
}

fn stage_objective(stage: &Stage, sets: &BTreeMap<String, ModelParams>, g: &DeviceGeometry) -> f64 {
    stage
        .anchors
        .iter()
        .map(|a| a.penalty(a.metric.evaluate(sets, g).unwrap_or(f64::NAN)))
        .sum()
}

fn calibrate_stage(
    stage: &Stage,
    solved: &BTreeMap<String, ModelParams>,
    g: &DeviceGeometry,
    opts: &Options,
) -> Result<BTreeMap<String, ModelParams>> {
    let mut slots: Vec<(usize, Param)> = Vec::new();
    let mut x0 = Vec::new();
    let mut bounds = Vec::new();
    for (k, s) in stage.sets.iter().enumerate() {
        s.initial.validate()?;
        for fp in &s.free {
            slots.push((k, fp.param));
            x0.push(fp.param.get(&s.initial));
            bounds.push(fp.bound);
        }
    }
    let assemble = |x: &[f64]| -> BTreeMap<String, ModelParams> {
        let mut all = solved.clone();
        let mut mine: Vec<ModelParams> = stage.sets.iter().map(|s| s.initial).collect();
        for (&(k, param), &v) in slots.iter().zip(x) {
            param.set(&mut mine[k], v);
        }
        for (s, p) in stage.sets.iter().zip(mine) {
            all.insert(s.name.clone(), p);
        }
        all
    };
    let f = |x: &[f64]| {
        let all = assemble(x);
        if stage.sets.iter().any(|s| all[&s.name].validate().is_err()) {
            return f64::INFINITY;
        }
        stage_objective(stage, &all, g)
    };
    let out = minimize(&f, &x0, &bounds, opts)?;
    Ok(assemble(&out.x))
}

fn calibrate_bench(
    targets: &BenchTargets,
    sets: &BTreeMap<String, ModelParams>,
    g: &DeviceGeometry,
) -> Result<BenchSetup> {
    let lib = ReferenceLibrary {
        version: LIBRARY_VERSION.into(),
        geometry: *g,
        sets: sets.clone(),
        bench: None,
    };
    // Frequency scales as 1/C, so one evaluation at a unit load fixes it.
    let c_unit = 1e-15;
    let cell = lib.technology(&targets.ro_technology)?.cell(c_unit);
    let mut log_sum = 0.0;
    for &v in &targets.ro_vdd {
        let d = inverter_delay(&cell, v, targets.ro_t)?;
        log_sum += ro_frequency_from_delay(targets.ro_stages, d.t_pd).ln();
    }
    let f_mean = (log_sum / targets.ro_vdd.len() as f64).exp();
    let c_load = c_unit * f_mean / targets.ro_center;

    let tech = lib.technology(&targets.power_technology)?;
    let scenario = PowerScenario {
        f_clk: targets.f_clk,
        vdd: targets.power_vdd,
        t: targets.power_t,
        c_switched: 0.0,
        w_n: targets.w_n,
        w_p: targets.w_p,
        nmos: tech.nmos.params,
        pmos: tech.pmos.params,
    };
    let c_switched = crate::circuits::calibrate_switched_capacitance(&scenario, targets.power_target)?;
    Ok(BenchSetup {
        ro_stages: targets.ro_stages,
        dff_stages: targets.dff_stages,
        c_load,
        f_clk: targets.f_clk,
        c_switched,
        w_n: targets.w_n,
        w_p: targets.w_p,
    })
}

/// Solve every stage of `table` in order, then the circuit constants.
/// Fails with [`Error::Infeasible`] listing every anchor left outside its
/// band.
pub fn calibrate_reference_sets(table: &AnchorTable, opts: &Options) -> Result<ReferenceLibrary> {
    let g = table.geometry;
    g.validate()?;
    let mut sets: BTreeMap<String, ModelParams> = BTreeMap::new();
    let mut unmet = Vec::new();
    for stage in &table.stages {
        sets = calibrate_stage(stage, &sets, &g, opts)?;
        for a in &stage.anchors {
            match a.metric.evaluate(&sets, &g) {
                Ok(v) if a.accepts(v) => {}
                Ok(v) => unmet.push(format!("{}: {v:.6} outside [{}, {}]", a.label, a.lo, a.hi)),
                Err(e) => unmet.push(format!("{}: {e}", a.label)),
            }
        }
    }
    if !unmet.is_empty() {
        return Err(Error::Infeasible(unmet));
    }
    let bench = match &table.bench {
        Some(t) => Some(calibrate_bench(t, &sets, &g)?),
        None => None,
    };
    Ok(ReferenceLibrary { version: LIBRARY_VERSION.into(), geometry: g, sets, bench })
}

fn free(params: &[(Param, Bound)]) -> Vec<FreeParam> {
    params.iter().map(|&(param, bound)| FreeParam { param, bound }).collect()
}

fn base(polarity: Polarity) -> ModelParams {
    ModelParams {
        polarity,
        vth0: 0.065,
        c_vth: 4.5e-4,
        mu0: 50.0,
        alpha_ph: 1.5,
        mu_c: 700.0,
        n0: 1.72,
        ss_floor: 17.0,
        v_sat: 2.6e7,
        lambda_clm: 0.05,
        i_off_ref: 1e-10,
        eta: 60.0,
    }
}

fn s(x: &str) -> String {
    x.to_string()
}

/// Anchors and starting points of the shipped library.
pub fn default_anchor_table() -> AnchorTable {
    let inf = f64::INFINITY;
    let cryo_n = SetSpec {
        name: s(CRYO_NMOS),
        initial: base(Polarity::Nmos),
        free: free(&[
            (Param::Vth0, Bound::linear(0.005, 0.2)),
            (Param::CVth, Bound::linear(0.0, 1e-3)),
            (Param::Mu0, Bound::log(10.0, 500.0)),
            (Param::AlphaPh, Bound::linear(0.5, 3.0)),
            (Param::MuC, Bound::log(100.0, 5000.0)),
            (Param::N0, Bound::linear(1.4, 2.2)),
            (Param::SsFloor, Bound::linear(5.0, 30.0)),
            (Param::VSat, Bound::log(5e6, 1e8)),
        ]),
    };
    let n = || s(CRYO_NMOS);
    let cryo_n_anchors = vec![
        Anchor::new("V_TH,cc(77 K) CryoNMOS-ref [V]", Metric::VthCc { set: n(), t: 77.0 }, 0.094, 0.124, 0.004),
        Anchor::new("max |V_TH| CryoNMOS-ref [V]", Metric::VthMaxAbs { set: n() }, -inf, 0.2, 0.008),
        Anchor::new("SS(298 K) CryoNMOS-ref [mV/dec]", Metric::Swing { set: n(), t: 298.0 }, 100.0, 110.0, 1.5),
        Anchor::new("SS(10 K) CryoNMOS-ref [mV/dec]", Metric::Swing { set: n(), t: 10.0 }, 16.0, 20.0, 0.6),
        Anchor::new("I_DSAT/W(0.9 V, 77 K) CryoNMOS-ref [mA/um]", Metric::Drive { set: n(), vdd: 0.9, t: 77.0 }, 1.44, 1.76, 0.04),
        Anchor::new("I_DSAT/W(0.6 V, 77 K) CryoNMOS-ref [mA/um]", Metric::Drive { set: n(), vdd: 0.6, t: 77.0 }, 0.7, inf, 0.04),
        Anchor::new("log10 on/off(0.6 V, 77 K) CryoNMOS-ref", Metric::OnOffLog { set: n(), vdd: 0.6, t: 77.0 }, 7.0, inf, 0.12),
        Anchor::new("g_m,max(77 K) CryoNMOS-ref [mS]", Metric::GmMax { set: n(), t: 77.0 }, 0.2125, 0.2875, 0.008),
        Anchor::new("g_m(0.6 V)/g_m,max(77 K) CryoNMOS-ref", Metric::GmShare { set: n(), vgs: 0.6, t: 77.0 }, 0.9, inf, 0.02),
        Anchor::new("g_m,max(10 K)/g_m,max(298 K) CryoNMOS-ref", Metric::GmGain { set: n(), cold: 10.0, warm: 298.0 }, 1.25, inf, 0.04),
    ];

    let cryo_p = SetSpec {
        name: s(CRYO_PMOS),
        initial: ModelParams { vth0: 0.12, c_vth: 2.5e-4, mu0: 15.0, mu_c: 400.0, v_sat: 2.5e7, ..base(Polarity::Pmos) },
        free: free(&[
            (Param::Vth0, Bound::linear(0.005, 0.25)),
            (Param::CVth, Bound::linear(0.0, 8e-4)),
            (Param::Mu0, Bound::log(3.0, 300.0)),
            (Param::VSat, Bound::log(5e6, 1e8)),
        ]),
    };
    let p = || s(CRYO_PMOS);
    let cryo_p_anchors = vec![
        Anchor::new("|V_TH,cc(77 K)| CryoPMOS-ref [V]", Metric::VthCc { set: p(), t: 77.0 }, 0.156, 0.186, 0.004),
        Anchor::new("|V_TH,Y(77 K)| CryoPMOS-ref [V]", Metric::VthY { set: p(), t: 77.0 }, 0.156, 0.186, 0.004),
        Anchor::new("max |V_TH| CryoPMOS-ref [V]", Metric::VthMaxAbs { set: p() }, -inf, 0.2, 0.005),
        Anchor::new("I_DSAT/W(0.9 V, 77 K) CryoPMOS-ref [mA/um]", Metric::Drive { set: p(), vdd: 0.9, t: 77.0 }, 1.2, inf, 0.03),
        Anchor::new("log10 on/off(0.6 V, 77 K) CryoPMOS-ref", Metric::OnOffLog { set: p(), vdd: 0.6, t: 77.0 }, 7.0, inf, 0.12),
    ];

    let ulvt_free = || {
        free(&[
            (Param::Vth0, Bound::linear(0.05, 0.5)),
            (Param::Mu0, Bound::log(3.0, 500.0)),
            (Param::VSat, Bound::log(5e6, 1e8)),
        ])
    };
    let ulvt_n = SetSpec {
        name: s(ULVT_NMOS),
        initial: ModelParams { vth0: 0.2, mu0: 40.0, v_sat: 2.2e7, ..base(Polarity::Nmos) },
        free: ulvt_free(),
    };
    let ulvt_p = SetSpec {
        name: s(ULVT_PMOS),
        initial: ModelParams { vth0: 0.2, mu0: 12.0, mu_c: 400.0, v_sat: 2.0e7, ..base(Polarity::Pmos) },
        free: ulvt_free(),
    };
    let ulvt_anchors = vec![
        Anchor::new(
            "I(V_OV = 0.6 V) CryoNMOS-ref/uLVT-NMOS-ref (77 K)",
            Metric::MatchedOverdrive { num: n(), den: s(ULVT_NMOS), v_ov: 0.6, t: 77.0 },
            1.14,
            1.24,
            0.015,
        ),
        Anchor::new(
            "I(V_OV = 0.6 V) CryoPMOS-ref/uLVT-PMOS-ref (77 K)",
            Metric::MatchedOverdrive { num: p(), den: s(ULVT_PMOS), v_ov: 0.6, t: 77.0 },
            1.31,
            1.41,
            0.015,
        ),
        Anchor::new(
            "I_DSAT/W(0.6 V, 77 K) uLVT-NMOS-ref [mA/um]",
            Metric::Drive { set: s(ULVT_NMOS), vdd: 0.6, t: 77.0 },
            0.0,
            0.34,
            0.02,
        ),
    ];

    let rvt_free = || {
        free(&[
            (Param::Vth0, Bound::linear(0.05, 0.6)),
            (Param::Mu0, Bound::log(3.0, 500.0)),
            (Param::VSat, Bound::log(5e6, 1e8)),
        ])
    };
    let rvt_n = SetSpec {
        name: s(RVT_NMOS),
        initial: ModelParams { vth0: 0.2, c_vth: 5e-4, mu0: 30.0, v_sat: 3e7, ..base(Polarity::Nmos) },
        free: rvt_free(),
    };
    let rvt_p = SetSpec {
        name: s(RVT_PMOS),
        initial: ModelParams { vth0: 0.22, c_vth: 5e-4, mu0: 10.0, mu_c: 400.0, v_sat: 3e7, ..base(Polarity::Pmos) },
        free: rvt_free(),
    };
    let pair = |a: &str, b: &str| (s(a), s(b));
    let rvt_anchors = vec![
        Anchor::new(
            "I_DSAT/W(0.6 V, 77 K) RVT-NMOS-ref [mA/um]",
            Metric::Drive { set: s(RVT_NMOS), vdd: 0.6, t: 77.0 },
            0.0,
            0.34,
            0.02,
        ),
        Anchor::new(
            "V_TN + |V_TP| (77 K) RVT [V]",
            Metric::ThresholdSum { nmos: s(RVT_NMOS), pmos: s(RVT_PMOS), t: 77.0 },
            0.6,
            inf,
            0.015,
        ),
        Anchor::new(
            "V_TN + |V_TP| (150 K) RVT [V]",
            Metric::ThresholdSum { nmos: s(RVT_NMOS), pmos: s(RVT_PMOS), t: 150.0 },
            -inf,
            0.6,
            0.015,
        ),
        Anchor::new(
            "RVT/Cryo inverter delay (0.9 V, 77 K)",
            Metric::DelayRatio {
                fast: pair(CRYO_NMOS, CRYO_PMOS),
                slow: pair(RVT_NMOS, RVT_PMOS),
                vdd: 0.9,
                t: 77.0,
            },
            1.2,
            1.0 / 0.7,
            0.03,
        ),
    ];
    let gap = |a: &str, b: &str| {
        Anchor::new(
            &format!("V_TH(77 K) {a} - {b} [V]"),
            Metric::ThresholdGap { a: s(a), b: s(b), t: 77.0 },
            0.0,
            inf,
            0.01,
        )
    };
    let ordering = vec![
        gap(RVT_NMOS, ULVT_NMOS),
        gap(ULVT_NMOS, CRYO_NMOS),
        gap(RVT_PMOS, ULVT_PMOS),
        gap(ULVT_PMOS, CRYO_PMOS),
    ];

    AnchorTable {
        geometry: reference_geometry(),
        stages: vec![
            Stage { sets: vec![cryo_n], anchors: cryo_n_anchors },
            Stage { sets: vec![cryo_p], anchors: cryo_p_anchors },
            Stage {
                sets: vec![ulvt_n, ulvt_p, rvt_n, rvt_p],
                anchors: [ulvt_anchors, rvt_anchors, ordering].concat(),
            },
        ],
        bench: Some(BenchTargets {
            ro_stages: 257,
            dff_stages: crate::circuits::DFF_STAGES,
            ro_technology: s("Cryo"),
            ro_vdd: vec![0.6, 0.7, 0.8, 0.9],
            ro_t: 77.0,
            ro_center: (200e6f64 * 600e6).sqrt(),
            f_clk: 100e6,
            w_n: 1e4,
            w_p: 1e4,
            power_technology: s("RVT"),
            power_vdd: 0.9,
            power_t: 77.0,
            power_target: 2.03e-3,
        }),
    }
}

/// Optimizer settings used for the shipped library.
pub fn default_calibration_options() -> Options {
    Options { max_iter: 3000, seed: 2024, ..Options::default() }
}

/// Outcome of one headline check of a library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub pass: bool,
}

impl Verdict {
    fn new(label: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Verdict { label: label.into(), value, lo, hi, pass: value >= lo && value <= hi }
    }
}

/// Calibration anchors plus the circuit-level targets of the benchmark:
/// ring-oscillator band and stall, speed ratio, flip-flop delay and the
/// logic-block power envelope.
pub fn bench_summary(lib: &ReferenceLibrary) -> Result<Vec<Verdict>> {
    let mut out: Vec<Verdict> = anchor_report(&default_anchor_table(), lib)
        .into_iter()
        .map(|(a, v)| Verdict::new(a.label, v.unwrap_or(f64::NAN), a.lo, a.hi))
        .collect();

    let setup = lib.bench()?;
    let cryo = lib.technology("Cryo")?;
    let rvt = lib.technology("RVT")?;
    let t = 77.0;
    let freq = |tech: &Technology, vdd: f64| -> Result<Option<f64>> {
        let spec = RingOscillatorSpec { stages: setup.ro_stages, cell: tech.cell(setup.c_load), vdd, t };
        Ok(ro_frequency(&spec)?.frequency())
    };
    let mut band = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..=6 {
        let f = freq(&cryo, 0.6 + 0.05 * k as f64)?.unwrap_or(0.0) / 1e6;
        band = (band.0.min(f), band.1.max(f));
    }
    out.push(Verdict::new("Cryo RO lowest frequency over 0.6-0.9 V at 77 K (MHz)", band.0, 200.0, 600.0));
    out.push(Verdict::new("Cryo RO highest frequency over 0.6-0.9 V at 77 K (MHz)", band.1, 200.0, 600.0));
    let stalls = if freq(&rvt, 0.6)?.is_some() { 0.0 } else { 1.0 };
    out.push(Verdict::new("RVT RO stalls at 0.6 V, 77 K (1 = stalls)", stalls, 1.0, 1.0));
    let ratio = match (freq(&cryo, 0.9)?, freq(&rvt, 0.9)?) {
        (Some(a), Some(b)) => a / b,
        _ => f64::NAN,
    };
    out.push(Verdict::new("RO frequency Cryo/RVT at 0.9 V, 77 K", ratio, 1.2, f64::INFINITY));
    let dff = |tech: &Technology| dff_delay(&DffSpec { stages: setup.dff_stages, cell: tech.cell(setup.c_load), vdd: 0.9, t });
    let red = relative_reduction(dff(&cryo)?, dff(&rvt)?) * 100.0;
    out.push(Verdict::new("DFF delay reduction Cryo vs RVT at 0.9 V, 77 K (%)", red, 15.0, 30.0));
    let power = |tech: &Technology, vdd: f64| {
        module_power(&PowerScenario {
            f_clk: setup.f_clk,
            vdd,
            t,
            c_switched: setup.c_switched,
            w_n: setup.w_n,
            w_p: setup.w_p,
            nmos: tech.nmos.params,
            pmos: tech.pmos.params,
        })
        .map(|b| b.total)
    };
    let (p_rvt, p_cryo) = (power(&rvt, 0.9)?, power(&cryo, 0.6)?);
    out.push(Verdict::new("Logic-block power RVT 0.9 V, 77 K (mW)", p_rvt * 1e3, 2.03 * 0.85, 2.03 * 1.15));
    out.push(Verdict::new("Logic-block power Cryo 0.6 V, 77 K (mW)", p_cryo * 1e3, 1.28 * 0.85, 1.28 * 1.15));
    out.push(Verdict::new("Logic-block power reduction (%)", relative_reduction(p_cryo, p_rvt) * 100.0, 29.0, 45.0));
    Ok(out)
}
