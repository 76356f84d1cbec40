//! Circuit-level estimates: inverter delay, ring oscillators, flip-flop
//! delay and a switched-capacitance power envelope.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{drain_current, leakage_density, vth_of_t, BiasPoint, DeviceGeometry, ModelParams, Polarity};
use crate::physics::check_temperature;

/// A sized transistor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transistor {
    pub params: ModelParams,
    pub geom: DeviceGeometry,
}

impl Transistor {
    /// Drain current magnitude (A).
    pub fn current(&self, vgs: f64, vds: f64, t: f64) -> f64 {
        drain_current(&self.params, &self.geom, &BiasPoint { vgs, vds, t })
    }

    /// Mean of the saturated and half-swing currents at full gate drive.
    pub fn effective_current(&self, vdd: f64, t: f64) -> f64 {
        0.5 * (self.current(vdd, vdd, t) + self.current(vdd, 0.5 * vdd, t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverterCell {
    pub nmos: Transistor,
    pub pmos: Transistor,
    /// Total capacitance on the output node (F).
    pub c_load: f64,
}

impl InverterCell {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_load > 0.0 && self.c_load.is_finite()) {
            return Err(Error::Precondition(format!("C_load must be positive, got {}", self.c_load)));
        }
        if self.nmos.params.polarity != Polarity::Nmos || self.pmos.params.polarity != Polarity::Pmos {
            return Err(Error::Precondition("inverter needs an NMOS pull-down and a PMOS pull-up".into()));
        }
        self.nmos.params.validate()?;
        self.pmos.params.validate()?;
        self.nmos.geom.validate()?;
        self.pmos.geom.validate()
    }

    pub fn with_load(&self, c_load: f64) -> Self {
        InverterCell { c_load, ..*self }
    }

    /// Off-state current of both devices at `vdd` (A).
    pub fn leakage(&self, vdd: f64, t: f64) -> f64 {
        self.nmos.current(0.0, vdd, t) + self.pmos.current(0.0, vdd, t)
    }

    /// Why the cell cannot switch at `(vdd, t)`, if it cannot.
    ///
    /// A cell is stuck when either device drives no more than ten times the
    /// cell leakage, or when the supply does not exceed the sum of the two
    /// threshold magnitudes.
    pub fn stuck_reason(&self, vdd: f64, t: f64) -> Option<String> {
        let leak = self.leakage(vdd, t);
        let i_n = self.nmos.effective_current(vdd, t);
        let i_p = self.pmos.effective_current(vdd, t);
        if i_n.min(i_p) <= 10.0 * leak {
            return Some(format!(
                "drive {:.3e} A within 10x of leakage {leak:.3e} A",
                i_n.min(i_p)
            ));
        }
        let vt_sum = vth_of_t(&self.nmos.params, t) + vth_of_t(&self.pmos.params, t);
        if vdd <= vt_sum {
            return Some(format!("V_DD {vdd} V at or below V_TN + |V_TP| = {vt_sum:.3} V"));
        }
        None
    }
}

/// Propagation delays of one stage (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delay {
    /// Output falling, NMOS discharging.
    pub t_phl: f64,
    /// Output rising, PMOS charging.
    pub t_plh: f64,
    pub t_pd: f64,
}

impl Delay {
    fn from_edges(t_phl: f64, t_plh: f64) -> Self {
        Delay { t_phl, t_plh, t_pd: 0.5 * (t_phl + t_plh) }
    }
}

fn check_bias(vdd: f64, t: f64) -> Result<()> {
    check_temperature(t)?;
    if !(vdd > 0.0 && vdd.is_finite()) {
        return Err(Error::Precondition(format!("V_DD must be positive, got {vdd}")));
    }
    Ok(())
}

/// `t = C V_DD / (2 I_eff)` per edge.
pub fn edge_delay(c_load: f64, vdd: f64, i_eff: f64) -> f64 {
    c_load * vdd / (2.0 * i_eff)
}

/// Effective-current inverter delay.
pub fn inverter_delay(cell: &InverterCell, vdd: f64, t: f64) -> Result<Delay> {
    cell.validate()?;
    check_bias(vdd, t)?;
    if let Some(reason) = cell.stuck_reason(vdd, t) {
        return Err(Error::Stuck(reason));
    }
    let t_phl = edge_delay(cell.c_load, vdd, cell.nmos.effective_current(vdd, t));
    let t_plh = edge_delay(cell.c_load, vdd, cell.pmos.effective_current(vdd, t));
    Ok(Delay::from_edges(t_phl, t_plh))
}

/// Time for one device at full gate drive to swing the output node from the
/// rail to `V_DD/2`, by explicit Euler integration of `C dV/dt = -I(V)`.
fn transient_edge(dev: &Transistor, c_load: f64, vdd: f64, t: f64, dt: f64) -> f64 {
    // v is the drain-source voltage of the active device.
    let mut v = vdd;
    let mut time = 0.0;
    loop {
        let i = dev.current(vdd, v, t);
        let next = v - dt * i / c_load;
        if next <= 0.5 * vdd {
            return time + dt * (v - 0.5 * vdd) / (v - next);
        }
        v = next;
        time += dt;
    }
}

/// Step-response delay from direct integration; the time step is
/// `t_pd / steps_per_delay` of the effective-current estimate.
pub fn inverter_delay_transient(
    cell: &InverterCell,
    vdd: f64,
    t: f64,
    steps_per_delay: usize,
) -> Result<Delay> {
    let est = inverter_delay(cell, vdd, t)?;
    let n = steps_per_delay.max(1) as f64;
    let t_phl = transient_edge(&cell.nmos, cell.c_load, vdd, t, est.t_phl.min(est.t_pd) / n);
    let t_plh = transient_edge(&cell.pmos, cell.c_load, vdd, t, est.t_plh.min(est.t_pd) / n);
    Ok(Delay::from_edges(t_phl, t_plh))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingOscillatorSpec {
    pub stages: usize,
    pub cell: InverterCell,
    pub vdd: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Oscillation {
    Oscillates { frequency: f64 },
    FailsToOscillate { reason: String },
}

impl Oscillation {
    pub fn frequency(&self) -> Option<f64> {
        match self {
            Oscillation::Oscillates { frequency } => Some(*frequency),
            Oscillation::FailsToOscillate { .. } => None,
        }
    }
}

/// `f = 1 / (2 N t_pd)`.
pub fn ro_frequency_from_delay(stages: usize, t_pd: f64) -> f64 {
    1.0 / (2.0 * stages as f64 * t_pd)
}

pub fn ro_frequency(spec: &RingOscillatorSpec) -> Result<Oscillation> {
    if spec.stages < 3 || spec.stages.is_multiple_of(2) {
        return Err(Error::Precondition(format!(
            "ring oscillator needs an odd stage count >= 3, got {}",
            spec.stages
        )));
    }
    match inverter_delay(&spec.cell, spec.vdd, spec.t) {
        Ok(d) => Ok(Oscillation::Oscillates { frequency: ro_frequency_from_delay(spec.stages, d.t_pd) }),
        Err(Error::Stuck(reason)) => Ok(Oscillation::FailsToOscillate { reason }),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DffSpec {
    /// Inverter-equivalent stages from clock to Q.
    pub stages: usize,
    pub cell: InverterCell,
    pub vdd: f64,
    pub t: f64,
}

/// Default inverter-equivalent depth of a master-slave flip-flop.
pub const DFF_STAGES: usize = 6;

/// Clock-to-Q delay, averaged over rising and falling data.
pub fn dff_delay(spec: &DffSpec) -> Result<f64> {
    if spec.stages == 0 {
        return Err(Error::Precondition("flip-flop chain needs at least one stage".into()));
    }
    let d = inverter_delay(&spec.cell, spec.vdd, spec.t)?;
    // Successive stages alternate edges; a chain launched by a rising edge
    // starts with a falling output.
    let k = spec.stages;
    let (odd, even) = (k.div_ceil(2), k / 2);
    let rising = odd as f64 * d.t_phl + even as f64 * d.t_plh;
    let falling = odd as f64 * d.t_plh + even as f64 * d.t_phl;
    Ok(0.5 * (rising + falling))
}

/// `1 - new/old`.
pub fn relative_reduction(new: f64, old: f64) -> f64 {
    1.0 - new / old
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerScenario {
    pub f_clk: f64,
    pub vdd: f64,
    pub t: f64,
    /// Activity-weighted switched capacitance per cycle (F).
    pub c_switched: f64,
    /// Total NMOS and PMOS width drawing static current (µm).
    pub w_n: f64,
    pub w_p: f64,
    pub nmos: ModelParams,
    pub pmos: ModelParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub dynamic: f64,
    pub leakage: f64,
    pub total: f64,
}

pub fn module_power(s: &PowerScenario) -> Result<PowerBreakdown> {
    check_bias(s.vdd, s.t)?;
    for (name, v) in [("f_clk", s.f_clk), ("C_switched", s.c_switched), ("W_n", s.w_n), ("W_p", s.w_p)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Precondition(format!("{name} must be non-negative, got {v}")));
        }
    }
    let dynamic = s.c_switched * s.vdd * s.vdd * s.f_clk;
    let i_leak = leakage_density(&s.nmos, s.t) * s.w_n + leakage_density(&s.pmos, s.t) * s.w_p;
    let leakage = s.vdd * i_leak;
    Ok(PowerBreakdown { dynamic, leakage, total: dynamic + leakage })
}

/// Switched capacitance that makes `module_power` return `target` watts.
pub fn calibrate_switched_capacitance(s: &PowerScenario, target: f64) -> Result<f64> {
    let base = module_power(&PowerScenario { c_switched: 0.0, ..*s })?;
    let per_farad = s.vdd * s.vdd * s.f_clk;
    let c = (target - base.leakage) / per_farad;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Degenerate(format!(
            "leakage {:.3e} W alone meets or exceeds the {target:.3e} W target",
            base.leakage
        )));
    }
    Ok(c)
}

/// One named pair of complementary devices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Technology {
    pub name: String,
    pub nmos: Transistor,
    pub pmos: Transistor,
}

/// Circuit-level knobs shared by every technology in a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchSetup {
    pub ro_stages: usize,
    pub dff_stages: usize,
    pub c_load: f64,
    pub f_clk: f64,
    pub c_switched: f64,
    pub w_n: f64,
    pub w_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub technology: String,
    pub vdd: f64,
    pub t: f64,
    pub f_ro: Option<f64>,
    pub dff_delay: Option<f64>,
    pub power: f64,
    /// `ok` or the reason the ring fails to oscillate.
    pub status: String,
}

impl Technology {
    pub fn cell(&self, c_load: f64) -> InverterCell {
        InverterCell { nmos: self.nmos, pmos: self.pmos, c_load }
    }
}

fn evaluate(tech: &Technology, setup: &BenchSetup, vdd: f64, t: f64) -> Result<ComparisonRow> {
    let cell = tech.cell(setup.c_load);
    let osc = ro_frequency(&RingOscillatorSpec { stages: setup.ro_stages, cell, vdd, t })?;
    let dff = match dff_delay(&DffSpec { stages: setup.dff_stages, cell, vdd, t }) {
        Ok(d) => Some(d),
        Err(Error::Stuck(_)) => None,
        Err(e) => return Err(e),
    };
    let power = module_power(&PowerScenario {
        f_clk: setup.f_clk,
        vdd,
        t,
        c_switched: setup.c_switched,
        w_n: setup.w_n,
        w_p: setup.w_p,
        nmos: tech.nmos.params,
        pmos: tech.pmos.params,
    })?;
    let status = match &osc {
        Oscillation::Oscillates { .. } => "ok".to_string(),
        Oscillation::FailsToOscillate { reason } => format!("fails-to-oscillate: {reason}"),
    };
    Ok(ComparisonRow {
        technology: tech.name.clone(),
        vdd,
        t,
        f_ro: osc.frequency(),
        dff_delay: dff,
        power: power.total,
        status,
    })
}

/// Evaluate every technology on every `(V_DD, T)` point. Rows are sorted by
/// technology name, then V_DD, then T.
pub fn compare_technologies(
    techs: &[Technology],
    grid: &[(f64, f64)],
    setup: &BenchSetup,
) -> Result<Vec<ComparisonRow>> {
    let jobs: Vec<(&Technology, f64, f64)> = techs
        .iter()
        .flat_map(|tech| grid.iter().map(move |&(v, t)| (tech, v, t)))
        .collect();
    let mut rows = jobs
        .par_iter()
        .map(|&(tech, v, t)| evaluate(tech, setup, v, t))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.technology
            .cmp(&b.technology)
            .then(a.vdd.total_cmp(&b.vdd))
            .then(a.t.total_cmp(&b.t))
    });
    Ok(rows)
}

/// `(V_DD, T, f ratio - 1, dff change, power change)`.
pub type Delta = (f64, f64, Option<f64>, Option<f64>, f64);

/// Relative change of each metric of `other` against `base` on matching
/// `(V_DD, T)` points: `(V_DD, T, f ratio - 1, dff change, power change)`.
/// Metrics missing on either side are `None`.
pub fn relative_deltas(
    rows: &[ComparisonRow],
    base: &str,
    other: &str,
) -> Vec<Delta> {
    let pick = |name: &str| -> Vec<&ComparisonRow> { rows.iter().filter(|r| r.technology == name).collect() };
    let (b, o) = (pick(base), pick(other));
    let mut out = Vec::new();
    for rb in &b {
        if let Some(ro) = o.iter().find(|r| r.vdd == rb.vdd && r.t == rb.t) {
            let rel = |x: Option<f64>, y: Option<f64>| match (x, y) {
                (Some(x), Some(y)) => Some(y / x - 1.0),
                _ => None,
            };
            out.push((
                rb.vdd,
                rb.t,
                rel(rb.f_ro, ro.f_ro),
                rel(rb.dff_delay, ro.dff_delay),
                ro.power / rb.power - 1.0,
            ));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(polarity: Polarity, vth0: f64) -> ModelParams {
        ModelParams {
            polarity,
            vth0,
            c_vth: 4e-4,
            mu0: 60.0,
            alpha_ph: 1.5,
            mu_c: 600.0,
            n0: 1.7,
            ss_floor: 17.0,
            v_sat: 2.5e7,
            lambda_clm: 0.05,
            i_off_ref: 1e-10,
            eta: 60.0,
        }
    }

    fn cell(vth: f64) -> InverterCell {
        let geom = DeviceGeometry { w: 0.1, l: 0.03, c_ox: 2e-6 };
        InverterCell {
            nmos: Transistor { params: params(Polarity::Nmos, vth), geom },
            pmos: Transistor { params: params(Polarity::Pmos, vth + 0.02), geom },
            c_load: 1e-15,
        }
    }

    #[test]
    fn edge_delay_arithmetic() {
        assert!((edge_delay(1e-15, 0.9, 0.5e-3) - 0.9e-12).abs() < 1e-24);
        assert!((ro_frequency_from_delay(257, 3.9e-12) - 498.8e6).abs() < 0.1e6);
    }

    #[test]
    fn cold_cell_is_faster() {
        let c = cell(0.1);
        let cold = inverter_delay(&c, 0.9, 77.0).unwrap().t_pd;
        let warm = inverter_delay(&c, 0.9, 298.0).unwrap().t_pd;
        assert!(cold < warm);
    }

    #[test]
    fn high_threshold_cell_is_stuck() {
        let c = cell(0.33);
        assert!(matches!(inverter_delay(&c, 0.6, 77.0), Err(Error::Stuck(_))));
        let spec = RingOscillatorSpec { stages: 257, cell: c, vdd: 0.6, t: 77.0 };
        assert!(matches!(ro_frequency(&spec).unwrap(), Oscillation::FailsToOscillate { .. }));
        assert!(inverter_delay(&c, 0.9, 77.0).is_ok());
    }

    #[test]
    fn stuck_is_monotone_in_supply() {
        let c = cell(0.3);
        for t in [10.0, 77.0, 298.0] {
            let mut seen_ok = false;
            for k in 0..=40 {
                let v = 0.3 + 0.02 * k as f64;
                let ok = c.stuck_reason(v, t).is_none();
                assert!(ok || !seen_ok, "T={t} V={v}");
                seen_ok |= ok;
            }
        }
    }

    #[test]
    fn ring_scaling_laws() {
        let c = cell(0.1);
        let f = |stages, cell| {
            ro_frequency(&RingOscillatorSpec { stages, cell, vdd: 0.8, t: 77.0 })
                .unwrap()
                .frequency()
                .unwrap()
        };
        let f1 = f(101, c);
        assert!((f(203, c) / f1 - 101.0 / 203.0).abs() < 1e-12);
        assert!((f(101, c.with_load(3e-15)) * 3.0 / f1 - 1.0).abs() < 1e-12);
        assert!(ro_frequency(&RingOscillatorSpec { stages: 4, cell: c, vdd: 0.8, t: 77.0 }).is_err());
    }

    #[test]
    fn dff_single_stage_equals_inverter() {
        let c = cell(0.1);
        let d = inverter_delay(&c, 0.8, 77.0).unwrap().t_pd;
        let one = dff_delay(&DffSpec { stages: 1, cell: c, vdd: 0.8, t: 77.0 }).unwrap();
        assert_eq!(one, d);
        let six = dff_delay(&DffSpec { stages: 6, cell: c, vdd: 0.8, t: 77.0 }).unwrap();
        assert!((six / (6.0 * d) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dff_reduction_ignores_load() {
        let (a, b) = (cell(0.1), cell(0.25));
        let red = |k: f64| {
            let d = |c: InverterCell| dff_delay(&DffSpec { stages: 6, cell: c.with_load(k), vdd: 0.9, t: 77.0 }).unwrap();
            relative_reduction(d(a), d(b))
        };
        assert!((red(1e-15) - red(7e-15)).abs() < 1e-12);
    }

    #[test]
    fn transient_oracle_agrees() {
        for vth in [0.1, 0.2] {
            let c = cell(vth);
            for (v, t) in [(0.6, 77.0), (0.9, 77.0), (0.6, 298.0), (0.9, 298.0)] {
                let fast = inverter_delay(&c, v, t).unwrap().t_pd;
                let slow = inverter_delay_transient(&c, v, t, 1000).unwrap().t_pd;
                assert!((fast / slow - 1.0).abs() < 0.2, "vth={vth} V={v} T={t}: {fast} {slow}");
            }
        }
    }

    fn scenario(vdd: f64) -> PowerScenario {
        PowerScenario {
            f_clk: 1e8,
            vdd,
            t: 77.0,
            c_switched: 2e-11,
            w_n: 0.0,
            w_p: 0.0,
            nmos: params(Polarity::Nmos, 0.1),
            pmos: params(Polarity::Pmos, 0.12),
        }
    }

    #[test]
    fn power_laws() {
        let full = module_power(&scenario(0.9)).unwrap();
        let half = module_power(&scenario(0.45)).unwrap();
        assert!((half.total * 4.0 / full.total - 1.0).abs() < 1e-12);
        let s = PowerScenario { f_clk: 0.0, w_n: 1e4, w_p: 1e4, ..scenario(0.9) };
        let p = module_power(&s).unwrap();
        assert_eq!(p.total, p.leakage);
        let s = PowerScenario { w_n: 1e4, w_p: 2e4, ..scenario(0.9) };
        let p = module_power(&s).unwrap();
        assert_eq!(p.dynamic + p.leakage, p.total);
        let c = calibrate_switched_capacitance(&s, 2.03e-3).unwrap();
        let p = module_power(&PowerScenario { c_switched: c, ..s }).unwrap();
        assert!((p.total / 2.03e-3 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_technologies_have_zero_deltas() {
        let c = cell(0.1);
        let a = Technology { name: "a".into(), nmos: c.nmos, pmos: c.pmos };
        let b = Technology { name: "b".into(), ..a.clone() };
        let setup = BenchSetup {
            ro_stages: 257,
            dff_stages: 6,
            c_load: 1e-15,
            f_clk: 1e8,
            c_switched: 1e-11,
            w_n: 100.0,
            w_p: 100.0,
        };
        let grid = [(0.6, 77.0), (0.9, 77.0), (0.9, 298.0)];
        let rows = compare_technologies(&[b.clone(), a.clone()], &grid, &setup).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].technology, "a");
        for d in relative_deltas(&rows, "a", "b") {
            assert_eq!(d.2, Some(0.0));
            assert_eq!(d.3, Some(0.0));
            assert_eq!(d.4, 0.0);
        }
    }
}
