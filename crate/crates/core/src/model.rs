//! Temperature-dependent compact drain-current model.
//!
//! A single smooth expression covers weak, moderate and strong inversion:
//!
//! ```text
//! U_T    = kT/q,  n = SS(T) / (U_T ln10)
//! V_gt   = n U_T softplus((V_GS - V_TH(T)) / (n U_T))
//! E_c    = v_sat / mu(T)
//! V_dsat = (V_gt + 2 n U_T) L E_c / (V_gt + 2 n U_T + L E_c)
//! V_dse  = V_DS V_dsat / (V_DS^4 + V_dsat^4)^(1/4)
//! I_DS   = (W/L) mu C_ox V_gt V_dse / (1 + V_dse / (L E_c)) (1 + lambda V_DS) + W I_off(T)
//! ```
//!
//! The `2 n U_T` term keeps the saturation voltage finite in weak inversion.
//! Without it `V_dse` tracks `V_gt` below threshold and the current goes as
//! `V_gt²`, i.e. one decade per half of the subthreshold swing.
//!
//! All biases are magnitudes; PMOS sign handling is presentation only.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_10;

use crate::error::{Error, Result};
use crate::physics::{check_temperature, ln_1p_exp, SiliconConstants};
use crate::sweep::{IvPoint, IvSweep, Origin};

/// Temperature at which the reference values of [`ModelParams`] apply (K).
pub const T_REF: f64 = 298.0;

/// Exponent of the smooth minimum between `V_DS` and `V_dsat`.
const SMOOTH_MIN_EXP: i32 = 4;

/// Weak-inversion floor of the saturation voltage, in units of `n U_T`.
const VDSAT_FLOOR: f64 = 2.0;

/// Thermal voltage kT/q (V).
pub fn thermal_voltage(t: f64) -> f64 {
    let si = SiliconConstants::SILICON;
    si.k_b * t / si.q
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Nmos,
    Pmos,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Nmos => 1.0,
            Polarity::Pmos => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Nmos => "nmos",
            Polarity::Pmos => "pmos",
        }
    }
}

impl std::str::FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nmos" | "n" => Ok(Polarity::Nmos),
            "pmos" | "p" => Ok(Polarity::Pmos),
            other => Err(Error::Precondition(format!("unknown polarity `{other}`"))),
        }
    }
}

/// Channel geometry and gate capacitance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceGeometry {
    /// Width (µm).
    pub w: f64,
    /// Length (µm).
    pub l: f64,
    /// Gate capacitance per area (F/cm^2).
    pub c_ox: f64,
}

impl DeviceGeometry {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("W", self.w), ("L", self.l), ("C_ox", self.c_ox)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Precondition(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn aspect(&self) -> f64 {
        self.w / self.l
    }
}

/// Parameters of one transistor flavor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub polarity: Polarity,
    /// Threshold voltage magnitude at 298 K (V).
    pub vth0: f64,
    /// Linear threshold coefficient (V/K); positive means V_TH rises on cooling.
    pub c_vth: f64,
    /// Phonon-limited mobility at 298 K (cm^2/V·s).
    pub mu0: f64,
    /// Phonon temperature exponent.
    pub alpha_ph: f64,
    /// Coulomb-limited mobility ceiling (cm^2/V·s); `inf` disables it.
    pub mu_c: f64,
    /// Room-temperature ideality factor.
    pub n0: f64,
    /// Cryogenic subthreshold-swing floor (mV/dec).
    pub ss_floor: f64,
    /// Saturation velocity (cm/s); `inf` disables velocity saturation.
    pub v_sat: f64,
    /// Channel-length modulation (1/V).
    pub lambda_clm: f64,
    /// Leakage per µm of width at 298 K (A/µm).
    pub i_off_ref: f64,
    /// Kelvin per decade of leakage.
    pub eta: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mu0", self.mu0),
            ("mu_c", self.mu_c),
            ("v_sat", self.v_sat),
            ("eta", self.eta),
            ("i_off_ref", self.i_off_ref),
        ];
        for (name, v) in positive {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::Precondition(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.n0 >= 1.0 && self.n0.is_finite()) {
            return Err(Error::Precondition(format!("n0 must be >= 1, got {}", self.n0)));
        }
        if !(self.ss_floor >= 0.0 && self.ss_floor.is_finite()) {
            return Err(Error::Precondition(format!(
                "ss_floor must be >= 0, got {}",
                self.ss_floor
            )));
        }
        if !(self.vth0 > 0.0 && self.vth0 < 1.5) {
            return Err(Error::Precondition(format!(
                "vth0 must lie in (0, 1.5) V, got {}",
                self.vth0
            )));
        }
        if !(self.lambda_clm >= 0.0 && self.lambda_clm.is_finite()) {
            return Err(Error::Precondition(format!(
                "lambda_clm must be >= 0, got {}",
                self.lambda_clm
            )));
        }
        if !(self.c_vth.is_finite() && self.alpha_ph.is_finite() && self.alpha_ph >= 0.0) {
            return Err(Error::Precondition("c_vth and alpha_ph must be finite".into()));
        }
        Ok(())
    }

    /// Stable 64-bit FNV-1a digest of every field, rendered as hex.
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h ^= *b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(self.polarity.as_str().as_bytes());
        for v in [
            self.vth0,
            self.c_vth,
            self.mu0,
            self.alpha_ph,
            self.mu_c,
            self.n0,
            self.ss_floor,
            self.v_sat,
            self.lambda_clm,
            self.i_off_ref,
            self.eta,
        ] {
            eat(&v.to_bits().to_le_bytes());
        }
        format!("{h:016x}")
    }
}

/// Operating point. Voltages are magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasPoint {
    pub vgs: f64,
    pub vds: f64,
    pub t: f64,
}

impl BiasPoint {
    pub fn new(vgs: f64, vds: f64, t: f64) -> Result<Self> {
        check_temperature(t)?;
        if !(vgs.is_finite() && vds.is_finite()) {
            return Err(Error::Precondition("bias voltages must be finite".into()));
        }
        if vds < 0.0 {
            return Err(Error::Precondition(format!(
                "V_DS magnitude must be non-negative, got {vds}"
            )));
        }
        Ok(BiasPoint { vgs, vds, t })
    }
}

/// Low-field mobility, Matthiessen sum of phonon and Coulomb branches.
pub fn mobility(p: &ModelParams, t: f64) -> f64 {
    let phonon = p.mu0 * (t / T_REF).powf(-p.alpha_ph);
    1.0 / (1.0 / phonon + 1.0 / p.mu_c)
}

/// Threshold magnitude at temperature `t` (V).
pub fn vth_of_t(p: &ModelParams, t: f64) -> f64 {
    p.vth0 + p.c_vth * (T_REF - t)
}

/// Subthreshold swing (mV/dec), thermal term and cryogenic floor in quadrature.
pub fn ss_of_t(p: &ModelParams, t: f64) -> f64 {
    let thermal = p.n0 * thermal_voltage(t) * LN_10 * 1000.0;
    thermal.hypot(p.ss_floor)
}

/// Effective ideality factor implied by [`ss_of_t`].
pub fn n_eff(p: &ModelParams, t: f64) -> f64 {
    ss_of_t(p, t) / (thermal_voltage(t) * LN_10 * 1000.0)
}

/// Zero-bias leakage per µm of width (A/µm): one decade per `eta` kelvin.
pub fn leakage_density(p: &ModelParams, t: f64) -> f64 {
    p.i_off_ref * 10f64.powf((t - T_REF) / p.eta)
}

/// Drain current magnitude (A).
pub fn drain_current(p: &ModelParams, geom: &DeviceGeometry, bias: &BiasPoint) -> f64 {
    let t = bias.t;
    let vds = bias.vds;
    let nut = n_eff(p, t) * thermal_voltage(t);
    let vgt = nut * ln_1p_exp((bias.vgs - vth_of_t(p, t)) / nut);

    let mu = mobility(p, t);
    let l_cm = geom.l * 1e-4;
    // L·E_c in volts; infinite when velocity saturation is disabled.
    let lec = l_cm * p.v_sat / mu;
    let vgf = vgt + VDSAT_FLOOR * nut;
    let vdsat = vgf / (1.0 + vgf / lec);
    let vdse = if vds > 0.0 {
        vds * vdsat / (vds.powi(SMOOTH_MIN_EXP) + vdsat.powi(SMOOTH_MIN_EXP)).powf(0.25)
    } else {
        0.0
    };

    let channel = geom.aspect() * mu * geom.c_ox * vgt * vdse / (1.0 + vdse / lec)
        * (1.0 + p.lambda_clm * vds);
    channel + geom.w * leakage_density(p, t)
}

/// Drain current for signed (presentation) biases; returns a signed current.
pub fn drain_current_signed(
    p: &ModelParams,
    geom: &DeviceGeometry,
    vgs: f64,
    vds: f64,
    t: f64,
) -> Result<f64> {
    let s = p.polarity.sign();
    let bias = BiasPoint::new(s * vgs, s * vds, t)?;
    Ok(s * drain_current(p, geom, &bias))
}

/// Central-difference step used by [`transconductance`].
pub fn gm_step(p: &ModelParams, t: f64) -> f64 {
    (1e-4 * n_eff(p, t) * thermal_voltage(t)).max(1e-6)
}

/// ∂I_DS/∂V_GS (S) by central difference.
pub fn transconductance(p: &ModelParams, geom: &DeviceGeometry, bias: &BiasPoint) -> f64 {
    let h = gm_step(p, bias.t);
    let up = BiasPoint { vgs: bias.vgs + h, ..*bias };
    let dn = BiasPoint { vgs: bias.vgs - h, ..*bias };
    (drain_current(p, geom, &up) - drain_current(p, geom, &dn)) / (2.0 * h)
}

/// I_DS(V_DD, V_DD) / I_DS(0, V_DD).
pub fn on_off_ratio(p: &ModelParams, geom: &DeviceGeometry, vdd: f64, t: f64) -> Result<f64> {
    if !(vdd > 0.0) {
        return Err(Error::Precondition(format!("V_DD must be positive, got {vdd}")));
    }
    let on = drain_current(p, geom, &BiasPoint::new(vdd, vdd, t)?);
    let off = drain_current(p, geom, &BiasPoint::new(0.0, vdd, t)?);
    // The leakage floor keeps `off` strictly positive for valid params.
    Ok(on / off)
}

/// Evaluate the model along a gate grid at fixed drain bias.
pub fn iv_sweep_synthesize(
    p: &ModelParams,
    geom: &DeviceGeometry,
    vds: f64,
    t: f64,
    vgs_grid: &[f64],
) -> Result<IvSweep> {
    p.validate()?;
    geom.validate()?;
    if vgs_grid.is_empty() {
        return Err(Error::Precondition("gate grid is empty".into()));
    }
    if vgs_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("gate grid must be strictly increasing".into()));
    }
    let points = vgs_grid
        .iter()
        .map(|&vgs| {
            let bias = BiasPoint::new(vgs, vds, t)?;
            Ok(IvPoint {
                vgs,
                ids: drain_current(p, geom, &bias),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    IvSweep::new(
        vds,
        t,
        *geom,
        p.polarity,
        points,
        Origin::Synthetic(p.fingerprint()),
    )
}

/// Uniform grid `start, start + step, ..., stop` (inclusive, rounded).
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::Precondition(format!(
            "invalid grid {start}:{stop}:{step}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> ModelParams {
        ModelParams {
            polarity: Polarity::Nmos,
            vth0: 0.25,
            c_vth: 5e-4,
            mu0: 200.0,
            alpha_ph: 1.5,
            mu_c: 600.0,
            n0: 1.6,
            ss_floor: 15.0,
            v_sat: 1.2e7,
            lambda_clm: 0.1,
            i_off_ref: 1e-9,
            eta: 40.0,
        }
    }

    fn geom() -> DeviceGeometry {
        DeviceGeometry { w: 0.1, l: 0.03, c_ox: 2e-6 }
    }

    fn id(p: &ModelParams, g: &DeviceGeometry, vgs: f64, vds: f64, t: f64) -> f64 {
        drain_current(p, g, &BiasPoint::new(vgs, vds, t).unwrap())
    }

    #[test]
    fn mobility_pure_phonon() {
        let p = ModelParams { mu_c: f64::INFINITY, alpha_ph: 1.0, ..sample() };
        assert!((mobility(&p, 149.0) / (2.0 * p.mu0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mobility_plateau_and_bound() {
        let p = ModelParams { alpha_ph: 1.5, mu_c: 2.0 * sample().mu0, ..sample() };
        // Over equal 10 K steps the cold end gains less than the warm end.
        // (With mu_c = 2 mu0 the 10-40 K gain is still ~31 vs ~27 at
        // 150-180 K; the flattening only wins below ~20 K.)
        let low = mobility(&p, 10.0) - mobility(&p, 20.0);
        let high = mobility(&p, 150.0) - mobility(&p, 160.0);
        assert!(low < high, "{low} vs {high}");
        let wide_low = mobility(&p, 10.0) - mobility(&p, 40.0);
        assert!((wide_low / p.mu0 - 0.154_805).abs() < 1e-5);
        for t in [4.0, 10.0, 77.0, 298.0, 400.0] {
            assert!(mobility(&p, t) < p.mu_c);
        }
        assert!(mobility(&p, 77.0) > mobility(&p, 298.0));
    }

    #[test]
    fn vth_reference_point() {
        let p = sample();
        assert_eq!(vth_of_t(&p, 298.0), p.vth0);
    }

    #[test]
    fn ss_thermal_limit() {
        let p = ModelParams { ss_floor: 0.0, n0: 1.0, ..sample() };
        assert!((ss_of_t(&p, 298.0) - 59.1).abs() < 0.2);
        let p = sample();
        let mut prev = 0.0;
        for i in 0..100 {
            let t = 4.0 + i as f64 * 3.9;
            let ss = ss_of_t(&p, t);
            assert!(ss >= p.ss_floor && ss > prev);
            prev = ss;
        }
    }

    #[test]
    fn leakage_law() {
        let p = sample();
        assert_eq!(leakage_density(&p, 298.0), p.i_off_ref);
        let dec = leakage_density(&p, 298.0 - p.eta);
        assert!((dec / (p.i_off_ref / 10.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deep_subthreshold_is_leakage() {
        // Channel current ten n·U_T below threshold is e^-10 of its value at
        // threshold; with a leakage floor well above that the total is the
        // floor.
        let p = ModelParams { i_off_ref: 1e-6, ..sample() };
        let g = geom();
        let t = 298.0;
        let nut = n_eff(&p, t) * thermal_voltage(t);
        let vgs = vth_of_t(&p, t) - 10.0 * nut;
        for vds in [0.05, 0.5, 0.9] {
            let i = id(&p, &g, vgs, vds, t);
            let leak = g.w * leakage_density(&p, t);
            assert!((i / leak - 1.0).abs() < 0.01, "vds={vds}: {i:e} vs {leak:e}");
            let at_vth = id(&p, &g, vth_of_t(&p, t), vds, t) - leak;
            assert!((i - leak) / at_vth < 1e-4);
        }
    }

    #[test]
    fn subthreshold_decade_per_swing() {
        let p = ModelParams { i_off_ref: 1e-30, ..sample() };
        let g = geom();
        for t in [10.0, 77.0, 150.0, 298.0] {
            for vds in [0.05, 0.9] {
                let nut = n_eff(&p, t) * thermal_voltage(t);
                let vth = vth_of_t(&p, t);
                let (a, b) = (vth - 8.0 * nut, vth - 4.0 * nut);
                let decades = (id(&p, &g, b, vds, t) / id(&p, &g, a, vds, t)).log10();
                let per_ss = decades / ((b - a) * 1000.0 / ss_of_t(&p, t));
                assert!((per_ss - 1.0).abs() < 0.01, "T={t} vds={vds}: {per_ss}");
            }
        }
    }

    #[test]
    fn width_scaling_is_exact() {
        let p = sample();
        let g = geom();
        let g2 = DeviceGeometry { w: 2.0 * g.w, ..g };
        for &(vgs, vds, t) in &[(0.0, 0.9, 77.0), (0.5, 0.05, 10.0), (0.9, 0.9, 298.0)] {
            let a = id(&p, &g, vgs, vds, t);
            let b = id(&p, &g2, vgs, vds, t);
            assert!((b / (2.0 * a) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn length_scaling_without_velocity_saturation() {
        let p = ModelParams { v_sat: f64::INFINITY, i_off_ref: 1e-30, ..sample() };
        let g = geom();
        let g3 = DeviceGeometry { l: 3.0 * g.l, ..g };
        let a = id(&p, &g, 0.8, 0.02, 77.0);
        let b = id(&p, &g3, 0.8, 0.02, 77.0);
        assert!((a / (3.0 * b) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn pmos_matches_nmos_at_magnitudes() {
        let n = sample();
        let pm = ModelParams { polarity: Polarity::Pmos, ..n };
        let g = geom();
        let i_n = drain_current_signed(&n, &g, 0.7, 0.9, 77.0).unwrap();
        let i_p = drain_current_signed(&pm, &g, -0.7, -0.9, 77.0).unwrap();
        assert_eq!(i_n, -i_p);
    }

    #[test]
    fn on_off_improves_when_cold() {
        let p = sample();
        let g = geom();
        let warm = on_off_ratio(&p, &g, 0.6, 298.0).unwrap();
        let cold = on_off_ratio(&p, &g, 0.6, 10.0).unwrap();
        assert!(cold > warm);
        let mut prev = 0.0;
        for i in 1..=9 {
            let r = on_off_ratio(&p, &g, 0.1 * i as f64, 77.0).unwrap();
            assert!(r > prev);
            prev = r;
        }
        assert!(on_off_ratio(&p, &g, 0.0, 77.0).is_err());
    }

    #[test]
    fn synthesize_sweeps() {
        let p = sample();
        let g = geom();
        let one = iv_sweep_synthesize(&p, &g, 0.05, 77.0, &[0.3]).unwrap();
        assert_eq!(one.len(), 1);
        let grid = linear_grid(-0.2, 0.9, 0.01).unwrap();
        let s = iv_sweep_synthesize(&p, &g, 0.9, 77.0, &grid).unwrap();
        assert!(s.points.windows(2).all(|w| w[1].ids > w[0].ids));
        let again = iv_sweep_synthesize(&p, &g, 0.9, 77.0, &grid).unwrap();
        assert_eq!(s, again);
        assert_eq!(s.origin, Origin::Synthetic(p.fingerprint()));
        assert!(iv_sweep_synthesize(&p, &g, 0.9, 77.0, &[]).is_err());
        assert!(iv_sweep_synthesize(&p, &g, 0.9, 77.0, &[0.2, 0.1]).is_err());
    }

    #[test]
    fn grid_arithmetic() {
        assert_eq!(linear_grid(0.0, 0.9, 0.01).unwrap().len(), 91);
        assert_eq!(linear_grid(0.0, 0.0, 0.01).unwrap().len(), 1);
        assert!(linear_grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn subthreshold_gm_is_exponential_derivative() {
        let p = ModelParams { i_off_ref: 1e-30, ..sample() };
        let g = geom();
        let t = 77.0;
        let nut = n_eff(&p, t) * thermal_voltage(t);
        let bias = BiasPoint::new(vth_of_t(&p, t) - 8.0 * nut, 0.9, t).unwrap();
        let gm = transconductance(&p, &g, &bias);
        let expect = drain_current(&p, &g, &bias) * LN_10 * 1000.0 / ss_of_t(&p, t);
        assert!((gm / expect - 1.0).abs() < 0.02, "{gm:e} vs {expect:e}");
    }
}
