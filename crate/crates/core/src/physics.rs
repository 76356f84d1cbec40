//! Bulk-silicon electrostatics versus temperature.
//!
//! Intrinsic carrier density, dopant ionization with Fermi-Dirac occupancy,
//! the surface potential at threshold and the long-channel threshold voltage
//!
//! ```text
//! V_TH = V_FB + φ_S + sqrt(2 q ε_Si N φ_S) / C_ox,   φ_S = (2kT/q) ln(N_act / n_i)
//! ```
//!
//! At deep-cryogenic temperatures `n_i` underflows `f64` (≈1e-295 cm^-3 at
//! 10 K), so every exponential is carried in log space and only exponentiated
//! at the API boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowest temperature accepted by any temperature-dependent function (K).
pub const T_MIN: f64 = 4.0;
/// Highest temperature accepted by any temperature-dependent function (K).
pub const T_MAX: f64 = 400.0;
/// Reference temperature of the freeze-out shift (K).
pub const T_ROOM: f64 = 298.0;

pub fn check_temperature(t: f64) -> Result<()> {
    if !(T_MIN..=T_MAX).contains(&t) {
        return Err(Error::Domain(format!(
            "temperature {t} K outside [{T_MIN}, {T_MAX}] K"
        )));
    }
    Ok(())
}

/// Material constants of silicon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiliconConstants {
    /// Elementary charge (C).
    pub q: f64,
    /// Boltzmann constant (J/K).
    pub k_b: f64,
    /// Permittivity (F/cm).
    pub eps_si: f64,
    /// Bandgap at 0 K (eV).
    pub eg0: f64,
    /// Varshni alpha (eV/K).
    pub alpha_g: f64,
    /// Varshni beta (K).
    pub beta_g: f64,
    /// Conduction-band effective density of states at 300 K (cm^-3).
    pub nc300: f64,
    /// Valence-band effective density of states at 300 K (cm^-3).
    pub nv300: f64,
}

impl SiliconConstants {
    /// Standard silicon set: CODATA charges, Varshni fit of Thurmond, and
    /// Green's effective densities of states.
    pub const SILICON: SiliconConstants = SiliconConstants {
        q: 1.602_176_634e-19,
        k_b: 1.380_649e-23,
        eps_si: 11.7 * 8.854_187_812_8e-14,
        eg0: 1.170,
        alpha_g: 4.73e-4,
        beta_g: 636.0,
        nc300: 2.86e19,
        nv300: 3.10e19,
    };

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.q,
            self.k_b,
            self.eps_si,
            self.eg0,
            self.alpha_g,
            self.beta_g,
            self.nc300,
            self.nv300,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Precondition(
                "silicon constants must be finite and positive".into(),
            ));
        }
        Ok(())
    }

    /// Thermal energy kT in eV.
    pub fn kt_ev(&self, t: f64) -> f64 {
        self.k_b * t / self.q
    }

    /// Varshni bandgap E_g(T) in eV.
    pub fn bandgap(&self, t: f64) -> f64 {
        self.eg0 - self.alpha_g * t * t / (t + self.beta_g)
    }

    pub fn nc(&self, t: f64) -> f64 {
        self.nc300 * (t / 300.0).powf(1.5)
    }

    pub fn nv(&self, t: f64) -> f64 {
        self.nv300 * (t / 300.0).powf(1.5)
    }
}

impl Default for SiliconConstants {
    fn default() -> Self {
        Self::SILICON
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DopantKind {
    Acceptor,
    Donor,
}

/// Channel (well) doping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelDoping {
    /// Chemical dopant concentration (cm^-3).
    pub n_dop: f64,
    /// Ionization energy measured from the majority band edge (eV).
    pub e_ion: f64,
    pub kind: DopantKind,
    /// Ground-state degeneracy (4 for acceptors, 2 for donors).
    pub g_d: f64,
}

impl ChannelDoping {
    /// Boron-like p-well of an NMOS channel.
    pub fn boron(n_dop: f64) -> Self {
        ChannelDoping {
            n_dop,
            e_ion: 0.045,
            kind: DopantKind::Acceptor,
            g_d: 4.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_dop.is_finite() && self.n_dop > 0.0) {
            return Err(Error::Precondition(format!(
                "doping must be positive, got {}",
                self.n_dop
            )));
        }
        if !(self.e_ion > 0.0 && self.e_ion < 0.2) {
            return Err(Error::Precondition(format!(
                "ionization energy {} eV outside (0, 0.2) eV",
                self.e_ion
            )));
        }
        if self.g_d != 2.0 && self.g_d != 4.0 {
            return Err(Error::Precondition(format!(
                "degeneracy factor must be 2 or 4, got {}",
                self.g_d
            )));
        }
        Ok(())
    }
}

/// Gate stack over a uniformly doped channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MosStack {
    /// Flat-band voltage (V).
    pub v_fb: f64,
    /// Gate capacitance per area (F/cm^2).
    pub c_ox: f64,
    pub doping: ChannelDoping,
}

impl MosStack {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_ox.is_finite() && self.c_ox > 0.0) {
            return Err(Error::Precondition(format!(
                "gate capacitance must be positive, got {}",
                self.c_ox
            )));
        }
        if !self.v_fb.is_finite() {
            return Err(Error::Precondition("flat-band voltage must be finite".into()));
        }
        self.doping.validate()
    }
}

impl Default for MosStack {
    /// Representative bulk NMOS stack: 1e18 cm^-3 boron, 1.2 µF/cm^2.
    fn default() -> Self {
        MosStack {
            v_fb: -0.9,
            c_ox: 1.2e-6,
            doping: ChannelDoping::boron(1e18),
        }
    }
}

/// Natural log of the intrinsic carrier density (ln cm^-3).
pub fn ln_intrinsic_density(si: &SiliconConstants, t: f64) -> Result<f64> {
    check_temperature(t)?;
    let ln_prefactor = 0.5 * (si.nc(t).ln() + si.nv(t).ln());
    Ok(ln_prefactor - si.bandgap(t) / (2.0 * si.kt_ev(t)))
}

/// Intrinsic carrier density n_i(T) in cm^-3. Underflows to zero below ~9 K;
/// use [`ln_intrinsic_density`] there.
pub fn intrinsic_density(si: &SiliconConstants, t: f64) -> Result<f64> {
    Ok(ln_intrinsic_density(si, t)?.exp())
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn ln_1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Charge neutrality `p = f·N` with Boltzmann majority carriers and
/// Fermi-Dirac dopant occupancy, written for `u = ln f`:
///
/// `r(u) = u + ln(1 + g·exp(u + ln N − ln N_band + E_ion/kT))`.
///
/// `r` is strictly increasing in `u`, negative as `u → −∞` and positive at
/// `u = 0`.
fn ionization_residual(ln_f: f64, ln_c: f64, g: f64) -> f64 {
    ln_f + ln_1p_exp(g.ln() + ln_f + ln_c)
}

fn ionization_log_coupling(si: &SiliconConstants, doping: &ChannelDoping, t: f64) -> f64 {
    let n_band = match doping.kind {
        DopantKind::Acceptor => si.nv(t),
        DopantKind::Donor => si.nc(t),
    };
    doping.n_dop.ln() - n_band.ln() + doping.e_ion / si.kt_ev(t)
}

const IONIZATION_TOL: f64 = 1e-12;
const IONIZATION_MAX_ITER: usize = 200;

/// Natural log of the ionized dopant fraction.
pub fn ln_ionized_fraction(si: &SiliconConstants, doping: &ChannelDoping, t: f64) -> Result<f64> {
    check_temperature(t)?;
    doping.validate()?;
    let ln_c = ionization_log_coupling(si, doping, t);
    let g = doping.g_d;

    // Bisection on ln f. At f → 0 the residual tends to ln f, so the
    // bracket below any plausible root is −(|ln c| + 50).
    let mut lo = -(ln_c.abs() + g.ln() + 50.0);
    let mut hi = 0.0_f64;
    if ionization_residual(lo, ln_c, g) > 0.0 {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: ionization_residual(lo, ln_c, g),
        });
    }
    for _ in 0..IONIZATION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if ionization_residual(mid, ln_c, g) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < IONIZATION_TOL {
            return Ok(0.5 * (lo + hi));
        }
    }
    let mid = 0.5 * (lo + hi);
    Err(Error::NoConvergence {
        iterations: IONIZATION_MAX_ITER,
        residual: ionization_residual(mid, ln_c, g),
    })
}

/// Fraction of dopants that are ionized, in (0, 1].
pub fn ionized_fraction(si: &SiliconConstants, doping: &ChannelDoping, t: f64) -> Result<f64> {
    Ok(ln_ionized_fraction(si, doping, t)?.exp())
}

/// Residual of the neutrality balance evaluated at a fraction `f`.
pub fn ionization_balance_residual(
    si: &SiliconConstants,
    doping: &ChannelDoping,
    t: f64,
    f: f64,
) -> f64 {
    let ln_c = ionization_log_coupling(si, doping, t);
    ionization_residual(f.ln(), ln_c, doping.g_d)
}

fn surface_potential_ln(si: &SiliconConstants, ln_n_active: f64, t: f64) -> Result<f64> {
    let ln_ni = ln_intrinsic_density(si, t)?;
    if ln_n_active < ln_ni {
        return Err(Error::Domain(format!(
            "active doping e^{ln_n_active:.3} cm^-3 below n_i = e^{ln_ni:.3} cm^-3 at {t} K"
        )));
    }
    Ok(2.0 * si.kt_ev(t) * (ln_n_active - ln_ni))
}

/// Surface potential at the threshold condition, `(2kT/q) ln(N_active / n_i)`.
pub fn surface_potential(si: &SiliconConstants, n_active: f64, t: f64) -> Result<f64> {
    if !(n_active > 0.0) {
        return Err(Error::Domain(format!("active doping must be positive, got {n_active}")));
    }
    surface_potential_ln(si, n_active.ln(), t)
}

/// Long-channel threshold voltage with carrier freeze-out.
///
/// The surface potential uses the activated (ionized) doping, which sets the
/// bulk Fermi level. The depletion charge uses the chemical doping: under
/// band bending at threshold the Fermi level sits far above the acceptor
/// level inside the depletion region, so the dopants there are fully ionized.
pub fn threshold_voltage(si: &SiliconConstants, stack: &MosStack, t: f64) -> Result<f64> {
    stack.validate()?;
    let ln_f = ln_ionized_fraction(si, &stack.doping, t)?;
    let ln_active = stack.doping.n_dop.ln() + ln_f;
    let phi_s = surface_potential_ln(si, ln_active, t)?;
    let q_dep = (2.0 * si.q * si.eps_si * stack.doping.n_dop * phi_s).sqrt();
    Ok(stack.v_fb + phi_s + q_dep / stack.c_ox)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreezeoutPoint {
    pub t: f64,
    pub vth: f64,
    /// Shift relative to the 298 K value.
    pub delta_vth: f64,
}

/// Threshold voltage over a temperature grid, with the shift referenced to
/// 298 K whether or not 298 K is on the grid.
pub fn vth_freezeout_curve(
    si: &SiliconConstants,
    stack: &MosStack,
    grid: &[f64],
) -> Result<Vec<FreezeoutPoint>> {
    if grid.is_empty() {
        return Err(Error::Precondition("temperature grid is empty".into()));
    }
    let v_ref = threshold_voltage(si, stack, T_ROOM)?;
    grid.iter()
        .map(|&t| {
            let vth = threshold_voltage(si, stack, t)?;
            Ok(FreezeoutPoint {
                t,
                vth,
                delta_vth: vth - v_ref,
            })
        })
        .collect()
}
