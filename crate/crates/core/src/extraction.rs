//! Figures of merit from transfer sweeps.
//!
//! Every extractor works on NMOS-convention magnitudes (see [`IvSweep`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::T_REF;
use crate::sweep::IvSweep;

/// Criterion current of the constant-current method, per unit W/L (A).
pub const CC_CRITERION: f64 = 1e-8;
/// Largest drain bias accepted by the Y-function method (V).
pub const Y_MAX_VDS: f64 = 0.1;
/// Minimum R² for an acceptable Y-function window.
pub const Y_MIN_R2: f64 = 0.98;
/// Minimum window length as a fraction of above-threshold points.
const Y_WINDOW_FRACTION: f64 = 0.3;
/// Same, for sweeps whose estimated noise exceeds the noise floor.
const Y_WINDOW_FRACTION_NOISY: f64 = 1.0;
/// Fraction of the gate span at the top of the sweep excluded from Y fits.
const Y_TOP_EXCLUSION: f64 = 0.1;
/// Subthreshold decades required by [`subthreshold_swing`].
pub const SS_MIN_DECADES: f64 = 2.0;
/// Points required by a valid sweep.
pub const MIN_POINTS: usize = 8;

fn require_points(sweep: &IvSweep, n: usize) -> Result<()> {
    sweep.validate()?;
    if sweep.len() < n {
        return Err(Error::Precondition(format!(
            "sweep has {} points, need at least {n}",
            sweep.len()
        )));
    }
    Ok(())
}

/// `I_crit = 1e-8 · W/L` (A).
pub fn criterion_current(sweep: &IvSweep) -> f64 {
    CC_CRITERION * sweep.geom.aspect()
}

/// Gate voltage at which `log10 I` first reaches `log10 target`, interpolated
/// linearly in `(V_GS, log10 I_DS)`, searching from index `from`.
fn first_log_crossing(sweep: &IvSweep, from: usize, target: f64) -> Option<f64> {
    let pts = &sweep.points;
    let lt = target.log10();
    for i in from..pts.len() {
        if pts[i].ids == target {
            return Some(pts[i].vgs);
        }
        if i + 1 < pts.len() && pts[i].ids < target && pts[i + 1].ids > target {
            let (l0, l1) = (pts[i].ids.log10(), pts[i + 1].ids.log10());
            let frac = (lt - l0) / (l1 - l0);
            return Some(pts[i].vgs + frac * (pts[i + 1].vgs - pts[i].vgs));
        }
    }
    None
}

/// `log10 I` at an arbitrary gate voltage inside the sweep.
fn log_current_at(sweep: &IvSweep, vgs: f64) -> Option<f64> {
    let pts = &sweep.points;
    if vgs < pts[0].vgs || vgs > pts[pts.len() - 1].vgs {
        return None;
    }
    let j = pts.partition_point(|p| p.vgs < vgs);
    if pts[j].vgs == vgs {
        return Some(pts[j].ids.log10());
    }
    let (a, b) = (&pts[j - 1], &pts[j]);
    let frac = (vgs - a.vgs) / (b.vgs - a.vgs);
    Some(a.ids.log10() + frac * (b.ids.log10() - a.ids.log10()))
}

/// Constant-current threshold voltage: first `V_GS` where `I_DS = 1e-8 W/L`.
pub fn vth_constant_current(sweep: &IvSweep) -> Result<f64> {
    require_points(sweep, MIN_POINTS)?;
    let target = criterion_current(sweep);
    first_log_crossing(sweep, 0, target).ok_or(Error::NoCrossing { target })
}

/// Numerical transconductance. Interior points use the three-point formula,
/// which is exact for quadratics on any grid and reduces to the plain central
/// difference on a uniform one; the end points are one-sided.
pub fn gm_numeric(sweep: &IvSweep) -> Result<Vec<(f64, f64)>> {
    require_points(sweep, 3)?;
    let v = sweep.vgs();
    let i = sweep.ids();
    let n = v.len();
    let mut out = Vec::with_capacity(n);
    out.push((v[0], (i[1] - i[0]) / (v[1] - v[0])));
    for k in 1..n - 1 {
        let h0 = v[k] - v[k - 1];
        let h1 = v[k + 1] - v[k];
        let d = if (h0 - h1).abs() <= 1e-12 * h0.max(h1) {
            (i[k + 1] - i[k - 1]) / (h0 + h1)
        } else {
            -h1 / (h0 * (h0 + h1)) * i[k - 1]
                + (h1 - h0) / (h0 * h1) * i[k]
                + h0 / (h1 * (h0 + h1)) * i[k + 1]
        };
        out.push((v[k], d));
    }
    out.push((v[n - 1], (i[n - 1] - i[n - 2]) / (v[n - 1] - v[n - 2])));
    Ok(out)
}

/// Robust estimate of the relative current noise, from the fourth difference
/// of `ln I` at points within three decades of the sweep maximum. The fourth
/// difference is blind to the curvature of `ln I` near threshold, and the
/// relative cut keeps the estimate independent of the current scale.
pub fn relative_noise(sweep: &IvSweep) -> f64 {
    let pts = &sweep.points;
    let top = pts.iter().map(|p| p.ids).fold(0.0, f64::max);
    let l: Vec<f64> = pts.iter().map(|p| p.ids.ln()).collect();
    let mut r: Vec<f64> = (2..pts.len().saturating_sub(2))
        .filter(|&k| pts[k - 2].ids > 1e-3 * top)
        .map(|k| (l[k - 2] - 4.0 * l[k - 1] + 6.0 * l[k] - 4.0 * l[k + 1] + l[k + 2]).abs())
        .collect();
    if r.len() < 5 {
        return 0.0;
    }
    r.sort_by(f64::total_cmp);
    // iid noise: the fourth difference has variance 70 sigma^2.
    1.4826 * r[r.len() / 2] / 70f64.sqrt()
}

/// Window R² values closer than this count as equal; the longer one wins.
const R2_TIE: f64 = 1e-9;

/// Noise below this is treated as none.
const NOISE_FLOOR: f64 = 2e-3;

/// Half-width (points) of the local regression that brings the derivative
/// noise of a sweep with relative noise `sigma` and step `h` under 2% at
/// 0.3 V of overdrive.
fn smoothing_half_width(sigma: f64, h: f64) -> usize {
    if sigma <= NOISE_FLOOR {
        return 1;
    }
    let need = (30.0 * sigma / h).powi(2) * 1.5;
    (need.cbrt().ceil() as usize).max(2)
}

/// Value and slope at each `x[k]` of the least-squares line through
/// `k - m ..= k + m`, clipped at the ends.
fn local_lines(x: &[f64], y: &[f64], m: usize) -> Vec<(f64, f64)> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let lo = k.saturating_sub(m);
            let hi = (k + m).min(n - 1);
            fit_line(&x[lo..=hi], &y[lo..=hi])
                .map_or((f64::NAN, f64::NAN), |l| (l.intercept + l.slope * x[k], l.slope))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub r2: f64,
}

/// Ordinary least squares `y = intercept + slope·x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::Degenerate("line fit needs at least two points".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("abscissa has zero variance".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(LineFit { intercept, slope, r2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YFunctionFit {
    /// Extrapolated threshold voltage (V).
    pub vth: f64,
    /// Low-field mobility from the slope (cm^2/V·s).
    pub mu: f64,
    pub r2: f64,
    /// Inclusive point indices of the fitted window.
    pub window: (usize, usize),
}

/// Y-function threshold and mobility from a linear-region sweep.
///
/// `Y = I_DS / sqrt(g_m)` is linear in `V_GS` above threshold with
/// `Y = sqrt(mu C_ox (W/L) V_DS) (V_GS - V_TH)`.
pub fn vth_y_function(sweep: &IvSweep) -> Result<YFunctionFit> {
    require_points(sweep, MIN_POINTS)?;
    if !(sweep.vds > 0.0 && sweep.vds <= Y_MAX_VDS) {
        return Err(Error::Precondition(format!(
            "Y-function needs a linear-region sweep (0 < V_DS <= {Y_MAX_VDS} V), got {} V",
            sweep.vds
        )));
    }
    let v = sweep.vgs();
    let i = sweep.ids();
    let step = (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64;
    let m = smoothing_half_width(relative_noise(sweep), step);
    let (i, gm, d2): (Vec<f64>, Vec<(f64, f64)>, Vec<f64>) = if m <= 1 {
        let gm = gm_numeric(sweep)?;
        let d2 = (1..gm.len() - 1)
            .map(|k| (gm[k + 1].1 - gm[k - 1].1) / (v[k + 1] - v[k - 1]))
            .collect();
        (i, gm, d2)
    } else {
        // Noisy data: current and its derivatives from local regression.
        let (smooth, g): (Vec<f64>, Vec<f64>) = local_lines(&v, &i, m).into_iter().unzip();
        let d2 = local_lines(&v, &g, m)[1..v.len() - 1].iter().map(|l| l.1).collect();
        (smooth, v.iter().copied().zip(g).collect(), d2)
    };

    // Threshold estimate: first point at the peak of dg_m/dV_GS. A flat
    // second derivative (ideal linear or square law) puts the onset at 0.
    let best = d2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let gm_scale = gm.iter().map(|g| g.1.abs()).fold(0.0, f64::max) / (v[v.len() - 1] - v[0]);
    let onset = if best <= 1e-9 * gm_scale {
        0
    } else {
        1 + d2.iter().position(|&d| d >= best - 1e-6 * best).unwrap_or(0)
    };

    let v_cut = v[v.len() - 1] - Y_TOP_EXCLUSION * (v[v.len() - 1] - v[0]);
    // On noisy data R² cannot tell the subthreshold knee from noise, so the
    // window starts past both the smoothing reach and three thermal slopes.
    let start = if m <= 1 {
        onset
    } else {
        let knee = subthreshold_swing(sweep).map_or(0.0, |ss| 3.0 * ss / 1000.0 / std::f64::consts::LN_10);
        let v_start = v[onset.min(v.len() - 1)] + knee;
        (onset + m).max(v.partition_point(|&x| x < v_start))
    };
    let above: Vec<usize> = (start..v.len())
        .filter(|&k| v[k] <= v_cut && gm[k].1 > 0.0)
        .collect();
    let fraction = if m <= 1 { Y_WINDOW_FRACTION } else { Y_WINDOW_FRACTION_NOISY };
    let min_len = ((fraction * above.len() as f64).ceil() as usize).max(3);
    if above.len() < min_len {
        return Err(Error::LinearWindow { best_r2: 0.0 });
    }
    let y: Vec<f64> = above.iter().map(|&k| i[k] / gm[k].1.sqrt()).collect();
    let x: Vec<f64> = above.iter().map(|&k| v[k]).collect();

    // Prefix sums make every contiguous window O(1). Centering and
    // normalizing first keeps the cancellation in them far below the tie
    // tolerance, so the chosen window does not depend on the current scale.
    let n = x.len();
    let xm = x.iter().sum::<f64>() / n as f64;
    let ym = y.iter().copied().fold(0.0, f64::max);
    let mut s = vec![[0.0f64; 5]; n + 1];
    for k in 0..n {
        let (a, b) = (x[k] - xm, y[k] / ym);
        s[k + 1] = [
            s[k][0] + a,
            s[k][1] + b,
            s[k][2] + a * a,
            s[k][3] + a * b,
            s[k][4] + b * b,
        ];
    }
    let mut windows = Vec::new();
    for lo in 0..n {
        for hi in (lo + min_len - 1)..n {
            let m = (hi + 1 - lo) as f64;
            let d = |c: usize| s[hi + 1][c] - s[lo][c];
            let sxx = d(2) - d(0) * d(0) / m;
            let sxy = d(3) - d(0) * d(1) / m;
            let syy = d(4) - d(1) * d(1) / m;
            if sxx <= 0.0 || syy <= 0.0 || sxy <= 0.0 {
                continue;
            }
            windows.push((sxy * sxy / (sxx * syy), lo, hi));
        }
    }
    // Longest window among those within the tie band of the best R².
    let top = windows.iter().map(|w| w.0).fold(f64::NEG_INFINITY, f64::max);
    let best_fit = windows
        .iter()
        .filter(|w| w.0 >= top - R2_TIE)
        .min_by_key(|w| (std::cmp::Reverse(w.2 - w.1), w.1))
        .copied();
    let (r2, lo, hi) = best_fit.ok_or(Error::LinearWindow { best_r2: 0.0 })?;
    if r2 < Y_MIN_R2 {
        return Err(Error::LinearWindow { best_r2: r2 });
    }
    let line = fit_line(&x[lo..=hi], &y[lo..=hi])?;
    let vth = -line.intercept / line.slope;
    let mu = line.slope * line.slope / (sweep.geom.c_ox * sweep.geom.aspect() * sweep.vds);
    Ok(YFunctionFit {
        vth,
        mu,
        r2: line.r2,
        window: (above[lo], above[hi]),
    })
}

/// Minimum inverse slope (mV/dec) over sliding one-decade windows lying below
/// the constant-current criterion.
pub fn subthreshold_swing(sweep: &IvSweep) -> Result<f64> {
    require_points(sweep, MIN_POINTS)?;
    let i_crit = criterion_current(sweep);
    let pts = &sweep.points;
    let i_min = pts.iter().map(|p| p.ids).fold(f64::INFINITY, f64::min);
    let i_top = pts
        .iter()
        .map(|p| p.ids)
        .fold(f64::NEG_INFINITY, f64::max)
        .min(i_crit);
    let decades = if i_top > i_min { (i_top / i_min).log10() } else { 0.0 };
    if decades < SS_MIN_DECADES {
        return Err(Error::InsufficientDecades {
            decades,
            required: SS_MIN_DECADES,
        });
    }
    // (window start index, points in the decade, SS of the window)
    let mut windows: Vec<(usize, usize, f64)> = Vec::new();
    for (k, p) in pts.iter().enumerate() {
        let target = p.ids * 10.0;
        if target > i_crit {
            continue;
        }
        let Some(v_end) = first_log_crossing(sweep, k, target) else { continue };
        let inside = pts[k..].iter().take_while(|q| q.vgs <= v_end).count();
        let ss = if inside >= 3 {
            // Least-squares slope over every point of the decade.
            let x: Vec<f64> = pts[k..k + inside].iter().map(|q| q.vgs).collect();
            let y: Vec<f64> = pts[k..k + inside].iter().map(|q| q.ids.log10()).collect();
            match fit_line(&x, &y) {
                Ok(l) if l.slope > 0.0 => 1000.0 / l.slope,
                _ => continue,
            }
        } else {
            (v_end - p.vgs) * 1000.0
        };
        windows.push((k, inside, ss));
    }
    let best = if relative_noise(sweep) <= NOISE_FLOOR {
        windows.iter().map(|w| w.2).fold(f64::INFINITY, f64::min)
    } else {
        // Noisy data: the bare minimum picks the luckiest window, so take
        // the minimum of a running median over one decade of window starts.
        let ss: Vec<f64> = windows.iter().map(|w| w.2).collect();
        (0..ss.len())
            .map(|j| {
                let half = windows[j].1 / 2;
                let mut near: Vec<f64> = ss[j.saturating_sub(half)..(j + half + 1).min(ss.len())].to_vec();
                near.sort_by(f64::total_cmp);
                near[near.len() / 2]
            })
            .fold(f64::INFINITY, f64::min)
    };
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::InsufficientDecades {
            decades,
            required: SS_MIN_DECADES,
        })
    }
}

/// Zero-gate-bias current, interpolated in log current.
pub fn off_current(sweep: &IvSweep) -> Result<f64> {
    sweep.validate()?;
    log_current_at(sweep, 0.0)
        .map(|l| 10f64.powf(l))
        .ok_or_else(|| Error::Precondition("sweep does not include V_GS = 0".into()))
}

/// Smallest overdrive `V_GS - V_TH,cc` with `I_DS(V_GS) / I_DS(0) >= ratio`.
pub fn overdrive_for_ratio(sweep: &IvSweep, ratio: f64) -> Result<f64> {
    require_points(sweep, MIN_POINTS)?;
    if !(ratio >= 1.0) {
        return Err(Error::Precondition(format!("ratio must be >= 1, got {ratio}")));
    }
    let pts = &sweep.points;
    if pts[0].vgs > 0.0 {
        return Err(Error::Precondition("sweep must include V_GS <= 0".into()));
    }
    let vth = vth_constant_current(sweep)?;
    let i0 = off_current(sweep)?;
    if ratio == 1.0 {
        return Ok(-vth);
    }
    let start = pts.partition_point(|p| p.vgs < 0.0);
    let target = i0 * ratio;
    // Include the bracketing interval that straddles V_GS = 0.
    let from = start.saturating_sub(1);
    let v = first_log_crossing(sweep, from, target)
        .filter(|v| *v >= 0.0)
        .ok_or(Error::UnreachableRatio { ratio })?;
    Ok(v - vth)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageSeries {
    /// `(T, I_off)` pairs, strictly increasing in temperature.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageFit {
    /// Leakage at 298 K (same unit as the input).
    pub i_off_ref: f64,
    /// Kelvin per decade.
    pub eta: f64,
    pub r2: f64,
}

/// Fit `log10 I_off = log10 I_off,ref + (T - 298)/eta` by least squares.
pub fn fit_leakage_eta(series: &LeakageSeries) -> Result<LeakageFit> {
    let pts = &series.points;
    if pts.len() < 2 {
        return Err(Error::Precondition("leakage fit needs at least two temperatures".into()));
    }
    if pts.iter().any(|&(t, i)| !(t > 0.0 && i > 0.0)) {
        return Err(Error::Precondition("temperatures and currents must be positive".into()));
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.log10()).collect();
    let line = fit_line(&x, &y)?;
    if !(line.slope > 0.0) {
        return Err(Error::Degenerate("leakage does not decrease on cooling".into()));
    }
    Ok(LeakageFit {
        i_off_ref: 10f64.powf(line.intercept + line.slope * T_REF),
        eta: 1.0 / line.slope,
        r2: line.r2,
    })
}

/// All figures of merit for one device at one temperature. Absent fields
/// had no applicable sweep or their extractor failed (see `errors`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub device: String,
    pub t: f64,
    pub vth_cc: Option<f64>,
    pub vth_y: Option<f64>,
    pub ss_min: Option<f64>,
    pub gm_max: Option<f64>,
    pub gm_max_vgs: Option<f64>,
    pub mu_ch: Option<f64>,
    pub i_off: Option<f64>,
    pub v_ov_at_ratio: Option<f64>,
    pub ratio: f64,
    pub y_r2: Option<f64>,
    pub y_window: Option<(usize, usize)>,
    pub errors: Vec<String>,
}

impl ExtractionReport {
    pub fn is_complete(&self) -> bool {
        self.errors.is_empty()
    }
}

fn record<T>(errors: &mut Vec<String>, what: &str, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(format!("{what}: {e}"));
            None
        }
    }
}

fn gm_peak(sweep: &IvSweep) -> Result<(f64, f64)> {
    let gm = gm_numeric(sweep)?;
    Ok(gm
        .into_iter()
        .fold((f64::NEG_INFINITY, f64::NAN), |acc, (v, g)| {
            if g > acc.0 {
                (g, v)
            } else {
                acc
            }
        }))
}

fn fill_saturation(report: &mut ExtractionReport, sat: &IvSweep) {
    let errs = &mut report.errors;
    report.vth_cc = record(errs, "vth_cc", vth_constant_current(sat));
    report.ss_min = record(errs, "ss", subthreshold_swing(sat));
    if let Some((g, v)) = record(errs, "gm", gm_peak(sat)) {
        report.gm_max = Some(g);
        report.gm_max_vgs = Some(v);
    }
    if sat.points[0].vgs <= 0.0 {
        report.i_off = record(errs, "i_off", off_current(sat));
        report.v_ov_at_ratio = record(errs, "v_ov", overdrive_for_ratio(sat, report.ratio));
    }
}

fn fill_linear(report: &mut ExtractionReport, lin: &IvSweep) {
    if let Some(y) = record(&mut report.errors, "vth_y", vth_y_function(lin)) {
        report.vth_y = Some(y.vth);
        report.mu_ch = Some(y.mu);
        report.y_r2 = Some(y.r2);
        report.y_window = Some(y.window);
    }
}

fn empty_report(device: &str, t: f64, ratio: f64) -> ExtractionReport {
    ExtractionReport {
        device: device.to_string(),
        t,
        vth_cc: None,
        vth_y: None,
        ss_min: None,
        gm_max: None,
        gm_max_vgs: None,
        mu_ch: None,
        i_off: None,
        v_ov_at_ratio: None,
        ratio,
        y_r2: None,
        y_window: None,
        errors: Vec::new(),
    }
}

/// Combined report from a linear-region sweep (Y-function) and a
/// saturation sweep (constant current, swing, g_m, leakage, overdrive).
pub fn extract_all(
    device: &str,
    lin: &IvSweep,
    sat: &IvSweep,
    ratio: f64,
) -> Result<ExtractionReport> {
    lin.validate()?;
    sat.validate()?;
    if lin.t != sat.t {
        return Err(Error::Precondition(format!(
            "sweeps taken at different temperatures ({} K vs {} K)",
            lin.t, sat.t
        )));
    }
    if lin.geom != sat.geom {
        return Err(Error::Precondition("sweeps describe different geometries".into()));
    }
    let mut report = empty_report(device, sat.t, ratio);
    fill_saturation(&mut report, sat);
    fill_linear(&mut report, lin);
    Ok(report)
}

/// Report from a single sweep: the Y-function runs when the sweep is in the
/// linear region, the rest runs on whatever the sweep covers.
pub fn extract_single(device: &str, sweep: &IvSweep, ratio: f64) -> Result<ExtractionReport> {
    sweep.validate()?;
    let mut report = empty_report(device, sweep.t, ratio);
    fill_saturation(&mut report, sweep);
    if sweep.vds <= Y_MAX_VDS {
        fill_linear(&mut report, sweep);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DeviceGeometry, Polarity};
    use crate::sweep::{IvPoint, Origin};

    fn geom() -> DeviceGeometry {
        DeviceGeometry { w: 0.1, l: 0.03, c_ox: 2e-6 }
    }

    fn sweep_from(vds: f64, f: impl Fn(f64) -> f64, grid: &[f64]) -> IvSweep {
        let points = grid.iter().map(|&v| IvPoint { vgs: v, ids: f(v) }).collect();
        IvSweep::new(vds, 77.0, geom(), Polarity::Nmos, points, Origin::Measured).unwrap()
    }

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn gm_exact_on_linear_and_quadratic() {
        let g = grid(0.0, 1.0, 21);
        let lin = sweep_from(0.05, |v| 3e-4 * v + 1e-6, &g);
        for (_, d) in gm_numeric(&lin).unwrap() {
            assert!((d / 3e-4 - 1.0).abs() < 1e-12);
        }
        let quad = sweep_from(0.05, |v| (v + 0.2).powi(2), &g);
        let gm = gm_numeric(&quad).unwrap();
        for (v, d) in &gm[1..gm.len() - 1] {
            assert!((d - 2.0 * (v + 0.2)).abs() < 1e-12);
        }
        // Non-uniform grid stays exact for quadratics.
        let nu: Vec<f64> = (0..15).map(|k| 0.01 * (k * k) as f64).collect();
        let quad = sweep_from(0.05, |v| (v + 0.2).powi(2), &nu);
        let gm = gm_numeric(&quad).unwrap();
        for (v, d) in &gm[1..gm.len() - 1] {
            assert!((d - 2.0 * (v + 0.2)).abs() < 1e-10);
        }
        assert_eq!(gm.len(), nu.len());
    }

    #[test]
    fn constant_current_hits_exact_point() {
        let i_crit = CC_CRITERION * geom().aspect();
        let g = grid(0.0, 0.7, 8);
        // Exponential through I_crit exactly at the fourth grid point.
        let v_hit = g[3];
        let s = sweep_from(0.9, |v| i_crit * 10f64.powf((v - v_hit) / 0.03), &g);
        let mut s2 = s.clone();
        s2.points[3].ids = i_crit;
        assert_eq!(vth_constant_current(&s2).unwrap(), v_hit);
        assert!((vth_constant_current(&s).unwrap() - v_hit).abs() < 1e-12);
    }

    #[test]
    fn constant_current_no_crossing() {
        let g = grid(0.0, 0.7, 10);
        let s = sweep_from(0.9, |v| 1e-12 * (1.0 + v), &g);
        assert!(matches!(vth_constant_current(&s), Err(Error::NoCrossing { .. })));
    }

    #[test]
    fn y_function_exact_on_linear_region_law() {
        // Ideal linear-region device I = K V_DS (V_GS - V_T) + small
        // subthreshold tail is what the Y-function inverts exactly.
        let (k, vt, vds) = (2e-3, 0.15, 0.05);
        let g = grid(0.2, 1.0, 41);
        let s = sweep_from(vds, |v| k * vds * (v - vt), &g);
        let y = vth_y_function(&s).unwrap();
        assert!((y.vth - vt).abs() < 1e-9, "{}", y.vth);
        let mu_expect = k / (geom().c_ox * geom().aspect());
        assert!((y.mu / mu_expect - 1.0).abs() < 1e-9);
        assert!(y.r2 > 0.999_999);
    }

    #[test]
    fn y_function_of_square_law_is_not_linear() {
        // I = K (V - V_T)^2 gives Y = sqrt(K/2) (V - V_T)^1.5, so the
        // extrapolated intercept lands above V_T.
        let (k, vt) = (1e-3, 0.15);
        let g = grid(0.2, 1.0, 41);
        let s = sweep_from(0.05, |v| k * (v - vt).powi(2), &g);
        let y = vth_y_function(&s).unwrap();
        assert!(y.vth > vt + 0.01);
    }

    #[test]
    fn y_function_rejects_saturation_sweep() {
        let g = grid(0.2, 1.0, 41);
        let s = sweep_from(0.9, |v| 1e-4 * v, &g);
        assert!(matches!(vth_y_function(&s), Err(Error::Precondition(_))));
    }

    #[test]
    fn y_function_scale_invariance() {
        let g = grid(0.2, 1.0, 41);
        let s = sweep_from(0.05, |v| 1e-4 * (v - 0.12) * (1.0 + 0.3 * v), &g);
        let base = vth_y_function(&s).unwrap().vth;
        for c in [1e-3, 1e3] {
            let v = vth_y_function(&s.scaled(c)).unwrap().vth;
            assert!((v - base).abs() < 1e-9);
        }
    }

    #[test]
    fn swing_of_pure_exponential() {
        let s_v = 0.0591;
        let g = grid(-0.5, 0.0, 51);
        let s = sweep_from(0.9, |v| 1e-9 * 10f64.powf(v / s_v), &g);
        let ss = subthreshold_swing(&s).unwrap();
        assert!((ss / 59.1 - 1.0).abs() < 1e-3, "{ss}");
    }

    #[test]
    fn swing_needs_two_decades() {
        let g = grid(0.0, 0.05, 10);
        let s = sweep_from(0.9, |v| 1e-10 * 10f64.powf(v / 0.06), &g);
        assert!(matches!(subthreshold_swing(&s), Err(Error::InsufficientDecades { .. })));
    }

    #[test]
    fn overdrive_ratio_one_is_zero_bias() {
        let i_crit = CC_CRITERION * geom().aspect();
        let g = grid(-0.2, 0.8, 51);
        let s = sweep_from(0.9, |v| i_crit * 10f64.powf((v - 0.1) / 0.03) + 1e-15, &g);
        let vth = vth_constant_current(&s).unwrap();
        assert!((overdrive_for_ratio(&s, 1.0).unwrap() + vth).abs() < 1e-15);
        let v = overdrive_for_ratio(&s, 1e3).unwrap();
        assert!((v + vth - 0.09).abs() < 1e-3, "{v}");
        assert!(matches!(
            overdrive_for_ratio(&s, 1e40),
            Err(Error::UnreachableRatio { .. })
        ));
    }

    #[test]
    fn leakage_fit_exact() {
        let law = |t: f64| 2e-11 * 10f64.powf((t - 298.0) / 50.0);
        let series = LeakageSeries {
            points: [10.0, 77.0, 150.0, 220.0, 298.0].iter().map(|&t| (t, law(t))).collect(),
        };
        let fit = fit_leakage_eta(&series).unwrap();
        assert!((fit.eta - 50.0).abs() < 1e-6);
        assert!((fit.i_off_ref / 2e-11 - 1.0).abs() < 1e-9);
        let two = LeakageSeries { points: vec![(77.0, 1e-12), (298.0, 1e-9)] };
        let fit = fit_leakage_eta(&two).unwrap();
        assert_eq!(fit.r2, 1.0);
        assert!((fit.eta - 221.0 / 3.0).abs() < 1e-9);
        let flat = LeakageSeries { points: vec![(77.0, 1e-12), (77.0, 2e-12), (77.0, 3e-12)] };
        assert!(matches!(fit_leakage_eta(&flat), Err(Error::Degenerate(_))));
    }

    #[test]
    fn extract_all_rejects_mismatched_temperature() {
        let g = grid(-0.2, 0.9, 40);
        let lin = sweep_from(0.05, |v| 1e-9 * (1.0 + v * v), &g);
        let mut sat = lin.clone();
        sat.vds = 0.9;
        sat.t = 10.0;
        assert!(extract_all("d", &lin, &sat, 1e7).is_err());
    }

    fn with_noise(s: &IvSweep, sigma: f64, seed: u64) -> IvSweep {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut out = s.clone();
        for p in &mut out.points {
            let (a, b): (f64, f64) = (rng.gen(), rng.gen());
            let z = (-2.0 * (1.0 - a).ln()).sqrt() * (std::f64::consts::TAU * b).cos();
            p.ids *= 1.0 + sigma * z;
        }
        out
    }

    fn linear_device() -> IvSweep {
        // Softplus turn-on, linear above threshold: Y is exactly linear there.
        let nut = 0.01;
        sweep_from(0.05, |v| 2e-5 * nut * (1.0 + ((v - 0.2) / nut).exp()).ln() + 1e-13, &grid(-0.3, 0.9, 1201))
    }

    #[test]
    fn noise_estimate_tracks_injected_noise() {
        let clean = linear_device();
        assert!(relative_noise(&clean) < NOISE_FLOOR);
        for sigma in [0.02, 0.05] {
            let est = relative_noise(&with_noise(&clean, sigma, 3));
            assert!((est / sigma - 1.0).abs() < 0.2, "{sigma}: {est}");
        }
    }

    #[test]
    fn noisy_y_function_stays_near_threshold() {
        let clean = linear_device();
        for seed in 0..5 {
            let y = vth_y_function(&with_noise(&clean, 0.05, seed)).unwrap();
            assert!((y.vth - 0.2).abs() < 0.02, "{seed}: {}", y.vth);
        }
    }

    #[test]
    fn noisy_swing_is_not_biased_low() {
        let s = 0.03;
        let clean = sweep_from(0.9, |v| 1e-14 * 10f64.powf(v / s), &grid(-0.1, 0.3, 401));
        for seed in 0..5 {
            let got = subthreshold_swing(&with_noise(&clean, 0.05, seed)).unwrap();
            assert!((got / 30.0 - 1.0).abs() < 0.04, "{seed}: {got}");
        }
    }
}
