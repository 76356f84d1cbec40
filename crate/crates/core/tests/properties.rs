use cryomos::circuits::*;
use cryomos::extraction::*;
use cryomos::fitting::{calibrate, objective, FitProblem, FreeParam, Param};
use cryomos::formats::*;
use cryomos::library::*;
use cryomos::model::*;
use cryomos::optimize::{minimize, Bound, Options};
use cryomos::physics::*;
use proptest::prelude::*;

fn nmos() -> impl Strategy<Value = ModelParams> {
    (
        (0.05f64..0.45, 0.0f64..8e-4, 20.0f64..400.0, 0.5f64..2.5, 200.0f64..3000.0),
        (1.1f64..2.0, 5.0f64..25.0, 5e6f64..5e7, 0.0f64..0.2, 30.0f64..90.0),
    )
        .prop_map(|((vth0, c_vth, mu0, alpha_ph, mu_c), (n0, ss_floor, v_sat, lambda_clm, eta))| ModelParams {
            polarity: Polarity::Nmos,
            vth0,
            c_vth,
            mu0,
            alpha_ph,
            mu_c,
            n0,
            ss_floor,
            v_sat,
            lambda_clm,
            i_off_ref: 1e-14,
            eta,
        })
}

fn temperature() -> impl Strategy<Value = f64> {
    prop_oneof![Just(10.0), Just(77.0), Just(150.0), Just(298.0), 4.0f64..400.0]
}

fn id(p: &ModelParams, g: &DeviceGeometry, vgs: f64, vds: f64, t: f64) -> f64 {
    drain_current(p, g, &BiasPoint::new(vgs, vds, t).unwrap())
}

fn doping() -> impl Strategy<Value = ChannelDoping> {
    (1e16f64..1e19, 0.02f64..0.08, prop::bool::ANY).prop_map(|(n_dop, e_ion, acc)| ChannelDoping {
        n_dop,
        e_ion,
        kind: if acc { DopantKind::Acceptor } else { DopantKind::Donor },
        g_d: if acc { 4.0 } else { 2.0 },
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn intrinsic_density_increases_with_temperature(t in 4.0f64..399.0, dt in 0.01f64..1.0) {
        let si = SiliconConstants::SILICON;
        let a = ln_intrinsic_density(&si, t).unwrap();
        let b = ln_intrinsic_density(&si, (t + dt).min(400.0)).unwrap();
        prop_assert!(b > a);
    }

    #[test]
    fn ionized_fraction_solves_its_balance(d in doping(), t in 4.0f64..400.0) {
        let si = SiliconConstants::SILICON;
        let f = ionized_fraction(&si, &d, t).unwrap();
        prop_assert!(f > 0.0 && f <= 1.0);
        prop_assert!(ionization_balance_residual(&si, &d, t, f).abs() < 1e-10);
    }

    #[test]
    fn threshold_rises_with_doping(n in 1e16f64..5e18, k in 1.05f64..3.0, t in 10.0f64..298.0) {
        let si = SiliconConstants::SILICON;
        let lo = MosStack { doping: ChannelDoping::boron(n), ..MosStack::default() };
        let hi = MosStack { doping: ChannelDoping::boron(n * k), ..MosStack::default() };
        prop_assert!(threshold_voltage(&si, &hi, t).unwrap() > threshold_voltage(&si, &lo, t).unwrap());
    }

    #[test]
    fn threshold_does_not_rise_on_warming(n in 1e16f64..5e18) {
        let si = SiliconConstants::SILICON;
        let stack = MosStack { doping: ChannelDoping::boron(n), ..MosStack::default() };
        let grid: Vec<f64> = (0..20).map(|k| 10.0 + 288.0 * k as f64 / 19.0).collect();
        let curve = vth_freezeout_curve(&si, &stack, &grid).unwrap();
        for w in curve.windows(2) {
            prop_assert!(w[1].vth <= w[0].vth + 1e-12);
        }
    }

    #[test]
    fn surface_potential_matches_direct_formula(ln_n in 35.0f64..45.0, t in 20.0f64..400.0) {
        let si = SiliconConstants::SILICON;
        let n = ln_n.exp();
        let got = surface_potential(&si, n, t).unwrap();
        // n_i from the band parameters, evaluated without the log-space path;
        // below 20 K it underflows.
        let ni = (si.nc(t) * si.nv(t)).sqrt() * (-si.bandgap(t) / (2.0 * si.kt_ev(t))).exp();
        let oracle = 2.0 * si.kt_ev(t) * (n / ni).ln();
        prop_assert!((got / oracle - 1.0).abs() < 1e-12 || (got - oracle).abs() < 1e-12);
    }

    #[test]
    fn current_is_non_decreasing(p in nmos(), t in temperature(), vgs in -0.3f64..1.0, vds in 0.0f64..1.2, d in 1e-4f64..0.05) {
        let g = reference_geometry();
        prop_assert!(id(&p, &g, vgs + d, vds, t) >= id(&p, &g, vgs, vds, t));
        prop_assert!(id(&p, &g, vgs, vds + d, t) >= id(&p, &g, vgs, vds, t));
    }

    #[test]
    fn drain_bias_slope_has_no_jump_at_saturation(p in nmos(), t in temperature(), vgs in 0.5f64..1.0) {
        let g = reference_geometry();
        let vgt = vgs - vth_of_t(&p, t);
        prop_assume!(vgt > 0.1);
        let lec = g.l * 1e-4 * p.v_sat / mobility(&p, t);
        let vdsat = vgt / (1.0 + vgt / lec);
        // Largest slope change between neighbouring steps of width h across
        // the knee. A kink keeps it finite as h shrinks; C1 makes it O(h).
        let worst = |h: f64| {
            let n = (1.5 * vdsat / h) as usize;
            (0..n).map(|k| {
                let v = 0.5 * vdsat + k as f64 * h;
                let s0 = (id(&p, &g, vgs, v, t) - id(&p, &g, vgs, v - h, t)) / h;
                let s1 = (id(&p, &g, vgs, v + h, t) - id(&p, &g, vgs, v, t)) / h;
                (s1 - s0).abs()
            }).fold(0.0, f64::max)
        };
        let h = 1.2 / 1999.0;
        prop_assert!(worst(h / 4.0) <= 0.3 * worst(h));
    }

    #[test]
    fn width_scales_current_exactly(p in nmos(), t in temperature(), vgs in -0.3f64..1.0, vds in 0.0f64..1.2) {
        let g = reference_geometry();
        let g2 = DeviceGeometry { w: 2.0 * g.w, ..g };
        let a = id(&p, &g, vgs, vds, t);
        prop_assert!((id(&p, &g2, vgs, vds, t) / (2.0 * a) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn length_scaling_without_velocity_saturation(p in nmos(), t in temperature(), k in 1.5f64..4.0) {
        let p = ModelParams { v_sat: f64::INFINITY, i_off_ref: 1e-30, ..p };
        let g = reference_geometry();
        let g2 = DeviceGeometry { l: k * g.l, ..g };
        let vgs = vth_of_t(&p, t) + 0.3;
        let r = id(&p, &g2, vgs, 0.05, t) * k / id(&p, &g, vgs, 0.05, t);
        prop_assert!((r - 1.0).abs() < 1e-3);
    }

    #[test]
    fn transconductance_matches_independent_difference(p in nmos(), t in temperature(), vgs in -0.2f64..1.0, vds in 0.05f64..1.0) {
        // Without leakage, so the difference resolves the channel current.
        let p = ModelParams { i_off_ref: 1e-300, ..p };
        let g = reference_geometry();
        let h = 3e-3 * n_eff(&p, t) * thermal_voltage(t);
        let f = |x: f64| id(&p, &g, x, vds, t);
        prop_assume!(f(vgs - 2.0 * h) > 1e-250);
        let oracle = (f(vgs - 2.0 * h) - 8.0 * f(vgs - h) + 8.0 * f(vgs + h) - f(vgs + 2.0 * h)) / (12.0 * h);
        let got = transconductance(&p, &g, &BiasPoint::new(vgs, vds, t).unwrap());
        prop_assert!((got / oracle - 1.0).abs() <= 1e-3);
    }

    #[test]
    fn pmos_is_mirrored_nmos(p in nmos(), t in temperature(), vgs in 0.0f64..1.0, vds in 0.0f64..1.0) {
        let g = reference_geometry();
        let pm = ModelParams { polarity: Polarity::Pmos, ..p };
        let n = drain_current_signed(&p, &g, vgs, vds, t).unwrap();
        let m = drain_current_signed(&pm, &g, -vgs, -vds, t).unwrap();
        prop_assert_eq!(n, -m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn y_function_ignores_current_scale(p in nmos(), t in temperature()) {
        let g = reference_geometry();
        let s = iv_sweep_synthesize(&p, &g, 0.05, t, &linear_grid(-0.3, 1.2, 0.005).unwrap()).unwrap();
        if let Ok(base) = vth_y_function(&s) {
            for c in [1e-3, 1e3] {
                prop_assert!((vth_y_function(&s.scaled(c)).unwrap().vth - base.vth).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn constant_current_threshold_survives_regridding(p in nmos(), t in temperature()) {
        let g = reference_geometry();
        let coarse = iv_sweep_synthesize(&p, &g, 0.9, t, &linear_grid(-0.3, 1.0, 0.01).unwrap()).unwrap();
        let fine = iv_sweep_synthesize(&p, &g, 0.9, t, &linear_grid(-0.3, 1.0, 0.001).unwrap()).unwrap();
        match (vth_constant_current(&coarse), vth_constant_current(&fine)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-3),
            (a, b) => prop_assert!(a.is_err() && b.is_err()),
        }
    }

    #[test]
    fn swing_matches_model_when_three_decades_are_visible(p in nmos(), t in temperature()) {
        let g = reference_geometry();
        let p = ModelParams { i_off_ref: 1e-30, ..p };
        let s = iv_sweep_synthesize(&p, &g, 0.9, t, &linear_grid(-0.4, 1.0, 0.002).unwrap()).unwrap();
        prop_assume!(s.points[0].ids <= 1e-3 * criterion_current(&s));
        let ss = subthreshold_swing(&s).unwrap();
        prop_assert!((ss / ss_of_t(&p, t) - 1.0).abs() <= 0.02);
    }

    #[test]
    fn extractors_are_deterministic(p in nmos(), t in temperature()) {
        let g = reference_geometry();
        let s = iv_sweep_synthesize(&p, &g, 0.05, t, &linear_grid(-0.3, 1.0, 0.01).unwrap()).unwrap();
        prop_assert_eq!(format!("{:?}", extract_single("d", &s, 1e7)), format!("{:?}", extract_single("d", &s, 1e7)));
    }

    #[test]
    fn objective_vanishes_on_exact_data(p in nmos(), t in temperature()) {
        let g = reference_geometry();
        let s = iv_sweep_synthesize(&p, &g, 0.9, t, &linear_grid(-0.3, 1.0, 0.05).unwrap()).unwrap();
        prop_assert!(objective(&p, std::slice::from_ref(&s)).mean < 1e-12);
        let q = ModelParams { vth0: p.vth0 + 0.01, ..p };
        prop_assert!(objective(&q, std::slice::from_ref(&s)).mean > 1e-12);
    }

    #[test]
    fn ring_frequency_is_homogeneous_in_load(c in 1e-16f64..1e-13, k in 0.1f64..10.0, vdd in 0.65f64..1.0) {
        let lib = shipped().unwrap();
        let cell = lib.technology("Cryo").unwrap().cell(c);
        let f = |cl: f64| ro_frequency(&RingOscillatorSpec { stages: 101, cell: cell.with_load(cl), vdd, t: 77.0 })
            .unwrap().frequency().unwrap();
        prop_assert!((f(c * k) * k / f(c) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_parts_sum_to_total(f_clk in 0.0f64..1e9, vdd in 0.3f64..1.2, c in 0.0f64..1e-10, w in 0.0f64..1e5, t in temperature()) {
        let lib = shipped().unwrap();
        let tech = lib.technology("RVT").unwrap();
        let b = module_power(&PowerScenario {
            f_clk, vdd, t, c_switched: c, w_n: w, w_p: w, nmos: tech.nmos.params, pmos: tech.pmos.params,
        }).unwrap();
        prop_assert_eq!(b.dynamic + b.leakage, b.total);
    }

    #[test]
    fn sweep_file_round_trips(p in nmos(), t in temperature(), pmos in prop::bool::ANY) {
        let g = reference_geometry();
        let p = ModelParams { polarity: if pmos { Polarity::Pmos } else { Polarity::Nmos }, ..p };
        let s = iv_sweep_synthesize(&p, &g, 0.05, t, &linear_grid(-0.3, 1.0, 0.05).unwrap()).unwrap();
        let text = write_sweep(&s);
        let back = parse_sweep(&text).unwrap();
        prop_assert_eq!(&write_sweep(&back), &text);
        prop_assert_eq!(back.polarity, s.polarity);
        prop_assert_eq!(&back.origin, &s.origin);
        for (a, b) in back.points.iter().zip(&s.points) {
            prop_assert!((a.ids / b.ids - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn model_sections_round_trip_exactly(p in nmos()) {
        let mut text = String::new();
        write_model(&mut text, "m", &p);
        prop_assert_eq!(parse_models(&text).unwrap()["m"], p);
    }
}

#[test]
fn oscillation_onset_is_monotone_in_supply() {
    let lib = shipped().unwrap();
    for tech in ["Cryo", "RVT", "uLVT"] {
        let cell = lib.technology(tech).unwrap().cell(1e-15);
        for t in [10.0, 77.0, 150.0, 298.0] {
            let mut seen = false;
            for vdd in linear_grid(0.3, 1.2, 0.01).unwrap() {
                let osc = ro_frequency(&RingOscillatorSpec { stages: 101, cell, vdd, t }).unwrap();
                if seen {
                    assert!(osc.frequency().is_some(), "{tech} stops at {vdd} V, {t} K");
                }
                seen |= osc.frequency().is_some();
            }
        }
    }
}

#[test]
fn delay_agrees_with_transient_on_reference_sets() {
    let lib = shipped().unwrap();
    for tech in ["Cryo", "RVT", "uLVT"] {
        let cell = lib.technology(tech).unwrap().cell(2e-15);
        for vdd in [0.6, 0.9] {
            for t in [77.0, 298.0] {
                let Ok(fast) = inverter_delay(&cell, vdd, t) else { continue };
                let slow = inverter_delay_transient(&cell, vdd, t, 400).unwrap();
                assert!((fast.t_pd / slow.t_pd - 1.0).abs() <= 0.2, "{tech} {vdd} V {t} K");
            }
        }
    }
}

#[test]
fn optimizer_progress_and_bounds() {
    let bounds = [Bound::linear(-1.0, 2.0), Bound::log(1e-3, 1e3), Bound::linear(0.0, 1.0)];
    let f = |x: &[f64]| (x[0] - 3.0).powi(2) + (x[1].ln() - 1.0).powi(2) + (x[2] + 0.5).powi(2);
    let out = minimize(&f, &[0.0, 1.0, 0.5], &bounds, &Options { seed: 4, ..Options::default() }).unwrap();
    assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
    assert!(out.x.iter().zip(&bounds).all(|(&x, b)| b.contains(x)));
    assert!((out.x[0] - 2.0).abs() < 1e-6 && out.x[2].abs() < 1e-6);
}

#[test]
fn fit_respects_bounds_and_seed() {
    let lib = shipped().unwrap();
    let truth = *lib.get(CRYO_NMOS).unwrap();
    let g = lib.geometry;
    let grid = linear_grid(-0.2, 0.9, 0.02).unwrap();
    let sweeps: Vec<_> = [10.0, 77.0, 298.0]
        .iter()
        .flat_map(|&t| [0.05, 0.9].map(|vds| iv_sweep_synthesize(&truth, &g, vds, t, &grid).unwrap()))
        .collect();
    let free = vec![
        FreeParam { param: Param::Vth0, bound: Bound::linear(0.05, 0.08) },
        FreeParam { param: Param::Mu0, bound: Param::Mu0.default_bound() },
    ];
    let problem = FitProblem { sweeps, free, initial: ModelParams { vth0: 0.06, ..truth } };
    let opts = Options { seed: 8, max_iter: 400, ..Options::default() };
    let a = calibrate(&problem, &opts).unwrap();
    assert_eq!(a, calibrate(&problem, &opts).unwrap());
    assert!(a.params.vth0 >= 0.05 && a.params.vth0 <= 0.08);
    assert!(a.trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn room_temperature_knee_is_smooth_on_a_2000_point_grid() {
    let lib = shipped().unwrap();
    let g = lib.geometry;
    let h = 1.2 / 1999.0;
    for name in REFERENCE_SETS {
        let p = lib.get(name).unwrap();
        for vgs in [0.6, 0.9] {
            let t = 298.0;
            let vgt = vgs - vth_of_t(p, t);
            let lec = g.l * 1e-4 * p.v_sat / mobility(p, t);
            let vdsat = vgt / (1.0 + vgt / lec);
            for k in 1..1999 {
                let v = k as f64 * h;
                if v < 0.5 * vdsat || v > 2.0 * vdsat {
                    continue;
                }
                let s0 = (id(p, &g, vgs, v, t) - id(p, &g, vgs, v - h, t)) / h;
                let s1 = (id(p, &g, vgs, v + h, t) - id(p, &g, vgs, v, t)) / h;
                let gm = transconductance(p, &g, &BiasPoint::new(vgs, v, t).unwrap());
                assert!((s1 - s0).abs() <= 0.01 * gm, "{name} V_GS {vgs} V_DS {v}");
            }
        }
    }
}
