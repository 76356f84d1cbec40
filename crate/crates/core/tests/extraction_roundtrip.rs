use cryomos::extraction::*;
use cryomos::model::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params() -> ModelParams {
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
        i_off_ref: 1e-12,
        eta: 40.0,
    }
}

fn geom() -> DeviceGeometry {
    DeviceGeometry { w: 0.1, l: 0.03, c_ox: 2e-6 }
}

fn sweep(p: &ModelParams, vds: f64, t: f64, step: f64) -> cryomos::sweep::IvSweep {
    iv_sweep_synthesize(p, &geom(), vds, t, &linear_grid(-0.2, 0.9, step).unwrap()).unwrap()
}

#[test]
fn gm_matches_analytic_transconductance() {
    let p = params();
    for t in [10.0, 77.0, 298.0] {
        // Central differences on an exponential carry sinh(x)/x - 1 relative
        // error; x = 1/4 gives 1.04 %, so sample a little finer than that.
        let step = n_eff(&p, t) * thermal_voltage(t) / 5.0;
        let s = sweep(&p, 0.9, t, step);
        let gm = gm_numeric(&s).unwrap();
        let peak = gm.iter().map(|g| g.1).fold(0.0, f64::max);
        for &(v, g) in &gm[1..gm.len() - 1] {
            if g < 1e-9 * peak {
                continue;
            }
            let exact = transconductance(&p, &geom(), &BiasPoint::new(v, 0.9, t).unwrap());
            assert!((g / exact - 1.0).abs() < 0.01, "T={t} V={v}: {g} vs {exact}");
        }
    }
}

#[test]
fn constant_current_tracks_generator_threshold() {
    // The offset between the criterion crossing and vth_of_t scales with the
    // swing, so it is measured once per temperature on a golden sweep and
    // then reused for shifted parameter sets.
    let golden = params();
    for t in [10.0, 77.0, 150.0, 298.0] {
        let offset =
            vth_constant_current(&sweep(&golden, 0.9, t, 0.01)).unwrap() - vth_of_t(&golden, t);
        for (dv, cv) in [(-0.05, 0.0), (0.05, 2e-4), (0.1, -2e-4), (-0.08, 8e-4)] {
            let mut p = golden;
            p.vth0 += dv;
            p.c_vth += cv;
            let cc = vth_constant_current(&sweep(&p, 0.9, t, 0.01)).unwrap();
            let d = cc - vth_of_t(&p, t) - offset;
            assert!(d.abs() < 0.010, "T={t} dv={dv} cv={cv}: residual {d}");
        }
    }
}

#[test]
fn constant_current_regrid_invariance() {
    let p = params();
    for t in [10.0, 77.0, 298.0] {
        let coarse = vth_constant_current(&sweep(&p, 0.9, t, 0.01)).unwrap();
        let fine = vth_constant_current(&sweep(&p, 0.9, t, 0.001)).unwrap();
        assert!((coarse - fine).abs() < 1e-3, "T={t}: {coarse} vs {fine}");
    }
}

#[test]
fn swing_bounded_by_generator() {
    let p = params();
    for t in [10.0, 77.0, 150.0, 298.0] {
        let s = sweep(&p, 0.9, t, 0.002);
        let ss = subthreshold_swing(&s).unwrap();
        let truth = ss_of_t(&p, t);
        assert!(ss >= 0.98 * truth, "T={t}: {ss} < {truth}");
        assert!((ss / truth - 1.0).abs() < 0.02, "T={t}: {ss} vs {truth}");
    }
}

#[test]
fn y_function_recovers_mobility_without_velocity_saturation() {
    let mut p = params();
    p.v_sat = f64::INFINITY;
    for t in [10.0, 77.0, 150.0, 298.0] {
        let s = iv_sweep_synthesize(&p, &geom(), 0.05, t, &linear_grid(0.0, 1.2, 0.01).unwrap()).unwrap();
        let y = vth_y_function(&s).unwrap();
        let mu = mobility(&p, t);
        assert!((y.mu / mu - 1.0).abs() < 0.05, "T={t}: {} vs {mu}", y.mu);
    }
}

#[test]
fn report_is_internally_consistent() {
    // The criterion sits about two decades under the current at V_TH, so
    // the gap between the two thresholds grows with the swing; cold sweeps
    // keep it inside 50 mV.
    let p = params();
    for t in [10.0, 40.0, 77.0] {
        let lin = sweep(&p, 0.05, t, 0.01);
        let sat = sweep(&p, 0.9, t, 0.01);
        let r = extract_all("dut", &lin, &sat, 1e4).unwrap();
        let (cc, y) = (r.vth_cc.unwrap(), r.vth_y.unwrap());
        assert!((cc - y).abs() < 0.05, "T={t}: cc {cc} y {y}");
        assert!(r.ss_min.unwrap() > 0.0);
        let r2 = r.y_r2.unwrap();
        assert!((0.0..=1.0).contains(&r2));
        assert!(r.is_complete(), "{:?}", r.errors);
    }
}

#[test]
fn eta_with_multiplicative_noise() {
    let temps = [10.0, 40.0, 77.0, 120.0, 150.0, 200.0, 250.0, 298.0];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut etas: Vec<f64> = (0..100)
        .map(|_| {
            let points = temps
                .iter()
                .map(|&t| {
                    let noise = 1.0 + 0.05 * (2.0 * rng.gen::<f64>() - 1.0);
                    (t, 3e-11 * 10f64.powf((t - 298.0) / 50.0) * noise)
                })
                .collect();
            fit_leakage_eta(&LeakageSeries { points }).unwrap().eta
        })
        .collect();
    etas.sort_by(f64::total_cmp);
    let median = 0.5 * (etas[49] + etas[50]);
    assert!((median / 50.0 - 1.0).abs() < 0.10, "median eta {median}");
}
