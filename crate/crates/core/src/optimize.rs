//! Bounded Nelder–Mead with seeded restarts.
//!
//! The search runs in normalized coordinates `u ∈ [0, 1]^n`; each parameter
//! maps to its bounds linearly or logarithmically. Points are clamped to the
//! unit box before evaluation, so every evaluated point is within bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
    /// Search in `ln x`; requires `lo > 0`.
    pub log: bool,
}

impl Bound {
    pub fn linear(lo: f64, hi: f64) -> Self {
        Bound { lo, hi, log: false }
    }

    pub fn log(lo: f64, hi: f64) -> Self {
        Bound { lo, hi, log: true }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::Precondition(format!(
                "bounds must be finite with lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.log && self.lo <= 0.0 {
            return Err(Error::Precondition("log-scaled bounds must be positive".into()));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    fn to_unit(self, x: f64) -> f64 {
        let u = if self.log {
            (x.ln() - self.lo.ln()) / (self.hi.ln() - self.lo.ln())
        } else {
            (x - self.lo) / (self.hi - self.lo)
        };
        u.clamp(0.0, 1.0)
    }

    fn at_unit(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let x = if self.log {
            (self.lo.ln() + u * (self.hi.ln() - self.lo.ln())).exp()
        } else {
            self.lo + u * (self.hi - self.lo)
        };
        x.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Options {
    /// Cap on simplex iterations summed over all runs.
    pub max_iter: usize,
    /// Extra runs after the first, each from a perturbed best point.
    pub restarts: usize,
    /// Relative improvement below which a run counts as converged.
    pub rel_tol: f64,
    /// Iterations over which the improvement is measured.
    pub window: usize,
    /// Initial simplex edge in normalized units.
    pub step: f64,
    /// Standard deviation of restart perturbations in normalized units.
    pub perturb: f64,
    pub seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            max_iter: 5000,
            restarts: 3,
            rel_tol: 1e-6,
            window: 20,
            step: 0.1,
            perturb: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best objective after each iteration; non-increasing.
    pub trace: Vec<f64>,
}

struct Problem<'a, F> {
    f: &'a F,
    bounds: &'a [Bound],
    evaluations: usize,
}

impl<F: Fn(&[f64]) -> f64> Problem<'_, F> {
    fn eval(&mut self, u: &[f64]) -> f64 {
        self.evaluations += 1;
        let x: Vec<f64> = u.iter().zip(self.bounds).map(|(&u, b)| b.at_unit(u)).collect();
        let v = (self.f)(&x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

fn clamp_unit(u: &mut [f64]) {
    for v in u {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Minimize `f` within `bounds` starting at `x0`.
pub fn minimize<F>(f: &F, x0: &[f64], bounds: &[Bound], opts: &Options) -> Result<Outcome>
where
    F: Fn(&[f64]) -> f64,
{
    if x0.len() != bounds.len() {
        return Err(Error::Precondition("start point and bounds differ in length".into()));
    }
    for (x, b) in x0.iter().zip(bounds) {
        b.validate()?;
        if !b.contains(*x) {
            return Err(Error::Precondition(format!(
                "start value {x} outside [{}, {}]",
                b.lo, b.hi
            )));
        }
    }
    let mut prob = Problem { f, bounds, evaluations: 0 };
    let n = x0.len();
    let u0: Vec<f64> = x0.iter().zip(bounds).map(|(&x, b)| b.to_unit(x)).collect();
    let f0 = prob.eval(&u0);
    if n == 0 {
        return Ok(Outcome {
            x: Vec::new(),
            f: f0,
            iterations: 0,
            evaluations: prob.evaluations,
            converged: true,
            trace: vec![f0],
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best_u = u0.clone();
    let mut best_f = f0;
    let mut trace = vec![f0];
    let mut iterations = 0;
    let mut converged = false;

    for run in 0..=opts.restarts {
        if iterations >= opts.max_iter {
            break;
        }
        let start = if run == 0 {
            u0.clone()
        } else {
            let mut u: Vec<f64> = best_u
                .iter()
                .map(|&v| v + opts.perturb * gaussian(&mut rng))
                .collect();
            clamp_unit(&mut u);
            u
        };
        let budget = opts.max_iter - iterations;
        let (u, fu, used, ok) = run_simplex(&mut prob, &start, opts, budget, &mut best_f, &mut trace);
        iterations += used;
        if fu <= best_f {
            best_f = fu;
            best_u = u;
        }
        converged = ok;
    }

    if trace.last() != Some(&best_f) {
        trace.push(best_f);
    }
    let x = best_u.iter().zip(bounds).map(|(&u, b)| b.at_unit(u)).collect();
    Ok(Outcome {
        x,
        f: best_f,
        iterations,
        evaluations: prob.evaluations,
        converged,
        trace,
    })
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Simplex edge, in normalized units, below which a run counts as converged.
const X_TOL: f64 = 1e-9;

/// Largest coordinate distance of any vertex from the best one.
fn spread(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let b = &simplex[0].0;
    simplex[1..]
        .iter()
        .flat_map(|(v, _)| v.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

/// One Nelder–Mead run. Returns the best vertex, its value, iterations used
/// and whether the stall criterion fired before the budget ran out.
fn run_simplex<F: Fn(&[f64]) -> f64>(
    prob: &mut Problem<'_, F>,
    start: &[f64],
    opts: &Options,
    budget: usize,
    global_best: &mut f64,
    trace: &mut Vec<f64>,
) -> (Vec<f64>, f64, usize, bool) {
    let n = start.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let fs = prob.eval(start);
    simplex.push((start.to_vec(), fs));
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] = if v[i] + opts.step <= 1.0 { v[i] + opts.step } else { v[i] - opts.step };
        let fv = prob.eval(&v);
        simplex.push((v, fv));
    }

    let mut history: Vec<f64> = Vec::new();
    let mut used = 0;
    let mut converged = false;
    while used < budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        if best < *global_best {
            *global_best = best;
        }
        history.push(best);
        if history.len() > opts.window {
            let old = history[history.len() - 1 - opts.window];
            let gain = old - best;
            if gain <= opts.rel_tol * old.abs() || best == 0.0 || spread(&simplex) < X_TOL {
                converged = true;
                break;
            }
        }
        used += 1;

        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            clamp_unit(&mut p);
            p
        };

        let xr = along(alpha);
        let fr = prob.eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = prob.eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = along(rho);
                let f = prob.eval(&x);
                (x, f)
            } else {
                let x = along(-rho);
                let f = prob.eval(&x);
                (x, f)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let b = simplex[0].0.clone();
                for vert in simplex.iter_mut().skip(1) {
                    for (x, bx) in vert.0.iter_mut().zip(&b) {
                        *x = bx + sigma * (*x - bx);
                    }
                    vert.1 = prob.eval(&vert.0);
                }
            }
        }
        let current = simplex.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        if current < *global_best {
            *global_best = current;
        }
        trace.push(*global_best);
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (u, f) = simplex.swap_remove(0);
    (u, f, used, converged)
}
