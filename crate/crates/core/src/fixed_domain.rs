//! The problem on a fixed interval: `u_t = d (∫_I J(x - y) u dy - u) + f(u)`.

use crate::discretization::Convolver;
use crate::error::{Error, Result};
use crate::fbsolver::{euler_cell, solver_stencil, NEG_TOL};
use crate::growth::Growth;
use crate::kernel::Kernel;

/// Convergence is checked over windows of this many time units.
pub const CHECK_WINDOW: f64 = 1.0;

/// Sup-norm change over one check window below which a run counts as steady.
pub const STEADY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FixedConfig {
    pub d: f64,
    pub dt: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedRun {
    pub interval: (f64, f64),
    pub centers: Vec<f64>,
    /// Times of the stored profiles (every check window, plus the start).
    pub times: Vec<f64>,
    pub profiles: Vec<Vec<f64>>,
    /// Final profile when the run became steady.
    pub steady: Option<Vec<f64>>,
    pub converged: bool,
}

impl FixedRun {
    pub fn last(&self) -> &[f64] {
        self.profiles.last().expect("a run stores its initial profile")
    }
}

/// Cell centres of `n` equal cells on `interval`.
pub fn centers(interval: (f64, f64), n: usize) -> Vec<f64> {
    let (l1, l2) = interval;
    let dx = (l2 - l1) / n as f64;
    (0..n).map(|i| l1 + (i as f64 + 0.5) * dx).collect()
}

/// Number of cells of width close to `dx` on `interval`.
pub fn cells_for(interval: (f64, f64), dx: f64) -> usize {
    (((interval.1 - interval.0) / dx).round() as usize).max(4)
}

fn check_interval(interval: (f64, f64)) -> Result<()> {
    let (l1, l2) = interval;
    if !(l1.is_finite() && l2.is_finite() && l1 < l2) {
        return Err(Error::arg("interval", format!("need finite l1 < l2, got ({l1}, {l2})")));
    }
    Ok(())
}

/// Explicit Euler from `u0` (one value per cell) until `t_end` or until the
/// profile stops changing.
pub fn evolve_fixed(
    interval: (f64, f64),
    u0: &[f64],
    cfg: &FixedConfig,
    kernel: &Kernel,
    growth: &Growth,
) -> Result<FixedRun> {
    check_interval(interval)?;
    let n = u0.len();
    if n < 4 {
        return Err(Error::arg("u0", "need at least 4 cells"));
    }
    if u0.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::arg("u0", "initial density must be nonnegative"));
    }
    if !(cfg.d.is_finite() && cfg.d > 0.0) {
        return Err(Error::arg("d", format!("must be finite and > 0, got {}", cfg.d)));
    }
    if !(cfg.dt.is_finite() && cfg.dt > 0.0) {
        return Err(Error::arg("dt", format!("must be finite and > 0, got {}", cfg.dt)));
    }
    let m0 = u0.iter().copied().fold(growth.k0(), f64::max);
    let product = cfg.dt * (cfg.d + growth.lipschitz(m0));
    if product > 0.5 {
        return Err(Error::StabilityGuard { product });
    }
    let dx = (interval.1 - interval.0) / n as f64;
    let stencil = solver_stencil(kernel, dx)?;
    let mut conv = Convolver::new(&stencil);
    let xs = centers(interval, n);
    let per_check = ((CHECK_WINDOW / cfg.dt).round() as u64).max(1);
    let total = (cfg.t_end / cfg.dt).round() as u64;

    let mut u = u0.to_vec();
    let mut c = vec![0.0; n];
    let mut times = vec![0.0];
    let mut profiles = vec![u.clone()];
    let mut converged = false;
    let mut step = 0u64;
    while step < total {
        let t = step as f64 * cfg.dt;
        conv.apply(&u, &mut c);
        for i in 0..n {
            let v = euler_cell(u[i], c[i], cfg.d, cfg.dt, growth.rate(t, xs[i], u[i]));
            if v < -NEG_TOL || v.is_nan() {
                return Err(Error::StabilityViolation {
                    t: t + cfg.dt,
                    x: xs[i],
                    value: v,
                });
            }
            u[i] = v;
        }
        step += 1;
        if step % per_check == 0 || step == total {
            let prev = profiles.last().unwrap();
            let change = u.iter().zip(prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let full_window = step % per_check == 0;
            times.push(step as f64 * cfg.dt);
            profiles.push(u.clone());
            if full_window && change < STEADY_TOL {
                converged = true;
                break;
            }
        }
    }
    Ok(FixedRun {
        interval,
        centers: xs,
        times,
        steady: converged.then(|| u.clone()),
        profiles,
        converged,
    })
}

/// `‖d (Σ w u - u) + f(u)‖∞` over the interval.
pub fn steady_residual(interval: (f64, f64), u: &[f64], d: f64, kernel: &Kernel, growth: &Growth) -> Result<f64> {
    check_interval(interval)?;
    let n = u.len();
    let dx = (interval.1 - interval.0) / n as f64;
    let stencil = solver_stencil(kernel, dx)?;
    let mut conv = Convolver::new(&stencil);
    let mut c = vec![0.0; n];
    conv.apply(u, &mut c);
    let xs = centers(interval, n);
    Ok((0..n)
        .map(|i| (d * (c[i] - u[i]) + growth.rate(0.0, xs[i], u[i])).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub centers: Vec<f64>,
    pub u: Vec<f64>,
    pub residual: f64,
    /// Time at which the run became steady.
    pub t: f64,
}

impl SteadyState {
    /// Linear interpolation between cell centres.
    pub fn value_at(&self, x: f64) -> f64 {
        let k = self.centers.partition_point(|&c| c <= x);
        if k == 0 {
            return self.u[0];
        }
        if k == self.u.len() {
            return self.u[k - 1];
        }
        let s = (x - self.centers[k - 1]) / (self.centers[k] - self.centers[k - 1]);
        self.u[k - 1] + s * (self.u[k] - self.u[k - 1])
    }
}

/// Long-time limit from `u ≡ v₀/2` on `n` cells. Needs a Fisher-KPP law.
pub fn steady_state(
    interval: (f64, f64),
    n: usize,
    d: f64,
    dt: f64,
    t_max: f64,
    kernel: &Kernel,
    growth: &Growth,
) -> Result<SteadyState> {
    let v0 = growth.derived_constants()?.v0;
    let cfg = FixedConfig { d, dt, t_end: t_max };
    let run = evolve_fixed(interval, &vec![0.5 * v0; n], &cfg, kernel, growth)?;
    if !run.converged {
        return Err(Error::NotConverged { t_max });
    }
    let u = run.steady.clone().unwrap();
    let residual = steady_residual(interval, &u, d, kernel, growth)?;
    if residual > 1e-8 {
        return Err(Error::NotConverged { t_max });
    }
    Ok(SteadyState {
        centers: run.centers,
        u,
        residual,
        t: *run.times.last().unwrap(),
    })
}
