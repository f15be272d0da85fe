//! Time integration of the free-boundary system.
//!
//! Explicit mode advances density and fronts together by forward Euler, with
//! fluxes taken at the old state. Picard mode reproduces the existence
//! construction on short windows: for given front paths every cell solves its
//! own ODE from the moment a front reaches it, with the nonlocal term frozen
//! from the previous iterate, and the front paths are then recomputed from the
//! resulting fluxes until they stop changing.

use crate::discretization::{build_grid, Convolver, Grid, SimState};
use crate::error::{Error, Result, Side};
use crate::growth::Growth;
use crate::initial::InitialData;
use crate::kernel::{Kernel, Stencil};

/// Densities below `-NEG_TOL` are reported as a stability violation.
pub const NEG_TOL: f64 = 1e-12;

/// Kernel, growth law, initial data and spatial resolution of a run.
#[derive(Debug, Clone)]
pub struct Setup {
    pub kernel: Kernel,
    pub growth: Growth,
    pub h0: f64,
    pub initial: InitialData,
    pub dx: f64,
    pub margin: f64,
}

impl Setup {
    /// Defaults: `dx = 0.02`, window margin 10.
    pub fn new(kernel: Kernel, growth: Growth, h0: f64, initial: InitialData) -> Self {
        Self {
            kernel,
            growth,
            h0,
            initial,
            dx: 0.02,
            margin: 10.0,
        }
    }

    pub fn with_dx(mut self, dx: f64) -> Self {
        self.dx = dx;
        self
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn grid(&self) -> Result<Grid> {
        build_grid(self.h0, self.margin, self.dx)
    }

    /// Stencil over the kernel support; unbounded kernels are cut where the
    /// remaining tail mass drops below `1e-13`.
    pub fn stencil(&self) -> Result<Stencil> {
        solver_stencil(&self.kernel, self.dx)
    }

    /// `M₀ = max(sup u₀, K₀)`.
    pub fn m0(&self) -> f64 {
        self.initial.sup().max(self.growth.k0())
    }
}

pub(crate) fn solver_stencil(kernel: &Kernel, dx: f64) -> Result<Stencil> {
    if kernel.support_radius().is_finite() {
        Stencil::new(kernel, dx)
    } else {
        let mut z = dx;
        while kernel.tail_mass(z) > 1e-13 {
            z *= 1.25;
        }
        Stencil::with_radius(kernel, dx, (z / dx).ceil() as usize, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    /// Window length `T_w`.
    pub window: f64,
    /// Sup-norm tolerance on successive front paths.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            window: 0.05,
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Explicit,
    Picard(PicardConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub d: f64,
    pub mu: f64,
    pub dt: f64,
    pub t_end: f64,
    pub mode: Mode,
    /// Diagnostics are recorded every this many steps (and at the end).
    pub record_every: usize,
    /// Full profiles are stored every this many steps; 0 keeps only the
    /// first and last.
    pub snapshot_every: usize,
}

impl SolverConfig {
    pub fn new(d: f64, mu: f64, dt: f64, t_end: f64) -> Self {
        Self {
            d,
            mu,
            dt,
            t_end,
            mode: Mode::Explicit,
            record_every: 100,
            snapshot_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::arg(field, format!("must be finite and > 0, got {v}")))
            }
        };
        pos("d", self.d)?;
        pos("mu", self.mu)?;
        pos("dt", self.dt)?;
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::arg("t_end", format!("must be finite and >= 0, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::arg("record_every", "must be at least 1"));
        }
        if let Mode::Picard(p) = self.mode {
            pos("window", p.window)?;
            pos("tol", p.tol)?;
            if p.max_iter == 0 {
                return Err(Error::arg("max_iter", "must be at least 1"));
            }
        }
        Ok(())
    }

    /// Number of steps to reach `t_end`.
    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    /// `dt (d + Lip_f)` on `[0, M₀]`, which must not exceed 0.5.
    pub fn stability_product(&self, growth: &Growth, m0: f64) -> f64 {
        self.dt * (self.d + growth.lipschitz(m0))
    }
}

/// Diagnostics at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub g: f64,
    pub h: f64,
    pub sup_u: f64,
    pub mass: f64,
    pub flux_left: f64,
    pub flux_right: f64,
    /// `u(t, 0)`.
    pub core: f64,
}

/// Active part of a density profile: `u[k]` sits at `grid.center(first + k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub g: f64,
    pub h: f64,
    pub first: usize,
    pub u: Vec<f64>,
}

impl Snapshot {
    fn of(state: &SimState) -> Self {
        let (a, _) = state.active_range();
        Self {
            t: state.t,
            g: state.g,
            h: state.h,
            first: a,
            u: state.active().to_vec(),
        }
    }
}

/// Per-window record of the Picard iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardReport {
    pub t_start: f64,
    pub iterations: usize,
    /// Sup-norm distance between successive front paths.
    pub distances: Vec<f64>,
    /// Ratios of successive distances.
    pub factors: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub d: f64,
    pub mu: f64,
    pub samples: Vec<Sample>,
    pub snapshots: Vec<Snapshot>,
    pub picard: Vec<PicardReport>,
    pub final_state: SimState,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory always holds the initial sample")
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

/// Boundary flux `J_h` (right) or `J_g` (left): the kernel mass per unit time
/// that the density sends across the front, before scaling by `μ`.
pub fn boundary_flux(stencil: &Stencil, state: &SimState, side: Side) -> f64 {
    let (l, r) = slice_fluxes(stencil, state.active());
    match side {
        Side::Left => l,
        Side::Right => r,
    }
}

/// `dx Σ_k tail[k] u[k]` from each end of the active block.
fn slice_fluxes(stencil: &Stencil, act: &[f64]) -> (f64, f64) {
    let m = act.len();
    let reach = (stencil.radius_cells() + 1).min(m);
    let mut left = 0.0;
    let mut right = 0.0;
    for k in 0..reach {
        let w = stencil.tail(k);
        left += w * act[k];
        right += w * act[m - 1 - k];
    }
    (stencil.dx() * left, stencil.dx() * right)
}

fn sample_of(grid: &Grid, stencil: &Stencil, state: &SimState) -> Sample {
    let (flux_left, flux_right) = slice_fluxes(stencil, state.active());
    Sample {
        t: state.t,
        g: state.g,
        h: state.h,
        sup_u: state.sup(),
        mass: state.mass(grid),
        flux_left,
        flux_right,
        core: state.value_at(grid, 0.0),
    }
}

fn check_window(grid: &Grid, stencil: &Stencil, state: &SimState) -> Result<()> {
    let reach = stencil.reach();
    if state.h + reach >= grid.xmax() {
        return Err(Error::WindowExit {
            t: state.t,
            side: Side::Right,
        });
    }
    if state.g - reach <= grid.xmin() {
        return Err(Error::WindowExit {
            t: state.t,
            side: Side::Left,
        });
    }
    Ok(())
}

/// One Euler update of a single cell.
#[inline]
pub(crate) fn euler_cell(u: f64, conv: f64, d: f64, dt: f64, rate: f64) -> f64 {
    u + dt * (d * (conv - u) + rate)
}

fn negative(t: f64, x: f64, value: f64) -> Error {
    Error::StabilityViolation { t, x, value }
}

/// Forward-Euler step of density and fronts, in place. `conv` and `buf` are
/// scratch; the new time is `t_new`.
#[allow(clippy::too_many_arguments)]
fn advance(
    grid: &Grid,
    stencil: &Stencil,
    conv: &mut Convolver,
    growth: &Growth,
    cfg: &SolverConfig,
    state: &mut SimState,
    buf: &mut Vec<f64>,
    t_new: f64,
) -> Result<()> {
    let (a, b) = (state.a, state.b);
    let m = b - a;
    buf.resize(m, 0.0);
    let (jl, jr) = slice_fluxes(stencil, &state.u[a..b]);
    conv.apply(&state.u[a..b], &mut buf[..m]);
    let t = state.t;
    for (k, c) in buf.iter().enumerate().take(m) {
        let i = a + k;
        let u = state.u[i];
        let x = grid.center(i);
        let v = euler_cell(u, *c, cfg.d, cfg.dt, growth.rate(t, x, u));
        if v < -NEG_TOL || v.is_nan() {
            return Err(negative(t_new, x, v));
        }
        state.u[i] = v;
    }
    state.h += cfg.dt * cfg.mu * jr;
    state.g -= cfg.dt * cfg.mu * jl;
    state.t = t_new;
    while state.b < grid.len() && grid.center(state.b) < state.h {
        state.b += 1;
    }
    while state.a > 0 && grid.center(state.a - 1) > state.g {
        state.a -= 1;
    }
    check_window(grid, stencil, state)
}

/// One explicit step from `state`, returning the new state.
pub fn step_explicit(
    grid: &Grid,
    stencil: &Stencil,
    growth: &Growth,
    cfg: &SolverConfig,
    state: &SimState,
) -> Result<SimState> {
    let mut next = state.clone();
    let mut conv = Convolver::new(stencil);
    let mut buf = Vec::new();
    let t_new = state.t + cfg.dt;
    advance(grid, stencil, &mut conv, growth, cfg, &mut next, &mut buf, t_new)?;
    Ok(next)
}

/// Outcome of one Picard window.
#[derive(Debug, Clone)]
pub struct PicardWindow {
    pub state: SimState,
    pub report: PicardReport,
    /// Diagnostics at every time level of the window, including the start.
    pub levels: Vec<Sample>,
}

/// Fixed point of the front-path map over `steps` time levels from `state`.
pub fn picard_window(
    grid: &Grid,
    stencil: &Stencil,
    growth: &Growth,
    cfg: &SolverConfig,
    picard: &PicardConfig,
    state: &SimState,
    steps: usize,
) -> Result<PicardWindow> {
    let m = steps.max(1);
    let dt = cfg.dt;
    let t0 = state.t;
    let times: Vec<f64> = (0..=m).map(|n| t0 + n as f64 * dt).collect();
    let mut gs = vec![state.g; m + 1];
    let mut hs = vec![state.h; m + 1];
    let mut conv = Convolver::new(stencil);
    let mut guess: Option<Vec<Vec<f64>>> = None;
    let mut distances = Vec::new();
    let mut factors = Vec::new();

    for iter in 1..=picard.max_iter {
        let tx = activation_times(grid, state, &times, &gs, &hs);
        let levels = inner_solve(grid, &mut conv, growth, cfg, state, &times, &tx, guess.take(), picard.tol)?;
        let mut ng = vec![state.g; m + 1];
        let mut nh = vec![state.h; m + 1];
        let mut dist: f64 = 0.0;
        let mut fluxes = Vec::with_capacity(m + 1);
        for n in 0..=m {
            let (a, b) = active_at(&tx, times[n]);
            let f = slice_fluxes(stencil, &levels[n][a..b]);
            fluxes.push(f);
            if n < m {
                ng[n + 1] = ng[n] - dt * cfg.mu * f.0;
                nh[n + 1] = nh[n] + dt * cfg.mu * f.1;
            }
            dist = dist.max((ng[n] - gs[n]).abs()).max((nh[n] - hs[n]).abs());
        }
        if let Some(&prev) = distances.last() {
            factors.push(if prev > 0.0 { dist / prev } else { 0.0 });
        }
        distances.push(dist);
        if dist < picard.tol {
            let (a, b) = active_at(&tx, times[m]);
            let last = levels[m].clone();
            let end = SimState {
                t: times[m],
                g: gs[m],
                h: hs[m],
                u: last,
                a,
                b,
            };
            check_window(grid, stencil, &end)?;
            let samples = (0..=m)
                .map(|n| {
                    let (a, b) = active_at(&tx, times[n]);
                    let s = SimState {
                        t: times[n],
                        g: gs[n],
                        h: hs[n],
                        u: levels[n].clone(),
                        a,
                        b,
                    };
                    let mut smp = sample_of(grid, stencil, &s);
                    smp.flux_left = fluxes[n].0;
                    smp.flux_right = fluxes[n].1;
                    smp
                })
                .collect();
            return Ok(PicardWindow {
                state: end,
                report: PicardReport {
                    t_start: t0,
                    iterations: iter,
                    distances,
                    factors,
                },
                levels: samples,
            });
        }
        gs = ng;
        hs = nh;
        guess = Some(levels);
    }
    Err(Error::NoContraction {
        iterations: picard.max_iter,
        distance: distances.last().copied().unwrap_or(f64::NAN),
    })
}

/// Density on `steps` time levels for front paths held at the current
/// support, i.e. the density of the first Picard iterate.
pub fn frozen_front_density(
    grid: &Grid,
    stencil: &Stencil,
    growth: &Growth,
    cfg: &SolverConfig,
    state: &SimState,
    steps: usize,
    tol: f64,
) -> Result<Vec<Vec<f64>>> {
    let m = steps.max(1);
    let times: Vec<f64> = (0..=m).map(|n| state.t + n as f64 * cfg.dt).collect();
    let gs = vec![state.g; m + 1];
    let hs = vec![state.h; m + 1];
    let tx = activation_times(grid, state, &times, &gs, &hs);
    let mut conv = Convolver::new(stencil);
    inner_solve(grid, &mut conv, growth, cfg, state, &times, &tx, None, tol)
}

/// Time at which each cell joins the support along the given front paths,
/// by linear interpolation of the crossing; `None` if it stays outside.
fn activation_times(grid: &Grid, state: &SimState, times: &[f64], gs: &[f64], hs: &[f64]) -> Vec<Option<f64>> {
    let m = times.len() - 1;
    let mut tx = vec![None; grid.len()];
    for slot in tx.iter_mut().take(state.b).skip(state.a) {
        *slot = Some(times[0]);
    }
    let mut i = state.b;
    let mut n = 0;
    while i < grid.len() {
        let x = grid.center(i);
        while n < m && hs[n + 1] <= x {
            n += 1;
        }
        if n == m {
            break;
        }
        let s = (x - hs[n]) / (hs[n + 1] - hs[n]);
        tx[i] = Some(times[n] + s.clamp(0.0, 1.0) * (times[n + 1] - times[n]));
        i += 1;
    }
    let mut n = 0;
    let mut i = state.a;
    while i > 0 {
        let x = grid.center(i - 1);
        while n < m && gs[n + 1] >= x {
            n += 1;
        }
        if n == m {
            break;
        }
        let s = (gs[n] - x) / (gs[n] - gs[n + 1]);
        tx[i - 1] = Some(times[n] + s.clamp(0.0, 1.0) * (times[n + 1] - times[n]));
        i -= 1;
    }
    tx
}

/// Cells active at time `t` (activation time `<= t`).
fn active_at(tx: &[Option<f64>], t: f64) -> (usize, usize) {
    let a = tx.iter().position(|s| s.is_some_and(|v| v <= t)).unwrap_or(0);
    let b = tx.iter().rposition(|s| s.is_some_and(|v| v <= t)).map_or(a, |i| i + 1);
    (a, b)
}

/// Density on `[t0, t0 + m dt]` for fixed activation times: each cell follows
/// `u' = d (c - u) + f` from its activation time with `u = 0` there, where
/// `c` is the convolution of the previous iterate. Iterated to a fixed point.
#[allow(clippy::too_many_arguments)]
fn inner_solve(
    grid: &Grid,
    conv: &mut Convolver,
    growth: &Growth,
    cfg: &SolverConfig,
    state: &SimState,
    times: &[f64],
    tx: &[Option<f64>],
    guess: Option<Vec<Vec<f64>>>,
    tol: f64,
) -> Result<Vec<Vec<f64>>> {
    let m = times.len() - 1;
    let dt = cfg.dt;
    let lo = tx.iter().position(Option::is_some).unwrap_or(0);
    let hi = tx.iter().rposition(Option::is_some).map_or(lo, |i| i + 1);
    let mut cur = guess.unwrap_or_else(|| vec![state.u.clone(); m + 1]);
    let mut cbuf = vec![vec![0.0; hi - lo]; m + 1];
    let inner_tol = tol * 1e-3;
    for _ in 0..m + 2 {
        for n in 0..=m {
            conv.apply(&cur[n][lo..hi], &mut cbuf[n]);
        }
        let mut next = vec![vec![0.0; grid.len()]; m + 1];
        next[0].clone_from(&state.u);
        for i in lo..hi {
            let Some(ti) = tx[i] else { continue };
            let x = grid.center(i);
            let k = i - lo;
            let start = if ti <= times[0] {
                0
            } else {
                // first level at or after activation; partial step from ti
                let n1 = times.iter().position(|&t| t >= ti).unwrap_or(m);
                let s = (ti - times[n1 - 1]) / dt;
                let c = (1.0 - s) * cbuf[n1 - 1][k] + s * cbuf[n1][k];
                let v = (times[n1] - ti) * (cfg.d * c + growth.rate(ti, x, 0.0));
                if v < -NEG_TOL || v.is_nan() {
                    return Err(negative(times[n1], x, v));
                }
                next[n1][i] = v;
                n1
            };
            for n in start..m {
                let u = next[n][i];
                let v = euler_cell(u, cbuf[n][k], cfg.d, dt, growth.rate(times[n], x, u));
                if v < -NEG_TOL || v.is_nan() {
                    return Err(negative(times[n + 1], x, v));
                }
                next[n + 1][i] = v;
            }
        }
        let change = next
            .iter()
            .zip(&cur)
            .flat_map(|(p, q)| p[lo..hi].iter().zip(&q[lo..hi]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        cur = next;
        if change <= inner_tol {
            break;
        }
    }
    Ok(cur)
}

/// A run in progress.
pub struct Simulation {
    grid: Grid,
    stencil: Stencil,
    conv: Convolver,
    growth: Growth,
    cfg: SolverConfig,
    state: SimState,
    step: u64,
    buf: Vec<f64>,
    samples: Vec<Sample>,
    snapshots: Vec<Snapshot>,
    picard: Vec<PicardReport>,
}

impl Simulation {
    pub fn new(setup: &Setup, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = setup.grid()?;
        let stencil = setup.stencil()?;
        let product = cfg.stability_product(&setup.growth, setup.m0());
        if product > 0.5 {
            return Err(Error::StabilityGuard { product });
        }
        let state = SimState::initial(&grid, setup.h0, &setup.initial)?;
        check_window(&grid, &stencil, &state)?;
        let conv = Convolver::new(&stencil);
        let first = sample_of(&grid, &stencil, &state);
        let snap = Snapshot::of(&state);
        Ok(Self {
            grid,
            stencil,
            conv,
            growth: setup.growth.clone(),
            cfg: cfg.clone(),
            state,
            step: 0,
            buf: Vec::new(),
            samples: vec![first],
            snapshots: vec![snap],
            picard: Vec::new(),
        })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Diagnostics of the current state.
    pub fn current_sample(&self) -> Sample {
        sample_of(&self.grid, &self.stencil, &self.state)
    }

    fn time_of(&self, step: u64) -> f64 {
        step as f64 * self.cfg.dt
    }

    fn record(&mut self) {
        if self.step % self.cfg.record_every as u64 == 0 {
            let s = self.current_sample();
            self.samples.push(s);
        }
        if self.cfg.snapshot_every > 0 && self.step % self.cfg.snapshot_every as u64 == 0 {
            self.snapshots.push(Snapshot::of(&self.state));
        }
    }

    /// One explicit step.
    pub fn step(&mut self) -> Result<()> {
        let t_new = self.time_of(self.step + 1);
        advance(
            &self.grid,
            &self.stencil,
            &mut self.conv,
            &self.growth,
            &self.cfg,
            &mut self.state,
            &mut self.buf,
            t_new,
        )?;
        self.step += 1;
        self.record();
        Ok(())
    }

    /// One Picard window of at most `max_steps` steps; returns steps taken.
    fn picard_step(&mut self, p: &PicardConfig, max_steps: u64) -> Result<u64> {
        let per = ((p.window / self.cfg.dt).round() as u64).max(1);
        let m = per.min(max_steps);
        let w = picard_window(&self.grid, &self.stencil, &self.growth, &self.cfg, p, &self.state, m as usize)?;
        for (n, smp) in w.levels.iter().enumerate().skip(1) {
            let step = self.step + n as u64;
            if step % self.cfg.record_every as u64 == 0 {
                let mut s = *smp;
                s.t = self.time_of(step);
                self.samples.push(s);
            }
        }
        self.step += m;
        self.state = w.state;
        self.state.t = self.time_of(self.step);
        if self.cfg.snapshot_every > 0 && self.step % self.cfg.snapshot_every as u64 == 0 {
            self.snapshots.push(Snapshot::of(&self.state));
        }
        self.picard.push(w.report);
        Ok(m)
    }

    /// Advance to `t_end`, calling `stop` after every recorded sample; stops
    /// early when it returns true. Returns whether it stopped early.
    pub fn run(&mut self, mut stop: impl FnMut(&Sample) -> bool) -> Result<bool> {
        let total = self.cfg.steps();
        self.run_to(total, &mut stop)
    }

    /// As [`Simulation::run`] but up to an absolute step count.
    pub fn run_to(&mut self, total: u64, stop: &mut dyn FnMut(&Sample) -> bool) -> Result<bool> {
        while self.step < total {
            let before = self.samples.len();
            match self.cfg.mode {
                Mode::Explicit => self.step()?,
                Mode::Picard(p) => {
                    self.picard_step(&p, total - self.step)?;
                }
            }
            if self.samples.len() > before && stop(self.samples.last().unwrap()) {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Close the run, recording the final state if it was not just recorded.
    pub fn finish(mut self) -> Trajectory {
        if self.samples.last().map(|s| s.t) != Some(self.state.t) {
            let s = self.current_sample();
            self.samples.push(s);
        }
        if self.snapshots.last().map(|s| s.t) != Some(self.state.t) {
            self.snapshots.push(Snapshot::of(&self.state));
        }
        Trajectory {
            grid: self.grid,
            d: self.cfg.d,
            mu: self.cfg.mu,
            samples: self.samples,
            snapshots: self.snapshots,
            picard: self.picard,
            final_state: self.state,
        }
    }
}

/// Run from the initial data to `cfg.t_end`.
pub fn integrate(setup: &Setup, cfg: &SolverConfig) -> Result<Trajectory> {
    let mut sim = Simulation::new(setup, cfg)?;
    sim.run(|_| false)?;
    Ok(sim.finish())
}
