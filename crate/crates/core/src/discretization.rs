//! Cell-centred grid, the moving support `(g, h)` and the nonlocal operator.
//!
//! The window `[xmin, xmax]` is split into `n` cells of width `dx`; densities
//! live at the cell centres. A cell is active while its centre lies strictly
//! inside `(g, h)`. Integrals over the support are sums over active cells, so
//! the discrete mass `dx Σ u` and the boundary fluxes satisfy the same balance
//! law as the continuous model.

use crate::error::{Error, Result};
use crate::initial::InitialData;
use crate::kernel::Stencil;

/// Uniform cell-centred grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    xmin: f64,
    dx: f64,
    n: usize,
    /// `xmin / dx`, snapped to an integer when within roundoff of one.
    origin: f64,
}

impl Grid {
    /// `n` cells of width `dx` starting at `xmin`.
    pub fn new(xmin: f64, dx: f64, n: usize) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::arg("dx", format!("must be finite and > 0, got {dx}")));
        }
        if !xmin.is_finite() {
            return Err(Error::arg("xmin", "must be finite"));
        }
        if n == 0 {
            return Err(Error::arg("n", "grid needs at least one cell"));
        }
        let ratio = xmin / dx;
        let origin = if (ratio - ratio.round()).abs() < 1e-9 { ratio.round() } else { ratio };
        Ok(Self { xmin, dx, n, origin })
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn xmin(&self) -> f64 {
        self.xmin
    }

    pub fn xmax(&self) -> f64 {
        self.edge(self.n)
    }

    /// Left edge of cell `i`: `xmin + i·dx`.
    pub fn edge(&self, i: usize) -> f64 {
        self.xmin + i as f64 * self.dx
    }

    /// Centre of cell `i`.
    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        (self.origin + i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.center(i)).collect()
    }

    /// Cells whose centres lie strictly inside `(g, h)`, as `a..b`.
    pub fn active_range(&self, g: f64, h: f64) -> (usize, usize) {
        let guess = |x: f64| ((x / self.dx - self.origin - 0.5).floor().max(-1.0) + 1.0).min(self.n as f64) as usize;
        let mut a = guess(g);
        while a > 0 && self.center(a - 1) > g {
            a -= 1;
        }
        while a < self.n && self.center(a) <= g {
            a += 1;
        }
        let mut b = guess(h).max(a);
        while b > a && self.center(b - 1) >= h {
            b -= 1;
        }
        while b < self.n && self.center(b) < h {
            b += 1;
        }
        (a, b)
    }
}

/// Symmetric window `[-(h0 + margin), h0 + margin]`, rounded outward to a
/// whole number of cells on each side of 0.
///
/// Runs stop with [`Error::WindowExit`] when a front gets within one kernel
/// radius of the window edge.
pub fn build_grid(h0: f64, margin: f64, dx: f64) -> Result<Grid> {
    for (field, v) in [("h0", h0), ("margin", margin), ("dx", dx)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::arg(field, format!("must be finite and > 0, got {v}")));
        }
    }
    if dx >= h0 {
        return Err(Error::arg(
            "dx",
            format!("dx = {dx} must be smaller than h0 = {h0} so the initial support holds several cells"),
        ));
    }
    let half = ((h0 + margin) / dx - 1e-9).ceil() as usize;
    Grid::new(-(half as f64) * dx, dx, 2 * half)
}

/// Density and fronts at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub(crate) t: f64,
    pub(crate) g: f64,
    pub(crate) h: f64,
    pub(crate) u: Vec<f64>,
    pub(crate) a: usize,
    pub(crate) b: usize,
}

impl SimState {
    /// State at `t = 0` with support `(-h0, h0)` and density `u0` at the cell centres.
    pub fn initial(grid: &Grid, h0: f64, u0: &InitialData) -> Result<Self> {
        u0.validate(h0)?;
        if -h0 <= grid.xmin() || h0 >= grid.xmax() {
            return Err(Error::arg("h0", "initial support must lie inside the grid window"));
        }
        let (a, b) = grid.active_range(-h0, h0);
        let mut u = vec![0.0; grid.len()];
        for (i, v) in u.iter_mut().enumerate().take(b).skip(a) {
            *v = u0.eval(grid.center(i), h0);
        }
        Ok(Self { t: 0.0, g: -h0, h: h0, u, a, b })
    }

    /// State from explicit parts. Values outside `(g, h)` must be zero and
    /// values inside nonnegative.
    pub fn from_parts(grid: &Grid, t: f64, g: f64, h: f64, u: Vec<f64>) -> Result<Self> {
        if !(g < h) {
            return Err(Error::arg("g", format!("need g < h, got g = {g}, h = {h}")));
        }
        if u.len() != grid.len() {
            return Err(Error::arg("u", format!("expected {} values, got {}", grid.len(), u.len())));
        }
        let (a, b) = grid.active_range(g, h);
        for (i, &v) in u.iter().enumerate() {
            if (i < a || i >= b) && v != 0.0 {
                return Err(Error::arg("u", format!("nonzero value at x = {} outside (g, h)", grid.center(i))));
            }
            if !(v >= 0.0) {
                return Err(Error::arg("u", format!("negative or NaN value {v} at x = {}", grid.center(i))));
            }
        }
        Ok(Self { t, g, h, u, a, b })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Density at every cell centre, zero outside the support.
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// Densities of the active cells.
    pub fn active(&self) -> &[f64] {
        &self.u[self.a..self.b]
    }

    /// Index range `a..b` of the active cells.
    pub fn active_range(&self) -> (usize, usize) {
        (self.a, self.b)
    }

    pub fn sup(&self) -> f64 {
        self.active().iter().copied().fold(0.0, f64::max)
    }

    /// `∫ u dx` as `dx Σ u`.
    pub fn mass(&self, grid: &Grid) -> f64 {
        grid.dx() * self.active().iter().sum::<f64>()
    }

    /// Linear interpolation between cell centres, zero outside the support.
    pub fn value_at(&self, grid: &Grid, x: f64) -> f64 {
        if !(x > self.g && x < self.h) {
            return 0.0;
        }
        let s = x / grid.dx() - grid.origin - 0.5;
        let i0 = s.floor();
        let frac = s - i0;
        let at = |i: f64| {
            if i < 0.0 || i >= grid.len() as f64 {
                0.0
            } else {
                self.u[i as usize]
            }
        };
        (1.0 - frac) * at(i0) + frac * at(i0 + 1.0)
    }
}

/// Discrete convolution with a fixed stencil over a contiguous block of cells
/// extended by zero. Stencils whose interior weights are all equal (top-hat
/// kernels) use running sums.
#[derive(Debug, Clone)]
pub struct Convolver {
    weights: Vec<f64>,
    r: usize,
    flat: Option<(f64, f64)>,
    prefix: Vec<f64>,
}

impl Convolver {
    pub fn new(stencil: &Stencil) -> Self {
        let weights = stencil.weights().to_vec();
        let r = stencil.radius_cells();
        let w0 = weights[r];
        let flat = if r >= 1 && weights[1..2 * r].iter().all(|w| (w - w0).abs() <= 1e-13 * w0) {
            Some((w0, weights[0]))
        } else {
            None
        };
        Self {
            weights,
            r,
            flat,
            prefix: Vec::new(),
        }
    }

    /// `out[i] = Σ_j w_{i-j} u[j]` over `0 <= j < u.len()`.
    pub fn apply(&mut self, u: &[f64], out: &mut [f64]) {
        let m = u.len();
        debug_assert_eq!(out.len(), m);
        let r = self.r;
        if let Some((wc, we)) = self.flat {
            self.prefix.clear();
            self.prefix.push(0.0);
            let mut acc = 0.0;
            for &v in u {
                acc += v;
                self.prefix.push(acc);
            }
            for (i, o) in out.iter_mut().enumerate() {
                let lo = (i + 1).saturating_sub(r);
                let hi = (i + r).min(m);
                let inner = self.prefix[hi] - self.prefix[lo];
                let mut ends = 0.0;
                if i >= r {
                    ends += u[i - r];
                }
                if i + r < m {
                    ends += u[i + r];
                }
                *o = wc * inner + we * ends;
            }
        } else {
            for (i, o) in out.iter_mut().enumerate() {
                let lo = i.saturating_sub(r);
                let hi = (i + r + 1).min(m);
                let w = &self.weights[lo + r - i..hi + r - i];
                *o = w.iter().zip(&u[lo..hi]).map(|(a, b)| a * b).sum();
            }
        }
    }
}

/// `d (Σ_k w_k u_{i-k} - u_i)` at every active cell, zero elsewhere.
/// Only active cells contribute to the sum.
pub fn apply_nonlocal(stencil: &Stencil, d: f64, state: &SimState) -> Vec<f64> {
    let mut out = vec![0.0; state.u.len()];
    let act = state.active();
    let mut conv = Convolver::new(stencil);
    conv.apply(act, &mut out[state.a..state.b]);
    for (o, &v) in out[state.a..state.b].iter_mut().zip(act) {
        *o = d * (*o - v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Kernel;

    #[test]
    fn grid_arithmetic() {
        let g = build_grid(1.0, 9.0, 0.05).unwrap();
        assert_eq!(g.len(), 400);
        assert_eq!(g.xmin(), -10.0);
        assert_eq!(g.xmax(), 10.0);
        for i in [0usize, 17, 200, 399] {
            assert_eq!(g.edge(i), -10.0 + i as f64 * 0.05);
        }
        assert!(build_grid(1.0, 9.0, 2.0).is_err());
        assert!(build_grid(1.0, -1.0, 0.1).is_err());
    }

    #[test]
    fn centres_are_symmetric() {
        let g = build_grid(0.3, 2.0, 0.02).unwrap();
        let n = g.len();
        for i in 0..n {
            assert_eq!(g.center(i), -g.center(n - 1 - i));
        }
    }

    #[test]
    fn active_range_strict() {
        let g = build_grid(1.0, 1.0, 0.5).unwrap();
        // centres -1.75, -1.25, ..., 1.75
        assert_eq!(g.active_range(-1.0, 1.0), (2, 6));
        assert_eq!(g.active_range(-0.75, 0.75), (3, 5));
        assert_eq!(g.active_range(-0.7501, 0.7501), (2, 6));
        assert_eq!(g.active_range(-9.0, 9.0), (0, 8));
    }

    #[test]
    fn initial_state_and_mass() {
        let g = build_grid(1.0, 2.0, 0.01).unwrap();
        let s = SimState::initial(&g, 1.0, &InitialData::CosineBump { amplitude: 1.0 }).unwrap();
        let (a, b) = s.active_range();
        assert_eq!(b - a, 200);
        assert!((s.mass(&g) - 4.0 / std::f64::consts::PI).abs() < 1e-4);
        assert!((s.value_at(&g, 0.0) - 1.0).abs() < 1e-4);
        assert_eq!(s.value_at(&g, 1.5), 0.0);
    }

    #[test]
    fn constant_density_in_range() {
        let k = Kernel::top_hat(1.0).unwrap();
        let g = build_grid(4.0, 2.0, 0.05).unwrap();
        let st = Stencil::new(&k, 0.05).unwrap();
        let (a, b) = g.active_range(-4.0, 4.0);
        let mut u = vec![0.0; g.len()];
        u[a..b].iter_mut().for_each(|v| *v = 0.7);
        let s = SimState::from_parts(&g, 0.0, -4.0, 4.0, u).unwrap();
        let out = apply_nonlocal(&st, 2.0, &s);
        let mid = g.len() / 2;
        assert!(out[mid].abs() < 1e-12);
        assert!(out[a] < 0.0);
        assert_eq!(out[a - 1], 0.0);
    }

    #[test]
    fn flat_and_generic_paths_agree() {
        let k = Kernel::top_hat(0.3).unwrap();
        let st = Stencil::new(&k, 0.05).unwrap();
        let mut fast = Convolver::new(&st);
        assert!(fast.flat.is_some());
        let mut slow = fast.clone();
        slow.flat = None;
        let u: Vec<f64> = (0..37).map(|i| ((i * 7919) % 13) as f64 / 13.0).collect();
        let mut o1 = vec![0.0; u.len()];
        let mut o2 = vec![0.0; u.len()];
        fast.apply(&u, &mut o1);
        slow.apply(&u, &mut o2);
        for (x, y) in o1.iter().zip(&o2) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
