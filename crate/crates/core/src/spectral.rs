//! Principal eigenvalue of `φ ↦ d (∫_I J(x - y) φ(y) dy - φ) + a₀ φ` on a
//! bounded interval `I`, and the critical length `ℓ*` at which it vanishes.
//!
//! The interval is split into `n` cells of width `Δ = |I| / n`, giving the
//! symmetric banded Toeplitz matrix `M_ij = d w_{|i-j|} + (a₀ - d) δ_ij` with
//! `w` the per-cell kernel masses. `M + cI` is nonnegative and irreducible, so
//! the top eigenvalue is simple with a positive eigenvector. It is computed by
//! inverse iteration on `sI - M` with the shift `s` kept just above the
//! Collatz-Wielandt upper bound, which keeps `sI - M` positive definite.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelFamily, Stencil};

/// Default stopping tolerance for [`lambda_p`].
pub const DEFAULT_TOL: f64 = 1e-11;

const MAX_OUTER: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub lambda_p: f64,
    /// Eigenfunction at the cell centres, positive, sup-normalised to 1.
    pub eigenfunction: Vec<f64>,
    pub centers: Vec<f64>,
    pub interval: (f64, f64),
    pub n: usize,
    pub iterations: usize,
    /// `‖(M - λ I) φ‖∞`.
    pub residual: f64,
}

/// Banded symmetric Toeplitz operator.
#[derive(Debug, Clone)]
struct Operator {
    n: usize,
    diag: f64,
    /// `d w_k` for `k = 1..=r`.
    off: Vec<f64>,
}

impl Operator {
    fn new(d: f64, a0: f64, interval: (f64, f64), kernel: &Kernel, n: usize) -> Result<Self> {
        let (l1, l2) = interval;
        if !(l1.is_finite() && l2.is_finite() && l2 > l1) {
            return Err(Error::arg("interval", format!("need finite l1 < l2, got ({l1}, {l2})")));
        }
        if n < 4 {
            return Err(Error::arg("n", format!("need at least 4 cells, got {n}")));
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::arg("d", format!("must be finite and > 0, got {d}")));
        }
        if !a0.is_finite() {
            return Err(Error::arg("a0", "must be finite"));
        }
        let dx = (l2 - l1) / n as f64;
        let stencil = interval_stencil(kernel, dx, n)?;
        let r = stencil.radius_cells();
        Ok(Self {
            n,
            diag: d * stencil.weight(0) + a0 - d,
            off: (1..=r).map(|k| d * stencil.weight(k as isize)).collect(),
        })
    }

    fn r(&self) -> usize {
        self.off.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = self.diag * x[i];
            for (k, &w) in self.off.iter().enumerate() {
                let k = k + 1;
                if i >= k {
                    s += w * x[i - k];
                }
                if i + k < n {
                    s += w * x[i + k];
                }
            }
            y[i] = s;
        }
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        let k = i.abs_diff(j);
        if k == 0 {
            self.diag
        } else if k <= self.r() {
            self.off[k - 1]
        } else {
            0.0
        }
    }

    /// `‖M‖∞` bound.
    fn scale(&self) -> f64 {
        self.diag.abs() + 2.0 * self.off.iter().sum::<f64>()
    }
}

/// Stencil on a bounded interval of `n` cells: offsets beyond `n - 1` never
/// occur, so the stencil is cut there.
fn interval_stencil(kernel: &Kernel, dx: f64, n: usize) -> Result<Stencil> {
    let radius = kernel.support_radius();
    let cells = if radius.is_finite() {
        (radius / dx - 0.5 - 1e-9).ceil().max(0.0) as usize
    } else {
        let mut z = dx;
        while kernel.tail_mass(z) > 1e-17 {
            z *= 1.25;
        }
        (z / dx).ceil() as usize
    };
    Stencil::with_radius(kernel, dx, cells.min(n - 1), true)
}

/// Lower band of a Cholesky factor: `l[i][k]` holds `L(i, i - k)`.
struct BandCholesky {
    r: usize,
    l: Vec<Vec<f64>>,
}

impl BandCholesky {
    /// Factor `s I - M`; `None` if it is not numerically positive definite.
    fn factor(op: &Operator, s: f64) -> Option<Self> {
        let n = op.n;
        let r = op.r();
        let mut l = vec![vec![0.0; r + 1]; n];
        for i in 0..n {
            let j0 = i.saturating_sub(r);
            for j in j0..=i {
                let aij = if i == j { s - op.entry(i, j) } else { -op.entry(i, j) };
                let p0 = j0.max(j.saturating_sub(r));
                let mut acc = aij;
                for p in p0..j {
                    acc -= l[i][i - p] * l[j][j - p];
                }
                if i == j {
                    if !(acc > 0.0) {
                        return None;
                    }
                    l[i][0] = acc.sqrt();
                } else {
                    l[i][i - j] = acc / l[j][0];
                }
            }
        }
        Some(Self { r, l })
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n {
            let mut acc = b[i];
            for k in 1..=self.r.min(i) {
                acc -= self.l[i][k] * b[i - k];
            }
            b[i] = acc / self.l[i][0];
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for k in 1..=self.r.min(n - 1 - i) {
                acc -= self.l[i + k][k] * b[i + k];
            }
            b[i] = acc / self.l[i][0];
        }
    }
}

/// Dense matrix of the discretised operator.
pub fn assemble_operator(d: f64, a0: f64, interval: (f64, f64), kernel: &Kernel, n: usize) -> Result<DMatrix<f64>> {
    let op = Operator::new(d, a0, interval, kernel, n)?;
    Ok(DMatrix::from_fn(n, n, |i, j| op.entry(i, j)))
}

/// Principal eigenvalue and eigenfunction on `interval` with `n` cells.
///
/// Stops when successive Rayleigh quotients differ by less than `tol` and the
/// residual is below `tol`.
pub fn lambda_p(d: f64, a0: f64, interval: (f64, f64), kernel: &Kernel, n: usize, tol: f64) -> Result<SpectralResult> {
    lambda_p_from(d, a0, interval, kernel, n, tol, None)
}

fn lambda_p_from(
    d: f64,
    a0: f64,
    interval: (f64, f64),
    kernel: &Kernel,
    n: usize,
    tol: f64,
    start: Option<&[f64]>,
) -> Result<SpectralResult> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::arg("tol", format!("must be finite and > 0, got {tol}")));
    }
    let op = Operator::new(d, a0, interval, kernel, n)?;
    let scale = op.scale().max(f64::MIN_POSITIVE);
    let mut x = match start {
        Some(s) if s.len() == n && s.iter().all(|v| *v > 0.0) => s.to_vec(),
        _ => vec![1.0; n],
    };
    let mut y = vec![0.0; n];
    let mut prev = f64::NAN;
    let mut residual = f64::INFINITY;
    for iter in 1..=MAX_OUTER {
        op.apply(&x, &mut y);
        let xx: f64 = x.iter().map(|v| v * v).sum();
        let rq = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / xx;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (a, b) in x.iter().zip(&y) {
            let q = b / a;
            lo = lo.min(q);
            hi = hi.max(q);
        }
        let sup = x.iter().copied().fold(0.0, f64::max);
        residual = x.iter().zip(&y).map(|(a, b)| (b - rq * a).abs()).fold(0.0, f64::max) / sup;
        if (rq - prev).abs() < tol && residual < tol {
            x.iter_mut().for_each(|v| *v /= sup);
            let (l1, l2) = interval;
            let dx = (l2 - l1) / n as f64;
            return Ok(SpectralResult {
                lambda_p: rq,
                eigenfunction: x,
                centers: (0..n).map(|i| l1 + (i as f64 + 0.5) * dx).collect(),
                interval,
                n,
                iterations: iter,
                residual,
            });
        }
        prev = rq;
        let mut eps = 1e-9 * scale + 0.01 * (hi - lo).max(0.0);
        let chol = loop {
            if let Some(c) = BandCholesky::factor(&op, hi + eps) {
                break c;
            }
            eps *= 10.0;
        };
        for _ in 0..3 {
            chol.solve(&mut x);
            let sup = x.iter().copied().fold(0.0, f64::max);
            x.iter_mut().for_each(|v| *v /= sup);
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_OUTER,
        residual,
    })
}

/// Cell width used by [`find_ell_star`]: a hundredth of the kernel's length scale.
pub fn default_cell_width(kernel: &Kernel) -> f64 {
    let scale = match kernel.family() {
        KernelFamily::Laplace { rate, radius, .. } => radius.min(1.0 / rate),
        KernelFamily::TruncatedGaussian { sigma, radius, .. } => radius.min(*sigma),
        _ => kernel.support_radius(),
    };
    scale / 100.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllStar {
    pub ell: f64,
    /// `λ_p` at the returned length.
    pub lambda: f64,
    /// Cells used for every evaluation.
    pub n: usize,
    /// Final bisection bracket.
    pub bracket: (f64, f64),
    pub evaluations: usize,
}

/// Critical length: the `ℓ` with `λ_p(L_(0,ℓ) + f'(0)) = 0`, for `0 < f'(0) < d`.
pub fn find_ell_star(d: f64, fprime0: f64, kernel: &Kernel, tol: f64) -> Result<EllStar> {
    find_ell_star_with(d, fprime0, kernel, tol, default_cell_width(kernel))
}

/// As [`find_ell_star`] with an explicit target cell width. The number of
/// cells is fixed from the upper end of the bracket so that `λ_p` is a
/// continuous increasing function of `ℓ` throughout the bisection.
pub fn find_ell_star_with(d: f64, fprime0: f64, kernel: &Kernel, tol: f64, cell_width: f64) -> Result<EllStar> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::arg("d", format!("must be finite and > 0, got {d}")));
    }
    if !(fprime0.is_finite() && fprime0 > 0.0) {
        return Err(Error::arg("fprime0", format!("must be finite and > 0, got {fprime0}")));
    }
    if fprime0 >= d {
        return Err(Error::NoCriticalLength { fprime0, d });
    }
    if !(cell_width.is_finite() && cell_width > 0.0) {
        return Err(Error::arg("cell_width", format!("must be finite and > 0, got {cell_width}")));
    }
    // λ_p <= f'(0) - d + d sup(J) ℓ, negative below this length
    let lo0 = 0.5 * (d - fprime0) / (d * kernel.sup());
    let cells = |ell: f64| ((ell / cell_width).ceil() as usize).max(8);
    let mut evaluations = 0;
    let mut hi = 2.0 * lo0;
    loop {
        evaluations += 1;
        if lambda_p(d, fprime0, (0.0, hi), kernel, cells(hi), tol * 1e-2)?.lambda_p > 0.0 {
            break;
        }
        hi *= 2.0;
        if hi > 1e6 * lo0 {
            return Err(Error::BracketFailure(format!("lambda_p still <= 0 at length {hi}")));
        }
    }
    let n = cells(hi);
    let eval = |ell: f64, start: Option<&[f64]>| lambda_p_from(d, fprime0, (0.0, ell), kernel, n, tol * 1e-2, start);
    let mut lo = lo0;
    let at_lo = eval(lo, None)?;
    let at_hi = eval(hi, None)?;
    evaluations += 2;
    if !(at_lo.lambda_p < 0.0 && at_hi.lambda_p > 0.0) {
        return Err(Error::BracketFailure(format!(
            "no sign change on [{lo}, {hi}] with {n} cells: lambda_p = {}, {}",
            at_lo.lambda_p, at_hi.lambda_p
        )));
    }
    let mut phi = at_hi.eigenfunction;
    let mut best = (hi, at_hi.lambda_p);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r = eval(mid, Some(&phi))?;
        evaluations += 1;
        if r.lambda_p.abs() < best.1.abs() {
            best = (mid, r.lambda_p);
        }
        phi = r.eigenfunction;
        if r.lambda_p.abs() <= tol || hi - lo <= 1e-14 * hi {
            break;
        }
        if r.lambda_p < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(EllStar {
        ell: best.0,
        lambda: best.1,
        n,
        bracket: (lo, hi),
        evaluations,
    })
}

/// `λ_p` on successive doublings of the cell count.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub ns: Vec<usize>,
    pub lambdas: Vec<f64>,
    /// `|λ(n_k) - λ(n_{k+1})|`.
    pub changes: Vec<f64>,
    /// `log2` of the ratio of the last two changes, when defined.
    pub order: Option<f64>,
}

pub fn refinement_study(
    d: f64,
    a0: f64,
    interval: (f64, f64),
    kernel: &Kernel,
    n0: usize,
    levels: usize,
) -> Result<Refinement> {
    let mut ns = Vec::with_capacity(levels);
    let mut lambdas = Vec::with_capacity(levels);
    let mut n = n0;
    for _ in 0..levels {
        lambdas.push(lambda_p(d, a0, interval, kernel, n, DEFAULT_TOL)?.lambda_p);
        ns.push(n);
        n *= 2;
    }
    let changes: Vec<f64> = lambdas.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let order = match changes.as_slice() {
        [.., a, b] if *a > 0.0 && *b > 0.0 => Some((a / b).log2()),
        _ => None,
    };
    Ok(Refinement {
        ns,
        lambdas,
        changes,
        order,
    })
}
