//! Dispersal kernels.
//!
//! A kernel is a symmetric probability density `J` with `J(0) > 0` and bounded
//! sup. Besides point evaluation, the flux laws need the tail mass
//! `K(z) = ∫_z^∞ J(s) ds`: the mass a unit population at `x` sends beyond a
//! front at `h` is `K(h - x)`.
//!
//! Unbounded families are truncated at a radius and renormalized, so every
//! kernel here has total mass exactly one.

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_2;

/// Kernel family with its stored normalization.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelFamily {
    /// Uniform density `1/(2L)` on `[-L, L]`.
    TopHat { half_width: f64 },
    /// Hat function `(L - |x|)/L²` on `[-L, L]`.
    Triangle { half_width: f64 },
    /// `λ e^{-λ|x|} / (2N)` on `[-R, R]`, `N = 1 - e^{-λR}`. `R` may be infinite.
    Laplace { rate: f64, radius: f64, norm: f64 },
    /// Gaussian with standard deviation `σ` cut at `R`; `norm = erf(R/(σ√2))`.
    TruncatedGaussian { sigma: f64, radius: f64, norm: f64 },
    /// Piecewise-linear interpolation of symmetric samples.
    Tabulated(Tabulated),
}

/// Symmetrized, unit-mass samples of a kernel on an ascending symmetric grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    xs: Vec<f64>,
    values: Vec<f64>,
    /// `upper[k] = ∫_{x_k}^{x_last} J`.
    upper: Vec<f64>,
}

impl Tabulated {
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn eval(&self, x: f64) -> f64 {
        let xs = &self.xs;
        let last = xs.len() - 1;
        if !(xs[0]..=xs[last]).contains(&x) {
            return 0.0;
        }
        let k = segment(xs, x);
        let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
        self.values[k] + t * (self.values[k + 1] - self.values[k])
    }

    /// ∫_z^∞ for any real z (exact for the linear interpolant).
    fn upper_mass(&self, z: f64) -> f64 {
        let xs = &self.xs;
        let last = xs.len() - 1;
        if z <= xs[0] {
            return 1.0;
        }
        if z >= xs[last] {
            return 0.0;
        }
        let k = segment(xs, z);
        let width = xs[k + 1] - xs[k];
        let slope = (self.values[k + 1] - self.values[k]) / width;
        let jz = self.values[k] + slope * (z - xs[k]);
        // trapezoid of the linear piece on [z, x_{k+1}] is exact
        self.upper[k + 1] + 0.5 * (jz + self.values[k + 1]) * (xs[k + 1] - z)
    }
}

fn segment(xs: &[f64], x: f64) -> usize {
    let idx = xs.partition_point(|&v| v <= x);
    idx.saturating_sub(1).min(xs.len() - 2)
}

/// A validated dispersal kernel. Immutable; cheap to clone for the analytic families.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    family: KernelFamily,
}

impl Kernel {
    pub fn top_hat(half_width: f64) -> Result<Self> {
        positive_finite("half_width", half_width)?;
        Ok(Self {
            family: KernelFamily::TopHat { half_width },
        })
    }

    pub fn triangle(half_width: f64) -> Result<Self> {
        positive_finite("half_width", half_width)?;
        Ok(Self {
            family: KernelFamily::Triangle { half_width },
        })
    }

    /// Laplace kernel with decay `rate`, truncated at `radius` (pass `f64::INFINITY`
    /// for the untruncated density).
    pub fn laplace(rate: f64, radius: f64) -> Result<Self> {
        positive_finite("rate", rate)?;
        if !(radius > 0.0) {
            return Err(Error::InvalidKernel(format!("radius must be > 0, got {radius}")));
        }
        let norm = -(-rate * radius).exp_m1();
        Ok(Self {
            family: KernelFamily::Laplace { rate, radius, norm },
        })
    }

    pub fn truncated_gaussian(sigma: f64, radius: f64) -> Result<Self> {
        positive_finite("sigma", sigma)?;
        positive_finite("radius", radius)?;
        let norm = libm::erf(radius / (sigma * SQRT_2));
        Ok(Self {
            family: KernelFamily::TruncatedGaussian {
                sigma,
                radius,
                norm,
            },
        })
    }

    /// Build from samples `(x_k, J(x_k))` on an ascending grid symmetric about 0.
    /// Values are symmetrized as `(J(x) + J(-x))/2` and rescaled to unit mass.
    pub fn tabulated(xs: &[f64], values: &[f64]) -> Result<Self> {
        if xs.len() != values.len() {
            return Err(Error::InvalidKernel(format!(
                "{} abscissae but {} values",
                xs.len(),
                values.len()
            )));
        }
        if xs.len() < 3 {
            return Err(Error::InvalidKernel("need at least 3 samples".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidKernel("abscissae must be strictly increasing".into()));
        }
        let n = xs.len();
        let scale = xs[n - 1].abs().max(xs[0].abs());
        for k in 0..n {
            if (xs[k] + xs[n - 1 - k]).abs() > 1e-9 * scale {
                return Err(Error::InvalidKernel(format!(
                    "grid is not symmetric about 0 (x[{k}] = {}, x[{}] = {})",
                    xs[k],
                    n - 1 - k,
                    xs[n - 1 - k]
                )));
            }
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidKernel(format!("sample value {v} is not a finite nonnegative number")));
        }
        // exact mirror positions, then symmetrized values
        let half = n / 2;
        let mut sx = xs.to_vec();
        for k in 0..half {
            let m = 0.5 * (xs[n - 1 - k] - xs[k]);
            sx[k] = -m;
            sx[n - 1 - k] = m;
        }
        if n % 2 == 1 {
            sx[half] = 0.0;
        }
        let sym: Vec<f64> = (0..n).map(|k| 0.5 * (values[k] + values[n - 1 - k])).collect();
        let mut mass = 0.0;
        for k in 0..n - 1 {
            mass += 0.5 * (sym[k] + sym[k + 1]) * (sx[k + 1] - sx[k]);
        }
        if !(mass > 0.0) {
            return Err(Error::InvalidKernel("tabulated kernel has zero mass".into()));
        }
        let values: Vec<f64> = sym.iter().map(|v| v / mass).collect();
        let mut upper = vec![0.0; n];
        for k in (0..n - 1).rev() {
            upper[k] = upper[k + 1] + 0.5 * (values[k] + values[k + 1]) * (sx[k + 1] - sx[k]);
        }
        let tab = Tabulated {
            xs: sx,
            values,
            upper,
        };
        if !(tab.eval(0.0) > 0.0) {
            return Err(Error::InvalidKernel("J(0) must be positive".into()));
        }
        Ok(Self {
            family: KernelFamily::Tabulated(tab),
        })
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    /// Point value `J(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let a = x.abs();
        match &self.family {
            KernelFamily::TopHat { half_width } => {
                if a <= *half_width {
                    0.5 / half_width
                } else {
                    0.0
                }
            }
            KernelFamily::Triangle { half_width } => {
                if a < *half_width {
                    (half_width - a) / (half_width * half_width)
                } else {
                    0.0
                }
            }
            KernelFamily::Laplace { rate, radius, norm } => {
                if a <= *radius {
                    0.5 * rate * (-rate * a).exp() / norm
                } else {
                    0.0
                }
            }
            KernelFamily::TruncatedGaussian {
                sigma,
                radius,
                norm,
            } => {
                if a <= *radius {
                    let s = a / sigma;
                    (-0.5 * s * s).exp() / (sigma * SQRT_2PI * norm)
                } else {
                    0.0
                }
            }
            KernelFamily::Tabulated(t) => t.eval(a),
        }
    }

    /// Tail mass `K(z) = ∫_z^∞ J`.
    pub fn tail_mass(&self, z: f64) -> f64 {
        if z < 0.0 {
            1.0 - self.upper_tail(-z)
        } else {
            self.upper_tail(z)
        }
    }

    /// `K(z)` for `z >= 0`.
    fn upper_tail(&self, z: f64) -> f64 {
        debug_assert!(z >= 0.0);
        match &self.family {
            KernelFamily::TopHat { half_width } => {
                if z >= *half_width {
                    0.0
                } else {
                    0.5 * (half_width - z) / half_width
                }
            }
            KernelFamily::Triangle { half_width } => {
                if z >= *half_width {
                    0.0
                } else {
                    let r = (half_width - z) / half_width;
                    0.5 * r * r
                }
            }
            KernelFamily::Laplace { rate, radius, norm } => {
                if z >= *radius {
                    0.0
                } else if radius.is_infinite() {
                    0.5 * (-rate * z).exp()
                } else {
                    // e^{-λz} - e^{-λR} = e^{-λz}(1 - e^{-λ(R-z)})
                    0.5 * (-rate * z).exp() * -(-rate * (radius - z)).exp_m1() / norm
                }
            }
            KernelFamily::TruncatedGaussian {
                sigma,
                radius,
                norm,
            } => {
                if z >= *radius {
                    0.0
                } else {
                    let s = sigma * SQRT_2;
                    let diff = libm::erfc(z / s) - libm::erfc(radius / s);
                    0.5 * diff / norm
                }
            }
            KernelFamily::Tabulated(t) => t.upper_mass(z),
        }
    }

    /// `∫_a^b J`; rejects `a > b`. Infinite endpoints are allowed.
    pub fn interval_mass(&self, a: f64, b: f64) -> Result<f64> {
        if a > b || a.is_nan() || b.is_nan() {
            return Err(Error::arg("interval", format!("need a <= b, got ({a}, {b})")));
        }
        Ok(self.mass_between(a, b))
    }

    pub(crate) fn mass_between(&self, a: f64, b: f64) -> f64 {
        let m = if a >= 0.0 {
            self.upper_tail(a) - self.upper_tail(b)
        } else if b <= 0.0 {
            self.upper_tail(-b) - self.upper_tail(-a)
        } else {
            1.0 - self.upper_tail(-a) - self.upper_tail(b)
        };
        m.max(0.0)
    }

    /// Radius beyond which `J` vanishes (possibly infinite).
    pub fn support_radius(&self) -> f64 {
        match &self.family {
            KernelFamily::TopHat { half_width } | KernelFamily::Triangle { half_width } => *half_width,
            KernelFamily::Laplace { radius, .. } | KernelFamily::TruncatedGaussian { radius, .. } => {
                *radius
            }
            KernelFamily::Tabulated(t) => *t.xs.last().unwrap(),
        }
    }

    /// `sup J`, attained at 0 for every built-in family.
    pub fn sup(&self) -> f64 {
        match &self.family {
            KernelFamily::Tabulated(t) => t.values.iter().copied().fold(0.0, f64::max),
            _ => self.eval(0.0),
        }
    }
}

fn positive_finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidKernel(format!("{field} must be finite and > 0, got {v}")))
    }
}

/// Per-cell kernel masses on a uniform grid of spacing `dx`.
///
/// `weight(k)` is the exact mass of `J` over `[(k - 1/2)dx, (k + 1/2)dx]`, so a
/// density held at cell centers is integrated against `J` cell by cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    dx: f64,
    /// `w_{-r} .. w_r`, length `2r + 1`.
    full: Vec<f64>,
    /// `tail[k]` = mass of the stencil beyond offset `k`, i.e. `Σ_{m>k} w_m`.
    tail: Vec<f64>,
    mass: f64,
}

impl Stencil {
    /// Stencil covering the whole kernel support. Fails for infinite support.
    pub fn new(kernel: &Kernel, dx: f64) -> Result<Self> {
        let radius = kernel.support_radius();
        if !radius.is_finite() {
            return Err(Error::arg(
                "radius_cells",
                "kernel has unbounded support; give an explicit stencil radius",
            ));
        }
        positive("dx", dx)?;
        let cells = (radius / dx - 0.5 - 1e-9).ceil().max(0.0) as usize;
        Self::with_radius(kernel, dx, cells, false)
    }

    /// Stencil of `radius_cells` cells on each side. Unless `allow_truncation`,
    /// a captured mass below 0.999 is rejected.
    pub fn with_radius(kernel: &Kernel, dx: f64, radius_cells: usize, allow_truncation: bool) -> Result<Self> {
        positive("dx", dx)?;
        let r = radius_cells;
        let mut half = Vec::with_capacity(r + 1);
        half.push(kernel.mass_between(-0.5 * dx, 0.5 * dx));
        for k in 1..=r {
            let k = k as f64;
            half.push(kernel.mass_between((k - 0.5) * dx, (k + 0.5) * dx));
        }
        let mut full = Vec::with_capacity(2 * r + 1);
        full.extend(half.iter().rev());
        full.extend(&half[1..]);
        let mass = full.iter().sum::<f64>();
        if mass < 0.999 && !allow_truncation {
            return Err(Error::StencilTruncated {
                mass,
                required: 0.999,
            });
        }
        let edge = kernel.tail_mass((r as f64 + 0.5) * dx);
        let tail = (0..=r)
            .map(|k| (kernel.tail_mass((k as f64 + 0.5) * dx) - edge).max(0.0))
            .collect();
        Ok(Self {
            dx,
            full,
            tail,
            mass,
        })
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn radius_cells(&self) -> usize {
        self.tail.len() - 1
    }

    /// `w_k` for `|k| <= r`, zero beyond.
    pub fn weight(&self, k: isize) -> f64 {
        let r = self.radius_cells() as isize;
        if k.abs() > r {
            0.0
        } else {
            self.full[(k + r) as usize]
        }
    }

    /// Weights `w_{-r} ..= w_r`.
    pub fn weights(&self) -> &[f64] {
        &self.full
    }

    /// `Σ_{m > k} w_m` for `0 <= k <= r`; zero beyond the stencil.
    pub fn tail(&self, k: usize) -> f64 {
        self.tail.get(k).copied().unwrap_or(0.0)
    }

    /// Total captured mass `Σ w_k`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Kernel mass lost to truncation, `1 - Σ w_k`.
    pub fn truncation(&self) -> f64 {
        (1.0 - self.mass).max(0.0)
    }

    /// Half-width of the stencil in length units.
    pub fn reach(&self) -> f64 {
        (self.radius_cells() as f64 + 0.5) * self.dx
    }
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::arg(field, format!("must be finite and > 0, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    fn families() -> Vec<Kernel> {
        vec![
            Kernel::top_hat(1.0).unwrap(),
            Kernel::triangle(0.7).unwrap(),
            Kernel::laplace(1.3, 5.0).unwrap(),
            Kernel::laplace(1.0, f64::INFINITY).unwrap(),
            Kernel::truncated_gaussian(0.6, 2.5).unwrap(),
            Kernel::tabulated(&[-1.0, -0.5, 0.0, 0.5, 1.0], &[0.0, 0.4, 1.0, 0.6, 0.0]).unwrap(),
        ]
    }

    #[test]
    fn top_hat_values() {
        let k = Kernel::top_hat(1.0).unwrap();
        assert_eq!(k.eval(0.0), 0.5);
        assert_eq!(k.eval(2.0), 0.0);
        assert_eq!(k.tail_mass(0.5), 0.25);
        assert_eq!(k.interval_mass(-1.0, 1.0).unwrap(), 1.0);
        assert_eq!(k.interval_mass(0.0, 0.5).unwrap(), 0.25);
    }

    #[test]
    fn laplace_untruncated_at_origin() {
        let k = Kernel::laplace(1.0, f64::INFINITY).unwrap();
        assert_eq!(k.eval(0.0), 0.5);
        assert!((k.tail_mass(1.0) - 0.5 * (-1.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn tail_is_half_at_zero_and_full_line_has_unit_mass() {
        for k in families() {
            assert!((k.tail_mass(0.0) - 0.5).abs() < 1e-15, "{k:?}");
            let m = k.interval_mass(f64::NEG_INFINITY, f64::INFINITY).unwrap();
            assert!((m - 1.0).abs() < 1e-12, "{k:?}: {m}");
        }
    }

    #[test]
    fn gaussian_tail_matches_simpson() {
        let k = Kernel::truncated_gaussian(1.0, 4.0).unwrap();
        let oracle = simpson(|x| k.eval(x), 1.0, 4.0, 20_000);
        assert!((k.tail_mass(1.0) - oracle).abs() < 1e-10);
    }

    #[test]
    fn analytic_tails_match_simpson_of_density() {
        for k in families() {
            let r = k.support_radius().min(30.0);
            for &z in &[0.1, 0.35, 0.8, 1.7] {
                if z >= r {
                    continue;
                }
                // the tabulated density has kinks at its nodes; split there
                let oracle = match k.family() {
                    KernelFamily::Tabulated(t) => {
                        let mut pts = vec![z];
                        pts.extend(t.xs().iter().copied().filter(|&x| x > z));
                        pts.windows(2).map(|w| simpson(|x| k.eval(x), w[0], w[1], 2000)).sum()
                    }
                    _ => simpson(|x| k.eval(x), z, r, 200_000),
                };
                assert!((k.tail_mass(z) - oracle).abs() < 1e-9, "{k:?} z={z}");
            }
        }
    }

    #[test]
    fn reversed_interval_rejected() {
        let k = Kernel::top_hat(1.0).unwrap();
        assert!(matches!(k.interval_mass(1.0, 0.0), Err(Error::InvalidArgument { .. })));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(Kernel::top_hat(0.0).is_err());
        assert!(Kernel::laplace(-1.0, 2.0).is_err());
        assert!(Kernel::truncated_gaussian(1.0, f64::INFINITY).is_err());
        assert!(Kernel::tabulated(&[-1.0, 0.0, 2.0], &[1.0, 1.0, 1.0]).is_err());
        assert!(Kernel::tabulated(&[-1.0, 0.0, 1.0], &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn tabulated_is_symmetrized_and_normalized() {
        let k = Kernel::tabulated(&[-1.0, 0.0, 1.0], &[0.0, 2.0, 1.0]).unwrap();
        assert_eq!(k.eval(0.7), k.eval(-0.7));
        assert!((k.interval_mass(-1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn top_hat_stencil_on_half_cells() {
        let k = Kernel::top_hat(1.0).unwrap();
        let s = Stencil::new(&k, 0.5).unwrap();
        assert_eq!(s.radius_cells(), 2);
        // cells centred on multiples of dx: the outer cells straddle the support edge
        assert_eq!(s.weights(), &[0.125, 0.25, 0.25, 0.25, 0.125]);
        assert_eq!(s.mass(), 1.0);
    }

    #[test]
    fn laplace_stencil_mass_matches_interval_mass() {
        let k = Kernel::laplace(1.0, 6.0).unwrap();
        let s = Stencil::new(&k, 0.05).unwrap();
        let exact = k.interval_mass(-6.0, 6.0).unwrap();
        assert!((s.mass() - exact).abs() < 1e-12);
    }

    #[test]
    fn truncated_stencil_rejected_unless_allowed() {
        let k = Kernel::laplace(1.0, f64::INFINITY).unwrap();
        assert!(Stencil::new(&k, 0.1).is_err());
        assert!(matches!(
            Stencil::with_radius(&k, 0.1, 20, false),
            Err(Error::StencilTruncated { .. })
        ));
        let s = Stencil::with_radius(&k, 0.1, 20, true).unwrap();
        assert!((s.truncation() - (-2.05f64).exp()).abs() < 1e-12);
        let s = Stencil::with_radius(&k, 0.1, 80, false).unwrap();
        assert!(s.truncation() < 1e-3);
    }

    #[test]
    fn stencil_tail_is_mass_beyond_offset() {
        for k in families() {
            let s = match Stencil::new(&k, 0.05) {
                Ok(s) => s,
                Err(_) => Stencil::with_radius(&k, 0.05, 400, false).unwrap(),
            };
            let r = s.radius_cells() as isize;
            for off in 0..=r {
                let direct: f64 = (off + 1..=r).map(|m| s.weight(m)).sum();
                assert!((s.tail(off as usize) - direct).abs() < 1e-12);
            }
        }
    }
}
