//! Brute-force reference computations shared by the integration tests. None of
//! these call into the library's quadrature or eigen-solvers.
#![allow(dead_code)]

use frontier_kpp::kernel::KernelFamily;
use frontier_kpp::Kernel;

/// Composite Simpson on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Points where the kernel density is not smooth.
pub fn kinks(k: &Kernel) -> Vec<f64> {
    let r = k.support_radius();
    let mut v = vec![0.0];
    if r.is_finite() {
        v.push(r);
        v.push(-r);
    }
    v
}

/// Simpson between consecutive break points so every panel sees a smooth
/// integrand. Pieces are pulled in by a relative 1e-13 so a jump is never
/// sampled on the wrong side.
pub fn simpson_split(f: impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], n: usize) -> f64 {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|p| *p > a && *p < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.windows(2)
        .map(|w| {
            let e = 1e-13 * (w[1] - w[0]);
            simpson(&f, w[0] + e, w[1] - e, n)
        })
        .sum()
}

/// `∫_a^b J` from point values of the density.
pub fn kernel_mass(k: &Kernel, a: f64, b: f64) -> f64 {
    let r = k.support_radius();
    let (a, b) = if r.is_finite() { (a.max(-r), b.min(r)) } else { (a.max(-60.0), b.min(60.0)) };
    if b <= a {
        return 0.0;
    }
    simpson_split(|x| k.eval(x), a, b, &kinks(k), 2000)
}

/// Cell weights `∫_{(k-1/2)dx}^{(k+1/2)dx} J` for `|k| <= r`.
pub fn cell_weights(k: &Kernel, dx: f64, r: usize) -> Vec<f64> {
    (0..=r)
        .map(|i| kernel_mass(k, (i as f64 - 0.5) * dx, (i as f64 + 0.5) * dx))
        .collect()
}

/// Dense `d (W - I) + a0 I` on `n` cells of `interval`.
pub fn dense_operator(d: f64, a0: f64, interval: (f64, f64), k: &Kernel, n: usize) -> Vec<Vec<f64>> {
    let dx = (interval.1 - interval.0) / n as f64;
    let w = cell_weights(k, dx, n);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let m = d * w[i.abs_diff(j)];
                    if i == j {
                        m + a0 - d
                    } else {
                        m
                    }
                })
                .collect()
        })
        .collect()
}

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

pub fn largest_eigenvalue(a: Vec<Vec<f64>>) -> f64 {
    jacobi_eigenvalues(a).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// `J_h = ∫_g^h u(x) ∫_h^∞ J(x - y) dy dx` as a double Simpson integral.
pub fn right_flux(k: &Kernel, u: impl Fn(f64) -> f64, g: f64, h: f64) -> f64 {
    let r = k.support_radius();
    let reach = if r.is_finite() { r } else { 60.0 };
    let inner = |x: f64| {
        // J(x - y) for y in (h, x + reach); kinks at y = x and y = x ± r.
        let breaks: Vec<f64> = kinks(k).iter().map(|p| x - p).collect();
        simpson_split(|y| k.eval(x - y), h, x + reach, &breaks, 400)
    };
    let mut outer_breaks = vec![h - reach];
    if r.is_finite() {
        outer_breaks.push(h - r);
    }
    simpson_split(|x| u(x) * inner(x), g, h, &outer_breaks, 400)
}

pub fn kernel_name(k: &Kernel) -> &'static str {
    match k.family() {
        KernelFamily::TopHat { .. } => "top_hat",
        KernelFamily::Triangle { .. } => "triangle",
        KernelFamily::Laplace { .. } => "laplace",
        KernelFamily::TruncatedGaussian { .. } => "gaussian",
        KernelFamily::Tabulated(_) => "tabulated",
    }
}
