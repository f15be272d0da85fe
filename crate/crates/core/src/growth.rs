//! Growth laws `f(t, x, u)`.
//!
//! Every law satisfies `f(t, x, 0) = 0`, is Lipschitz on bounded sets and is
//! negative above a level `K₀`. Laws flagged as Fisher-KPP are autonomous,
//! have `f(u)/u` strictly decreasing and `f'(0) > 0`; only those expose the
//! derived constants used by the long-time analysis.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;

pub type AutonomousFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum GrowthFamily {
    /// `f ≡ 0`: pure dispersal, used for mass-balance checks.
    Zero,
    /// `f(u) = a u - b u²`.
    Logistic { a: f64, b: f64 },
    /// `f(u)` with a declared Lipschitz bound on `[0, max(K₀, data)]` and level `K₀`.
    Autonomous {
        f: AutonomousFn,
        lipschitz: f64,
        k0: f64,
        label: String,
    },
    /// `f(t, x, u)` with declared bounds.
    SpaceTime {
        f: SpaceTimeFn,
        lipschitz: f64,
        k0: f64,
        label: String,
    },
}

impl fmt::Debug for GrowthFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthFamily::Zero => f.write_str("Zero"),
            GrowthFamily::Logistic { a, b } => f.debug_struct("Logistic").field("a", a).field("b", b).finish(),
            GrowthFamily::Autonomous { label, lipschitz, k0, .. } => f
                .debug_struct("Autonomous")
                .field("f", label)
                .field("lipschitz", lipschitz)
                .field("k0", k0)
                .finish(),
            GrowthFamily::SpaceTime { label, lipschitz, k0, .. } => f
                .debug_struct("SpaceTime")
                .field("f", label)
                .field("lipschitz", lipschitz)
                .field("k0", k0)
                .finish(),
        }
    }
}

/// Constants of a Fisher-KPP law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub fprime0: f64,
    pub k0: f64,
    pub v0: f64,
}

#[derive(Debug, Clone)]
pub struct Growth {
    family: GrowthFamily,
    kpp: bool,
}

impl Growth {
    pub fn logistic(a: f64, b: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidGrowth(format!("logistic `{name}` must be finite and > 0, got {v}")));
            }
        }
        Ok(Self {
            family: GrowthFamily::Logistic { a, b },
            kpp: true,
        })
    }

    /// `f ≡ 0`. Not a Fisher-KPP law; `K₀` is reported as 0.
    pub fn zero() -> Self {
        Self {
            family: GrowthFamily::Zero,
            kpp: false,
        }
    }

    /// Autonomous law given as a closure. `kpp` declares the Fisher-KPP
    /// structure, which is spot-checked on a sample grid.
    pub fn autonomous(f: AutonomousFn, lipschitz: f64, k0: f64, kpp: bool, label: impl Into<String>) -> Result<Self> {
        check_declared(lipschitz, k0)?;
        let g = Self {
            family: GrowthFamily::Autonomous {
                f,
                lipschitz,
                k0,
                label: label.into(),
            },
            kpp,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn space_time(f: SpaceTimeFn, lipschitz: f64, k0: f64, label: impl Into<String>) -> Result<Self> {
        check_declared(lipschitz, k0)?;
        let g = Self {
            family: GrowthFamily::SpaceTime {
                f,
                lipschitz,
                k0,
                label: label.into(),
            },
            kpp: false,
        };
        g.validate()?;
        Ok(g)
    }

    /// Parse an expression in `t`, `x`, `u`. Expressions that mention `t` or
    /// `x` become space-time laws and cannot be declared Fisher-KPP.
    pub fn from_expression(src: &str, lipschitz: f64, k0: f64, kpp: bool) -> Result<Self> {
        let expr = Arc::new(Expr::parse(src)?);
        if expr.is_heterogeneous() {
            if kpp {
                return Err(Error::InvalidGrowth(
                    "a law depending on t or x cannot satisfy the autonomous Fisher-KPP conditions".into(),
                ));
            }
            let e = expr.clone();
            Self::space_time(Arc::new(move |t, x, u| e.eval(t, x, u)), lipschitz, k0, src)
        } else {
            let e = expr.clone();
            Self::autonomous(Arc::new(move |u| e.eval(0.0, 0.0, u)), lipschitz, k0, kpp, src)
        }
    }

    pub fn family(&self) -> &GrowthFamily {
        &self.family
    }

    pub fn is_kpp(&self) -> bool {
        self.kpp
    }

    /// Level `K₀` above which `f < 0`.
    pub fn k0(&self) -> f64 {
        match &self.family {
            GrowthFamily::Zero => 0.0,
            GrowthFamily::Logistic { a, b } => a / b,
            GrowthFamily::Autonomous { k0, .. } | GrowthFamily::SpaceTime { k0, .. } => *k0,
        }
    }

    /// Lipschitz constant of `u ↦ f(t, x, u)` on `[0, level]`.
    pub fn lipschitz(&self, level: f64) -> f64 {
        match &self.family {
            GrowthFamily::Zero => 0.0,
            GrowthFamily::Logistic { a, b } => a.max((2.0 * b * level - a).abs()),
            GrowthFamily::Autonomous { lipschitz, .. } | GrowthFamily::SpaceTime { lipschitz, .. } => *lipschitz,
        }
    }

    /// `f(t, x, u)`; densities must be nonnegative.
    pub fn eval(&self, t: f64, x: f64, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::arg("u", format!("densities are nonnegative, got {u}")));
        }
        Ok(self.rate(t, x, u))
    }

    /// Unchecked evaluation used on the hot path.
    #[inline]
    pub(crate) fn rate(&self, t: f64, x: f64, u: f64) -> f64 {
        match &self.family {
            GrowthFamily::Zero => 0.0,
            GrowthFamily::Logistic { a, b } => u * (a - b * u),
            GrowthFamily::Autonomous { f, .. } => f(u),
            GrowthFamily::SpaceTime { f, .. } => f(t, x, u),
        }
    }

    fn validate(&self) -> Result<()> {
        let k0 = self.k0();
        let samples_t = [0.0, 1.0, 17.5];
        let samples_x = [-5.0, 0.0, 3.25];
        for &t in &samples_t {
            for &x in &samples_x {
                let f0 = self.rate(t, x, 0.0);
                if !(f0.abs() <= 1e-12) {
                    return Err(Error::InvalidGrowth(format!("f(t={t}, x={x}, 0) = {f0} is not zero")));
                }
                let above = self.rate(t, x, k0 * (1.0 + 1e-6));
                if !(above < 0.0) {
                    return Err(Error::InvalidGrowth(format!(
                        "f(t={t}, x={x}, K0(1+1e-6)) = {above} is not negative; K0 = {k0} too small"
                    )));
                }
            }
        }
        if self.kpp {
            let n = 400;
            let mut prev = f64::INFINITY;
            for i in 1..=n {
                let u = k0 * i as f64 / n as f64;
                let q = self.rate(0.0, 0.0, u) / u;
                if !(q < prev) {
                    return Err(Error::InvalidGrowth(format!("f(u)/u is not strictly decreasing near u = {u}")));
                }
                prev = q;
            }
            let fp = self.fprime0_numeric();
            if !(fp > 0.0) {
                return Err(Error::InvalidGrowth(format!("f'(0) = {fp} must be positive")));
            }
        }
        Ok(())
    }

    /// Richardson-extrapolated difference quotient at 0; one-sided when the
    /// law is not finite for negative arguments.
    fn fprime0_numeric(&self) -> f64 {
        let f = |u: f64| self.rate(0.0, 0.0, u);
        let h = 1e-6;
        if f(-h).is_finite() && f(-h / 2.0).is_finite() {
            let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
            (4.0 * d(h / 2.0) - d(h)) / 3.0
        } else {
            let d = |h: f64| (f(h) - f(0.0)) / h;
            2.0 * d(h / 2.0) - d(h)
        }
    }

    /// `f'(0)`, `K₀` and the positive zero `v₀`.
    pub fn derived_constants(&self) -> Result<DerivedConstants> {
        if !self.kpp {
            return Err(Error::InvalidGrowth(
                "derived constants need an autonomous Fisher-KPP law".into(),
            ));
        }
        match &self.family {
            GrowthFamily::Logistic { a, b } => Ok(DerivedConstants {
                fprime0: *a,
                k0: a / b,
                v0: a / b,
            }),
            _ => {
                let k0 = self.k0();
                let v0 = self.positive_zero(k0)?;
                Ok(DerivedConstants {
                    fprime0: self.fprime0_numeric(),
                    k0,
                    v0,
                })
            }
        }
    }

    fn positive_zero(&self, k0: f64) -> Result<f64> {
        let f = |u: f64| self.rate(0.0, 0.0, u);
        let n = 1000;
        let mut lo = None;
        let mut prev = k0 / n as f64;
        if f(prev) <= 0.0 {
            return Err(Error::InvalidGrowth("f is not positive near 0".into()));
        }
        for i in 2..=n {
            let u = k0 * i as f64 / n as f64;
            if f(u) <= 0.0 {
                lo = Some((prev, u));
                break;
            }
            prev = u;
        }
        let (mut a, mut b) = lo.ok_or_else(|| {
            Error::InvalidGrowth(format!("no sign change of f in (0, K0 = {k0}]"))
        })?;
        while b - a > 1e-12 {
            let m = 0.5 * (a + b);
            if f(m) > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(0.5 * (a + b))
    }
}

fn check_declared(lipschitz: f64, k0: f64) -> Result<()> {
    if !(lipschitz.is_finite() && lipschitz > 0.0) {
        return Err(Error::InvalidGrowth(format!("Lipschitz bound must be finite and > 0, got {lipschitz}")));
    }
    if !(k0.is_finite() && k0 > 0.0) {
        return Err(Error::InvalidGrowth(format!("K0 must be finite and > 0, got {k0}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_values() {
        let g = Growth::logistic(1.0, 1.0).unwrap();
        assert_eq!(g.eval(0.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(g.eval(0.0, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(g.eval(0.0, 0.0, 2.0).unwrap(), -2.0);
        assert!(g.eval(0.0, 0.0, -0.1).is_err());
    }

    #[test]
    fn logistic_constants() {
        let c = Growth::logistic(1.0, 1.0).unwrap().derived_constants().unwrap();
        assert_eq!((c.fprime0, c.k0, c.v0), (1.0, 1.0, 1.0));
        let c = Growth::logistic(2.0, 1.0).unwrap().derived_constants().unwrap();
        assert_eq!((c.fprime0, c.k0, c.v0), (2.0, 2.0, 2.0));
    }

    #[test]
    fn closure_constants_by_bisection() {
        let g = Growth::autonomous(Arc::new(|u| u * (1.0 - u)), 3.0, 1.5, true, "u(1-u)").unwrap();
        let c = g.derived_constants().unwrap();
        assert!((c.v0 - 1.0).abs() < 1e-10);
        assert!((c.fprime0 - 1.0).abs() < 1e-9);
        assert!(g.rate(0.0, 0.0, c.v0).abs() < 1e-10);
    }

    #[test]
    fn one_sided_derivative_when_negative_side_undefined() {
        let g = Growth::autonomous(
            Arc::new(|u: f64| if u < 0.0 { f64::NAN } else { 2.0 * u - u.powf(1.5) }),
            10.0,
            5.0,
            true,
            "2u - u^1.5",
        )
        .unwrap();
        let c = g.derived_constants().unwrap();
        assert!((c.fprime0 - 2.0).abs() < 1e-3, "{}", c.fprime0);
        assert!((c.v0 - 4.0).abs() < 1e-10);
    }

    #[test]
    fn expression_laws() {
        let g = Growth::from_expression("u - u^2", 3.0, 1.0 + 1e-3, true).unwrap();
        assert!((g.derived_constants().unwrap().v0 - 1.0).abs() < 1e-10);
        let h = Growth::from_expression("u*(1 + 0.5*sin(x)) - u^2", 5.0, 2.0, false).unwrap();
        assert!(matches!(h.family(), GrowthFamily::SpaceTime { .. }));
        assert!(h.derived_constants().is_err());
        assert!(Growth::from_expression("u*(1 + 0.5*sin(x)) - u^2", 5.0, 2.0, true).is_err());
    }

    #[test]
    fn invariant_violations_rejected() {
        // f(0) != 0
        assert!(Growth::from_expression("1 - u", 1.0, 2.0, false).is_err());
        // K0 too small
        assert!(Growth::from_expression("u - u^2", 3.0, 0.5, false).is_err());
        // bistable: f(u)/u not decreasing
        assert!(Growth::from_expression("u*(u - 0.2)*(1 - u)", 3.0, 1.01, true).is_err());
        assert!(Growth::logistic(0.0, 1.0).is_err());
    }

    #[test]
    fn logistic_lipschitz_on_interval() {
        let g = Growth::logistic(1.0, 1.0).unwrap();
        assert_eq!(g.lipschitz(1.0), 1.0);
        assert_eq!(g.lipschitz(3.0), 5.0);
    }
}
