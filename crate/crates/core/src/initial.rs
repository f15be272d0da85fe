//! Admissible initial densities: continuous, positive on `(-h0, h0)`, zero at `±h0`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// `A cos(πx / (2h0))`.
    CosineBump { amplitude: f64 },
    /// `A (1 - (x/h0)²)`.
    Parabola { amplitude: f64 },
    /// Piecewise-linear through `(xs, values)`.
    Tabulated { xs: Vec<f64>, values: Vec<f64> },
}

impl InitialData {
    /// Value at `x` for half-width `h0`; zero outside `(-h0, h0)`.
    pub fn eval(&self, x: f64, h0: f64) -> f64 {
        if !(x.abs() < h0) {
            return 0.0;
        }
        match self {
            InitialData::CosineBump { amplitude } => amplitude * (FRAC_PI_2 * x / h0).cos(),
            InitialData::Parabola { amplitude } => {
                let s = x / h0;
                amplitude * (1.0 - s * s)
            }
            InitialData::Tabulated { xs, values } => interpolate(xs, values, x),
        }
    }

    /// Supremum of the profile.
    pub fn sup(&self) -> f64 {
        match self {
            InitialData::CosineBump { amplitude } | InitialData::Parabola { amplitude } => *amplitude,
            InitialData::Tabulated { values, .. } => values.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Check the admissibility conditions for half-width `h0`.
    pub fn validate(&self, h0: f64) -> Result<()> {
        if !(h0.is_finite() && h0 > 0.0) {
            return Err(Error::arg("h0", format!("must be finite and > 0, got {h0}")));
        }
        match self {
            InitialData::CosineBump { amplitude } | InitialData::Parabola { amplitude } => {
                if !(amplitude.is_finite() && *amplitude > 0.0) {
                    return Err(Error::arg("amplitude", format!("must be finite and > 0, got {amplitude}")));
                }
            }
            InitialData::Tabulated { xs, values } => {
                if xs.len() != values.len() || xs.len() < 3 {
                    return Err(Error::arg("initial", "need at least 3 (x, u) pairs of equal length"));
                }
                if xs.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::arg("initial", "x values must be strictly increasing"));
                }
                let tol = 1e-9 * h0;
                if (xs[0] + h0).abs() > tol || (xs[xs.len() - 1] - h0).abs() > tol {
                    return Err(Error::arg(
                        "initial",
                        format!("table must span [-h0, h0] = [{}, {h0}]", -h0),
                    ));
                }
                if values[0].abs() > 1e-12 || values[values.len() - 1].abs() > 1e-12 {
                    return Err(Error::arg("initial", "u0 must vanish at -h0 and h0"));
                }
                let inner = &values[1..values.len() - 1];
                if inner.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(Error::arg("initial", "u0 must be positive inside (-h0, h0)"));
                }
            }
        }
        Ok(())
    }
}

fn interpolate(xs: &[f64], values: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&p| p <= x);
    if k == 0 || k == xs.len() {
        return 0.0;
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    let s = (x - x0) / (x1 - x0);
    values[k - 1] + s * (values[k] - values[k - 1])
}
