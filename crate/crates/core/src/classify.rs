//! Spreading/vanishing verdicts, the small-`μ` vanishing bound and the sharp
//! expansion threshold `μ*`.
//!
//! The dichotomy is a statement about `t → ∞`, so verdicts use explicit
//! finite-time proxies ([`Rules`]) and `Undetermined` is a legitimate answer.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fbsolver::{Sample, Setup, Simulation, SolverConfig, Trajectory};
use crate::growth::Growth;
use crate::initial::InitialData;
use crate::kernel::Kernel;
use crate::spectral::{default_cell_width, find_ell_star, lambda_p, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Spreading,
    Vanishing,
    Undetermined,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Spreading => "spreading",
            Verdict::Vanishing => "vanishing",
            Verdict::Undetermined => "undetermined",
        })
    }
}

/// Finite-time proxies for the asymptotic verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct Rules {
    /// Vanishing needs `sup u < eps_vanish · v₀`.
    pub eps_vanish: f64,
    /// Vanishing needs both front speeds below this.
    pub v_eps: f64,
    /// Length beyond which a run with a saturated core counts as spreading;
    /// `None` means `max(4ℓ*, 40h₀)`.
    pub l_big: Option<f64>,
    /// Relative band around `v₀` for the core density.
    pub delta_core: f64,
    /// Spreading once `h - g > ℓ* (1 + margin)`.
    pub margin: f64,
    /// Horizon used by threshold searches and sweeps.
    pub t_end: f64,
    /// An undetermined run is continued once to `extend · t_end`.
    pub extend: f64,
}

impl Default for Rules {
    fn default() -> Self {
        Self {
            eps_vanish: 1e-4,
            v_eps: 1e-6,
            l_big: None,
            delta_core: 0.05,
            margin: 0.05,
            t_end: 200.0,
            extend: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evidence {
    pub t_final: f64,
    pub length: f64,
    pub sup_u: f64,
    /// `u(t_final, 0)`.
    pub core: f64,
    pub speed_left: f64,
    pub speed_right: f64,
    /// Earliest recorded time from which the verdict's rule held throughout.
    pub decision_time: Option<f64>,
    pub window_exit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    pub evidence: Evidence,
}

/// The rules evaluated against one run's constants.
#[derive(Debug, Clone, Copy)]
struct Judge {
    ell_star: Option<f64>,
    v0: Option<f64>,
    eps: f64,
    v_eps: f64,
    l_big: f64,
    delta_core: f64,
    margin: f64,
    mu: f64,
}

impl Judge {
    fn new(growth: &Growth, ell_star: Option<f64>, h0: f64, mu: f64, rules: &Rules) -> Self {
        let v0 = growth.derived_constants().ok().map(|c| c.v0);
        let level = v0.unwrap_or_else(|| growth.k0().max(f64::MIN_POSITIVE));
        let l_big = rules
            .l_big
            .unwrap_or_else(|| (4.0 * ell_star.unwrap_or(0.0)).max(40.0 * h0));
        Self {
            ell_star,
            v0,
            eps: rules.eps_vanish * level,
            v_eps: rules.v_eps,
            l_big,
            delta_core: rules.delta_core,
            margin: rules.margin,
            mu,
        }
    }

    fn core_saturated(&self, s: &Sample) -> bool {
        self.v0.is_some_and(|v0| (s.core - v0).abs() <= self.delta_core * v0)
    }

    fn spreading(&self, s: &Sample) -> bool {
        let len = s.h - s.g;
        self.ell_star.is_some_and(|l| len > l * (1.0 + self.margin)) || (len > self.l_big && self.core_saturated(s))
    }

    fn vanishing(&self, s: &Sample) -> bool {
        s.sup_u < self.eps && self.mu * s.flux_left < self.v_eps && self.mu * s.flux_right < self.v_eps
    }

    /// Vanishing that cannot be undone: the support is shorter than `ℓ*`.
    fn settled_vanishing(&self, s: &Sample) -> bool {
        self.vanishing(s) && self.ell_star.is_some_and(|l| s.h - s.g < l)
    }

    fn verdict(&self, s: &Sample, window_exit: bool) -> Verdict {
        if self.spreading(s) || (window_exit && s.h - s.g > self.l_big) {
            Verdict::Spreading
        } else if self.vanishing(s) {
            Verdict::Vanishing
        } else {
            Verdict::Undetermined
        }
    }

    fn classify(&self, samples: &[Sample], window_exit: bool) -> Classification {
        let last = samples.last().expect("at least one sample");
        let verdict = self.verdict(last, window_exit);
        let holds = |s: &Sample| match verdict {
            Verdict::Spreading => self.spreading(s) || window_exit,
            Verdict::Vanishing => self.vanishing(s),
            Verdict::Undetermined => false,
        };
        let decision_time = if verdict == Verdict::Undetermined {
            None
        } else {
            let k = samples.iter().rposition(|s| !holds(s)).map_or(0, |i| i + 1);
            samples.get(k).map(|s| s.t).or(Some(last.t))
        };
        Classification {
            verdict,
            evidence: Evidence {
                t_final: last.t,
                length: last.h - last.g,
                sup_u: last.sup_u,
                core: last.core,
                speed_left: self.mu * last.flux_left,
                speed_right: self.mu * last.flux_right,
                decision_time,
                window_exit,
            },
        }
    }
}

/// Verdict for a finished trajectory. `window_exit` marks runs stopped by the
/// window edge; with a support longer than the large-length threshold those
/// count as spreading.
pub fn classify_run(
    traj: &Trajectory,
    growth: &Growth,
    ell_star: Option<f64>,
    h0: f64,
    rules: &Rules,
    window_exit: bool,
) -> Classification {
    Judge::new(growth, ell_star, h0, traj.mu, rules).classify(&traj.samples, window_exit)
}

/// Simulate and classify, stopping as soon as a verdict is certain. A run
/// still undetermined at `cfg.t_end` is continued once to `rules.extend`
/// times that horizon.
pub fn run_classified(
    setup: &Setup,
    cfg: &SolverConfig,
    ell_star: Option<f64>,
    rules: &Rules,
) -> Result<(Classification, Trajectory)> {
    let judge = Judge::new(&setup.growth, ell_star, setup.h0, cfg.mu, rules);
    let mut sim = Simulation::new(setup, cfg)?;
    let mut stop = |s: &Sample| judge.spreading(s) || judge.settled_vanishing(s);
    let first = sim.config().steps();
    let mut exit = false;
    let mut outcome = sim.run_to(first, &mut stop);
    if let Ok(false) = outcome {
        let s = sim.current_sample();
        if judge.verdict(&s, false) == Verdict::Undetermined && rules.extend > 1.0 {
            let total = (first as f64 * rules.extend).round() as u64;
            outcome = sim.run_to(total, &mut stop);
        }
    }
    match outcome {
        Ok(_) => {}
        Err(Error::WindowExit { .. }) => exit = true,
        Err(e) => return Err(e),
    }
    let traj = sim.finish();
    let c = judge.classify(&traj.samples, exit);
    Ok((c, traj))
}

/// The explicit small-`μ` bound and the quantities it is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct MuLower {
    pub mu_lower: f64,
    pub h1: f64,
    /// `λ_p` on `(-h1, h1)` with potential `f'(0)`.
    pub lambda1: f64,
    pub c1: f64,
}

/// `μ̲ = -λ₁ (h₁ - h₀) / (8 h₁ C₁)` with `C₁ = (1 + 10⁻⁶) max u₀/φ₁` on
/// `[-h₀, h₀]`. `h1` defaults to the midpoint of `h0` and `ℓ*/2`.
pub fn compute_mu_lower(
    h0: f64,
    h1: Option<f64>,
    d: f64,
    kernel: &Kernel,
    growth: &Growth,
    u0: &InitialData,
) -> Result<MuLower> {
    u0.validate(h0)?;
    let fprime0 = growth.derived_constants()?.fprime0;
    let h1 = match h1 {
        Some(h1) => h1,
        None => {
            let ell = find_ell_star(d, fprime0, kernel, 1e-10)?.ell;
            0.5 * (h0 + 0.5 * ell)
        }
    };
    if !(h1.is_finite() && h1 > h0) {
        return Err(Error::arg("h1", format!("need h1 > h0 = {h0}, got {h1}")));
    }
    let n = ((2.0 * h1 / default_cell_width(kernel)).ceil() as usize).max(16);
    let eig = lambda_p(d, fprime0, (-h1, h1), kernel, n, DEFAULT_TOL)?;
    let lambda1 = eig.lambda_p;
    if lambda1 >= 0.0 {
        return Err(Error::InvalidBracket { lambda1 });
    }
    let phi = |x: f64| {
        let c = &eig.centers;
        let k = c.partition_point(|&p| p <= x);
        if k == 0 {
            eig.eigenfunction[0]
        } else if k == c.len() {
            eig.eigenfunction[k - 1]
        } else {
            let s = (x - c[k - 1]) / (c[k] - c[k - 1]);
            eig.eigenfunction[k - 1] + s * (eig.eigenfunction[k] - eig.eigenfunction[k - 1])
        }
    };
    let samples = 4000;
    let ratio = (0..=samples)
        .map(|i| {
            let x = -h0 + 2.0 * h0 * i as f64 / samples as f64;
            u0.eval(x, h0) / phi(x)
        })
        .fold(0.0, f64::max);
    let c1 = (1.0 + 1e-6) * ratio;
    Ok(MuLower {
        mu_lower: -lambda1 * (h1 - h0) / (8.0 * h1 * c1),
        h1,
        lambda1,
        c1,
    })
}

/// `ℓ*` as used by the spreading rule. When `f'(0) >= d` every interval has
/// `λ_p > 0`, so the critical length is taken as 0. `None` for laws that are
/// not of Fisher-KPP type.
pub fn critical_length(d: f64, kernel: &Kernel, growth: &Growth) -> Result<Option<f64>> {
    let Ok(consts) = growth.derived_constants() else {
        return Ok(None);
    };
    match find_ell_star(d, consts.fprime0, kernel, 1e-10) {
        Ok(e) => Ok(Some(e.ell)),
        Err(Error::NoCriticalLength { .. }) => Ok(Some(0.0)),
        Err(e) => Err(e),
    }
}

/// One classification run of a threshold search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub mu: f64,
    pub verdict: Verdict,
    pub evidence: Evidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStatus {
    Converged,
    /// A probe inside the bracket stayed undetermined even after extension;
    /// the bracket is returned at the width reached.
    UndeterminedAtBracket,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuStar {
    /// Largest probed `μ` that vanished.
    pub mu_vanish: f64,
    /// Smallest probed `μ` that spread.
    pub mu_spread: f64,
    pub status: SearchStatus,
    pub ell_star: f64,
    pub mu_lower: MuLower,
    /// Every probe in the order it was run.
    pub probes: Vec<Probe>,
}

impl MuStar {
    pub fn relative_width(&self) -> f64 {
        (self.mu_spread - self.mu_vanish) / self.mu_spread
    }
}

/// True if no probe spreads at a smaller `μ` than a vanishing probe.
pub fn verdicts_monotone(probes: &[Probe]) -> bool {
    let max_spread_below = probes
        .iter()
        .filter(|p| p.verdict == Verdict::Spreading)
        .map(|p| p.mu)
        .fold(f64::INFINITY, f64::min);
    probes
        .iter()
        .filter(|p| p.verdict == Verdict::Vanishing)
        .all(|p| p.mu < max_spread_below)
}

/// Bracket `μ*` by bisection to relative width `tol`. The search starts from
/// `μ̲` (vanishing) and doubles until a run spreads. `base.mu` is ignored and
/// the horizon is `rules.t_end`.
pub fn find_mu_star(setup: &Setup, base: &SolverConfig, rules: &Rules, tol: f64) -> Result<MuStar> {
    if !(tol.is_finite() && tol > 0.0 && tol < 1.0) {
        return Err(Error::arg("tol", format!("must lie in (0, 1), got {tol}")));
    }
    let consts = setup
        .growth
        .derived_constants()
        .map_err(|_| Error::NoThreshold("the growth law is not of Fisher-KPP type".into()))?;
    if consts.fprime0 >= base.d {
        return Err(Error::NoThreshold(format!(
            "f'(0) = {} >= d = {}: spreading happens for every mu",
            consts.fprime0, base.d
        )));
    }
    let ell_star = find_ell_star(base.d, consts.fprime0, &setup.kernel, 1e-10)?.ell;
    if setup.h0 >= 0.5 * ell_star {
        return Err(Error::NoThreshold(format!(
            "h0 = {} >= ell*/2 = {}: spreading happens for every mu",
            setup.h0,
            0.5 * ell_star
        )));
    }
    let lower = compute_mu_lower(setup.h0, None, base.d, &setup.kernel, &setup.growth, &setup.initial)?;
    let mut probes = Vec::new();
    let mut probe = |mu: f64| -> Result<Verdict> {
        let mut cfg = base.clone();
        cfg.mu = mu;
        cfg.t_end = rules.t_end;
        let (c, _) = run_classified(setup, &cfg, Some(ell_star), rules)?;
        probes.push(Probe {
            mu,
            verdict: c.verdict,
            evidence: c.evidence,
        });
        Ok(c.verdict)
    };

    let v = probe(lower.mu_lower)?;
    if v != Verdict::Vanishing {
        return Err(Error::BracketFailure(format!(
            "run at mu_lower = {} was {v}, expected vanishing",
            lower.mu_lower
        )));
    }
    let mut mu_v = lower.mu_lower;
    let mut mu_s = None;
    let mut mu = mu_v;
    for _ in 0..60 {
        mu *= 2.0;
        match probe(mu)? {
            Verdict::Vanishing => mu_v = mu,
            Verdict::Spreading => {
                mu_s = Some(mu);
                break;
            }
            Verdict::Undetermined => {}
        }
    }
    let Some(mut mu_s) = mu_s else {
        return Err(Error::BracketFailure(format!("no spreading run up to mu = {mu}")));
    };
    let mut status = SearchStatus::Converged;
    while mu_s - mu_v > tol * mu_s {
        let mid = 0.5 * (mu_v + mu_s);
        match probe(mid)? {
            Verdict::Vanishing => mu_v = mid,
            Verdict::Spreading => mu_s = mid,
            Verdict::Undetermined => {
                status = SearchStatus::UndeterminedAtBracket;
                break;
            }
        }
    }
    Ok(MuStar {
        mu_vanish: mu_v,
        mu_spread: mu_s,
        status,
        ell_star,
        mu_lower: lower,
        probes,
    })
}

/// Parameter grid of a sweep. Rows are the first parameter, columns `μ`.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxes {
    MuH0 { h0s: Vec<f64>, mus: Vec<f64> },
    DMu { ds: Vec<f64>, mus: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub row: f64,
    pub mu: f64,
    pub outcome: std::result::Result<Classification, String>,
}

impl SweepCell {
    pub fn verdict(&self) -> Option<Verdict> {
        self.outcome.as_ref().ok().map(|c| c.verdict)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTable {
    /// `"h0"` or `"d"`.
    pub row_name: &'static str,
    pub rows: Vec<f64>,
    pub mus: Vec<f64>,
    /// Row-major, `rows.len() * mus.len()` cells.
    pub cells: Vec<SweepCell>,
}

impl PhaseTable {
    pub fn cell(&self, row: usize, col: usize) -> &SweepCell {
        &self.cells[row * self.mus.len() + col]
    }

    /// No row has a vanishing cell to the right of a spreading one.
    pub fn rows_monotone(&self) -> bool {
        (0..self.rows.len()).all(|r| {
            let mut spread_seen = false;
            (0..self.mus.len()).all(|c| match self.cell(r, c).verdict() {
                Some(Verdict::Spreading) => {
                    spread_seen = true;
                    true
                }
                Some(Verdict::Vanishing) => !spread_seen,
                _ => true,
            })
        })
    }
}

/// Classify every grid cell. Cells run in parallel; the table is in grid order
/// and per-cell failures are stored in the cell.
pub fn sweep(setup: &Setup, base: &SolverConfig, axes: &SweepAxes, rules: &Rules) -> PhaseTable {
    let (row_name, rows, mus) = match axes {
        SweepAxes::MuH0 { h0s, mus } => ("h0", h0s.clone(), mus.clone()),
        SweepAxes::DMu { ds, mus } => ("d", ds.clone(), mus.clone()),
    };
    let ell_for = |d: f64| critical_length(d, &setup.kernel, &setup.growth).ok().flatten();
    let base_ell = ell_for(base.d);
    let row_ell: Vec<Option<f64>> = rows
        .iter()
        .map(|&r| if row_name == "d" { ell_for(r) } else { base_ell })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..rows.len())
        .flat_map(|r| (0..mus.len()).map(move |c| (r, c)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(r, c)| {
            let mut s = setup.clone();
            let mut cfg = base.clone();
            cfg.mu = mus[c];
            cfg.t_end = rules.t_end;
            if row_name == "h0" {
                s.h0 = rows[r];
            } else {
                cfg.d = rows[r];
            }
            let outcome = run_classified(&s, &cfg, row_ell[r], rules)
                .map(|(cl, _)| cl)
                .map_err(|e| e.to_string());
            SweepCell {
                row: rows[r],
                mu: mus[c],
                outcome,
            }
        })
        .collect();
    PhaseTable {
        row_name,
        rows,
        mus,
        cells,
    }
}
