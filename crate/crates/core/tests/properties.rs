use frontier_kpp::expr::Expr;
use frontier_kpp::fbsolver::{integrate, Sample, Setup, SolverConfig, Trajectory};
use frontier_kpp::spectral::{lambda_p, DEFAULT_TOL};
use frontier_kpp::{Growth, InitialData, Kernel, Stencil};
use proptest::prelude::*;

fn kernel_strategy() -> impl Strategy<Value = Kernel> {
    prop_oneof![
        (0.3..2.0f64).prop_map(|w| Kernel::top_hat(w).unwrap()),
        (0.3..2.0f64).prop_map(|w| Kernel::triangle(w).unwrap()),
        (1.0..4.0f64, 1.0..3.0f64).prop_map(|(r, rad)| Kernel::laplace(r, rad).unwrap()),
        (0.3..1.0f64, 2.0..3.5f64).prop_map(|(s, k)| Kernel::truncated_gaussian(s, s * k).unwrap()),
    ]
}

#[derive(Debug, Clone)]
struct Run {
    a: f64,
    b: f64,
    d: f64,
    mu: f64,
    h0: f64,
    amp: f64,
    parabola: bool,
}

fn run_strategy() -> impl Strategy<Value = Run> {
    (
        0.2..2.0f64,
        0.5..2.0f64,
        0.5..2.0f64,
        0.1..3.0f64,
        0.3..1.2f64,
        0.05..2.0f64,
        any::<bool>(),
    )
        .prop_map(|(a, b, d, mu, h0, amp, parabola)| Run {
            a,
            b,
            d,
            mu,
            h0,
            amp,
            parabola,
        })
}

impl Run {
    fn setup(&self) -> Setup {
        let initial = if self.parabola {
            InitialData::Parabola { amplitude: self.amp }
        } else {
            InitialData::CosineBump { amplitude: self.amp }
        };
        Setup::new(
            Kernel::top_hat(1.0).unwrap(),
            Growth::logistic(self.a, self.b).unwrap(),
            self.h0,
            initial,
        )
        .with_dx(0.05)
        .with_margin(6.0)
    }

    fn run(&self, mu: f64) -> Trajectory {
        let mut cfg = SolverConfig::new(self.d, mu, 2e-3, 1.0);
        cfg.record_every = 25;
        cfg.snapshot_every = 100;
        integrate(&self.setup(), &cfg).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn stencil_is_symmetric_with_unit_mass(k in kernel_strategy(), dx in 0.01..0.2f64) {
        let st = Stencil::new(&k, dx).unwrap();
        let r = st.radius_cells() as isize;
        for i in 0..=r {
            prop_assert_eq!(st.weight(i), st.weight(-i));
            prop_assert!(st.weight(i) >= 0.0);
        }
        prop_assert!((st.mass() - 1.0).abs() < 1e-12);
        for i in 0..r as usize {
            prop_assert!(st.tail(i + 1) <= st.tail(i));
        }
    }

    #[test]
    fn a_priori_bounds_and_monotone_fronts(p in run_strategy()) {
        let setup = p.setup();
        let m0 = setup.m0();
        let tr = p.run(p.mu);
        for s in &tr.snapshots {
            prop_assert!(s.u.iter().all(|&v| v >= 0.0 && v <= m0 + 1e-8));
            let bound = 2.0 * p.h0 * (p.mu * m0 * s.t).exp() + 1e-6;
            prop_assert!(s.h - s.g <= bound);
        }
        for w in tr.samples.windows(2) {
            prop_assert!(w[1].h > w[0].h, "h stalled at t={}", w[1].t);
            prop_assert!(w[1].g < w[0].g, "g stalled at t={}", w[1].t);
        }
    }

    #[test]
    fn symmetric_data_gives_symmetric_fronts(p in run_strategy()) {
        let tr = p.run(p.mu);
        for s in &tr.samples {
            prop_assert!((s.h + s.g).abs() < 1e-12);
            prop_assert!((s.flux_left - s.flux_right).abs() < 1e-12);
        }
    }

    #[test]
    fn fronts_ordered_in_mu(p in run_strategy(), factor in 1.0..3.0f64) {
        let lo = p.run(p.mu);
        let hi = p.run(p.mu * factor);
        for (a, b) in lo.samples.iter().zip(&hi.samples) {
            prop_assert_eq!(a.t, b.t);
            prop_assert!(a.h <= b.h + 1e-8);
            prop_assert!(a.g >= b.g - 1e-8);
        }
    }

    #[test]
    fn conserved_without_growth(d in 0.3..2.0f64, mu in 0.1..3.0f64, h0 in 0.3..1.5f64, k in kernel_strategy()) {
        let setup = Setup::new(k, Growth::zero(), h0, InitialData::CosineBump { amplitude: 1.0 })
            .with_dx(0.05)
            .with_margin(8.0);
        let tr = integrate(&setup, &SolverConfig::new(d, mu, 2e-3, 0.5)).unwrap();
        let q = |s: &Sample| s.mass + d / mu * (s.h - s.g);
        let q0 = q(&tr.samples[0]);
        for s in &tr.samples {
            prop_assert!((q(s) - q0).abs() <= 1e-11 * q0);
        }
    }

    #[test]
    fn principal_eigenvalue_bounds_and_monotonicity(
        k in kernel_strategy(),
        a0 in 0.0..2.0f64,
        d in 0.3..2.0f64,
        ell in 0.1..5.0f64,
        grow in 1.1..3.0f64,
    ) {
        let dx = 0.05;
        let at = |l: f64| {
            let n = ((l / dx).round() as usize).max(4);
            lambda_p(d, a0, (-0.5 * l, 0.5 * l), &k, n, DEFAULT_TOL).unwrap()
        };
        let short = at(ell);
        let long = at(ell * grow);
        prop_assert!(short.lambda_p > a0 - d);
        prop_assert!(long.lambda_p <= a0 + 1e-12);
        prop_assert!(long.lambda_p > short.lambda_p);
        prop_assert!(short.eigenfunction.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn expressions_match_closures(c1 in 0.1..3.0f64, c2 in 0.1..3.0f64, u in 0.0..5.0f64) {
        let e = Expr::parse(&format!("{c1} * u - {c2} * u^2")).unwrap();
        let want = c1 * u - c2 * u * u;
        prop_assert!((e.eval(0.0, 0.0, u) - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }
}
