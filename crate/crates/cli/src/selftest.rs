//! Cheap consistency checks runnable from the command line.

use frontier_kpp::fbsolver::{integrate, Setup, SolverConfig};
use frontier_kpp::spectral::{find_ell_star, lambda_p};
use frontier_kpp::{build_grid, Error, Growth, InitialData, Kernel, Stencil};

use crate::CliError;

type Check = (&'static str, fn() -> Result<bool, Error>);

fn checks() -> Vec<Check> {
    vec![
        ("grid window [-10, 10] has 400 cells", || {
            Ok(build_grid(1.0, 9.0, 0.05)?.len() == 400 && build_grid(1.0, 9.0, 2.0).is_err())
        }),
        ("stencil mass is one", || {
            let s = Stencil::new(&Kernel::top_hat(1.0)?, 0.02)?;
            Ok((s.mass() - 1.0).abs() < 1e-12)
        }),
        ("lambda_p on a short interval is near f'(0) - d", || {
            let r = lambda_p(1.0, 1.0, (-0.005, 0.005), &Kernel::top_hat(1.0)?, 16, 1e-11)?;
            Ok(r.lambda_p.abs() <= 0.005 + 1e-12)
        }),
        ("critical length for top hat is 2(d - a0)/d", || {
            let e = find_ell_star(1.0, 0.5, &Kernel::top_hat(1.0)?, 1e-10)?;
            Ok((e.ell - 1.0).abs() < 1e-8)
        }),
        ("no critical length when f'(0) >= d", || {
            Ok(matches!(
                find_ell_star(1.0, 1.2, &Kernel::top_hat(1.0)?, 1e-10),
                Err(Error::NoCriticalLength { .. })
            ))
        }),
        ("mass plus scaled length is conserved without growth", || {
            let setup = Setup::new(
                Kernel::top_hat(1.0)?,
                Growth::zero(),
                1.0,
                InitialData::CosineBump { amplitude: 1.0 },
            )
            .with_margin(3.0);
            let cfg = SolverConfig::new(1.0, 1.0, 1e-3, 1.0);
            let tr = integrate(&setup, &cfg)?;
            let q = |s: &frontier_kpp::fbsolver::Sample| s.mass + (s.h - s.g);
            Ok((q(tr.last()) - q(&tr.samples[0])).abs() < 1e-10)
        }),
        ("fronts move monotonically", || {
            let setup = Setup::new(
                Kernel::top_hat(1.0)?,
                Growth::logistic(1.0, 1.0)?,
                1.0,
                InitialData::CosineBump { amplitude: 1.0 },
            )
            .with_margin(3.0);
            let tr = integrate(&setup, &SolverConfig::new(1.0, 1.0, 1e-3, 1.0))?;
            Ok(tr.samples.windows(2).all(|w| w[1].h >= w[0].h && w[1].g <= w[0].g))
        }),
    ]
}

pub fn run() -> Result<(), CliError> {
    let mut failed = 0;
    for (name, check) in checks() {
        match check() {
            Ok(true) => println!("ok    {name}"),
            Ok(false) => {
                failed += 1;
                println!("FAIL  {name}");
            }
            Err(e) => {
                failed += 1;
                println!("FAIL  {name}: {e}");
            }
        }
    }
    if failed > 0 {
        Err(CliError::SelfTest(failed))
    } else {
        Ok(())
    }
}
