//! Command-line driver: configuration loading, subcommands and output files.

pub mod config;
pub mod output;
mod selftest;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use frontier_kpp::classify::{
    classify_run, critical_length, find_mu_star, sweep, SearchStatus, SweepAxes, Verdict,
};
use frontier_kpp::fbsolver::Simulation;
use frontier_kpp::fixed_domain::{cells_for, steady_state};
use frontier_kpp::spectral::{default_cell_width, find_ell_star, lambda_p, DEFAULT_TOL};
use serde_json::{json, Value};

use crate::config::{Issue, KernelSpec, RunConfig};
use crate::output::{write_atomic, Stamp};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration:\n{}", .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<Issue>),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] frontier_kpp::Error),
    #[error("self-test failed: {0} check(s)")]
    SelfTest(usize),
}

impl CliError {
    /// 1 for bad input, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            CliError::SelfTest(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "frontier-kpp", version, about = "Nonlocal Fisher-KPP free-boundary simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// JSON run configuration. Keys can be overridden with `--section.key value`
    /// (or `--d`, `--mu`, `--h0`).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Integrate one run and write its trajectory, snapshots and plots.
    Simulate(ConfigArg),
    /// Principal eigenvalue on (-ell/2, ell/2) with constant potential a0.
    Lambda {
        #[arg(long)]
        a0: f64,
        #[arg(long)]
        d: f64,
        #[arg(long)]
        ell: f64,
        /// tophat:W, triangle:W, laplace:RATE[:RADIUS] or gaussian:SIGMA:RADIUS.
        #[arg(long)]
        kernel: String,
        /// Number of cells; default from the kernel length scale.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Critical length where the principal eigenvalue crosses zero.
    EllStar {
        #[arg(long)]
        d: f64,
        /// f'(0) of the growth law.
        #[arg(long)]
        fprime0: f64,
        #[arg(long)]
        kernel: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Bracket the expansion threshold mu* by bisection.
    MuStar {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Target relative bracket width.
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
    },
    /// Steady state on (-L, L) for the configured kernel and growth law.
    Steady {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        half_length: f64,
        /// Cells; default uses the configured grid spacing.
        #[arg(long)]
        cells: Option<usize>,
        #[arg(long, default_value_t = 2000.0)]
        t_max: f64,
    },
    /// Classify a grid of (h0, mu) or (d, mu) values.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Comma-separated mu values.
        #[arg(long, value_delimiter = ',', required = true)]
        mus: Vec<f64>,
        #[arg(long, value_delimiter = ',', conflicts_with = "ds")]
        h0s: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        ds: Vec<f64>,
    },
    /// Run the built-in consistency checks.
    Selftest,
}

const CONFIG_COMMANDS: &[&str] = &["simulate", "mu-star", "steady", "sweep"];

/// Run the CLI on `argv` (including the program name) and return the exit code.
pub fn run(argv: Vec<String>) -> i32 {
    match dispatch(argv) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprint!("{msg}");
            if !msg.ends_with('\n') {
                eprintln!();
            }
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(argv: Vec<String>) -> Result<(), CliError> {
    let (args, overrides) = match argv.get(1) {
        Some(sub) if CONFIG_COMMANDS.contains(&sub.as_str()) => config::split_overrides(&argv),
        _ => (argv, Vec::new()),
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            return Err(CliError::Usage(e.to_string()));
        }
    };
    let load = |c: &ConfigArg| -> Result<RunConfig, CliError> {
        config::load(&c.config, &overrides, std::env::var(config::OUT_ENV).ok()).map_err(CliError::Config)
    };
    match cli.cmd {
        Cmd::Simulate(c) => simulate(&load(&c)?),
        Cmd::Lambda {
            a0,
            d,
            ell,
            kernel,
            n,
            tol,
        } => {
            let kernel = KernelSpec::parse_short(&kernel).map_err(|e| CliError::Usage(format!("error: {e}")))?.build()?;
            if !(ell.is_finite() && ell > 0.0) {
                return Err(CliError::Usage(format!("error: --ell must be finite and > 0, got {ell}")));
            }
            let n = n.unwrap_or_else(|| ((ell / default_cell_width(&kernel)).ceil() as usize).max(16));
            let r = lambda_p(d, a0, (-0.5 * ell, 0.5 * ell), &kernel, n, tol)?;
            println!("{}", r.lambda_p);
            Ok(())
        }
        Cmd::EllStar { d, fprime0, kernel, tol } => {
            let kernel = KernelSpec::parse_short(&kernel).map_err(|e| CliError::Usage(format!("error: {e}")))?.build()?;
            let e = find_ell_star(d, fprime0, &kernel, tol)?;
            println!("{}", e.ell);
            Ok(())
        }
        Cmd::MuStar { cfg, tol } => mu_star(&load(&cfg)?, tol),
        Cmd::Steady {
            cfg,
            half_length,
            cells,
            t_max,
        } => steady(&load(&cfg)?, half_length, cells, t_max),
        Cmd::Sweep { cfg, mus, h0s, ds } => {
            let axes = if !ds.is_empty() {
                SweepAxes::DMu { ds, mus }
            } else if !h0s.is_empty() {
                SweepAxes::MuH0 { h0s, mus }
            } else {
                return Err(CliError::Usage("error: sweep needs --h0s or --ds".into()));
            };
            run_sweep(&load(&cfg)?, &axes)
        }
        Cmd::Selftest => selftest::run(),
    }
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    PathBuf::from(&cfg.output.dir)
}

fn stamp(cfg: &RunConfig) -> Stamp {
    Stamp {
        config_sha256: cfg.hash(),
    }
}

fn metadata(cfg: &RunConfig, command: &str, diagnostics: Value, files: &[String]) -> Value {
    json!({
        "schema_version": config::SCHEMA_VERSION,
        "config_sha256": cfg.hash(),
        "command": command,
        "versions": { "frontier-kpp": env!("CARGO_PKG_VERSION") },
        "config": cfg.to_json(),
        "diagnostics": diagnostics,
        "files": files,
    })
}

fn write_json(dir: &Path, name: &str, v: &Value) -> Result<(), CliError> {
    write_atomic(&dir.join(name), output::to_json_pretty(v).as_bytes())
}

fn opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, Value::from)
}

fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let setup = cfg.setup();
    let scfg = cfg.solver_config();
    let ell = critical_length(cfg.d, &setup.kernel, &setup.growth)?;
    let mut sim = Simulation::new(&setup, &scfg)?;
    let mut terminated = "t_end";
    let mut window_exit = false;
    match sim.run(|_| false) {
        Ok(_) => {}
        Err(frontier_kpp::Error::WindowExit { t, side }) => {
            eprintln!("note: {side} front reached the window edge at t={t}; run truncated");
            terminated = "window_exit";
            window_exit = true;
        }
        Err(e) => return Err(e.into()),
    }
    let traj = sim.finish();
    let c = classify_run(&traj, &setup.growth, ell, cfg.h0, &cfg.rules(), window_exit);
    let dir = out_dir(cfg);
    let st = stamp(cfg);
    let files = output::emit_trajectory(&dir, &traj, &st)?;
    let last = traj.last();
    let picard_max_factor = traj
        .picard
        .iter()
        .flat_map(|p| p.factors.iter().copied())
        .fold(None, |m: Option<f64>, f| Some(m.map_or(f, |m| m.max(f))));
    let diag = json!({
        "terminated": terminated,
        "t_final": last.t,
        "g": last.g,
        "h": last.h,
        "sup_u": last.sup_u,
        "ell_star": opt(ell),
        "verdict": c.verdict.to_string(),
        "decision_time": opt(c.evidence.decision_time),
        "picard_windows": traj.picard.len(),
        "picard_max_factor": opt(picard_max_factor),
    });
    write_json(&dir, "metadata.json", &metadata(cfg, "simulate", diag, &files))?;
    println!(
        "t={} g={} h={} sup_u={} verdict={}",
        last.t, last.g, last.h, last.sup_u, c.verdict
    );
    Ok(())
}

fn mu_star(cfg: &RunConfig, tol: f64) -> Result<(), CliError> {
    let setup = cfg.setup();
    let m = find_mu_star(&setup, &cfg.solver_config(), &cfg.rules(), tol)?;
    let dir = out_dir(cfg);
    let st = stamp(cfg);
    let rows = m.probes.iter().map(|p| {
        vec![
            p.mu.to_string(),
            p.verdict.to_string(),
            p.evidence.length.to_string(),
            p.evidence.sup_u.to_string(),
            p.evidence.t_final.to_string(),
            p.evidence.decision_time.map_or(String::new(), |t| t.to_string()),
        ]
    });
    let csv = output::csv("mu,verdict,length,sup_u,t_final,decision_time", rows, &st);
    write_atomic(&dir.join("probes.csv"), csv.as_bytes())?;
    let status = match m.status {
        SearchStatus::Converged => "converged",
        SearchStatus::UndeterminedAtBracket => "undetermined_at_bracket",
    };
    let diag = json!({
        "mu_vanish": m.mu_vanish,
        "mu_spread": m.mu_spread,
        "relative_width": m.relative_width(),
        "status": status,
        "ell_star": m.ell_star,
        "mu_lower": m.mu_lower.mu_lower,
        "h1": m.mu_lower.h1,
        "lambda1": m.mu_lower.lambda1,
        "c1": m.mu_lower.c1,
        "probes": m.probes.len(),
    });
    write_json(&dir, "mu_star.json", &metadata(cfg, "mu-star", diag, &["probes.csv".into()]))?;
    println!("mu* in [{}, {}] ({status})", m.mu_vanish, m.mu_spread);
    Ok(())
}

fn steady(cfg: &RunConfig, half_length: f64, cells: Option<usize>, t_max: f64) -> Result<(), CliError> {
    if !(half_length.is_finite() && half_length > 0.0) {
        return Err(CliError::Usage(format!("error: --half-length must be > 0, got {half_length}")));
    }
    let interval = (-half_length, half_length);
    let n = cells.unwrap_or_else(|| cells_for(interval, cfg.grid.dx));
    let setup = cfg.setup();
    let s = steady_state(interval, n, cfg.d, cfg.solver.dt, t_max, &setup.kernel, &setup.growth)?;
    let dir = out_dir(cfg);
    let st = stamp(cfg);
    write_atomic(&dir.join("steady.csv"), output::profile_csv(&s.centers, &s.u, &st).as_bytes())?;
    let svg = output::line_svg("steady state", "x", "u", &[(&s.centers, &s.u)], &st);
    write_atomic(&dir.join("steady.svg"), svg.as_bytes())?;
    let diag = json!({
        "half_length": half_length,
        "cells": n,
        "u_at_0": s.value_at(0.0),
        "residual": s.residual,
        "t_steady": s.t,
    });
    let files = ["steady.csv".to_string(), "steady.svg".to_string()];
    write_json(&dir, "steady.json", &metadata(cfg, "steady", diag, &files))?;
    println!("u(0) = {}", s.value_at(0.0));
    Ok(())
}

fn run_sweep(cfg: &RunConfig, axes: &SweepAxes) -> Result<(), CliError> {
    let setup = cfg.setup();
    let table = sweep(&setup, &cfg.solver_config(), axes, &cfg.rules());
    let dir = out_dir(cfg);
    let st = stamp(cfg);
    let header = format!("{},mu,verdict,length,sup_u,core,t_final,error", table.row_name);
    let rows = table.cells.iter().map(|c| match &c.outcome {
        Ok(cl) => vec![
            c.row.to_string(),
            c.mu.to_string(),
            cl.verdict.to_string(),
            cl.evidence.length.to_string(),
            cl.evidence.sup_u.to_string(),
            cl.evidence.core.to_string(),
            cl.evidence.t_final.to_string(),
            String::new(),
        ],
        Err(e) => vec![
            c.row.to_string(),
            c.mu.to_string(),
            "error".into(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            format!("\"{}\"", e.replace('"', "'")),
        ],
    });
    write_atomic(&dir.join("phase.csv"), output::csv(&header, rows, &st).as_bytes())?;
    write_atomic(&dir.join("phase.svg"), output::heatmap_svg(&table, &st).as_bytes())?;
    let count = |v: Verdict| table.cells.iter().filter(|c| c.verdict() == Some(v)).count();
    let diag = json!({
        "rows": table.row_name,
        "cells": table.cells.len(),
        "spreading": count(Verdict::Spreading),
        "vanishing": count(Verdict::Vanishing),
        "undetermined": count(Verdict::Undetermined),
        "errors": table.cells.iter().filter(|c| c.outcome.is_err()).count(),
        "rows_monotone": table.rows_monotone(),
    });
    let files = ["phase.csv".to_string(), "phase.svg".to_string()];
    write_json(&dir, "phase.json", &metadata(cfg, "sweep", diag, &files))?;
    println!("{} cells, rows monotone: {}", table.cells.len(), table.rows_monotone());
    Ok(())
}
