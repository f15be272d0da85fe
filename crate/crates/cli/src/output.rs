//! File emission. Every write goes through a temporary file in the target
//! directory and is renamed into place.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use frontier_kpp::classify::{PhaseTable, Verdict};
use frontier_kpp::fbsolver::{Sample, Trajectory};
use frontier_kpp::Grid;

use crate::config::SCHEMA_VERSION;
use crate::CliError;

pub const TRAJECTORY_HEADER: &str = "t,g,h,sup_u,mass,flux_left,flux_right";

/// Provenance stamp carried by every artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stamp {
    pub config_sha256: String,
}

impl Stamp {
    fn line(&self) -> String {
        format!("schema_version={SCHEMA_VERSION} config_sha256={}", self.config_sha256)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// CSV with the given header, one row per record and a trailing
/// `# schema_version=.. config_sha256=..` line.
pub fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>, stamp: &Stamp) -> String {
    let mut s = String::new();
    s.push_str(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    let _ = writeln!(s, "# {}", stamp.line());
    s
}

fn num(x: f64) -> String {
    format!("{x}")
}

pub fn trajectory_csv(samples: &[Sample], stamp: &Stamp) -> String {
    csv(
        TRAJECTORY_HEADER,
        samples.iter().map(|s| {
            [s.t, s.g, s.h, s.sup_u, s.mass, s.flux_left, s.flux_right]
                .into_iter()
                .map(num)
                .collect()
        }),
        stamp,
    )
}

pub fn profile_csv(xs: &[f64], us: &[f64], stamp: &Stamp) -> String {
    csv(
        "x,u",
        xs.iter().zip(us).map(|(x, u)| vec![num(*x), num(*u)]),
        stamp,
    )
}

/// Write the trajectory, one CSV per snapshot and the two line plots.
/// Returns the written paths relative to `dir`.
pub fn emit_trajectory(dir: &Path, traj: &Trajectory, stamp: &Stamp) -> Result<Vec<String>, CliError> {
    let mut files = Vec::new();
    let mut put = |name: String, body: String| -> Result<(), CliError> {
        write_atomic(&dir.join(&name), body.as_bytes())?;
        files.push(name);
        Ok(())
    };
    put("trajectory.csv".into(), trajectory_csv(&traj.samples, stamp))?;
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let xs = snapshot_x(&traj.grid, snap.first, snap.u.len());
        put(format!("snapshots/snapshot_{k:05}.csv"), profile_csv(&xs, &snap.u, stamp))?;
    }
    put("fronts.svg".into(), fronts_svg(&traj.samples, stamp))?;
    let last = traj.snapshots.last().expect("a run keeps its final profile");
    let xs = snapshot_x(&traj.grid, last.first, last.u.len());
    put(
        "profile.svg".into(),
        line_svg("final profile", "x", "u", &[(&xs, &last.u)], stamp),
    )?;
    Ok(files)
}

fn snapshot_x(grid: &Grid, first: usize, len: usize) -> Vec<f64> {
    (first..first + len).map(|i| grid.center(i)).collect()
}

pub fn to_json_pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

pub fn file_list(dir: &Path, names: &[String]) -> Vec<PathBuf> {
    names.iter().map(|n| dir.join(n)).collect()
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

fn svg_open(s: &mut String, title: &str, stamp: &Stamp) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, "<!-- {} -->", stamp.line());
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Polyline plot of one or more series sharing axes.
pub fn line_svg(title: &str, xlabel: &str, ylabel: &str, series: &[(&[f64], &[f64])], stamp: &Stamp) -> String {
    let (x0, x1) = range(series.iter().flat_map(|(x, _)| x.iter().copied()));
    let (y0, y1) = range(series.iter().flat_map(|(_, y)| y.iter().copied()));
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = String::new();
    svg_open(&mut s, title, stamp);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
        W / 2.0,
        H - 15.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" font-size="12" transform="rotate(-90 15 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    for (v, x) in [(x0, PAD), (x1, W - PAD)] {
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="middle" font-size="10">{}</text>"#,
            H - PAD + 14.0,
            tick(v)
        );
    }
    for (v, y) in [(y0, H - PAD), (y1, PAD)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}" text-anchor="end" font-size="10">{}</text>"#,
            PAD - 4.0,
            tick(v)
        );
    }
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    for (k, (xs, ys)) in series.iter().enumerate() {
        let pts: Vec<String> = xs
            .iter()
            .zip(ys.iter())
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            COLORS[k % COLORS.len()],
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    format!("{v:.4}")
}

pub fn fronts_svg(samples: &[Sample], stamp: &Stamp) -> String {
    let t: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let g: Vec<f64> = samples.iter().map(|s| s.g).collect();
    let h: Vec<f64> = samples.iter().map(|s| s.h).collect();
    line_svg("fronts g(t), h(t)", "t", "x", &[(&t, &g), (&t, &h)], stamp)
}

fn verdict_color(v: Option<Verdict>) -> &'static str {
    match v {
        Some(Verdict::Spreading) => "#d62728",
        Some(Verdict::Vanishing) => "#1f77b4",
        Some(Verdict::Undetermined) => "#bbbbbb",
        None => "#000000",
    }
}

/// One rectangle per sweep cell; rows bottom to top, `μ` left to right.
pub fn heatmap_svg(table: &PhaseTable, stamp: &Stamp) -> String {
    let mut s = String::new();
    svg_open(&mut s, &format!("verdicts over ({}, mu)", table.row_name), stamp);
    let nr = table.rows.len().max(1) as f64;
    let nc = table.mus.len().max(1) as f64;
    let cw = (W - 2.0 * PAD) / nc;
    let ch = (H - 2.0 * PAD) / nr;
    for (r, row) in table.rows.iter().enumerate() {
        for (c, mu) in table.mus.iter().enumerate() {
            let cell = table.cell(r, c);
            let label = match cell.verdict() {
                Some(v) => v.to_string(),
                None => "error".into(),
            };
            let _ = writeln!(
                s,
                r#"<rect class="cell" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{}={} mu={} {}</title></rect>"#,
                PAD + c as f64 * cw,
                H - PAD - (r as f64 + 1.0) * ch,
                cw,
                ch,
                verdict_color(cell.verdict()),
                table.row_name,
                row,
                mu,
                label
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">mu</text>"#,
        W / 2.0,
        H - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" font-size="12" transform="rotate(-90 15 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        table.row_name
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stamp() -> Stamp {
        Stamp {
            config_sha256: "ab".repeat(32),
        }
    }

    #[test]
    fn csv_layout() {
        let s = csv("a,b", vec![vec!["1".into(), "0.1".into()]], &stamp());
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "a,b");
        assert_eq!(lines[1], "1,0.1");
        assert!(lines[2].starts_with("# schema_version=1 config_sha256=abab"));
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.5e-17, -7.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path().join("sub")).unwrap().count(), 1);
    }
}
