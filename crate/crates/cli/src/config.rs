//! JSON run configuration: schema walk, domain checks and overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use frontier_kpp::classify::Rules;
use frontier_kpp::fbsolver::{Mode, PicardConfig, Setup, SolverConfig};
use frontier_kpp::{Growth, InitialData, Kernel};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable that replaces `output.dir`.
pub const OUT_ENV: &str = "FRONTIER_KPP_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueKind {
    Schema,
    Domain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub kind: IssueKind,
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            IssueKind::Schema => "schema",
            IssueKind::Domain => "domain",
        };
        write!(f, "{kind} error at `{}`: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    TopHat { half_width: f64 },
    Triangle { half_width: f64 },
    /// `radius: null` is the untruncated kernel.
    Laplace { rate: f64, radius: Option<f64> },
    Gaussian { sigma: f64, radius: f64 },
    Tabulated { xs: Vec<f64>, values: Vec<f64> },
}

impl KernelSpec {
    pub fn build(&self) -> frontier_kpp::Result<Kernel> {
        match self {
            KernelSpec::TopHat { half_width } => Kernel::top_hat(*half_width),
            KernelSpec::Triangle { half_width } => Kernel::triangle(*half_width),
            KernelSpec::Laplace { rate, radius } => Kernel::laplace(*rate, radius.unwrap_or(f64::INFINITY)),
            KernelSpec::Gaussian { sigma, radius } => Kernel::truncated_gaussian(*sigma, *radius),
            KernelSpec::Tabulated { xs, values } => Kernel::tabulated(xs, values),
        }
    }

    /// Short form used on the command line: `tophat:1`, `triangle:1`,
    /// `laplace:2[:radius]`, `gaussian:sigma:radius`.
    pub fn parse_short(s: &str) -> Result<Self, String> {
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default();
        let nums: Vec<f64> = parts
            .map(|p| p.parse::<f64>().map_err(|_| format!("`{p}` is not a number in kernel `{s}`")))
            .collect::<Result<_, _>>()?;
        match (name, nums.as_slice()) {
            ("tophat", [w]) => Ok(KernelSpec::TopHat { half_width: *w }),
            ("triangle", [w]) => Ok(KernelSpec::Triangle { half_width: *w }),
            ("laplace", [r]) => Ok(KernelSpec::Laplace { rate: *r, radius: None }),
            ("laplace", [r, rad]) => Ok(KernelSpec::Laplace {
                rate: *r,
                radius: Some(*rad),
            }),
            ("gaussian", [s, r]) => Ok(KernelSpec::Gaussian { sigma: *s, radius: *r }),
            _ => Err(format!(
                "unknown kernel `{s}` (expected tophat:W, triangle:W, laplace:RATE[:RADIUS] or gaussian:SIGMA:RADIUS)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GrowthSpec {
    Logistic { a: f64, b: f64 },
    Zero,
    /// Expression in `t`, `x`, `u`.
    Expression {
        expr: String,
        lipschitz: f64,
        k0: f64,
        kpp: bool,
    },
}

impl GrowthSpec {
    pub fn build(&self) -> frontier_kpp::Result<Growth> {
        match self {
            GrowthSpec::Logistic { a, b } => Growth::logistic(*a, *b),
            GrowthSpec::Zero => Ok(Growth::zero()),
            GrowthSpec::Expression { expr, lipschitz, k0, kpp } => Growth::from_expression(expr, *lipschitz, *k0, *kpp),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InitialSpec {
    CosineBump {
        amplitude: f64,
    },
    Parabola {
        amplitude: f64,
    },
    /// Two-column CSV `x,u`, relative to the config file.
    Tabulated {
        path: String,
        #[serde(skip)]
        table: (Vec<f64>, Vec<f64>),
    },
}

impl InitialSpec {
    pub fn build(&self) -> InitialData {
        match self {
            InitialSpec::CosineBump { amplitude } => InitialData::CosineBump { amplitude: *amplitude },
            InitialSpec::Parabola { amplitude } => InitialData::Parabola { amplitude: *amplitude },
            InitialSpec::Tabulated { table, .. } => InitialData::Tabulated {
                xs: table.0.clone(),
                values: table.1.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub dx: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Explicit,
    Picard,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverSpec {
    pub dt: f64,
    pub t_end: f64,
    pub mode: ModeName,
    pub picard_window: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub record_every: usize,
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifySpec {
    pub eps_vanish: f64,
    pub v_eps: f64,
    pub l_big: Option<f64>,
    pub delta_core: f64,
    pub margin: f64,
    pub t_end: f64,
    pub extend: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSpec {
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub kernel: KernelSpec,
    pub growth: GrowthSpec,
    pub d: f64,
    pub mu: f64,
    pub h0: f64,
    pub initial: InitialSpec,
    pub grid: GridSpec,
    pub solver: SolverSpec,
    pub classify: ClassifySpec,
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON with the output directory blanked, so
    /// relocating a run does not change its identity.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.dir.clear();
        let text = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn setup(&self) -> Setup {
        Setup::new(
            self.kernel.build().expect("validated at load"),
            self.growth.build().expect("validated at load"),
            self.h0,
            self.initial.build(),
        )
        .with_dx(self.grid.dx)
        .with_margin(self.grid.margin)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        let mut cfg = SolverConfig::new(self.d, self.mu, s.dt, s.t_end);
        cfg.record_every = s.record_every;
        cfg.snapshot_every = s.snapshot_every;
        if s.mode == ModeName::Picard {
            cfg.mode = Mode::Picard(PicardConfig {
                window: s.picard_window,
                tol: s.picard_tol,
                max_iter: s.picard_max_iter,
            });
        }
        cfg
    }

    pub fn rules(&self) -> Rules {
        let c = &self.classify;
        Rules {
            eps_vanish: c.eps_vanish,
            v_eps: c.v_eps,
            l_big: c.l_big,
            delta_core: c.delta_core,
            margin: c.margin,
            t_end: c.t_end,
            extend: c.extend,
        }
    }
}

struct Walker {
    issues: Vec<Issue>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

impl Walker {
    fn schema(&mut self, path: impl Into<String>, msg: impl Into<String>) {
        self.issues.push(Issue {
            kind: IssueKind::Schema,
            path: path.into(),
            message: msg.into(),
        });
    }

    fn domain(&mut self, path: impl Into<String>, msg: impl Into<String>) {
        self.issues.push(Issue {
            kind: IssueKind::Domain,
            path: path.into(),
            message: msg.into(),
        });
    }

    /// An object with only `allowed` keys; unknown keys are reported.
    fn object<'a>(&mut self, v: Option<&'a Value>, path: &str, allowed: &[&str]) -> Option<&'a Map<String, Value>> {
        match v {
            None => {
                self.schema(path, "missing");
                None
            }
            Some(Value::Object(m)) => {
                for k in m.keys() {
                    if !allowed.contains(&k.as_str()) {
                        self.schema(join(path, k), format!("unknown key `{k}`"));
                    }
                }
                Some(m)
            }
            Some(other) => {
                self.schema(path, format!("expected an object, got {}", kind_of(other)));
                None
            }
        }
    }

    fn number(&mut self, m: &Map<String, Value>, path: &str, key: &str, default: Option<f64>) -> f64 {
        let p = join(path, key);
        match m.get(key) {
            None => default.unwrap_or_else(|| {
                self.schema(p, "missing");
                f64::NAN
            }),
            Some(Value::Number(n)) => n.as_f64().unwrap_or(f64::NAN),
            Some(other) => {
                self.schema(p, format!("expected a number, got {}", kind_of(other)));
                f64::NAN
            }
        }
    }

    fn opt_number(&mut self, m: &Map<String, Value>, path: &str, key: &str) -> Option<f64> {
        match m.get(key) {
            None | Some(Value::Null) => None,
            Some(_) => Some(self.number(m, path, key, None)),
        }
    }

    fn count(&mut self, m: &Map<String, Value>, path: &str, key: &str, default: usize) -> usize {
        match m.get(key) {
            None => default,
            Some(Value::Number(n)) if n.as_u64().is_some() => n.as_u64().unwrap() as usize,
            Some(other) => {
                self.schema(join(path, key), format!("expected a nonnegative integer, got {other}"));
                default
            }
        }
    }

    fn string(&mut self, m: &Map<String, Value>, path: &str, key: &str, default: Option<&str>) -> String {
        let p = join(path, key);
        match m.get(key) {
            None => default.map(str::to_string).unwrap_or_else(|| {
                self.schema(p, "missing");
                String::new()
            }),
            Some(Value::String(s)) => s.clone(),
            Some(other) => {
                self.schema(p, format!("expected a string, got {}", kind_of(other)));
                String::new()
            }
        }
    }

    fn boolean(&mut self, m: &Map<String, Value>, path: &str, key: &str, default: bool) -> bool {
        match m.get(key) {
            None => default,
            Some(Value::Bool(b)) => *b,
            Some(other) => {
                self.schema(join(path, key), format!("expected a boolean, got {}", kind_of(other)));
                default
            }
        }
    }

    fn numbers(&mut self, m: &Map<String, Value>, path: &str, key: &str) -> Vec<f64> {
        let p = join(path, key);
        match m.get(key) {
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for (i, it) in items.iter().enumerate() {
                    match it.as_f64() {
                        Some(x) => out.push(x),
                        None => self.schema(format!("{p}[{i}]"), format!("expected a number, got {}", kind_of(it))),
                    }
                }
                out
            }
            None => {
                self.schema(p, "missing");
                Vec::new()
            }
            Some(other) => {
                self.schema(p, format!("expected an array, got {}", kind_of(other)));
                Vec::new()
            }
        }
    }

    fn family<'a>(&mut self, v: Option<&'a Value>, path: &str) -> Option<(&'a Map<String, Value>, String)> {
        let m = match v {
            Some(Value::Object(m)) => m,
            None => {
                self.schema(path, "missing");
                return None;
            }
            Some(other) => {
                self.schema(path, format!("expected an object, got {}", kind_of(other)));
                return None;
            }
        };
        let fam = self.string(m, path, "family", None);
        Some((m, fam))
    }

    fn positive(&mut self, path: &str, v: f64) {
        if !v.is_nan() && !(v.is_finite() && v > 0.0) {
            self.domain(path, format!("must be finite and > 0, got {v}"));
        }
    }

    fn kernel(&mut self, v: Option<&Value>) -> Option<KernelSpec> {
        let (m, fam) = self.family(v, "kernel")?;
        let keys: &[&str] = match fam.as_str() {
            "top_hat" | "triangle" => &["family", "half_width"],
            "laplace" => &["family", "rate", "radius"],
            "gaussian" => &["family", "sigma", "radius"],
            "tabulated" => &["family", "xs", "values"],
            "" => return None,
            other => {
                self.schema("kernel.family", format!("unknown kernel family `{other}`"));
                return None;
            }
        };
        self.object(v, "kernel", keys);
        let p = "kernel";
        let spec = match fam.as_str() {
            "top_hat" => KernelSpec::TopHat {
                half_width: self.number(m, p, "half_width", None),
            },
            "triangle" => KernelSpec::Triangle {
                half_width: self.number(m, p, "half_width", None),
            },
            "laplace" => KernelSpec::Laplace {
                rate: self.number(m, p, "rate", None),
                radius: self.opt_number(m, p, "radius"),
            },
            "gaussian" => KernelSpec::Gaussian {
                sigma: self.number(m, p, "sigma", None),
                radius: self.number(m, p, "radius", None),
            },
            _ => KernelSpec::Tabulated {
                xs: self.numbers(m, p, "xs"),
                values: self.numbers(m, p, "values"),
            },
        };
        Some(spec)
    }

    fn growth(&mut self, v: Option<&Value>) -> Option<GrowthSpec> {
        let (m, fam) = self.family(v, "growth")?;
        let keys: &[&str] = match fam.as_str() {
            "logistic" => &["family", "a", "b"],
            "zero" => &["family"],
            "expression" => &["family", "expr", "lipschitz", "k0", "kpp"],
            "" => return None,
            other => {
                self.schema("growth.family", format!("unknown growth family `{other}`"));
                return None;
            }
        };
        self.object(v, "growth", keys);
        let p = "growth";
        Some(match fam.as_str() {
            "logistic" => GrowthSpec::Logistic {
                a: self.number(m, p, "a", None),
                b: self.number(m, p, "b", None),
            },
            "zero" => GrowthSpec::Zero,
            _ => GrowthSpec::Expression {
                expr: self.string(m, p, "expr", None),
                lipschitz: self.number(m, p, "lipschitz", None),
                k0: self.number(m, p, "k0", None),
                kpp: self.boolean(m, p, "kpp", false),
            },
        })
    }

    fn initial(&mut self, v: Option<&Value>, base: &Path) -> Option<InitialSpec> {
        let (m, fam) = self.family(v, "initial")?;
        let keys: &[&str] = match fam.as_str() {
            "cosine_bump" | "parabola" => &["family", "amplitude"],
            "tabulated" => &["family", "path"],
            "" => return None,
            other => {
                self.schema("initial.family", format!("unknown initial-data family `{other}`"));
                return None;
            }
        };
        self.object(v, "initial", keys);
        let p = "initial";
        Some(match fam.as_str() {
            "cosine_bump" => InitialSpec::CosineBump {
                amplitude: self.number(m, p, "amplitude", None),
            },
            "parabola" => InitialSpec::Parabola {
                amplitude: self.number(m, p, "amplitude", None),
            },
            _ => {
                let path = self.string(m, p, "path", None);
                let table = if path.is_empty() {
                    (Vec::new(), Vec::new())
                } else {
                    match read_table(&base.join(&path)) {
                        Ok(t) => t,
                        Err(e) => {
                            self.domain("initial.path", e);
                            (Vec::new(), Vec::new())
                        }
                    }
                };
                InitialSpec::Tabulated { path, table }
            }
        })
    }
}

fn kind_of(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

/// Two numeric columns; `#` comments and a non-numeric header are skipped.
pub fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut xs = Vec::new();
    let mut us = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = (cols.len() == 2)
            .then(|| Some((cols[0].parse::<f64>().ok()?, cols[1].parse::<f64>().ok()?)))
            .flatten();
        match parsed {
            Some((x, u)) => {
                xs.push(x);
                us.push(u);
            }
            None if xs.is_empty() && i == 0 => {}
            None => return Err(format!("{}:{}: expected two numbers", path.display(), i + 1)),
        }
    }
    Ok((xs, us))
}

const TOP_KEYS: &[&str] = &[
    "schema_version",
    "kernel",
    "growth",
    "d",
    "mu",
    "h0",
    "initial",
    "grid",
    "solver",
    "classify",
    "output",
];

/// Top-level scalars that can be overridden with `--key value`.
pub const TOP_SCALARS: &[&str] = &["d", "mu", "h0"];

/// Validate a JSON value. Relative paths inside resolve against `base`.
pub fn from_value(root: &Value, base: &Path) -> Result<RunConfig, Vec<Issue>> {
    let mut w = Walker { issues: Vec::new() };
    let Some(top) = w.object(Some(root), "", TOP_KEYS) else {
        return Err(w.issues);
    };
    let empty = Map::new();

    let schema_version = match top.get("schema_version") {
        None => SCHEMA_VERSION,
        Some(v) => match v.as_u64() {
            Some(n) if n == SCHEMA_VERSION as u64 => SCHEMA_VERSION,
            _ => {
                w.schema("schema_version", format!("unsupported schema version {v}, expected {SCHEMA_VERSION}"));
                SCHEMA_VERSION
            }
        },
    };
    let kernel = w.kernel(top.get("kernel"));
    let growth = w.growth(top.get("growth"));
    let d = w.number(top, "", "d", None);
    let mu = w.number(top, "", "mu", None);
    let h0 = w.number(top, "", "h0", None);
    let initial = w.initial(top.get("initial"), base);

    let g = match top.get("grid") {
        None => &empty,
        v => w.object(v, "grid", &["dx", "margin"]).unwrap_or(&empty),
    };
    let grid = GridSpec {
        dx: w.number(g, "grid", "dx", Some(0.02)),
        margin: w.number(g, "grid", "margin", Some(10.0)),
    };

    let s = match top.get("solver") {
        None => &empty,
        v => w
            .object(
                v,
                "solver",
                &[
                    "dt",
                    "t_end",
                    "mode",
                    "picard_window",
                    "picard_tol",
                    "picard_max_iter",
                    "record_every",
                    "snapshot_every",
                ],
            )
            .unwrap_or(&empty),
    };
    let mode = match w.string(s, "solver", "mode", Some("explicit")).as_str() {
        "explicit" => ModeName::Explicit,
        "picard" => ModeName::Picard,
        "" => ModeName::Explicit,
        other => {
            w.schema("solver.mode", format!("expected `explicit` or `picard`, got `{other}`"));
            ModeName::Explicit
        }
    };
    let pic = PicardConfig::default();
    let solver = SolverSpec {
        dt: w.number(s, "solver", "dt", Some(1e-3)),
        t_end: w.number(s, "solver", "t_end", Some(200.0)),
        mode,
        picard_window: w.number(s, "solver", "picard_window", Some(pic.window)),
        picard_tol: w.number(s, "solver", "picard_tol", Some(pic.tol)),
        picard_max_iter: w.count(s, "solver", "picard_max_iter", pic.max_iter),
        record_every: w.count(s, "solver", "record_every", 100),
        snapshot_every: w.count(s, "solver", "snapshot_every", 0),
    };

    let c = match top.get("classify") {
        None => &empty,
        v => w
            .object(
                v,
                "classify",
                &["eps_vanish", "v_eps", "l_big", "delta_core", "margin", "t_end", "extend"],
            )
            .unwrap_or(&empty),
    };
    let r = Rules::default();
    let classify = ClassifySpec {
        eps_vanish: w.number(c, "classify", "eps_vanish", Some(r.eps_vanish)),
        v_eps: w.number(c, "classify", "v_eps", Some(r.v_eps)),
        l_big: w.opt_number(c, "classify", "l_big"),
        delta_core: w.number(c, "classify", "delta_core", Some(r.delta_core)),
        margin: w.number(c, "classify", "margin", Some(r.margin)),
        t_end: w.number(c, "classify", "t_end", Some(r.t_end)),
        extend: w.number(c, "classify", "extend", Some(r.extend)),
    };

    let o = match top.get("output") {
        None => &empty,
        v => w.object(v, "output", &["dir"]).unwrap_or(&empty),
    };
    let output = OutputSpec {
        dir: w.string(o, "output", "dir", Some("out")),
    };

    // Domain checks. Values already reported as schema errors are NaN and
    // skipped by `positive`.
    w.positive("d", d);
    w.positive("mu", mu);
    w.positive("h0", h0);
    w.positive("grid.dx", grid.dx);
    w.positive("grid.margin", grid.margin);
    if grid.dx.is_finite() && h0.is_finite() && grid.dx >= h0 {
        w.domain("grid.dx", format!("must be smaller than h0 = {h0}, got {}", grid.dx));
    }
    w.positive("solver.dt", solver.dt);
    if !solver.t_end.is_nan() && !(solver.t_end.is_finite() && solver.t_end >= 0.0) {
        w.domain("solver.t_end", format!("must be finite and >= 0, got {}", solver.t_end));
    }
    if solver.record_every == 0 {
        w.domain("solver.record_every", "must be at least 1");
    }
    if mode == ModeName::Picard {
        w.positive("solver.picard_window", solver.picard_window);
        w.positive("solver.picard_tol", solver.picard_tol);
        if solver.picard_max_iter == 0 {
            w.domain("solver.picard_max_iter", "must be at least 1");
        }
    }
    for (k, v) in [
        ("classify.eps_vanish", classify.eps_vanish),
        ("classify.v_eps", classify.v_eps),
        ("classify.delta_core", classify.delta_core),
        ("classify.t_end", classify.t_end),
    ] {
        w.positive(k, v);
    }
    if let Some(l) = classify.l_big {
        w.positive("classify.l_big", l);
    }
    if !(classify.margin >= 0.0) && !classify.margin.is_nan() {
        w.domain("classify.margin", format!("must be >= 0, got {}", classify.margin));
    }
    if !(classify.extend >= 1.0) && !classify.extend.is_nan() {
        w.domain("classify.extend", format!("must be >= 1, got {}", classify.extend));
    }
    if output.dir.is_empty() && o.contains_key("dir") {
        w.domain("output.dir", "must not be empty");
    }
    if let Some(k) = &kernel {
        if let Err(e) = k.build() {
            w.domain("kernel", e.to_string());
        }
    }
    let built_growth = growth.as_ref().map(|g| g.build());
    if let Some(Err(e)) = &built_growth {
        w.domain("growth", e.to_string());
    }
    if let Some(init) = &initial {
        if h0.is_finite() && h0 > 0.0 && !matches!(init, InitialSpec::Tabulated { path, .. } if path.is_empty()) {
            if let Err(e) = init.build().validate(h0) {
                w.domain("initial", e.to_string());
            }
        }
    }

    if !w.issues.is_empty() {
        return Err(w.issues);
    }
    Ok(RunConfig {
        schema_version,
        kernel: kernel.unwrap(),
        growth: growth.unwrap(),
        d,
        mu,
        h0,
        initial: initial.unwrap(),
        grid,
        solver,
        classify,
        output,
    })
}

pub fn parse_config(text: &str, base: &Path) -> Result<RunConfig, Vec<Issue>> {
    let root: Value = serde_json::from_str(text).map_err(|e| {
        vec![Issue {
            kind: IssueKind::Schema,
            path: String::new(),
            message: format!("invalid JSON: {e}"),
        }]
    })?;
    from_value(&root, base)
}

/// Set `path` (dot separated) in `root` to `raw`, read as JSON when it parses
/// and as a string otherwise.
pub fn apply_override(root: &mut Value, path: &str, raw: &str) -> Result<(), Issue> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, k) in keys.iter().enumerate() {
        let Value::Object(m) = cur else {
            return Err(Issue {
                kind: IssueKind::Schema,
                path: keys[..i].join("."),
                message: "cannot override inside a non-object".into(),
            });
        };
        if i + 1 == keys.len() {
            m.insert(k.to_string(), value);
            return Ok(());
        }
        cur = m.entry(k.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

/// Split `--section.key value` and `--d/--mu/--h0 value` pairs out of `args`.
pub fn split_overrides(args: &[String]) -> (Vec<String>, Vec<(String, String)>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut i = 0;
    while i < args.len() {
        let a = &args[i];
        let key = a.strip_prefix("--").filter(|k| k.contains('.') || TOP_SCALARS.contains(k));
        match (key, args.get(i + 1)) {
            (Some(k), Some(v)) => {
                overrides.push((k.to_string(), v.clone()));
                i += 2;
            }
            _ => {
                rest.push(a.clone());
                i += 1;
            }
        }
    }
    (rest, overrides)
}

/// Read a config file, then apply `FRONTIER_KPP_OUT` and command-line
/// overrides, in that order.
pub fn load(path: &Path, overrides: &[(String, String)], out_env: Option<String>) -> Result<RunConfig, Vec<Issue>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        vec![Issue {
            kind: IssueKind::Domain,
            path: String::new(),
            message: format!("cannot read {}: {e}", path.display()),
        }]
    })?;
    let mut root: Value = serde_json::from_str(&text).map_err(|e| {
        vec![Issue {
            kind: IssueKind::Schema,
            path: String::new(),
            message: format!("{}: invalid JSON: {e}", path.display()),
        }]
    })?;
    if let Some(dir) = out_env.filter(|d| !d.is_empty()) {
        apply_override(&mut root, "output.dir", &Value::String(dir).to_string()).map_err(|e| vec![e])?;
    }
    let mut issues = Vec::new();
    for (k, v) in overrides {
        if let Err(e) = apply_override(&mut root, k, v) {
            issues.push(e);
        }
    }
    if !issues.is_empty() {
        return Err(issues);
    }
    let base: PathBuf = path.parent().map(Path::to_path_buf).unwrap_or_default();
    from_value(&root, &base)
}
