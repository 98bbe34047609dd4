//! Plain-text run configuration: sectioned key = value, exact key match,
//! locale-independent numbers.
//!
//! Unknown sections and keys are errors (no silent typos); the message
//! suggests the nearest known name. `render` emits a canonical document and
//! `parse_config(render(cfg))` reproduces the configuration exactly, because
//! floats print in Rust's shortest round-trip form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::MomentConvention;
use crate::integrator::{OperatorKind, RunParams, Scheme};

/// Initial-data selector.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// The concentrated peak plus two bulk bumps, by moment targets.
    Blowup { m: f64, e: f64, rho: f64, beta: f64 },
    /// Bose–Einstein equilibrium occupation.
    BoseEinstein { beta: f64, alpha: f64 },
    /// Load nodal values from a snapshot CSV.
    File { path: String },
}

/// A fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Number of grid nodes (≥ 2).
    pub grid_n: usize,
    /// Top of the energy range.
    pub eps_max: f64,
    /// Time-stepping scheme.
    pub scheme: Scheme,
    /// Collision bookkeeping driving explicit steps.
    pub operator: OperatorKind,
    /// Drop the quadratic (spontaneous) part of the collision kernel.
    pub cubic_only: bool,
    /// Requested step size.
    pub dt0: f64,
    /// Step floor; running below it ends the run.
    pub dt_min: f64,
    /// Stability fraction of the inverse loss bound.
    pub cfl_c: f64,
    /// Blow-up cap on sup f; None derives one from the initial data,
    /// infinity disables the cap.
    pub f_cap: Option<f64>,
    /// Time horizon.
    pub t_end: f64,
    /// Report every this many steps.
    pub report_stride: u64,
    /// Initial data.
    pub initial: InitialData,
    /// Concentration mass exponent θ₁.
    pub theta1: f64,
    /// Concentration base exponent θ₂.
    pub theta2: f64,
    /// Depth of the concentration report.
    pub ell_max: usize,
    /// Power-law fit window (lo, hi); None disables the exponent column.
    pub fit_window: Option<(f64, f64)>,
    /// Radii whose cumulative mass is reported per row.
    pub mass_below: Vec<f64>,
    /// Time-series CSV path.
    pub series_path: Option<String>,
    /// Final-snapshot CSV path.
    pub snapshot_path: Option<String>,
    /// Summary JSON path.
    pub summary_path: Option<String>,
    /// Convention for the reported moments.
    pub convention: MomentConvention,
}

/// Known sections and their keys, in canonical render order.
const KNOWN: &[(&str, &[&str])] = &[
    ("grid", &["n", "eps_max"]),
    ("scheme", &["method", "operator", "cubic_only"]),
    ("time", &["dt0", "dt_min", "cfl_c", "f_cap", "t_end", "report_stride"]),
    ("initial", &["kind", "m", "e", "rho", "beta", "alpha", "path"]),
    ("diagnostics", &["theta1", "theta2", "ell_max", "fit_lo", "fit_hi", "mass_below"]),
    ("output", &["series", "snapshot", "summary", "moment_convention"]),
];

fn suggest(unknown: &str, candidates: impl Iterator<Item = &'static str>) -> String {
    let best = candidates
        .map(|c| (strsim::levenshtein(unknown, c), c))
        .min()
        .filter(|&(d, c)| d <= 3 && d < c.len());
    match best {
        Some((_, c)) => format!("; did you mean \"{c}\"?"),
        None => String::new(),
    }
}

fn config_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

/// Raw parsed entries: (section, key) → (value, line).
type RawMap = BTreeMap<(String, String), (String, usize)>;

fn parse_raw(text: &str) -> Result<RawMap> {
    let mut map = RawMap::new();
    let mut section: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                return Err(config_err(line_no, format!("unterminated section header: {line}")));
            };
            let name = name.trim();
            if !KNOWN.iter().any(|(s, _)| *s == name) {
                let hint = suggest(name, KNOWN.iter().map(|(s, _)| *s));
                return Err(config_err(line_no, format!("unknown section \"{name}\"{hint}")));
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(config_err(line_no, format!("expected \"key = value\", got: {line}")));
        };
        let key = key.trim();
        let value = value.trim();
        let Some(sec) = section.clone() else {
            return Err(config_err(line_no, format!("key \"{key}\" appears before any [section]")));
        };
        let keys = KNOWN.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap();
        if !keys.contains(&key) {
            let hint = suggest(key, keys.iter().copied());
            return Err(config_err(line_no, format!("unknown key \"{key}\" in [{sec}]{hint}")));
        }
        if value.is_empty() {
            return Err(config_err(line_no, format!("key \"{key}\" has no value")));
        }
        if map.insert((sec.clone(), key.to_string()), (value.to_string(), line_no)).is_some() {
            return Err(config_err(line_no, format!("duplicate key \"{key}\" in [{sec}]")));
        }
    }
    Ok(map)
}

/// One raw entry with its provenance, consumed during validation.
struct Entry<'a> {
    map: &'a RawMap,
}

impl<'a> Entry<'a> {
    fn get(&self, sec: &str, key: &str) -> Option<(&'a str, usize)> {
        self.map.get(&(sec.to_string(), key.to_string())).map(|(v, l)| (v.as_str(), *l))
    }

    fn required(&self, sec: &str, key: &str) -> Result<(&'a str, usize)> {
        self.get(sec, key)
            .ok_or_else(|| config_err(0, format!("missing required key \"{key}\" in [{sec}]")))
    }

    fn f64(&self, sec: &str, key: &str) -> Result<Option<(f64, usize)>> {
        match self.get(sec, key) {
            None => Ok(None),
            Some((v, line)) => {
                let x: f64 = v
                    .parse()
                    .map_err(|_| config_err(line, format!("{key}: not a number: \"{v}\"")))?;
                Ok(Some((x, line)))
            }
        }
    }

    fn usize(&self, sec: &str, key: &str) -> Result<Option<(usize, usize)>> {
        match self.get(sec, key) {
            None => Ok(None),
            Some((v, line)) => {
                let x: usize = v.parse().map_err(|_| {
                    config_err(line, format!("{key}: not a nonnegative integer: \"{v}\""))
                })?;
                Ok(Some((x, line)))
            }
        }
    }

    fn bool(&self, sec: &str, key: &str) -> Result<Option<(bool, usize)>> {
        match self.get(sec, key) {
            None => Ok(None),
            Some(("true", line)) => Ok(Some((true, line))),
            Some(("false", line)) => Ok(Some((false, line))),
            Some((v, line)) => {
                Err(config_err(line, format!("{key}: expected true or false, got \"{v}\"")))
            }
        }
    }
}

fn positive(key: &str, value: f64, line: usize) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(config_err(line, format!("{key} must be positive and finite, got {value}")))
    }
}

fn unit_interval(key: &str, value: f64, line: usize) -> Result<f64> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(config_err(line, format!("{key} must lie in (0, 1), got {value}")))
    }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let map = parse_raw(text)?;
    let e = Entry { map: &map };

    let (n_str, n_line) = e.required("grid", "n")?;
    let grid_n: usize = n_str
        .parse()
        .map_err(|_| config_err(n_line, format!("n: not a nonnegative integer: \"{n_str}\"")))?;
    if grid_n < 2 {
        return Err(config_err(n_line, format!("n must be at least 2, got {grid_n}")));
    }
    let (eps_str, eps_line) = e.required("grid", "eps_max")?;
    let eps_max: f64 = eps_str
        .parse()
        .map_err(|_| config_err(eps_line, format!("eps_max: not a number: \"{eps_str}\"")))?;
    let eps_max = positive("eps_max", eps_max, eps_line)?;

    let scheme = match e.get("scheme", "method") {
        None => Scheme::Rk4,
        Some(("rk4", _)) => Scheme::Rk4,
        Some(("exponential", _)) => Scheme::Exponential,
        Some((v, line)) => {
            return Err(config_err(line, format!("method: expected rk4 or exponential, got \"{v}\"")))
        }
    };
    let operator = match e.get("scheme", "operator") {
        None => OperatorKind::Conservative,
        Some(("conservative", _)) => OperatorKind::Conservative,
        Some(("collocation", _)) => OperatorKind::Collocation,
        Some((v, line)) => {
            return Err(config_err(
                line,
                format!("operator: expected conservative or collocation, got \"{v}\""),
            ))
        }
    };
    let cubic_only = e.bool("scheme", "cubic_only")?.map_or(false, |(v, _)| v);

    let defaults = RunParams::default();
    let dt0 = match e.f64("time", "dt0")? {
        Some((v, line)) => positive("dt0", v, line)?,
        None => defaults.dt0,
    };
    let dt_min = match e.f64("time", "dt_min")? {
        Some((v, line)) => positive("dt_min", v, line)?,
        None => defaults.dt_min,
    };
    let cfl_c = match e.f64("time", "cfl_c")? {
        Some((v, line)) => positive("cfl_c", v, line)?,
        None => defaults.cfl_c,
    };
    let f_cap = match e.get("time", "f_cap") {
        None | Some(("auto", _)) => None,
        Some((v, line)) => {
            let x: f64 =
                v.parse().map_err(|_| {
                    config_err(line, format!("f_cap: expected auto or a number, got \"{v}\""))
                })?;
            if x.is_nan() || x <= 0.0 {
                return Err(config_err(line, format!("f_cap must be positive, got {x}")));
            }
            Some(x)
        }
    };
    let (t_str, t_line) = e.required("time", "t_end")?;
    let t_end: f64 = t_str
        .parse()
        .map_err(|_| config_err(t_line, format!("t_end: not a number: \"{t_str}\"")))?;
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(config_err(t_line, format!("t_end must be nonnegative and finite, got {t_end}")));
    }
    let report_stride = match e.usize("time", "report_stride")? {
        Some((0, line)) => return Err(config_err(line, "report_stride must be at least 1")),
        Some((v, _)) => v as u64,
        None => defaults.report_stride,
    };

    let (kind, kind_line) = e.required("initial", "kind")?;
    let field = |key: &str| -> Result<(f64, usize)> {
        e.f64("initial", key)?.ok_or_else(|| {
            config_err(kind_line, format!("initial kind \"{kind}\" requires key \"{key}\""))
        })
    };
    let forbid = |keys: &[&str]| -> Result<()> {
        for key in keys {
            if let Some((_, line)) = e.get("initial", key) {
                return Err(config_err(
                    line,
                    format!("key \"{key}\" is not used by initial kind \"{kind}\""),
                ));
            }
        }
        Ok(())
    };
    let initial = match kind {
        "blowup" => {
            forbid(&["alpha", "path"])?;
            let (m, ml) = field("m")?;
            let (en, el) = field("e")?;
            let (rho, rl) = field("rho")?;
            let (beta, bl) = field("beta")?;
            InitialData::Blowup {
                m: positive("m", m, ml)?,
                e: positive("e", en, el)?,
                rho: unit_interval("rho", rho, rl)?,
                beta: unit_interval("beta", beta, bl)?,
            }
        }
        "bose_einstein" => {
            forbid(&["m", "e", "rho", "path"])?;
            let (beta, bl) = field("beta")?;
            let (alpha, al) = field("alpha")?;
            InitialData::BoseEinstein {
                beta: positive("beta", beta, bl)?,
                alpha: positive("alpha", alpha, al)?,
            }
        }
        "file" => {
            forbid(&["m", "e", "rho", "beta", "alpha"])?;
            let (path, _) = e.required("initial", "path")?;
            InitialData::File { path: path.to_string() }
        }
        other => {
            return Err(config_err(
                kind_line,
                format!("kind: expected blowup, bose_einstein, or file, got \"{other}\""),
            ))
        }
    };

    let theta1 = match e.f64("diagnostics", "theta1")? {
        Some((v, line)) if !(v.is_finite() && v >= 0.0) => {
            return Err(config_err(line, format!("theta1 must be nonnegative, got {v}")))
        }
        Some((v, _)) => v,
        None => 0.5,
    };
    let theta2 = match e.f64("diagnostics", "theta2")? {
        Some((v, line)) if !(v.is_finite() && v >= 0.0) => {
            return Err(config_err(line, format!("theta2 must be nonnegative, got {v}")))
        }
        Some((v, _)) => v,
        None => 1.0,
    };
    let ell_max = e.usize("diagnostics", "ell_max")?.map_or(8, |(v, _)| v);
    let fit_lo = e.f64("diagnostics", "fit_lo")?;
    let fit_hi = e.f64("diagnostics", "fit_hi")?;
    let fit_window = match (fit_lo, fit_hi) {
        (None, None) => None,
        (Some((lo, ll)), Some((hi, _))) => {
            if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
                return Err(config_err(ll, format!("fit window needs 0 < fit_lo < fit_hi, got [{lo}, {hi}]")));
            }
            Some((lo, hi))
        }
        (Some((_, line)), None) | (None, Some((_, line))) => {
            return Err(config_err(line, "fit_lo and fit_hi must be given together"))
        }
    };
    let mass_below = match e.get("diagnostics", "mass_below") {
        None => Vec::new(),
        Some((v, line)) => {
            let mut radii = Vec::new();
            for part in v.split(',') {
                let part = part.trim();
                let r: f64 = part.parse().map_err(|_| {
                    config_err(line, format!("mass_below: not a number: \"{part}\""))
                })?;
                radii.push(positive("mass_below entry", r, line)?);
            }
            radii
        }
    };

    let path_of = |key: &str| e.get("output", key).map(|(v, _)| v.to_string());
    let convention = match e.get("output", "moment_convention") {
        None | Some(("physical", _)) => MomentConvention::Physical,
        Some(("plain", _)) => MomentConvention::Plain,
        Some((v, line)) => {
            return Err(config_err(
                line,
                format!("moment_convention: expected physical or plain, got \"{v}\""),
            ))
        }
    };

    Ok(SimConfig {
        grid_n,
        eps_max,
        scheme,
        operator,
        cubic_only,
        dt0,
        dt_min,
        cfl_c,
        f_cap,
        t_end,
        report_stride,
        initial,
        theta1,
        theta2,
        ell_max,
        fit_window,
        mass_below,
        series_path: path_of("series"),
        snapshot_path: path_of("snapshot"),
        summary_path: path_of("summary"),
        convention,
    })
}

impl SimConfig {
    /// Emit the canonical document; [`parse_config`] inverts it exactly.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "[grid]");
        let _ = writeln!(w, "n = {}", self.grid_n);
        let _ = writeln!(w, "eps_max = {}", self.eps_max);
        let _ = writeln!(w, "\n[scheme]");
        let method = match self.scheme {
            Scheme::Rk4 => "rk4",
            Scheme::Exponential => "exponential",
        };
        let _ = writeln!(w, "method = {method}");
        let operator = match self.operator {
            OperatorKind::Conservative => "conservative",
            OperatorKind::Collocation => "collocation",
        };
        let _ = writeln!(w, "operator = {operator}");
        let _ = writeln!(w, "cubic_only = {}", self.cubic_only);
        let _ = writeln!(w, "\n[time]");
        let _ = writeln!(w, "dt0 = {}", self.dt0);
        let _ = writeln!(w, "dt_min = {}", self.dt_min);
        let _ = writeln!(w, "cfl_c = {}", self.cfl_c);
        match self.f_cap {
            None => {
                let _ = writeln!(w, "f_cap = auto");
            }
            Some(v) => {
                let _ = writeln!(w, "f_cap = {v}");
            }
        }
        let _ = writeln!(w, "t_end = {}", self.t_end);
        let _ = writeln!(w, "report_stride = {}", self.report_stride);
        let _ = writeln!(w, "\n[initial]");
        match &self.initial {
            InitialData::Blowup { m, e, rho, beta } => {
                let _ = writeln!(w, "kind = blowup");
                let _ = writeln!(w, "m = {m}");
                let _ = writeln!(w, "e = {e}");
                let _ = writeln!(w, "rho = {rho}");
                let _ = writeln!(w, "beta = {beta}");
            }
            InitialData::BoseEinstein { beta, alpha } => {
                let _ = writeln!(w, "kind = bose_einstein");
                let _ = writeln!(w, "beta = {beta}");
                let _ = writeln!(w, "alpha = {alpha}");
            }
            InitialData::File { path } => {
                let _ = writeln!(w, "kind = file");
                let _ = writeln!(w, "path = {path}");
            }
        }
        let _ = writeln!(w, "\n[diagnostics]");
        let _ = writeln!(w, "theta1 = {}", self.theta1);
        let _ = writeln!(w, "theta2 = {}", self.theta2);
        let _ = writeln!(w, "ell_max = {}", self.ell_max);
        if let Some((lo, hi)) = self.fit_window {
            let _ = writeln!(w, "fit_lo = {lo}");
            let _ = writeln!(w, "fit_hi = {hi}");
        }
        if !self.mass_below.is_empty() {
            let radii: Vec<String> = self.mass_below.iter().map(|r| r.to_string()).collect();
            let _ = writeln!(w, "mass_below = {}", radii.join(", "));
        }
        let _ = writeln!(w, "\n[output]");
        for (key, path) in [
            ("series", &self.series_path),
            ("snapshot", &self.snapshot_path),
            ("summary", &self.summary_path),
        ] {
            if let Some(path) = path {
                let _ = writeln!(w, "{key} = {path}");
            }
        }
        let convention = match self.convention {
            MomentConvention::Physical => "physical",
            MomentConvention::Plain => "plain",
        };
        let _ = writeln!(w, "moment_convention = {convention}");
        out
    }

    /// The integrator parameters this configuration describes.
    pub fn to_run_params(&self) -> RunParams {
        RunParams {
            scheme: self.scheme,
            operator: self.operator,
            cubic_only: self.cubic_only,
            dt0: self.dt0,
            dt_min: self.dt_min,
            cfl_c: self.cfl_c,
            f_cap: self.f_cap,
            t_end: self.t_end,
            report_stride: self.report_stride,
            mass_below_radii: self.mass_below.clone(),
            fit_window: self.fit_window,
        }
    }

    /// Replace one sweepable parameter by a new value. Grid and time
    /// parameters apply to every configuration; rho/beta/m/e/alpha only to
    /// the matching initial kind.
    pub fn apply_override(&self, param: &str, value: f64) -> Result<SimConfig> {
        let mut cfg = self.clone();
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        match param {
            "n" => {
                if !(value.is_finite() && value >= 2.0 && value.fract() == 0.0) {
                    return bad(format!("n override must be an integer >= 2, got {value}"));
                }
                cfg.grid_n = value as usize;
            }
            "eps_max" => cfg.eps_max = positive("eps_max", value, 0).map_err(remap)?,
            "dt0" => cfg.dt0 = positive("dt0", value, 0).map_err(remap)?,
            "t_end" => {
                if !(value.is_finite() && value >= 0.0) {
                    return bad(format!("t_end override must be nonnegative, got {value}"));
                }
                cfg.t_end = value;
            }
            "rho" | "beta" | "m" | "e" | "alpha" => match (&mut cfg.initial, param) {
                (InitialData::Blowup { rho, .. }, "rho") => {
                    *rho = unit_interval("rho", value, 0).map_err(remap)?
                }
                (InitialData::Blowup { beta, .. }, "beta") => {
                    *beta = unit_interval("beta", value, 0).map_err(remap)?
                }
                (InitialData::Blowup { m, .. }, "m") => {
                    *m = positive("m", value, 0).map_err(remap)?
                }
                (InitialData::Blowup { e, .. }, "e") => {
                    *e = positive("e", value, 0).map_err(remap)?
                }
                (InitialData::BoseEinstein { beta, .. }, "beta") => {
                    *beta = positive("beta", value, 0).map_err(remap)?
                }
                (InitialData::BoseEinstein { alpha, .. }, "alpha") => {
                    *alpha = positive("alpha", value, 0).map_err(remap)?
                }
                _ => {
                    return bad(format!(
                        "parameter \"{param}\" does not apply to this initial kind"
                    ))
                }
            },
            other => {
                return bad(format!(
                    "unknown sweep parameter \"{other}\" \
                     (expected n, eps_max, dt0, t_end, rho, beta, m, e, or alpha)"
                ))
            }
        }
        Ok(cfg)
    }
}

/// Overrides reuse the field validators, whose errors carry config lines;
/// strip the line since an override has none.
fn remap(err: Error) -> Error {
    match err {
        Error::Config { msg, .. } => Error::InvalidArgument(msg),
        other => other,
    }
}
