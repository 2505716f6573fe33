//! Line-oriented `key = value` run configuration.
//!
//! ```text
//! # comment
//! alpha = 0.75
//! n = 1
//! m = 1
//! lagrangian = u1^2/2
//! phi1 = u1
//! q1_start = 0
//! q1_end = 1          # or `free`
//!
//! [symmetry momentum]
//! xi1 = 1
//! ```
//!
//! Keys before the first `[symmetry ...]` header describe the problem, the
//! grid and the solver; keys after it belong to the most recent block.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::expr::{parse, Expr, VarContext};
use crate::fracops::FractionalOrder;
use crate::model::{EndCondition, ProblemSpec};
use crate::noether::SymmetryGenerator;
use crate::solver::SolverOptions;

pub const DEFAULT_GRID_N: usize = 128;
pub const DEFAULT_CONSERVATION_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.source, l, self.message),
            None => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub spec: ProblemSpec,
    pub grid_n: usize,
    pub solver: SolverOptions,
    pub conservation_tolerance: f64,
    /// Adds operator self-checks on the run grid to the report.
    pub diagnostics: bool,
    pub symmetries: Vec<SymmetryGenerator>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Default)]
struct Section {
    name: String,
    line: usize,
    keys: BTreeMap<String, Entry>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.keys.remove(key)
    }
}

struct Loader<'a> {
    source: &'a str,
}

impl Loader<'_> {
    fn err(&self, line: Option<usize>, message: impl Into<String>) -> ConfigError {
        ConfigError {
            source: self.source.to_string(),
            line,
            message: message.into(),
        }
    }

    fn required(&self, sec: &mut Section, key: &str) -> Result<Entry, ConfigError> {
        sec.take(key)
            .ok_or_else(|| self.err(None, format!("missing required key `{key}`")))
    }

    fn real(&self, e: &Entry, key: &str) -> Result<f64, ConfigError> {
        e.value
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(Some(e.line), format!("`{key}` must be a finite real, got `{}`", e.value)))
    }

    fn real_or(&self, sec: &mut Section, key: &str, default: f64) -> Result<f64, ConfigError> {
        sec.take(key).map_or(Ok(default), |e| self.real(&e, key))
    }

    fn count(&self, e: &Entry, key: &str) -> Result<usize, ConfigError> {
        e.value
            .parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| self.err(Some(e.line), format!("`{key}` must be a positive integer, got `{}`", e.value)))
    }

    fn expr(&self, e: &Entry, key: &str, ctx: &VarContext) -> Result<Expr, ConfigError> {
        parse(&e.value, ctx).map_err(|err| self.err(Some(e.line), format!("in `{key}`: {err}")))
    }

    fn expr_or_zero(&self, sec: &mut Section, key: &str, ctx: &VarContext) -> Result<Expr, ConfigError> {
        sec.take(key).map_or(Ok(Expr::num(0.0)), |e| self.expr(&e, key, ctx))
    }

    fn reject_leftovers(&self, sec: &Section) -> Result<(), ConfigError> {
        match sec.keys.iter().min_by_key(|(_, e)| e.line) {
            Some((k, e)) => Err(self.err(Some(e.line), format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }
}

fn split_sections(text: &str, loader: &Loader<'_>) -> Result<Vec<Section>, ConfigError> {
    let mut sections = vec![Section::default()];
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(header) = content.strip_prefix('[') {
            let inner = header
                .strip_suffix(']')
                .ok_or_else(|| loader.err(Some(line), "unterminated section header"))?;
            let mut words = inner.split_whitespace();
            let name = match (words.next(), words.next(), words.next()) {
                (Some("symmetry"), Some(name), None) => name,
                _ => return Err(loader.err(Some(line), "expected `[symmetry <name>]`")),
            };
            if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(loader.err(Some(line), format!("invalid symmetry name `{name}`")));
            }
            if sections.iter().skip(1).any(|s| s.name == name) {
                return Err(loader.err(Some(line), format!("duplicate symmetry `{name}`")));
            }
            sections.push(Section {
                name: name.to_string(),
                line,
                keys: BTreeMap::new(),
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| loader.err(Some(line), "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(loader.err(Some(line), "expected `key = value`"));
        }
        let sec = sections.last_mut().expect("at least one section");
        let entry = Entry {
            value: value.to_string(),
            line,
        };
        if let Some(prev) = sec.keys.insert(key.to_string(), entry) {
            return Err(loader.err(Some(line), format!("duplicate key `{key}` (first on line {})", prev.line)));
        }
    }
    Ok(sections)
}

/// Parses configuration text. `source` names the origin in diagnostics.
pub fn parse_config(text: &str, source: &str) -> Result<RunConfig, ConfigError> {
    let ld = Loader { source };
    let mut sections = split_sections(text, &ld)?.into_iter();
    let mut top = sections.next().expect("top-level section");

    let alpha_entry = ld.required(&mut top, "alpha")?;
    let order = FractionalOrder::new(ld.real(&alpha_entry, "alpha")?)
        .map_err(|e| ld.err(Some(alpha_entry.line), e.to_string()))?;
    let t0 = ld.real_or(&mut top, "t0", 0.0)?;
    let t1_entry = top.take("t1");
    let t1 = t1_entry.as_ref().map_or(Ok(1.0), |e| ld.real(e, "t1"))?;
    let n_entry = ld.required(&mut top, "n")?;
    let n = ld.count(&n_entry, "n")?;
    let m_entry = ld.required(&mut top, "m")?;
    let m = ld.count(&m_entry, "m")?;

    let primal = VarContext::primal(n, m);
    let lagrangian = ld.expr(&ld.required(&mut top, "lagrangian")?, "lagrangian", &primal)?;
    let mut dynamics = Vec::with_capacity(n);
    let mut start = Vec::with_capacity(n);
    let mut end = Vec::with_capacity(n);
    for i in 1..=n {
        let key = format!("phi{i}");
        dynamics.push(ld.expr(&ld.required(&mut top, &key)?, &key, &primal)?);
        let key = format!("q{i}_start");
        start.push(ld.real(&ld.required(&mut top, &key)?, &key)?);
        let key = format!("q{i}_end");
        let e = ld.required(&mut top, &key)?;
        end.push(if e.value == "free" {
            EndCondition::Free
        } else {
            EndCondition::Fixed(ld.real(&e, &key)?)
        });
    }
    let spec = ProblemSpec::new(order, t0, t1, n, m, lagrangian, dynamics, start, end)
        .map_err(|e| ld.err(t1_entry.map(|e| e.line), e.to_string()))?;

    let grid_n = top
        .take("grid_n")
        .map_or(Ok(DEFAULT_GRID_N), |e| {
            let v = ld.count(&e, "grid_n")?;
            if v < 2 {
                return Err(ld.err(Some(e.line), "`grid_n` must be at least 2"));
            }
            Ok(v)
        })?;
    let defaults = SolverOptions::default();
    let solver = SolverOptions {
        max_iterations: top
            .take("max_iterations")
            .map_or(Ok(defaults.max_iterations), |e| ld.count(&e, "max_iterations"))?,
        residual_tolerance: ld.real_or(&mut top, "residual_tolerance", defaults.residual_tolerance)?,
        step_damping: ld.real_or(&mut top, "step_damping", defaults.step_damping)?,
        jacobian_fd_step: ld.real_or(&mut top, "jacobian_fd_step", defaults.jacobian_fd_step)?,
    };
    solver.validate().map_err(|e| ld.err(None, e.to_string()))?;
    let tol_entry = top.take("conservation_tolerance");
    let conservation_tolerance = tol_entry
        .as_ref()
        .map_or(Ok(DEFAULT_CONSERVATION_TOLERANCE), |e| ld.real(e, "conservation_tolerance"))?;
    if conservation_tolerance < 0.0 {
        return Err(ld.err(tol_entry.map(|e| e.line), "`conservation_tolerance` must be non-negative"));
    }
    let diagnostics = match top.take("diagnostics") {
        None => false,
        Some(e) => match e.value.as_str() {
            "true" => true,
            "false" => false,
            other => return Err(ld.err(Some(e.line), format!("`diagnostics` must be true or false, got `{other}`"))),
        },
    };
    let output = top.take("output").map(|e| PathBuf::from(e.value));
    ld.reject_leftovers(&top)?;

    let adjoint = VarContext::with_adjoint(n, m);
    let mut symmetries = Vec::new();
    for mut sec in sections {
        let tau = ld.expr_or_zero(&mut sec, "tau", &adjoint)?;
        let mut pick = |prefix: &str, count: usize| {
            (1..=count)
                .map(|i| ld.expr_or_zero(&mut sec, &format!("{prefix}{i}"), &adjoint))
                .collect::<Result<Vec<_>, _>>()
        };
        let xi = pick("xi", n)?;
        let sigma = pick("sigma", m)?;
        let rho = pick("rho", n)?;
        ld.reject_leftovers(&sec)?;
        let gen = SymmetryGenerator::new(sec.name.clone(), n, m, tau, xi, sigma, rho)
            .map_err(|e| ld.err(Some(sec.line), e.to_string()))?;
        symmetries.push(gen);
    }

    Ok(RunConfig {
        name: source_stem(source),
        spec,
        grid_n,
        solver,
        conservation_tolerance,
        diagnostics,
        symmetries,
        output,
    })
}

fn source_stem(source: &str) -> String {
    Path::new(source)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| source.to_string())
}

/// Reads a configuration file, or a built-in example when `path` names one
/// and no such file exists.
pub fn load_config(path: &str) -> Result<RunConfig, ConfigError> {
    let p = Path::new(path);
    if !p.exists() {
        if let Some(text) = super::examples::source(path) {
            return parse_config(text, path);
        }
    }
    let text = std::fs::read_to_string(p).map_err(|e| ConfigError {
        source: path.to_string(),
        line: None,
        message: format!("cannot read configuration: {e}"),
    })?;
    parse_config(&text, path)
}
