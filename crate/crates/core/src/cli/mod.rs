//! Config-driven pipeline behind the `fracnoether` binary: solve, check the
//! Pontryagin conditions and every configured symmetry, and render CSV and
//! report artifacts.

pub mod config;
pub mod examples;

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::fracops::{caputo_deriv_left, SampledPath};
use crate::model::{euler_lagrange_residual, pontryagin_residual, ResidualReport};
use crate::noether::{check_symmetry, cov_noether_charge, SymmetryReport};
use crate::solver::{convergence_study, solve_extremal, SolveOutcome};

pub use config::{load_config, parse_config, ConfigError, RunConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const RESIDUALS_FILE: &str = "residuals.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const STUDY_FILE: &str = "study.csv";

/// Fixed 17-significant-digit rendering used in every artifact.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunArtifacts {
    /// `None` when the solver failed before producing an extremal.
    pub trajectory: Option<String>,
    pub residuals: Option<String>,
    pub report: String,
    pub passed: bool,
}

impl RunArtifacts {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_PASS
        } else {
            EXIT_NUMERIC
        }
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        if let Some(t) = &self.trajectory {
            std::fs::write(dir.join(TRAJECTORY_FILE), t)?;
        }
        if let Some(r) = &self.residuals {
            std::fs::write(dir.join(RESIDUALS_FILE), r)?;
        }
        std::fs::write(dir.join(REPORT_FILE), &self.report)
    }
}

struct Evaluation {
    outcome: SolveOutcome,
    residuals: ResidualReport,
    caputo_q: SampledPath,
    euler_lagrange: Option<SampledPath>,
    symmetries: Vec<(SymmetryReport, Option<SampledPath>)>,
}

fn evaluate(cfg: &RunConfig) -> Result<Evaluation> {
    let spec = &cfg.spec;
    let grid = spec.grid(cfg.grid_n)?;
    let outcome = solve_extremal(spec, grid, &cfg.solver)?;
    let ext = &outcome.extremal;
    let residuals = pontryagin_residual(spec, ext)?;
    let caputo_q = caputo_deriv_left(&ext.q, spec.order());
    let cov = spec.is_calculus_of_variations();
    let euler_lagrange = cov.then(|| euler_lagrange_residual(spec, &ext.q)).transpose()?;
    let symmetries = cfg
        .symmetries
        .iter()
        .map(|g| {
            let report = check_symmetry(spec, ext, g, cfg.conservation_tolerance)?;
            let cov_charge = cov.then(|| cov_noether_charge(spec, &ext.q, g)).transpose()?;
            Ok((report, cov_charge))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation {
        outcome,
        residuals,
        caputo_q,
        euler_lagrange,
        symmetries,
    })
}

fn report_header(cfg: &RunConfig) -> String {
    let (a, b) = cfg.spec.interval();
    let mut r = String::new();
    let _ = writeln!(r, "config: {}", cfg.name);
    let _ = writeln!(r, "alpha: {}", fmt_num(cfg.spec.alpha()));
    let _ = writeln!(r, "interval: {} {}", fmt_num(a), fmt_num(b));
    let _ = writeln!(r, "grid_n: {}", cfg.grid_n);
    r
}

fn diagnostics(cfg: &RunConfig) -> Result<String> {
    let grid = cfg.spec.grid(cfg.grid_n)?;
    let order = cfg.spec.order();
    let alpha = order.value();
    let one = SampledPath::from_fn(grid, |_| 1.0)?;
    let constant = caputo_deriv_left(&one, order);
    let sq = caputo_deriv_left(&SampledPath::from_fn(grid, |t| (t - grid.a()).powi(2))?, order);
    let coef = 2.0 / crate::gamma::gamma(3.0 - alpha);
    let sq_err = grid
        .nodes()
        .enumerate()
        .map(|(j, t)| (sq.get(j, 0) - coef * (t - grid.a()).powf(2.0 - alpha)).abs())
        .fold(0.0, f64::max);
    let const_max = constant.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(format!(
        "diagnostics.caputo_constant_max_abs: {}\ndiagnostics.caputo_square_max_error: {}\n",
        fmt_num(const_max),
        fmt_num(sq_err)
    ))
}

fn trajectory_csv(ev: &Evaluation) -> String {
    let ext = &ev.outcome.extremal;
    let (n, m) = (ext.q.dim(), ext.u.dim());
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("q{i}")));
    header.extend((1..=m).map(|k| format!("u{k}")));
    header.extend((1..=n).map(|i| format!("p{i}")));
    header.extend((1..=n).map(|i| format!("caputo_q{i}")));
    let mut out = header.join(",") + "\n";
    for (j, t) in ext.grid().nodes().enumerate() {
        let row: Vec<String> = std::iter::once(t)
            .chain(ext.q.row(j).iter().copied())
            .chain(ext.u.row(j).iter().copied())
            .chain(ext.p.row(j).iter().copied())
            .chain(ev.caputo_q.row(j).iter().copied())
            .map(fmt_num)
            .collect();
        out += &row.join(",");
        out.push('\n');
    }
    out
}

fn residuals_csv(ev: &Evaluation) -> String {
    let r = &ev.residuals;
    let mut columns: Vec<(String, &SampledPath, usize)> = Vec::new();
    for i in 0..r.adjoint_residual.dim() {
        columns.push((format!("adjoint_q{}", i + 1), &r.adjoint_residual, i));
    }
    for i in 0..r.state_residual.dim() {
        columns.push((format!("state_q{}", i + 1), &r.state_residual, i));
    }
    for k in 0..r.stationarity_residual.dim() {
        columns.push((format!("stationarity_u{}", k + 1), &r.stationarity_residual, k));
    }
    if let Some(el) = &ev.euler_lagrange {
        for i in 0..el.dim() {
            columns.push((format!("euler_lagrange_q{}", i + 1), el, i));
        }
    }
    for (s, cov) in &ev.symmetries {
        columns.push((format!("{}_charge", s.name), &s.charge, 0));
        columns.push((format!("{}_invariance", s.name), &s.invariance, 0));
        for (k, pair) in s.conservation.pairs.iter().enumerate() {
            columns.push((format!("{}_bracket{}", s.name, k + 1), &pair.bracket, 0));
        }
        if let Some(c) = cov {
            columns.push((format!("{}_cov_charge", s.name), c, 0));
        }
    }
    let grid = *r.adjoint_residual.grid();
    let mut out = String::from("t");
    for (name, _, _) in &columns {
        out.push(',');
        out += name;
    }
    out.push('\n');
    for (j, t) in grid.nodes().enumerate() {
        out += &fmt_num(t);
        for (_, path, c) in &columns {
            out.push(',');
            out += &fmt_num(path.get(j, *c));
        }
        out.push('\n');
    }
    out
}

fn symmetry_report(out: &mut String, s: &SymmetryReport, cov: Option<&SampledPath>) {
    let c = &s.conservation;
    let key = |field: &str| format!("symmetry.{}.{}", s.name, field);
    let _ = writeln!(out, "{}: {}", key("max_bracket_residual"), fmt_num(c.max_bracket_residual));
    for (k, p) in c.pairs.iter().enumerate() {
        let _ = writeln!(out, "{}: {}", key(&format!("pair{}_residual", k + 1)), fmt_num(p.max_residual));
        let _ = writeln!(out, "{}: {}", key(&format!("pair{}_orientation", k + 1)), p.orientation);
    }
    if let Some(d) = c.classical_drift {
        let _ = writeln!(out, "{}: {}", key("classical_drift"), fmt_num(d));
    }
    let _ = writeln!(out, "{}: {}", key("invariance_norm"), fmt_num(s.invariance_norm));
    if let Some(cov) = cov {
        let gap = (0..cov.grid().len())
            .map(|j| (s.charge.get(j, 0) - cov.get(j, 0)).abs())
            .fold(0.0, f64::max);
        let _ = writeln!(out, "{}: {}", key("cov_charge_difference"), fmt_num(gap));
    }
    let _ = writeln!(out, "{}: {}", key("tolerance"), fmt_num(c.tolerance));
    let _ = writeln!(out, "{}: {}", key("passed"), c.passed);
}

/// Runs the full pipeline. Numeric failures are reported in the artifacts
/// rather than returned.
pub fn execute(cfg: &RunConfig) -> RunArtifacts {
    let mut report = report_header(cfg);
    let ev = match evaluate(cfg) {
        Ok(ev) => ev,
        Err(e) => {
            let _ = writeln!(report, "error: {e}");
            report += "status: fail\n";
            return RunArtifacts {
                trajectory: None,
                residuals: None,
                report,
                passed: false,
            };
        }
    };
    let o = &ev.outcome;
    let r = &ev.residuals;
    let _ = writeln!(report, "converged: {}", o.converged);
    let _ = writeln!(report, "iterations: {}", o.iterations);
    let _ = writeln!(report, "final_residual: {}", fmt_num(o.final_residual));
    let _ = writeln!(report, "adjoint_norm: {}", fmt_num(r.adjoint_norm));
    let _ = writeln!(report, "state_norm: {}", fmt_num(r.state_norm));
    let _ = writeln!(report, "stationarity_norm: {}", fmt_num(r.stationarity_norm));
    for (i, (s, e)) in r.transversality_start.iter().zip(&r.transversality_end).enumerate() {
        let _ = writeln!(report, "transversality_start_q{}: {}", i + 1, fmt_num(*s));
        let _ = writeln!(report, "transversality_end_q{}: {}", i + 1, fmt_num(*e));
    }
    if let Some(el) = &ev.euler_lagrange {
        let _ = writeln!(report, "euler_lagrange_norm: {}", fmt_num(el.interior_max_abs()));
    }
    for (s, cov) in &ev.symmetries {
        symmetry_report(&mut report, s, cov.as_ref());
    }
    if cfg.diagnostics {
        match diagnostics(cfg) {
            Ok(d) => report += &d,
            Err(e) => {
                let _ = writeln!(report, "diagnostics.error: {e}");
            }
        }
    }
    let passed = o.converged && ev.symmetries.iter().all(|(s, _)| s.conservation.passed);
    report += if passed { "status: pass\n" } else { "status: fail\n" };
    RunArtifacts {
        trajectory: Some(trajectory_csv(&ev)),
        residuals: Some(residuals_csv(&ev)),
        report,
        passed,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StudyArtifacts {
    pub table: String,
    pub csv: String,
    /// False when any row failed.
    pub all_rows_ok: bool,
}

/// Refinement study over `grid_ns`, one row per N.
pub fn study(cfg: &RunConfig, grid_ns: &[usize]) -> Result<StudyArtifacts> {
    let grids = grid_ns
        .iter()
        .map(|&n| cfg.spec.grid(n))
        .collect::<Result<Vec<_>>>()?;
    let rows = convergence_study(&cfg.spec, &grids, &cfg.solver, &cfg.symmetries);
    let names: Vec<&str> = cfg.symmetries.iter().map(|g| g.name.as_str()).collect();

    let mut csv = String::from("N,newton_residual,converged");
    let mut table = format!("{:>6}  {:>24}  {:>9}", "N", "newton_residual", "converged");
    for n in &names {
        let _ = write!(csv, ",max_bracket_residual_{n}");
        let _ = write!(table, "  {:>24}", n);
    }
    csv.push('\n');
    table.push('\n');
    let mut all_rows_ok = true;
    for row in &rows {
        let _ = write!(csv, "{}", row.intervals);
        let _ = write!(table, "{:>6}", row.intervals);
        match &row.result {
            Ok(v) => {
                let _ = write!(csv, ",{},{}", fmt_num(v.final_residual), v.converged);
                let _ = write!(table, "  {:>24}  {:>9}", fmt_num(v.final_residual), v.converged);
                for r in &v.conservation_residuals {
                    let _ = write!(csv, ",{}", fmt_num(*r));
                    let _ = write!(table, "  {:>24}", fmt_num(*r));
                }
            }
            Err(e) => {
                all_rows_ok = false;
                for _ in 0..names.len() + 2 {
                    csv += ",FAILED";
                }
                let _ = write!(table, "  FAILED: {e}");
            }
        }
        csv.push('\n');
        table.push('\n');
    }
    Ok(StudyArtifacts {
        table,
        csv,
        all_rows_ok,
    })
}
