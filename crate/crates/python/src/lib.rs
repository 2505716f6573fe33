use std::collections::HashMap;

use fracnoether::cli::{self, ConfigError, RunConfig};
use fracnoether::expr::{parse, Bindings, Expr, Var, VarContext};
use fracnoether::fracops::{self, FractionalOrder, Grid, SampledPath};
use fracnoether::model::{pontryagin_residual, Extremal};
use fracnoether::noether::check_symmetry;
use fracnoether::solver::solve_extremal;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(pyfracnoether, FracError, PyException);
create_exception!(pyfracnoether, ConfigFileError, FracError);

fn to_py(e: fracnoether::Error) -> PyErr {
    FracError::new_err(e.to_string())
}

fn config_err(e: ConfigError) -> PyErr {
    ConfigFileError::new_err(e.to_string())
}

fn scalar_path(values: Vec<f64>, a: f64, b: f64) -> PyResult<SampledPath> {
    if values.len() < 3 {
        return Err(PyValueError::new_err("need at least 3 samples"));
    }
    let grid = Grid::new(a, b, values.len() - 1).map_err(to_py)?;
    SampledPath::new(grid, 1, values).map_err(to_py)
}

fn order(alpha: f64) -> PyResult<FractionalOrder> {
    FractionalOrder::new(alpha).map_err(to_py)
}

/// Left Caputo derivative of samples on a uniform grid over [a, b].
#[pyfunction]
fn caputo_deriv_left(values: Vec<f64>, a: f64, b: f64, alpha: f64) -> PyResult<Vec<f64>> {
    Ok(fracops::caputo_deriv_left(&scalar_path(values, a, b)?, order(alpha)?).component(0))
}

#[pyfunction]
fn caputo_deriv_right(values: Vec<f64>, a: f64, b: f64, alpha: f64) -> PyResult<Vec<f64>> {
    Ok(fracops::caputo_deriv_right(&scalar_path(values, a, b)?, order(alpha)?).component(0))
}

/// Left Riemann-Liouville derivative; the node t = a is NaN when f(a) != 0.
#[pyfunction]
fn rl_deriv_left(values: Vec<f64>, a: f64, b: f64, alpha: f64) -> PyResult<Vec<f64>> {
    Ok(fracops::rl_deriv_left(&scalar_path(values, a, b)?, order(alpha)?).component(0))
}

/// Right Riemann-Liouville derivative; the node t = b is NaN when f(b) != 0.
#[pyfunction]
fn rl_deriv_right(values: Vec<f64>, a: f64, b: f64, alpha: f64) -> PyResult<Vec<f64>> {
    Ok(fracops::rl_deriv_right(&scalar_path(values, a, b)?, order(alpha)?).component(0))
}

#[pyfunction]
fn rl_integral_right(values: Vec<f64>, a: f64, b: f64, beta: f64) -> PyResult<Vec<f64>> {
    Ok(fracops::rl_integral_right(&scalar_path(values, a, b)?, beta)
        .map_err(to_py)?
        .component(0))
}

fn parse_var(name: &str, ctx: &VarContext) -> PyResult<Var> {
    ctx.lookup(name)
        .ok_or_else(|| PyValueError::new_err(format!("unknown variable `{name}`")))
}

/// Parsed expression over t, q1.., u1.. and optionally p1...
#[pyclass(name = "Expression", frozen)]
struct PyExpression {
    expr: Expr,
    ctx: VarContext,
}

#[pymethods]
impl PyExpression {
    #[new]
    #[pyo3(signature = (source, n, m, adjoint = false))]
    fn new(source: &str, n: usize, m: usize, adjoint: bool) -> PyResult<Self> {
        let ctx = if adjoint {
            VarContext::with_adjoint(n, m)
        } else {
            VarContext::primal(n, m)
        };
        let expr = parse(source, &ctx).map_err(|e| FracError::new_err(e.to_string()))?;
        Ok(Self { expr, ctx })
    }

    #[pyo3(signature = (t, q, u, p = Vec::new()))]
    fn evaluate(&self, t: f64, q: Vec<f64>, u: Vec<f64>, p: Vec<f64>) -> PyResult<f64> {
        self.expr
            .evaluate(&Bindings::new(t, &q, &u, &p))
            .map_err(|e| FracError::new_err(e.to_string()))
    }

    fn differentiate(&self, var: &str) -> PyResult<Self> {
        let v = parse_var(var, &self.ctx)?;
        Ok(Self {
            expr: self.expr.differentiate(v),
            ctx: self.ctx,
        })
    }

    fn free_vars(&self) -> Vec<String> {
        self.expr.free_vars().iter().map(|v| v.to_string()).collect()
    }

    fn __str__(&self) -> String {
        self.expr.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expression('{}')", self.expr)
    }
}

/// A loaded run configuration.
#[pyclass(name = "Problem", frozen)]
struct PyProblem {
    cfg: RunConfig,
}

/// Solved extremal on a grid.
#[pyclass(name = "Solution", frozen)]
struct PySolution {
    ext: Extremal,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    final_residual: f64,
}

fn components(p: &SampledPath) -> Vec<Vec<f64>> {
    (0..p.dim()).map(|i| p.component(i)).collect()
}

#[pymethods]
impl PySolution {
    #[getter]
    fn t(&self) -> Vec<f64> {
        self.ext.grid().nodes().collect()
    }

    /// State components, one list per q_i.
    #[getter]
    fn q(&self) -> Vec<Vec<f64>> {
        components(&self.ext.q)
    }

    #[getter]
    fn u(&self) -> Vec<Vec<f64>> {
        components(&self.ext.u)
    }

    #[getter]
    fn p(&self) -> Vec<Vec<f64>> {
        components(&self.ext.p)
    }
}

#[pymethods]
impl PyProblem {
    /// Loads a config file, or a built-in example by name.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            cfg: cli::load_config(path).map_err(config_err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (text, name = "inline"))]
    fn from_text(text: &str, name: &str) -> PyResult<Self> {
        Ok(Self {
            cfg: cli::parse_config(text, name).map_err(config_err)?,
        })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.cfg.spec.alpha()
    }

    #[getter]
    fn grid_n(&self) -> usize {
        self.cfg.grid_n
    }

    #[getter]
    fn symmetries(&self) -> Vec<String> {
        self.cfg.symmetries.iter().map(|g| g.name.clone()).collect()
    }

    #[pyo3(signature = (grid_n = None))]
    fn solve(&self, grid_n: Option<usize>) -> PyResult<PySolution> {
        let grid = self.cfg.spec.grid(grid_n.unwrap_or(self.cfg.grid_n)).map_err(to_py)?;
        let out = solve_extremal(&self.cfg.spec, grid, &self.cfg.solver).map_err(to_py)?;
        Ok(PySolution {
            ext: out.extremal,
            iterations: out.iterations,
            converged: out.converged,
            final_residual: out.final_residual,
        })
    }

    /// Interior max-norms of the adjoint, state and stationarity residuals.
    fn residual_norms(&self, solution: &PySolution) -> PyResult<HashMap<String, f64>> {
        let r = pontryagin_residual(&self.cfg.spec, &solution.ext).map_err(to_py)?;
        Ok(HashMap::from([
            ("adjoint".to_string(), r.adjoint_norm),
            ("state".to_string(), r.state_norm),
            ("stationarity".to_string(), r.stationarity_norm),
        ]))
    }

    /// Noether check of a configured symmetry: charge, bracket residual,
    /// invariance residual norm and pass flag.
    fn check_symmetry(&self, solution: &PySolution, name: &str, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let gen = self
            .cfg
            .symmetries
            .iter()
            .find(|g| g.name == name)
            .ok_or_else(|| PyValueError::new_err(format!("no symmetry named `{name}`")))?;
        let r = check_symmetry(&self.cfg.spec, &solution.ext, gen, self.cfg.conservation_tolerance)
            .map_err(to_py)?;
        let d = pyo3::types::PyDict::new(py);
        d.set_item("charge", r.charge.component(0))?;
        d.set_item("max_bracket_residual", r.conservation.max_bracket_residual)?;
        d.set_item("classical_drift", r.conservation.classical_drift)?;
        d.set_item("invariance_norm", r.invariance_norm)?;
        d.set_item("passed", r.conservation.passed)?;
        Ok(d.into_any().unbind())
    }

    /// Full pipeline; returns (report text, passed).
    #[pyo3(signature = (grid_n = None))]
    fn run(&self, grid_n: Option<usize>) -> (String, bool) {
        let mut cfg = self.cfg.clone();
        if let Some(n) = grid_n {
            cfg.grid_n = n;
        }
        let a = cli::execute(&cfg);
        (a.report, a.passed)
    }
}

#[pyfunction]
fn example_names() -> Vec<&'static str> {
    cli::examples::names().collect()
}

#[pymodule]
fn pyfracnoether(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FracError", m.py().get_type::<FracError>())?;
    m.add("ConfigFileError", m.py().get_type::<ConfigFileError>())?;
    m.add_function(wrap_pyfunction!(caputo_deriv_left, m)?)?;
    m.add_function(wrap_pyfunction!(caputo_deriv_right, m)?)?;
    m.add_function(wrap_pyfunction!(rl_deriv_left, m)?)?;
    m.add_function(wrap_pyfunction!(rl_deriv_right, m)?)?;
    m.add_function(wrap_pyfunction!(rl_integral_right, m)?)?;
    m.add_function(wrap_pyfunction!(example_names, m)?)?;
    m.add_class::<PyExpression>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PySolution>()?;
    Ok(())
}
