//! Direct collocation of the fractional Pontryagin conditions, solved by a
//! damped Newton iteration with a forward-difference Jacobian.
//!
//! Unknowns, per component: q at nodes 1..N (node N dropped when the right
//! end is fixed), u at nodes 0..N and p at nodes 0..N. Equations:
//!
//! * state equation ∂₄H = ᶜD_{a+}^α q at nodes 1..N,
//! * adjoint equation ∂₂H = _tD_b^α p at nodes 0..N−1,
//! * stationarity ∂₃H = 0 at nodes 0..N,
//! * for a free right end, the closure p(b) = 0.
//!
//! The one-sided equations at the ends (state at N, adjoint at 0) close the
//! system; the residual evaluation is the same code path used by
//! [`pontryagin_residual`](crate::model::pontryagin_residual).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fracops::{Grid, SampledPath};
use crate::model::{residual_paths, EndCondition, Extremal, HamiltonianSystem, ProblemSpec};
use crate::noether::{check_symmetry, SymmetryGenerator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the max-norm of the collocation residual.
    pub residual_tolerance: f64,
    /// Initial step length; halved while the residual does not decrease,
    /// down to [`SolverOptions::MIN_DAMPING`].
    pub step_damping: f64,
    /// Relative forward-difference step for the Jacobian.
    pub jacobian_fd_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            residual_tolerance: 1e-9,
            step_damping: 1.0,
            jacobian_fd_step: 1e-7,
        }
    }
}

impl SolverOptions {
    pub const MIN_DAMPING: f64 = 1.0 / 64.0;

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be positive".into()));
        }
        if !(self.residual_tolerance > 0.0 && self.residual_tolerance < 1.0) {
            return Err(Error::InvalidInput(format!(
                "residual_tolerance {} outside (0, 1)",
                self.residual_tolerance
            )));
        }
        if !(self.step_damping > 0.0 && self.step_damping <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "step_damping {} outside (0, 1]",
                self.step_damping
            )));
        }
        if !(self.jacobian_fd_step > 0.0 && self.jacobian_fd_step.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "jacobian_fd_step {} must be positive",
                self.jacobian_fd_step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub extremal: Extremal,
    /// Newton steps taken.
    pub iterations: usize,
    /// Max-norm of the collocation residual at the returned iterate.
    pub final_residual: f64,
    pub converged: bool,
}

/// Maps between the flat unknown vector and the (q, u, p) node values.
struct Layout {
    grid: Grid,
    n: usize,
    m: usize,
    start: Vec<f64>,
    end: Vec<EndCondition>,
    q_offsets: Vec<usize>,
    u_offset: usize,
    p_offset: usize,
    len: usize,
}

impl Layout {
    fn new(spec: &ProblemSpec, grid: Grid) -> Self {
        let nn = grid.intervals();
        let (n, m) = (spec.state_dim(), spec.control_dim());
        let mut q_offsets = Vec::with_capacity(n);
        let mut off = 0;
        for e in spec.end() {
            q_offsets.push(off);
            off += match e {
                EndCondition::Fixed(_) => nn - 1,
                EndCondition::Free => nn,
            };
        }
        let u_offset = off;
        let p_offset = u_offset + m * (nn + 1);
        let len = p_offset + n * (nn + 1);
        Self {
            grid,
            n,
            m,
            start: spec.start().to_vec(),
            end: spec.end().to_vec(),
            q_offsets,
            u_offset,
            p_offset,
            len,
        }
    }

    fn q_col(&self, x: &[f64], i: usize) -> Vec<f64> {
        let nn = self.grid.intervals();
        let mut col = Vec::with_capacity(nn + 1);
        col.push(self.start[i]);
        let off = self.q_offsets[i];
        match self.end[i] {
            EndCondition::Fixed(v) => {
                col.extend_from_slice(&x[off..off + nn - 1]);
                col.push(v);
            }
            EndCondition::Free => col.extend_from_slice(&x[off..off + nn]),
        }
        col
    }

    fn extremal(&self, x: &[f64]) -> Result<Extremal> {
        let len = self.grid.len();
        let q: Vec<Vec<f64>> = (0..self.n).map(|i| self.q_col(x, i)).collect();
        let u: Vec<Vec<f64>> = (0..self.m)
            .map(|j| x[self.u_offset + j * len..self.u_offset + (j + 1) * len].to_vec())
            .collect();
        let p: Vec<Vec<f64>> = (0..self.n)
            .map(|i| x[self.p_offset + i * len..self.p_offset + (i + 1) * len].to_vec())
            .collect();
        Extremal::new(
            SampledPath::from_components(self.grid, &q)?,
            SampledPath::from_components(self.grid, &u)?,
            SampledPath::from_components(self.grid, &p)?,
        )
    }

    fn initial_guess(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.len];
        let (a, b) = (self.grid.a(), self.grid.b());
        for i in 0..self.n {
            let off = self.q_offsets[i];
            let (count, target) = match self.end[i] {
                EndCondition::Fixed(v) => (self.grid.intervals() - 1, v),
                EndCondition::Free => (self.grid.intervals(), self.start[i]),
            };
            for k in 0..count {
                let s = (self.grid.node(k + 1) - a) / (b - a);
                x[off + k] = self.start[i] + s * (target - self.start[i]);
            }
        }
        x
    }
}

struct Collocation<'a> {
    spec: &'a ProblemSpec,
    sys: HamiltonianSystem,
    layout: Layout,
}

impl Collocation<'_> {
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let ext = self.layout.extremal(x)?;
        let r = residual_paths(self.spec, &self.sys, &ext)?;
        let nn = self.layout.grid.intervals();
        let mut out = Vec::with_capacity(self.layout.len);
        for col in &r.state {
            out.extend_from_slice(&col[1..=nn]);
        }
        for col in &r.adjoint {
            out.extend_from_slice(&col[0..nn]);
        }
        for col in &r.stationarity {
            out.extend_from_slice(col);
        }
        for (i, e) in self.layout.end.iter().enumerate() {
            if *e == EndCondition::Free {
                out.push(ext.p.get(nn, i));
            }
        }
        debug_assert_eq!(out.len(), self.layout.len);
        Ok(out)
    }

    fn jacobian(&self, x: &[f64], fx: &[f64], rel_step: f64) -> Result<DMatrix<f64>> {
        let dim = x.len();
        let mut jac = DMatrix::zeros(dim, dim);
        let mut xp = x.to_vec();
        for k in 0..dim {
            let step = rel_step * x[k].abs().max(1.0);
            xp[k] = x[k] + step;
            let fp = self.residual(&xp)?;
            xp[k] = x[k];
            let inv = 1.0 / step;
            for (r, (a, b)) in fp.iter().zip(fx).enumerate() {
                jac[(r, k)] = (a - b) * inv;
            }
        }
        Ok(jac)
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Computes a discrete fractional Pontryagin extremal of `spec` on `grid`.
///
/// Non-convergence is not an error: the best iterate is returned with
/// `converged = false`.
pub fn solve_extremal(spec: &ProblemSpec, grid: Grid, opts: &SolverOptions) -> Result<SolveOutcome> {
    opts.validate()?;
    spec.check_grid(&grid)?;
    let col = Collocation {
        spec,
        sys: HamiltonianSystem::new(spec),
        layout: Layout::new(spec, grid),
    };

    let mut x = col.layout.initial_guess();
    let mut fx = col.residual(&x)?;
    let mut norm = max_norm(&fx);
    if !norm.is_finite() {
        return Err(Error::InvalidInput(
            "collocation residual is not finite at the initial guess".into(),
        ));
    }
    let (mut best_x, mut best_norm) = (x.clone(), norm);
    let mut iterations = 0;

    while norm > opts.residual_tolerance && iterations < opts.max_iterations {
        iterations += 1;
        let jac = col.jacobian(&x, &fx, opts.jacobian_fd_step)?;
        let rhs = DVector::from_iterator(fx.len(), fx.iter().map(|v| -v));
        let step = jac
            .lu()
            .solve(&rhs)
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or(Error::SingularJacobian {
                iteration: iterations,
            })?;

        let mut lambda = opts.step_damping;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + lambda * d).collect();
            let trial_f = col.residual(&trial).ok();
            let trial_norm = trial_f.as_deref().map(max_norm).unwrap_or(f64::INFINITY);
            if trial_norm < norm || lambda <= SolverOptions::MIN_DAMPING {
                break trial_f.filter(|_| trial_norm.is_finite()).map(|f| (trial, f, trial_norm));
            }
            lambda = (lambda * 0.5).max(SolverOptions::MIN_DAMPING);
        };
        let Some((nx, nf, nnorm)) = accepted else {
            break;
        };
        x = nx;
        fx = nf;
        norm = nnorm;
        if norm < best_norm {
            best_x.clone_from(&x);
            best_norm = norm;
        }
    }

    Ok(SolveOutcome {
        extremal: col.layout.extremal(&best_x)?,
        iterations,
        final_residual: best_norm,
        converged: best_norm <= opts.residual_tolerance,
    })
}

/// One row of a refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub intervals: usize,
    pub result: Result<StudyValues>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyValues {
    pub final_residual: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Max bracket residual of the default decomposition, per generator.
    pub conservation_residuals: Vec<f64>,
}

/// Solves on every grid and checks each named generator on the result.
/// Failures are recorded per row; trends are reported, not asserted.
pub fn convergence_study(
    spec: &ProblemSpec,
    grids: &[Grid],
    opts: &SolverOptions,
    generators: &[SymmetryGenerator],
) -> Vec<StudyRow> {
    grids
        .iter()
        .map(|&grid| {
            let result = solve_extremal(spec, grid, opts).and_then(|out| {
                let conservation_residuals = generators
                    .iter()
                    .map(|g| {
                        check_symmetry(spec, &out.extremal, g, f64::INFINITY)
                            .map(|r| r.conservation.max_bracket_residual)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(StudyValues {
                    final_residual: out.final_residual,
                    converged: out.converged,
                    iterations: out.iterations,
                    conservation_residuals,
                })
            });
            StudyRow {
                intervals: grid.intervals(),
                result,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, VarContext};
    use crate::fracops::FractionalOrder;
    use crate::model::pontryagin_residual;

    fn spec(alpha: f64, l: &str, end: EndCondition) -> ProblemSpec {
        let ctx = VarContext::primal(1, 1);
        ProblemSpec::new(
            FractionalOrder::new(alpha).unwrap(),
            0.0,
            1.0,
            1,
            1,
            parse(l, &ctx).unwrap(),
            vec![parse("u1", &ctx).unwrap()],
            vec![0.0],
            vec![end],
        )
        .unwrap()
    }

    fn max_err(p: &SampledPath, f: impl Fn(f64) -> f64) -> f64 {
        p.grid()
            .nodes()
            .enumerate()
            .map(|(j, t)| (p.get(j, 0) - f(t)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn classical_linear_quadratic() {
        let s = spec(1.0, "u1^2/2", EndCondition::Fixed(1.0));
        let out = solve_extremal(&s, s.grid(128).unwrap(), &SolverOptions::default()).unwrap();
        assert!(out.converged);
        assert!(out.iterations <= 3, "{} iterations", out.iterations);
        assert!(max_err(&out.extremal.q, |t| t) < 1e-6);
        assert!(max_err(&out.extremal.u, |_| 1.0) < 1e-6);
        assert!(max_err(&out.extremal.p, |_| -1.0) < 1e-6);
    }

    #[test]
    fn classical_free_end_gives_zero_control() {
        let s = spec(1.0, "(u1 - 1)^2/2 + q1", EndCondition::Free);
        // q̇ = u, u = 1 − p, ṗ = −1 with p(1) = 0: p = 1 − t, u = t.
        let out = solve_extremal(&s, s.grid(64).unwrap(), &SolverOptions::default()).unwrap();
        assert!(out.converged);
        assert!(max_err(&out.extremal.p, |t| 1.0 - t) < 1e-9);
        assert!(max_err(&out.extremal.u, |t| t) < 1e-9);
        assert!(max_err(&out.extremal.q, |t| t * t / 2.0) < 1e-9);
    }

    #[test]
    fn fractional_solution_satisfies_checker() {
        let s = spec(0.5, "u1^2/2", EndCondition::Fixed(1.0));
        let out = solve_extremal(&s, s.grid(64).unwrap(), &SolverOptions::default()).unwrap();
        assert!(out.converged);
        let r = pontryagin_residual(&s, &out.extremal).unwrap();
        assert!(r.max_norm() <= 10.0 * 1e-9, "{}", r.max_norm());
        assert_eq!(out.extremal.q.get(64, 0), 1.0);
        assert_eq!(out.extremal.q.get(0, 0), 0.0);
    }

    #[test]
    fn deterministic() {
        let s = spec(0.7, "(q1^2 + u1^2)/2", EndCondition::Fixed(0.5));
        let g = s.grid(32).unwrap();
        let a = solve_extremal(&s, g, &SolverOptions::default()).unwrap();
        let b = solve_extremal(&s, g, &SolverOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reports_non_convergence() {
        let s = spec(0.7, "u1^4 + q1^2", EndCondition::Fixed(3.0));
        let opts = SolverOptions {
            max_iterations: 1,
            ..Default::default()
        };
        let out = solve_extremal(&s, s.grid(16).unwrap(), &opts).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 1);
        assert!(out.final_residual > opts.residual_tolerance);
    }

    #[test]
    fn singular_jacobian_is_reported() {
        // L independent of u: stationarity p = 0 leaves u undetermined.
        let s = spec(1.0, "q1^2", EndCondition::Fixed(1.0));
        let err = solve_extremal(&s, s.grid(8).unwrap(), &SolverOptions::default()).unwrap_err();
        assert_eq!(err, Error::SingularJacobian { iteration: 1 });
    }

    #[test]
    fn option_validation() {
        let s = spec(1.0, "u1^2", EndCondition::Free);
        let g = s.grid(8).unwrap();
        for bad in [
            SolverOptions { max_iterations: 0, ..Default::default() },
            SolverOptions { residual_tolerance: 1.0, ..Default::default() },
            SolverOptions { step_damping: 0.0, ..Default::default() },
            SolverOptions { jacobian_fd_step: -1.0, ..Default::default() },
        ] {
            assert!(solve_extremal(&s, g, &bad).is_err());
        }
        assert!(solve_extremal(&s, Grid::new(0.0, 2.0, 8).unwrap(), &SolverOptions::default()).is_err());
    }

    #[test]
    fn empty_study() {
        let s = spec(1.0, "u1^2/2", EndCondition::Fixed(1.0));
        assert!(convergence_study(&s, &[], &SolverOptions::default(), &[]).is_empty());
    }
}
