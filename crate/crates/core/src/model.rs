//! Problem description, Hamiltonian and the residuals of the fractional
//! Pontryagin conditions.

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr, ExprError, Var, VarContext};
use crate::fracops::{
    caputo_deriv_left, rl_deriv_right, transversality_integral, FractionalOrder, Grid,
    SampledPath,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndCondition {
    Fixed(f64),
    Free,
}

/// Fractional optimal control problem in Lagrange form:
/// minimise ∫ L(t, q, u) dt subject to ᶜD_{a+}^α q = φ(t, q, u).
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    order: FractionalOrder,
    a: f64,
    b: f64,
    n: usize,
    m: usize,
    lagrangian: Expr,
    dynamics: Vec<Expr>,
    start: Vec<f64>,
    end: Vec<EndCondition>,
}

impl ProblemSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        order: FractionalOrder,
        a: f64,
        b: f64,
        n: usize,
        m: usize,
        lagrangian: Expr,
        dynamics: Vec<Expr>,
        start: Vec<f64>,
        end: Vec<EndCondition>,
    ) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInput(format!("bad interval [{a}, {b}]")));
        }
        if n == 0 || m == 0 {
            return Err(Error::InvalidInput(format!(
                "dimensions must be positive (n = {n}, m = {m})"
            )));
        }
        if dynamics.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} dynamics expressions for n = {n}",
                dynamics.len()
            )));
        }
        if start.len() != n || end.len() != n {
            return Err(Error::InvalidInput(format!(
                "boundary data for {} / {} components, expected {n}",
                start.len(),
                end.len()
            )));
        }
        if start.iter().any(|v| !v.is_finite())
            || end
                .iter()
                .any(|e| matches!(e, EndCondition::Fixed(v) if !v.is_finite()))
        {
            return Err(Error::InvalidInput("non-finite boundary value".into()));
        }
        let ctx = VarContext::primal(n, m);
        lagrangian.check_context(&ctx)?;
        for phi in &dynamics {
            phi.check_context(&ctx)?;
        }
        Ok(Self {
            order,
            a,
            b,
            n,
            m,
            lagrangian,
            dynamics,
            start,
            end,
        })
    }

    pub fn order(&self) -> FractionalOrder {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.order.value()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn control_dim(&self) -> usize {
        self.m
    }

    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    pub fn dynamics(&self) -> &[Expr] {
        &self.dynamics
    }

    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn end(&self) -> &[EndCondition] {
        &self.end
    }

    /// Same problem at a different order α.
    pub fn with_order(&self, order: FractionalOrder) -> Self {
        Self {
            order,
            ..self.clone()
        }
    }

    pub fn grid(&self, intervals: usize) -> Result<Grid> {
        Grid::new(self.a, self.b, intervals)
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if grid.a() != self.a || grid.b() != self.b {
            return Err(Error::InvalidInput(format!(
                "grid [{}, {}] does not match problem interval [{}, {}]",
                grid.a(),
                grid.b(),
                self.a,
                self.b
            )));
        }
        Ok(())
    }

    /// True when φ_i = u_i for every component (and m = n): the fractional
    /// problem of the calculus of variations.
    pub fn is_calculus_of_variations(&self) -> bool {
        self.m == self.n
            && self
                .dynamics
                .iter()
                .enumerate()
                .all(|(i, phi)| *phi == Expr::Var(Var::U(i)))
    }

    fn require_cov(&self) -> Result<()> {
        if self.is_calculus_of_variations() {
            Ok(())
        } else {
            Err(Error::NotCalculusOfVariations(
                "dynamics must be phi_i = u_i with m = n".into(),
            ))
        }
    }
}

/// H(t, q, u, p) = L(t, q, u) + Σ p_i φ_i(t, q, u).
pub fn hamiltonian(spec: &ProblemSpec) -> Expr {
    let coupling = spec
        .dynamics
        .iter()
        .enumerate()
        .map(|(i, phi)| Expr::mul(Expr::var(Var::P(i)), phi.clone()));
    Expr::sum(std::iter::once(spec.lagrangian.clone()).chain(coupling))
}

/// The Hamiltonian together with its symbolic partials ∂₂H (state),
/// ∂₃H (control) and ∂₄H (adjoint).
#[derive(Debug, Clone)]
pub struct HamiltonianSystem {
    pub h: Expr,
    pub dh_dq: Vec<Expr>,
    pub dh_du: Vec<Expr>,
    pub dh_dp: Vec<Expr>,
}

impl HamiltonianSystem {
    pub fn new(spec: &ProblemSpec) -> Self {
        let h = hamiltonian(spec);
        let dh_dq = (0..spec.n).map(|i| h.differentiate(Var::Q(i))).collect();
        let dh_du = (0..spec.m).map(|j| h.differentiate(Var::U(j))).collect();
        let dh_dp = (0..spec.n).map(|i| h.differentiate(Var::P(i))).collect();
        Self {
            h,
            dh_dq,
            dh_du,
            dh_dp,
        }
    }
}

/// Candidate extremal (q, u, p) on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Extremal {
    pub q: SampledPath,
    pub u: SampledPath,
    pub p: SampledPath,
}

impl Extremal {
    pub fn new(q: SampledPath, u: SampledPath, p: SampledPath) -> Result<Self> {
        if q.grid() != u.grid() || q.grid() != p.grid() {
            return Err(Error::InvalidInput("q, u, p must share one grid".into()));
        }
        if q.dim() != p.dim() {
            return Err(Error::InvalidInput(format!(
                "state has dimension {}, adjoint {}",
                q.dim(),
                p.dim()
            )));
        }
        Ok(Self { q, u, p })
    }

    pub fn grid(&self) -> &Grid {
        self.q.grid()
    }

    pub fn bindings(&self, node: usize) -> Bindings<'_> {
        Bindings::new(
            self.grid().node(node),
            self.q.row(node),
            self.u.row(node),
            self.p.row(node),
        )
    }

    /// Evaluates `e` along the extremal at every node.
    pub fn sample(&self, e: &Expr) -> Result<Vec<f64>, ExprError> {
        (0..self.grid().len())
            .map(|j| e.evaluate(&self.bindings(j)))
            .collect()
    }

    pub(crate) fn check_against(&self, spec: &ProblemSpec) -> Result<()> {
        spec.check_grid(self.grid())?;
        if self.q.dim() != spec.n || self.u.dim() != spec.m || self.p.dim() != spec.n {
            return Err(Error::InvalidInput(format!(
                "extremal dimensions (q {}, u {}, p {}) do not match n = {}, m = {}",
                self.q.dim(),
                self.u.dim(),
                self.p.dim(),
                spec.n,
                spec.m
            )));
        }
        Ok(())
    }
}

/// Residuals of the Hamiltonian system, the stationary condition and the
/// transversality record along a candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// ∂₂H − _tD_b^α p
    pub adjoint_residual: SampledPath,
    /// ∂₄H − ᶜD_{a+}^α q
    pub state_residual: SampledPath,
    /// ∂₃H
    pub stationarity_residual: SampledPath,
    /// (_tD_b^{α−1} p)(a)
    pub transversality_start: Vec<f64>,
    /// (_tD_b^{α−1} p)(b)
    pub transversality_end: Vec<f64>,
    pub adjoint_norm: f64,
    pub state_norm: f64,
    pub stationarity_norm: f64,
}

impl ResidualReport {
    pub fn max_norm(&self) -> f64 {
        self.adjoint_norm
            .max(self.state_norm)
            .max(self.stationarity_norm)
    }
}

/// Pointwise residual paths shared by the checker and the collocation solver.
pub(crate) struct ResidualPaths {
    pub adjoint: Vec<Vec<f64>>,
    pub state: Vec<Vec<f64>>,
    pub stationarity: Vec<Vec<f64>>,
}

/// Evaluates ∂₂H − rl_right(p), ∂₄H − caputo_left(q) and ∂₃H at every node.
/// Entries at singular nodes of rl_right(p) come out NaN.
pub(crate) fn residual_paths(
    spec: &ProblemSpec,
    sys: &HamiltonianSystem,
    cand: &Extremal,
) -> Result<ResidualPaths> {
    let order = spec.order;
    let cq = caputo_deriv_left(&cand.q, order);
    let rp = rl_deriv_right(&cand.p, order);
    let nodes = cand.grid().len();
    let mut adjoint = vec![vec![0.0; nodes]; spec.n];
    let mut state = vec![vec![0.0; nodes]; spec.n];
    let mut stationarity = vec![vec![0.0; nodes]; spec.m];
    for j in 0..nodes {
        let b = cand.bindings(j);
        for i in 0..spec.n {
            adjoint[i][j] = sys.dh_dq[i].evaluate(&b)? - rp.get(j, i);
            state[i][j] = sys.dh_dp[i].evaluate(&b)? - cq.get(j, i);
        }
        for (k, col) in stationarity.iter_mut().enumerate() {
            col[j] = sys.dh_du[k].evaluate(&b)?;
        }
    }
    Ok(ResidualPaths {
        adjoint,
        state,
        stationarity,
    })
}

/// Evaluates the conditions of the fractional Pontryagin maximum principle
/// along `cand`. Norms are maxima over interior nodes only.
pub fn pontryagin_residual(spec: &ProblemSpec, cand: &Extremal) -> Result<ResidualReport> {
    cand.check_against(spec)?;
    let sys = HamiltonianSystem::new(spec);
    let paths = residual_paths(spec, &sys, cand)?;
    let grid = *cand.grid();
    let adjoint_residual = SampledPath::from_raw_components(grid, paths.adjoint);
    let state_residual = SampledPath::from_raw_components(grid, paths.state);
    let stationarity_residual = SampledPath::from_raw_components(grid, paths.stationarity);
    let transversal = transversality_integral(&cand.p, spec.order);
    Ok(ResidualReport {
        adjoint_norm: adjoint_residual.interior_max_abs(),
        state_norm: state_residual.interior_max_abs(),
        stationarity_norm: stationarity_residual.interior_max_abs(),
        transversality_start: transversal.row(0).to_vec(),
        transversality_end: transversal.row(grid.intervals()).to_vec(),
        adjoint_residual,
        state_residual,
        stationarity_residual,
    })
}

/// Partials of L with respect to q and u evaluated at (t, q, ᶜD q), the
/// calculus-of-variations substitution u = ᶜD q.
struct CovSample {
    caputo_q: SampledPath,
    dl_dq: Vec<Vec<f64>>,
    dl_du: Vec<Vec<f64>>,
}

fn cov_sample(spec: &ProblemSpec, q: &SampledPath) -> Result<CovSample> {
    spec.require_cov()?;
    spec.check_grid(q.grid())?;
    if q.dim() != spec.n {
        return Err(Error::InvalidInput(format!(
            "state path has dimension {}, expected {}",
            q.dim(),
            spec.n
        )));
    }
    let caputo_q = caputo_deriv_left(q, spec.order);
    let l = &spec.lagrangian;
    let dq: Vec<Expr> = (0..spec.n).map(|i| l.differentiate(Var::Q(i))).collect();
    let du: Vec<Expr> = (0..spec.n).map(|i| l.differentiate(Var::U(i))).collect();
    let nodes = q.grid().len();
    let mut dl_dq = vec![vec![0.0; nodes]; spec.n];
    let mut dl_du = vec![vec![0.0; nodes]; spec.n];
    for j in 0..nodes {
        let b = Bindings::new(q.grid().node(j), q.row(j), caputo_q.row(j), &[]);
        for i in 0..spec.n {
            dl_dq[i][j] = dq[i].evaluate(&b)?;
            dl_du[i][j] = du[i].evaluate(&b)?;
        }
    }
    Ok(CovSample {
        caputo_q,
        dl_dq,
        dl_du,
    })
}

/// Residual of the fractional Euler-Lagrange equation
/// ∂₂L + _tD_b^α ∂₃L = 0 with u replaced by ᶜD_{a+}^α q.
pub fn euler_lagrange_residual(spec: &ProblemSpec, q: &SampledPath) -> Result<SampledPath> {
    let s = cov_sample(spec, q)?;
    let grid = *q.grid();
    let momentum = SampledPath::from_raw_components(grid, s.dl_du);
    let rl = rl_deriv_right(&momentum, spec.order);
    let comps = (0..spec.n)
        .map(|i| {
            s.dl_dq[i]
                .iter()
                .zip(rl.component(i))
                .map(|(a, b)| a + b)
                .collect()
        })
        .collect();
    Ok(SampledPath::from_raw_components(grid, comps))
}

/// The extremal induced by a state path in a calculus-of-variations problem:
/// u = ᶜD_{a+}^α q and p = −∂₃L(t, q, u).
pub fn cov_extremal(spec: &ProblemSpec, q: &SampledPath) -> Result<Extremal> {
    let s = cov_sample(spec, q)?;
    let p_comps: Vec<Vec<f64>> = s
        .dl_du
        .into_iter()
        .map(|c| c.into_iter().map(|v| -v).collect())
        .collect();
    let p = SampledPath::from_components(*q.grid(), &p_comps)?;
    Extremal::new(q.clone(), s.caputo_q, p)
}
