//! Fractional conservation laws of Noether type.
//!
//! The bracket D_t^ω[f, g] = −g·_tD_b^ω f + f·ᶜD_{a+}^ω g mixes a right
//! Riemann-Liouville derivative with a left Caputo derivative. A quantity is
//! a fractional conservation law when it splits into products C¹·C² whose
//! brackets (in either orientation) vanish along Pontryagin extremals. For
//! α < 1 the assembled charge is generally not constant in time; only at
//! α = 1 does the bracket reduce to d/dt(fg) and the charge become a
//! classical first integral.

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr, ExprError, VarContext};
use crate::fracops::{caputo_deriv_left, rl_deriv_right, FractionalOrder, SampledPath};
use crate::model::{Extremal, HamiltonianSystem, ProblemSpec};

/// Infinitesimal generator (τ, ξ, ς, ϱ) acting on time, state, control and
/// adjoint. Every component is an expression in (t, q, u, p).
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryGenerator {
    pub name: String,
    pub tau: Expr,
    pub xi: Vec<Expr>,
    pub sigma: Vec<Expr>,
    pub rho: Vec<Expr>,
}

impl SymmetryGenerator {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        tau: Expr,
        xi: Vec<Expr>,
        sigma: Vec<Expr>,
        rho: Vec<Expr>,
    ) -> Result<Self> {
        if xi.len() != n || rho.len() != n || sigma.len() != m {
            return Err(Error::InvalidInput(format!(
                "generator needs {n} xi, {m} sigma and {n} rho components, got {}, {}, {}",
                xi.len(),
                sigma.len(),
                rho.len()
            )));
        }
        let ctx = VarContext::with_adjoint(n, m);
        for e in std::iter::once(&tau).chain(&xi).chain(&sigma).chain(&rho) {
            e.check_context(&ctx)?;
        }
        Ok(Self {
            name: name.into(),
            tau,
            xi,
            sigma,
            rho,
        })
    }

    pub fn zero(name: impl Into<String>, n: usize, m: usize) -> Self {
        Self {
            name: name.into(),
            tau: Expr::num(0.0),
            xi: vec![Expr::num(0.0); n],
            sigma: vec![Expr::num(0.0); m],
            rho: vec![Expr::num(0.0); n],
        }
    }

    /// Translation of state component `i`: ξ_i = 1.
    pub fn state_translation(name: impl Into<String>, n: usize, m: usize, i: usize) -> Self {
        let mut g = Self::zero(name, n, m);
        g.xi[i] = Expr::num(1.0);
        g
    }

    /// Time translation: τ = 1.
    pub fn time_translation(name: impl Into<String>, n: usize, m: usize) -> Self {
        let mut g = Self::zero(name, n, m);
        g.tau = Expr::num(1.0);
        g
    }

    fn check_dims(&self, spec: &ProblemSpec) -> Result<()> {
        if self.xi.len() != spec.state_dim() || self.sigma.len() != spec.control_dim() {
            return Err(Error::InvalidInput(format!(
                "generator `{}` does not match problem dimensions",
                self.name
            )));
        }
        Ok(())
    }
}

/// D_t^ω[f, g] = −g·_tD_b^ω f + f·ᶜD_{a+}^ω g, summed over components.
///
/// A product term with an identically zero multiplier at a node contributes
/// zero there, even where the derivative it multiplies is singular.
pub fn frac_bracket(f: &SampledPath, g: &SampledPath, order: FractionalOrder) -> Result<SampledPath> {
    f.ensure_compatible(g)?;
    let rl = rl_deriv_right(f, order);
    let cap = caputo_deriv_left(g, order);
    let grid = *f.grid();
    let out = (0..grid.len())
        .map(|j| {
            (0..f.dim()).fold(0.0, |acc, i| {
                let (fv, gv) = (f.get(j, i), g.get(j, i));
                let mut term = 0.0;
                if gv != 0.0 {
                    term -= gv * rl.get(j, i);
                }
                if fv != 0.0 {
                    term += fv * cap.get(j, i);
                }
                acc + term
            })
        })
        .collect();
    Ok(SampledPath::from_raw_components(grid, vec![out]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// D[C¹, C²] = 0
    Direct,
    /// D[C², C¹] = 0
    Swapped,
}

impl std::fmt::Display for Orientation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Orientation::Direct => "direct",
            Orientation::Swapped => "swapped",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckedPair {
    pub first: SampledPath,
    pub second: SampledPath,
    /// Bracket in the better orientation.
    pub bracket: SampledPath,
    pub orientation: Orientation,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    pub pairs: Vec<CheckedPair>,
    /// Σ C¹·C² over the decomposition.
    pub charge: SampledPath,
    pub max_bracket_residual: f64,
    /// max |C(t) − C(a)| at α = 1; `None` otherwise.
    pub classical_drift: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Checks a sum-of-products decomposition against the bracket condition,
/// trying both orientations of every pair.
pub fn verify_conservation(
    decomposition: &[(SampledPath, SampledPath)],
    order: FractionalOrder,
    tolerance: f64,
) -> Result<ConservationReport> {
    let Some((first, _)) = decomposition.first() else {
        return Err(Error::InvalidInput("empty decomposition".into()));
    };
    let grid = *first.grid();
    let mut charge = vec![0.0; grid.len()];
    let mut pairs = Vec::with_capacity(decomposition.len());
    for (c1, c2) in decomposition {
        if *c1.grid() != grid {
            return Err(Error::InvalidInput("decomposition spans several grids".into()));
        }
        c1.ensure_compatible(c2)?;
        let direct = frac_bracket(c1, c2, order)?;
        let swapped = frac_bracket(c2, c1, order)?;
        let (rd, rs) = (direct.interior_max_abs(), swapped.interior_max_abs());
        let (bracket, orientation, max_residual) = if rs < rd {
            (swapped, Orientation::Swapped, rs)
        } else {
            (direct, Orientation::Direct, rd)
        };
        for (j, slot) in charge.iter_mut().enumerate() {
            *slot += c1.row(j).iter().zip(c2.row(j)).map(|(a, b)| a * b).sum::<f64>();
        }
        pairs.push(CheckedPair {
            first: c1.clone(),
            second: c2.clone(),
            bracket,
            orientation,
            max_residual,
        });
    }
    let max_bracket_residual = pairs.iter().map(|p| p.max_residual).fold(0.0, f64::max);
    let classical_drift = order
        .is_classical()
        .then(|| charge.iter().map(|c| (c - charge[0]).abs()).fold(0.0, f64::max));
    Ok(ConservationReport {
        charge: SampledPath::from_raw_components(grid, vec![charge]),
        pairs,
        max_bracket_residual,
        classical_drift,
        tolerance,
        passed: max_bracket_residual <= tolerance,
    })
}

fn sample_all(ext: &Extremal, exprs: &[Expr]) -> Result<Vec<Vec<f64>>, ExprError> {
    exprs.iter().map(|e| ext.sample(e)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Energy-like factor H − (1 − α)·p·ᶜD q at every node.
fn energy_like(spec: &ProblemSpec, ext: &Extremal) -> Result<Vec<f64>> {
    let h = HamiltonianSystem::new(spec).h;
    let cq = caputo_deriv_left(&ext.q, spec.order());
    let damping = 1.0 - spec.alpha();
    (0..ext.grid().len())
        .map(|j| {
            let hv = h.evaluate(&ext.bindings(j))?;
            Ok(hv - damping * dot(ext.p.row(j), cq.row(j)))
        })
        .collect()
}

/// Noether charge C_f = [H − (1 − α)·p·ᶜD q]·τ − p·ξ along an extremal.
pub fn noether_charge(spec: &ProblemSpec, ext: &Extremal, gen: &SymmetryGenerator) -> Result<SampledPath> {
    ext.check_against(spec)?;
    gen.check_dims(spec)?;
    let energy = energy_like(spec, ext)?;
    let tau = ext.sample(&gen.tau)?;
    let xi = sample_all(ext, &gen.xi)?;
    let values = (0..ext.grid().len())
        .map(|j| {
            let p_xi: f64 = (0..spec.state_dim()).map(|i| ext.p.get(j, i) * xi[i][j]).sum();
            energy[j] * tau[j] - p_xi
        })
        .collect();
    Ok(SampledPath::from_raw_components(*ext.grid(), vec![values]))
}

/// Charge for the calculus-of-variations form,
/// ∂₃L·ξ + [L − α·∂₃L·ᶜD q]·τ evaluated at (t, q, ᶜD q).
///
/// Generator expressions are evaluated with u = ᶜD q and p = −∂₃L.
pub fn cov_noether_charge(spec: &ProblemSpec, q: &SampledPath, gen: &SymmetryGenerator) -> Result<SampledPath> {
    gen.check_dims(spec)?;
    let ext = crate::model::cov_extremal(spec, q)?;
    let alpha = spec.alpha();
    let values = (0..q.grid().len())
        .map(|j| {
            let b = ext.bindings(j);
            let l = spec.lagrangian().evaluate(&b)?;
            let tau = gen.tau.evaluate(&b)?;
            let mut momentum_xi = 0.0;
            let mut momentum_velocity = 0.0;
            for i in 0..spec.state_dim() {
                let dl_du = -ext.p.get(j, i);
                momentum_xi += dl_du * gen.xi[i].evaluate(&b)?;
                momentum_velocity += dl_du * ext.u.get(j, i);
            }
            Ok(momentum_xi + (l - alpha * momentum_velocity) * tau)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SampledPath::from_raw_components(*q.grid(), vec![values]))
}

/// Pointwise invariance condition
/// ∂₂H·ξ + ∂₃H·ς + (∂₄H − ᶜD q)·ϱ − p·ᶜD(ξ∘ext).
pub fn invariance_residual(spec: &ProblemSpec, ext: &Extremal, gen: &SymmetryGenerator) -> Result<SampledPath> {
    ext.check_against(spec)?;
    gen.check_dims(spec)?;
    let sys = HamiltonianSystem::new(spec);
    let order = spec.order();
    let grid = *ext.grid();
    let cq = caputo_deriv_left(&ext.q, order);
    let xi_path = SampledPath::from_components(grid, &sample_all(ext, &gen.xi)?)?;
    let c_xi = caputo_deriv_left(&xi_path, order);
    let sigma = sample_all(ext, &gen.sigma)?;
    let rho = sample_all(ext, &gen.rho)?;
    let values = (0..grid.len())
        .map(|j| {
            let b = ext.bindings(j);
            let mut acc = 0.0;
            for i in 0..spec.state_dim() {
                let xi = xi_path.get(j, i);
                if xi != 0.0 {
                    acc += sys.dh_dq[i].evaluate(&b)? * xi;
                }
                if rho[i][j] != 0.0 {
                    acc += (sys.dh_dp[i].evaluate(&b)? - cq.get(j, i)) * rho[i][j];
                }
                acc -= ext.p.get(j, i) * c_xi.get(j, i);
            }
            for (k, s) in sigma.iter().enumerate() {
                if s[j] != 0.0 {
                    acc += sys.dh_du[k].evaluate(&b)? * s[j];
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SampledPath::from_raw_components(grid, vec![values]))
}

/// Default product decomposition of the charge: (p, ξ) and (ψ, τ) with
/// ψ = −[H − (1 − α)·p·ᶜD q]. Its sum of products is −C_f.
pub fn noether_decomposition(
    spec: &ProblemSpec,
    ext: &Extremal,
    gen: &SymmetryGenerator,
) -> Result<Vec<(SampledPath, SampledPath)>> {
    ext.check_against(spec)?;
    gen.check_dims(spec)?;
    let grid = *ext.grid();
    let xi = SampledPath::from_components(grid, &sample_all(ext, &gen.xi)?)?;
    let psi: Vec<f64> = energy_like(spec, ext)?.into_iter().map(|v| -v).collect();
    let psi = SampledPath::from_components(grid, &[psi])?;
    let tau = SampledPath::from_components(grid, &[ext.sample(&gen.tau)?])?;
    Ok(vec![(ext.p.clone(), xi), (psi, tau)])
}

/// Everything the pipeline reports for one generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport {
    pub name: String,
    pub charge: SampledPath,
    pub conservation: ConservationReport,
    pub invariance: SampledPath,
    pub invariance_norm: f64,
}

pub fn check_symmetry(
    spec: &ProblemSpec,
    ext: &Extremal,
    gen: &SymmetryGenerator,
    tolerance: f64,
) -> Result<SymmetryReport> {
    let charge = noether_charge(spec, ext, gen)?;
    let decomposition = noether_decomposition(spec, ext, gen)?;
    let conservation = verify_conservation(&decomposition, spec.order(), tolerance)?;
    let invariance = invariance_residual(spec, ext, gen)?;
    Ok(SymmetryReport {
        name: gen.name.clone(),
        invariance_norm: invariance.interior_max_abs(),
        charge,
        conservation,
        invariance,
    })
}

/// Evaluates generator components at one point; used by tests and bindings.
pub fn generator_at(gen: &SymmetryGenerator, b: &Bindings<'_>) -> Result<(f64, Vec<f64>), ExprError> {
    let tau = gen.tau.evaluate(b)?;
    let xi = gen.xi.iter().map(|e| e.evaluate(b)).collect::<Result<_, _>>()?;
    Ok((tau, xi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::fracops::Grid;
    use crate::gamma::gamma;
    use crate::model::EndCondition;

    fn grid(n: usize) -> Grid {
        Grid::new(0.0, 1.0, n).unwrap()
    }

    fn path(g: Grid, f: impl Fn(f64) -> f64) -> SampledPath {
        SampledPath::from_fn(g, f).unwrap()
    }

    fn spec(alpha: f64, l: &str) -> ProblemSpec {
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
            vec![EndCondition::Fixed(1.0)],
        )
        .unwrap()
    }

    #[test]
    fn bracket_examples() {
        let g = grid(200);
        let t = path(g, |t| t);
        let b = frac_bracket(&t, &t, FractionalOrder::classical()).unwrap();
        for (j, tj) in g.nodes().enumerate() {
            assert!((b.get(j, 0) - 2.0 * tj).abs() < 1e-12);
        }

        let zero = SampledPath::zeros(g, 1);
        let one = path(g, |_| 1.0);
        let b = frac_bracket(&one, &zero, FractionalOrder::new(0.5).unwrap()).unwrap();
        assert!(b.values().iter().all(|&v| v == 0.0));
        assert_eq!(b.singular_nodes().count(), 0);

        let b = frac_bracket(&one, &one, FractionalOrder::new(0.5).unwrap()).unwrap();
        assert!(b.is_singular(200));
        for (j, tj) in g.nodes().enumerate().take(200) {
            let expect = -(1.0 - tj).powf(-0.5) / gamma(0.5);
            assert!((b.get(j, 0) - expect).abs() < 1e-12 * expect.abs());
        }
    }

    #[test]
    fn classical_bracket_is_symmetric() {
        let g = grid(64);
        let f = path(g, |t| (2.0 * t).sin());
        let h = path(g, |t| t.exp());
        let o = FractionalOrder::classical();
        let a = frac_bracket(&f, &h, o).unwrap();
        let b = frac_bracket(&h, &f, o).unwrap();
        for j in 0..g.len() {
            assert!((a.get(j, 0) - b.get(j, 0)).abs() < 1e-12);
        }
    }

    #[test]
    fn charge_examples() {
        let s = spec(0.6, "u1^2/2");
        let g = grid(16);
        let ext = Extremal::new(path(g, |t| t * t), path(g, |t| t + 1.0), path(g, |t| 2.0 - t)).unwrap();

        let momentum = SymmetryGenerator::state_translation("m", 1, 1, 0);
        let c = noether_charge(&s, &ext, &momentum).unwrap();
        assert_eq!(c.component(0), ext.p.component(0).iter().map(|v| -v).collect::<Vec<_>>());

        let energy = SymmetryGenerator::time_translation("e", 1, 1);
        let c = noether_charge(&s, &ext, &energy).unwrap();
        let cq = caputo_deriv_left(&ext.q, s.order());
        for (j, tj) in g.nodes().enumerate() {
            let (u, p) = (tj + 1.0, 2.0 - tj);
            let expect = u * u / 2.0 + p * u - 0.4 * p * cq.get(j, 0);
            assert!((c.get(j, 0) - expect).abs() < 1e-13);
        }

        let s1 = s.with_order(FractionalOrder::classical());
        let c = noether_charge(&s1, &ext, &energy).unwrap();
        let h = HamiltonianSystem::new(&s1).h;
        assert_eq!(c.component(0), ext.sample(&h).unwrap());
    }

    #[test]
    fn cov_charge_classical_examples() {
        let s = spec(1.0, "u1^2/2");
        let g = grid(32);
        let q = path(g, |t| t);
        let m = cov_noether_charge(&s, &q, &SymmetryGenerator::state_translation("m", 1, 1, 0)).unwrap();
        assert!(m.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let e = cov_noether_charge(&s, &q, &SymmetryGenerator::time_translation("e", 1, 1)).unwrap();
        assert!(e.values().iter().all(|v| (v + 0.5).abs() < 1e-12));
    }

    #[test]
    fn invariance_examples() {
        let s = spec(0.5, "u1^2/2");
        let g = grid(32);
        let ext = Extremal::new(path(g, |t| t.sqrt()), path(g, |t| t), path(g, |t| 1.0 - t * t)).unwrap();
        let r = invariance_residual(&s, &ext, &SymmetryGenerator::state_translation("m", 1, 1, 0)).unwrap();
        assert!(r.values().iter().all(|&v| v == 0.0));
        let r = invariance_residual(&s, &ext, &SymmetryGenerator::zero("z", 1, 1)).unwrap();
        assert!(r.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn verify_conservation_edge_cases() {
        let o = FractionalOrder::new(0.5).unwrap();
        assert!(verify_conservation(&[], o, 1e-6).is_err());
        let g = grid(16);
        let zero = SampledPath::zeros(g, 1);
        let other = path(g, |t| t.cos());
        let r = verify_conservation(&[(zero.clone(), other.clone())], o, 0.0).unwrap();
        assert!(r.passed);
        assert_eq!(r.max_bracket_residual, 0.0);
        assert!(r.classical_drift.is_none());
        let g2 = grid(8);
        let bad = verify_conservation(&[(zero, other), (SampledPath::zeros(g2, 1), SampledPath::zeros(g2, 1))], o, 1.0);
        assert!(bad.is_err());
    }

    #[test]
    fn orientation_is_chosen_by_residual() {
        // f = 1, g = t at α = 1: D[f, g] = 1, D[g, f] = 1 as well; at α = 0.5
        // D[1, c] is singular-free for g = c constant while D[c, 1] is not.
        let g = grid(32);
        let o = FractionalOrder::new(0.5).unwrap();
        let one = path(g, |_| 1.0);
        let zero = SampledPath::zeros(g, 1);
        let r = verify_conservation(&[(zero.clone(), one.clone())], o, 1e-12).unwrap();
        assert_eq!(r.pairs[0].orientation, Orientation::Direct);
        let r = verify_conservation(&[(one, zero)], o, 1e-12).unwrap();
        // D[1, 0] = 0 exactly; D[0, 1] = 0 as well, ties keep the direct form.
        assert_eq!(r.pairs[0].orientation, Orientation::Direct);
        assert!(r.passed);
    }

    #[test]
    fn generator_validation() {
        let ctx = VarContext::with_adjoint(1, 1);
        let e = |s: &str| parse(s, &ctx).unwrap();
        assert!(SymmetryGenerator::new("g", 1, 1, e("1"), vec![], vec![e("0")], vec![e("0")]).is_err());
        let g = SymmetryGenerator::new("g", 1, 1, e("t"), vec![e("p1*q1")], vec![e("u1")], vec![e("0")]).unwrap();
        let (tau, xi) = generator_at(&g, &Bindings::new(2.0, &[3.0], &[0.0], &[4.0])).unwrap();
        assert_eq!((tau, xi), (2.0, vec![12.0]));
    }
}
