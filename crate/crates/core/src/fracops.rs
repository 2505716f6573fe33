//! Discrete fractional operators on uniformly sampled paths.
//!
//! Left Caputo derivatives use the L1 scheme (piecewise-linear interpolation
//! of the path inside the convolution), which has accuracy order 2 − α.
//! Riemann-Liouville derivatives are obtained from the Caputo value plus the
//! boundary term f(a)(t − a)^(−α)/Γ(1 − α). Right-sided operators are the
//! left-sided ones applied to the time-reflected path t ↦ a + b − t.
//!
//! At α = 1 every derivative collapses to the classical stencil: central
//! differences in the interior and second-order one-sided differences at the
//! two ends, with the right operators returning −f′.

use crate::error::{Error, Result};
use crate::gamma::gamma;

/// Order α of a fractional derivative, restricted to 0 < α ≤ 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::OrderOutOfRange(alpha))
        }
    }

    pub fn classical() -> Self {
        Self(1.0)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// True when α = 1 and the operators reduce to ordinary derivatives.
    #[inline]
    pub fn is_classical(self) -> bool {
        self.0 == 1.0
    }
}

impl std::fmt::Display for FractionalOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Uniform mesh t_j = a + j·h, j = 0..=N, on [a, b].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    intervals: usize,
}

impl Grid {
    pub fn new(a: f64, b: f64, intervals: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite interval [{a}, {b}]")));
        }
        if a >= b {
            return Err(Error::InvalidGrid(format!("need a < b, got [{a}, {b}]")));
        }
        if intervals < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 intervals, got {intervals}"
            )));
        }
        let grid = Self { a, b, intervals };
        if !(grid.step() > 0.0) {
            return Err(Error::InvalidGrid("step underflows to zero".into()));
        }
        Ok(grid)
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of intervals N.
    #[inline]
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Number of nodes, N + 1.
    #[inline]
    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn step(&self) -> f64 {
        (self.b - self.a) / self.intervals as f64
    }

    /// Node t_j. The last node is pinned to b exactly.
    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        if j == self.intervals {
            self.b
        } else {
            self.a + j as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |j| self.node(j))
    }

    /// Interior node indices 1..N.
    pub fn interior(&self) -> std::ops::Range<usize> {
        1..self.intervals
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }
}

/// Vector-valued samples of a function on a [`Grid`], stored row-major
/// (one row of width `dim` per node).
///
/// Entries are finite except at nodes flagged singular, which hold NaN in the
/// affected components.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    grid: Grid,
    dim: usize,
    values: Vec<f64>,
    singular: Vec<bool>,
}

impl SampledPath {
    pub fn new(grid: Grid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("path dimension must be positive".into()));
        }
        if values.len() != grid.len() * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} values ({} nodes x {dim}), got {}",
                grid.len() * dim,
                grid.len(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at node {}, component {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self {
            grid,
            dim,
            singular: vec![false; grid.len()],
            values,
        })
    }

    pub fn zeros(grid: Grid, dim: usize) -> Self {
        Self {
            grid,
            dim,
            values: vec![0.0; grid.len() * dim],
            singular: vec![false; grid.len()],
        }
    }

    /// Samples a scalar function of t.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, 1, grid.nodes().map(f).collect())
    }

    /// Samples a vector function of t; `f` fills one row per node.
    pub fn from_fn_vec(grid: Grid, dim: usize, mut f: impl FnMut(f64, &mut [f64])) -> Result<Self> {
        let mut values = vec![0.0; grid.len() * dim];
        for (j, row) in values.chunks_mut(dim.max(1)).enumerate() {
            f(grid.node(j), row);
        }
        Self::new(grid, dim, values)
    }

    /// Stacks scalar component columns into one path.
    pub fn from_components(grid: Grid, components: &[Vec<f64>]) -> Result<Self> {
        let dim = components.len();
        if dim == 0 {
            return Err(Error::InvalidInput("no components".into()));
        }
        if let Some(c) = components.iter().find(|c| c.len() != grid.len()) {
            return Err(Error::InvalidInput(format!(
                "component has {} samples, grid has {} nodes",
                c.len(),
                grid.len()
            )));
        }
        let mut values = Vec::with_capacity(grid.len() * dim);
        for j in 0..grid.len() {
            values.extend(components.iter().map(|c| c[j]));
        }
        Self::new(grid, dim, values)
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, node: usize, component: usize) -> f64 {
        self.values[node * self.dim + component]
    }

    #[inline]
    pub fn row(&self, node: usize) -> &[f64] {
        &self.values[node * self.dim..(node + 1) * self.dim]
    }

    pub fn component(&self, component: usize) -> Vec<f64> {
        self.values
            .iter()
            .skip(component)
            .step_by(self.dim)
            .copied()
            .collect()
    }

    #[inline]
    pub fn is_singular(&self, node: usize) -> bool {
        self.singular[node]
    }

    pub fn singular_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.singular
            .iter()
            .enumerate()
            .filter_map(|(j, &s)| s.then_some(j))
    }

    /// Maximum absolute entry over the interior nodes 1..N−1, skipping
    /// singular ones.
    pub fn interior_max_abs(&self) -> f64 {
        self.grid
            .interior()
            .filter(|&j| !self.singular[j])
            .flat_map(|j| self.row(j).iter().map(|v| v.abs()))
            .fold(0.0, f64::max)
    }

    pub fn ensure_compatible(&self, other: &SampledPath) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::InvalidInput("paths live on different grids".into()));
        }
        if self.dim != other.dim {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    /// Builds a path from component columns that may contain non-finite
    /// entries; such nodes are flagged singular.
    pub(crate) fn from_raw_components(grid: Grid, components: Vec<Vec<f64>>) -> Self {
        let dim = components.len();
        let mut values = Vec::with_capacity(grid.len() * dim);
        let mut singular = vec![false; grid.len()];
        for (j, flag) in singular.iter_mut().enumerate() {
            for c in &components {
                values.push(c[j]);
                if !c[j].is_finite() {
                    *flag = true;
                }
            }
        }
        Self {
            grid,
            dim,
            values,
            singular,
        }
    }

    fn map_components(&self, op: impl Fn(&[f64]) -> Vec<f64>) -> SampledPath {
        let comps = (0..self.dim).map(|i| op(&self.component(i))).collect();
        SampledPath::from_raw_components(self.grid, comps)
    }
}

/// L1 weights b_k = (k+1)^(1−α) − k^(1−α), k = 0..N−1.
fn l1_weights(alpha: f64, intervals: usize) -> Vec<f64> {
    let e = 1.0 - alpha;
    let powers: Vec<f64> = (0..=intervals).map(|k| (k as f64).powf(e)).collect();
    powers.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Classical first derivative: central differences inside, second-order
/// one-sided differences at both ends. Written in terms of increments so a
/// constant input gives exact zeros.
fn classical_derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len() - 1;
    let mut out = vec![0.0; f.len()];
    if n >= 2 {
        out[0] = (3.0 * (f[1] - f[0]) - (f[2] - f[1])) / (2.0 * h);
        out[n] = (3.0 * (f[n] - f[n - 1]) - (f[n - 1] - f[n - 2])) / (2.0 * h);
    }
    for j in 1..n {
        out[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
    }
    out
}

fn caputo_left_scalar(f: &[f64], h: f64, alpha: f64) -> Vec<f64> {
    if alpha == 1.0 {
        return classical_derivative(f, h);
    }
    let n = f.len() - 1;
    let weights = l1_weights(alpha, n);
    let scale = h.powf(-alpha) / gamma(2.0 - alpha);
    let increments: Vec<f64> = f.windows(2).map(|w| w[1] - w[0]).collect();
    let mut out = vec![0.0; f.len()];
    for (j, slot) in out.iter_mut().enumerate().skip(1) {
        let mut acc = 0.0;
        for k in 0..j {
            acc += weights[j - 1 - k] * increments[k];
        }
        *slot = scale * acc;
    }
    out
}

fn rl_left_scalar(f: &[f64], grid: &Grid, alpha: f64) -> Vec<f64> {
    let mut out = caputo_left_scalar(f, grid.step(), alpha);
    if alpha == 1.0 {
        return out;
    }
    let f0 = f[0];
    if f0 != 0.0 {
        let c = f0 / gamma(1.0 - alpha);
        out[0] = f64::NAN;
        for (j, slot) in out.iter_mut().enumerate().skip(1) {
            *slot += c * (grid.node(j) - grid.a()).powf(-alpha);
        }
    }
    out
}

/// Left product-integration (piecewise-linear) fractional integral of order
/// `beta` in (0, 1].
fn integral_left_scalar(f: &[f64], h: f64, beta: f64) -> Vec<f64> {
    let n = f.len() - 1;
    let bp1 = beta + 1.0;
    let pw: Vec<f64> = (0..=n).map(|k| (k as f64).powf(bp1)).collect();
    let scale = h.powf(beta) / gamma(beta + 2.0);
    let mut out = vec![0.0; f.len()];
    for (j, slot) in out.iter_mut().enumerate().skip(1) {
        let jf = j as f64;
        let mut acc = (pw[j - 1] - (jf - beta - 1.0) * jf.powf(beta)) * f[0];
        for k in 1..j {
            let m = j - k;
            acc += (pw[m + 1] - 2.0 * pw[m] + pw[m - 1]) * f[k];
        }
        acc += f[j];
        *slot = scale * acc;
    }
    out
}

fn reflected(f: &[f64], op: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let rev: Vec<f64> = f.iter().rev().copied().collect();
    let mut out = op(&rev);
    out.reverse();
    out
}

/// Left Caputo derivative ᶜD_{a+}^α f on every node; zero at t = a.
pub fn caputo_deriv_left(f: &SampledPath, order: FractionalOrder) -> SampledPath {
    let h = f.grid().step();
    f.map_components(|c| caputo_left_scalar(c, h, order.value()))
}

/// Right Caputo derivative ᶜD_{b−}^α f, the reflection of the left one. At
/// α = 1 this is −f′.
pub fn caputo_deriv_right(f: &SampledPath, order: FractionalOrder) -> SampledPath {
    let h = f.grid().step();
    f.map_components(|c| reflected(c, |r| caputo_left_scalar(r, h, order.value())))
}

/// Left Riemann-Liouville derivative. Node 0 is flagged singular when
/// f(a) ≠ 0 and α < 1.
pub fn rl_deriv_left(f: &SampledPath, order: FractionalOrder) -> SampledPath {
    let grid = *f.grid();
    f.map_components(|c| rl_left_scalar(c, &grid, order.value()))
}

/// Right Riemann-Liouville derivative. Node N is flagged singular when
/// f(b) ≠ 0 and α < 1.
pub fn rl_deriv_right(f: &SampledPath, order: FractionalOrder) -> SampledPath {
    let grid = *f.grid();
    f.map_components(|c| reflected(c, |r| rl_left_scalar(r, &grid, order.value())))
}

/// Right Riemann-Liouville integral of order `beta`,
/// (1/Γ(β)) ∫_t^b (θ − t)^(β−1) f(θ) dθ.
///
/// `beta = 0` is the identity, which is what the transversality operator of
/// order α − 1 becomes at α = 1.
pub fn rl_integral_right(f: &SampledPath, beta: f64) -> Result<SampledPath> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidInput(format!(
            "integral order {beta} outside [0, 1]"
        )));
    }
    if beta == 0.0 {
        return Ok(f.clone());
    }
    let h = f.grid().step();
    Ok(f.map_components(|c| reflected(c, |r| integral_left_scalar(r, h, beta))))
}

/// The transversality operator of order α − 1 applied to `p`, i.e. the
/// right fractional integral of order 1 − α.
pub fn transversality_integral(p: &SampledPath, order: FractionalOrder) -> SampledPath {
    rl_integral_right(p, 1.0 - order.value()).expect("1 - alpha lies in [0, 1)")
}
