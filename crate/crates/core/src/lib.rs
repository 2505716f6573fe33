//! Fractional calculus of variations and optimal control in the sense of
//! Caputo: discrete Caputo and Riemann-Liouville operators, fractional
//! Pontryagin extremals computed by collocation, and numerical checks of
//! fractional Noether conservation laws along them.

pub mod error;
pub mod expr;
pub mod fracops;
pub mod gamma;
pub mod cli;
pub mod model;
pub mod noether;
pub mod solver;

pub use error::{Error, Result};
pub use expr::{Bindings, Expr, ExprError, Var, VarContext};
pub use fracops::{FractionalOrder, Grid, SampledPath};
pub use model::{EndCondition, Extremal, ProblemSpec, ResidualReport};
pub use noether::SymmetryGenerator;
pub use solver::{solve_extremal, SolveOutcome, SolverOptions};
