//! Scalar arithmetic expressions over the problem variables t, q_i, u_j, p_i.
//!
//! Expressions are parsed from text, evaluated in IEEE double precision with
//! explicit domain errors, and differentiated symbolically.

mod diff;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use parse::parse;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("no binding for variable `{0}`")]
    MissingBinding(Var),

    #[error("domain error: {0}")]
    Domain(String),
}

/// A problem variable. Indices are zero-based; `Q(0)` prints as `q1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    T,
    Q(usize),
    U(usize),
    P(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::T => write!(f, "t"),
            Var::Q(i) => write!(f, "q{}", i + 1),
            Var::U(i) => write!(f, "u{}", i + 1),
            Var::P(i) => write!(f, "p{}", i + 1),
        }
    }
}

/// Which variables an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarContext {
    pub n: usize,
    pub m: usize,
    pub allow_adjoint: bool,
}

impl VarContext {
    /// Variables of L and φ: t, q1..qn, u1..um.
    pub fn primal(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            allow_adjoint: false,
        }
    }

    /// Variables of H and of symmetry generators: adds p1..pn.
    pub fn with_adjoint(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            allow_adjoint: true,
        }
    }

    pub fn admits(&self, var: Var) -> bool {
        match var {
            Var::T => true,
            Var::Q(i) => i < self.n,
            Var::U(j) => j < self.m,
            Var::P(i) => self.allow_adjoint && i < self.n,
        }
    }

    /// Resolves an identifier such as `q2` against this context.
    pub fn lookup(&self, name: &str) -> Option<Var> {
        if name == "t" {
            return Some(Var::T);
        }
        if name.len() < 2 || !name.is_ascii() {
            return None;
        }
        let (head, digits) = name.split_at(1);
        if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let k: usize = digits.parse().ok()?;
        let var = match head {
            "q" => Var::Q(k - 1),
            "u" => Var::U(k - 1),
            "p" => Var::P(k - 1),
            _ => return None,
        };
        self.admits(var).then_some(var)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt, Func::Abs];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, x: f64) -> Result<f64, ExprError> {
        match self {
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Exp => Ok(x.exp()),
            Func::Log if x <= 0.0 => Err(ExprError::Domain(format!("log({x})"))),
            Func::Log => Ok(x.ln()),
            Func::Sqrt if x < 0.0 => Err(ExprError::Domain(format!("sqrt({x})"))),
            Func::Sqrt => Ok(x.sqrt()),
            Func::Abs => Ok(x.abs()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => " * ",
            BinOp::Div => " / ",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Values for the variables of an expression. Components are zero-based.
#[derive(Debug, Clone, Copy)]
pub struct Bindings<'a> {
    pub t: f64,
    pub q: &'a [f64],
    pub u: &'a [f64],
    pub p: &'a [f64],
}

impl<'a> Bindings<'a> {
    pub fn new(t: f64, q: &'a [f64], u: &'a [f64], p: &'a [f64]) -> Self {
        Self { t, q, u, p }
    }

    pub fn get(&self, var: Var) -> Result<f64, ExprError> {
        let found = match var {
            Var::T => Some(self.t),
            Var::Q(i) => self.q.get(i).copied(),
            Var::U(j) => self.u.get(j).copied(),
            Var::P(i) => self.p.get(i).copied(),
        };
        found.ok_or(ExprError::MissingBinding(var))
    }
}

// Constructors below apply the light simplifications 0·x → 0, x + 0 → x,
// x·1 → x (and their mirrors) plus folding of literal-only operations.
impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    fn is_num(&self, v: f64) -> bool {
        self.as_num() == Some(v)
    }

    pub fn is_zero(&self) -> bool {
        self.is_num(0.0)
    }

    fn fold(op: BinOp, a: f64, b: f64) -> Option<Expr> {
        let v = match op {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div if b == 0.0 => return None,
            BinOp::Div => a / b,
            BinOp::Pow if a < 0.0 && b.fract() != 0.0 => return None,
            BinOp::Pow if a == 0.0 && b < 0.0 => return None,
            BinOp::Pow => a.powf(b),
        };
        v.is_finite().then_some(Expr::Num(v))
    }

    fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
            if let Some(e) = Self::fold(op, x, y) {
                return e;
            }
        }
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        if a.is_zero() {
            b
        } else if b.is_zero() {
            a
        } else {
            Self::binary(BinOp::Add, a, b)
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        if b.is_zero() {
            a
        } else if a.is_zero() {
            Self::neg(b)
        } else {
            Self::binary(BinOp::Sub, a, b)
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        if a.is_zero() || b.is_zero() {
            Expr::Num(0.0)
        } else if a.is_num(1.0) {
            b
        } else if b.is_num(1.0) {
            a
        } else {
            Self::binary(BinOp::Mul, a, b)
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        if b.is_num(1.0) {
            a
        } else if a.is_zero() && !b.is_zero() {
            Expr::Num(0.0)
        } else {
            Self::binary(BinOp::Div, a, b)
        }
    }

    pub fn pow(base: Expr, exponent: Expr) -> Expr {
        if exponent.is_num(1.0) {
            base
        } else if exponent.is_zero() {
            Expr::Num(1.0)
        } else {
            Self::binary(BinOp::Pow, base, exponent)
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Num(v) => Expr::Num(-v),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    /// Sum of the given terms; an empty sum is 0.
    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        terms.into_iter().fold(Expr::Num(0.0), Expr::add)
    }

    pub fn evaluate(&self, b: &Bindings<'_>) -> Result<f64, ExprError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(var) => b.get(*var)?,
            Expr::Neg(a) => -a.evaluate(b)?,
            Expr::Call(f, a) => f.apply(a.evaluate(b)?)?,
            Expr::Binary(op, l, r) => {
                let x = l.evaluate(b)?;
                let y = r.evaluate(b)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div if y == 0.0 => {
                        return Err(ExprError::Domain(format!("division by zero in {self}")))
                    }
                    BinOp::Div => x / y,
                    BinOp::Pow => {
                        if x < 0.0 && y.fract() != 0.0 {
                            return Err(ExprError::Domain(format!(
                                "negative base {x} raised to non-integer power {y}"
                            )));
                        }
                        if x == 0.0 && y < 0.0 {
                            return Err(ExprError::Domain(format!(
                                "zero raised to negative power {y}"
                            )));
                        }
                        x.powf(y)
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::Domain(format!("non-finite value from {self}")))
        }
    }

    /// Exact symbolic derivative with respect to `var`.
    pub fn differentiate(&self, var: Var) -> Expr {
        diff::derivative(self, var)
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_vars(out),
            Expr::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(var),
            Expr::Binary(_, l, r) => l.depends_on(var) || r.depends_on(var),
        }
    }

    /// Checks every variable against `ctx`, returning the first offender.
    pub fn check_context(&self, ctx: &VarContext) -> Result<(), ExprError> {
        match self.free_vars().into_iter().find(|v| !ctx.admits(*v)) {
            Some(v) => Err(ExprError::UnknownIdentifier {
                name: v.to_string(),
                offset: 0,
            }),
            None => Ok(()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => 5,
            Expr::Neg(_) => 3,
            Expr::Binary(op, ..) => op.precedence(),
        }
    }
}

fn write_num(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    let body = if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v.abs())
    } else {
        format!("{:?}", v.abs())
    };
    if v.is_sign_negative() {
        write!(f, "(-{body})")
    } else {
        write!(f, "{body}")
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

// Printing inserts exactly the parentheses needed for `parse` to rebuild the
// same tree: precedence, left associativity of + − * /, right associativity
// of ^, and the rule that `-<literal>` parses as a negative literal.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write_num(f, *v),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Neg(a) => {
                write!(f, "-")?;
                let parens = matches!(**a, Expr::Num(_)) || a.precedence() < 3;
                write_child(f, a, parens)
            }
            Expr::Binary(BinOp::Pow, l, r) => {
                let left_parens = !matches!(**l, Expr::Num(_)) && l.precedence() <= 4;
                write_child(f, l, left_parens)?;
                write!(f, "^")?;
                write_child(f, r, r.precedence() < 3)
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                write_child(f, l, l.precedence() < p)?;
                write!(f, "{}", op.symbol())?;
                write_child(f, r, r.precedence() <= p)
            }
        }
    }
}
