//! Shared helpers for the integration and acceptance tests: quadrature
//! oracles for the fractional operators and a seeded random-expression
//! generator.
#![allow(dead_code)]

use fracnoether::expr::{BinOp, Bindings, Expr, Func, Var};
use fracnoether::gamma::gamma;
use rand::Rng;

const QUAD_TOL: f64 = 1e-13;

/// ᶜD_{a+}^α f(t) = 1/Γ(1−α) ∫_a^t (t−s)^{−α} f'(s) ds, evaluated after the
/// substitution w = (t−s)^{1−α}, which leaves a smooth integrand:
/// 1/Γ(2−α) ∫_0^{(t−a)^{1−α}} f'(t − w^{1/(1−α)}) dw.
pub fn caputo_left_quad(df: impl Fn(f64) -> f64, a: f64, t: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        return df(t);
    }
    if t <= a {
        return 0.0;
    }
    let e = 1.0 / (1.0 - alpha);
    let upper = (t - a).powf(1.0 - alpha);
    let r = quadrature::integrate(|w| df(t - w.powf(e)), 0.0, upper, QUAD_TOL);
    r.integral / gamma(2.0 - alpha)
}

/// ᶜD_{b−}^α f(t) = −1/Γ(1−α) ∫_t^b (s−t)^{−α} f'(s) ds, same substitution.
pub fn caputo_right_quad(df: impl Fn(f64) -> f64, t: f64, b: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        return -df(t);
    }
    if t >= b {
        return 0.0;
    }
    let e = 1.0 / (1.0 - alpha);
    let upper = (b - t).powf(1.0 - alpha);
    let r = quadrature::integrate(|w| df(t + w.powf(e)), 0.0, upper, QUAD_TOL);
    -r.integral / gamma(2.0 - alpha)
}

/// _tI_b^β f(t) = 1/Γ(β) ∫_t^b (s−t)^{β−1} f(s) ds
/// = 1/Γ(β+1) ∫_0^{(b−t)^β} f(t + w^{1/β}) dw.
pub fn rl_integral_right_quad(f: impl Fn(f64) -> f64, t: f64, b: f64, beta: f64) -> f64 {
    if t >= b {
        return 0.0;
    }
    let e = 1.0 / beta;
    let upper = (b - t).powf(beta);
    let r = quadrature::integrate(|w| f(t + w.powf(e)), 0.0, upper, QUAD_TOL);
    r.integral / gamma(beta + 1.0)
}

/// Least-squares slope of −log(err) against log(N).
pub fn observed_order(ns: &[usize], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| -e.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub const VARS: [Var; 6] = [Var::T, Var::Q(0), Var::Q(1), Var::U(0), Var::U(1), Var::P(0)];
const FUNCS: [Func; 6] = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt, Func::Abs];

/// Random tree of depth at most `depth`, built without simplification so
/// that every node kind (including negative literals and nested negation)
/// appears.
pub fn random_expr<R: Rng>(rng: &mut R, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.6) {
            Expr::Var(VARS[rng.gen_range(0..VARS.len())])
        } else {
            let v: f64 = rng.gen_range(-3.0..3.0);
            Expr::Num((v * 100.0).round() / 100.0)
        };
    }
    let sub = |rng: &mut R| Box::new(random_expr(rng, depth - 1));
    match rng.gen_range(0..10) {
        0 => Expr::Neg(sub(rng)),
        1 | 2 => Expr::Binary(BinOp::Add, sub(rng), sub(rng)),
        3 => Expr::Binary(BinOp::Sub, sub(rng), sub(rng)),
        4 | 5 => Expr::Binary(BinOp::Mul, sub(rng), sub(rng)),
        6 => Expr::Binary(BinOp::Div, sub(rng), sub(rng)),
        7 => {
            let exponent = if rng.gen_bool(0.5) {
                Box::new(Expr::Num(rng.gen_range(-2..=3) as f64))
            } else {
                sub(rng)
            };
            Expr::Binary(BinOp::Pow, sub(rng), exponent)
        }
        _ => Expr::Call(FUNCS[rng.gen_range(0..FUNCS.len())], sub(rng)),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Point {
    pub t: f64,
    pub q: [f64; 2],
    pub u: [f64; 2],
    pub p: [f64; 1],
}

impl Point {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let mut r = || rng.gen_range(-1.5..1.5);
        Point {
            t: r(),
            q: [r(), r()],
            u: [r(), r()],
            p: [r()],
        }
    }

    pub fn bindings(&self) -> Bindings<'_> {
        Bindings::new(self.t, &self.q, &self.u, &self.p)
    }

    pub fn shifted(&self, v: Var, h: f64) -> Point {
        let mut p = *self;
        match v {
            Var::T => p.t += h,
            Var::Q(i) => p.q[i] += h,
            Var::U(i) => p.u[i] += h,
            Var::P(i) => p.p[i] += h,
        }
        p
    }
}

/// True when every sub-expression at `pt` stays a distance `margin` from
/// the non-smooth or undefined set of its operator (abs at 0, log and sqrt
/// at 0, division by 0, powers of non-positive bases) and all intermediate
/// magnitudes stay below `cap`.
pub fn well_conditioned(e: &Expr, pt: &Point, margin: f64, cap: f64) -> bool {
    let b = pt.bindings();
    let ok = |x: &Expr| match x.evaluate(&b) {
        Ok(v) => v.abs() < cap,
        Err(_) => false,
    };
    if !ok(e) {
        return false;
    }
    match e {
        Expr::Num(_) | Expr::Var(_) => true,
        Expr::Neg(a) => well_conditioned(a, pt, margin, cap),
        Expr::Binary(op, l, r) => {
            if !(well_conditioned(l, pt, margin, cap) && well_conditioned(r, pt, margin, cap)) {
                return false;
            }
            let (lv, rv) = (l.evaluate(&b).unwrap(), r.evaluate(&b).unwrap());
            match op {
                BinOp::Div => rv.abs() > margin,
                BinOp::Pow => match r.as_num() {
                    Some(k) if k.fract() == 0.0 && k >= 0.0 => true,
                    Some(k) if k.fract() == 0.0 => lv.abs() > margin,
                    _ => lv > margin,
                },
                _ => true,
            }
        }
        Expr::Call(f, a) => {
            if !well_conditioned(a, pt, margin, cap) {
                return false;
            }
            let av = a.evaluate(&b).unwrap();
            match f {
                Func::Log | Func::Sqrt => av > margin,
                Func::Abs => av.abs() > margin,
                _ => true,
            }
        }
    }
}

/// Richardson-extrapolated central difference, O(h⁴).
pub fn fd_derivative(e: &Expr, pt: &Point, v: Var, h: f64) -> Option<f64> {
    let f = |d: f64| e.evaluate(&pt.shifted(v, d).bindings()).ok();
    let d1 = (f(h)? - f(-h)?) / (2.0 * h);
    let d2 = (f(h / 2.0)? - f(-h / 2.0)?) / h;
    Some((4.0 * d2 - d1) / 3.0)
}
