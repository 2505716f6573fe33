use super::{BinOp, Expr, Func, Var};

pub(super) fn derivative(e: &Expr, v: Var) -> Expr {
    if !e.depends_on(v) {
        return Expr::num(0.0);
    }
    match e {
        Expr::Num(_) => Expr::num(0.0),
        Expr::Var(w) => Expr::num(if *w == v { 1.0 } else { 0.0 }),
        Expr::Neg(a) => Expr::neg(derivative(a, v)),
        Expr::Binary(op, l, r) => {
            let (f, g) = (l.as_ref(), r.as_ref());
            let df = derivative(f, v);
            let dg = derivative(g, v);
            match op {
                BinOp::Add => Expr::add(df, dg),
                BinOp::Sub => Expr::sub(df, dg),
                BinOp::Mul => Expr::add(Expr::mul(df, g.clone()), Expr::mul(f.clone(), dg)),
                BinOp::Div if dg.is_zero() => Expr::div(df, g.clone()),
                BinOp::Div => Expr::div(
                    Expr::sub(Expr::mul(df, g.clone()), Expr::mul(f.clone(), dg)),
                    Expr::pow(g.clone(), Expr::num(2.0)),
                ),
                BinOp::Pow if !g.depends_on(v) => {
                    // d(f^g) = g·f^(g−1)·f'
                    let reduced = Expr::pow(f.clone(), Expr::sub(g.clone(), Expr::num(1.0)));
                    Expr::mul(Expr::mul(g.clone(), reduced), df)
                }
                BinOp::Pow if !f.depends_on(v) => {
                    // d(c^g) = c^g·log(c)·g'
                    Expr::mul(Expr::mul(e.clone(), Expr::call(Func::Log, f.clone())), dg)
                }
                BinOp::Pow => {
                    // d(f^g) = f^g·(g'·log f + g·f'/f)
                    let inner = Expr::add(
                        Expr::mul(dg, Expr::call(Func::Log, f.clone())),
                        Expr::div(Expr::mul(g.clone(), df), f.clone()),
                    );
                    Expr::mul(e.clone(), inner)
                }
            }
        }
        Expr::Call(func, a) => {
            let da = derivative(a, v);
            let a = a.as_ref().clone();
            let outer = match func {
                Func::Sin => Expr::call(Func::Cos, a),
                Func::Cos => Expr::neg(Expr::call(Func::Sin, a)),
                Func::Exp => Expr::call(Func::Exp, a),
                Func::Log => return Expr::div(da, a),
                Func::Sqrt => {
                    return Expr::div(da, Expr::mul(Expr::num(2.0), Expr::call(Func::Sqrt, a)))
                }
                Func::Abs => Expr::div(a.clone(), Expr::call(Func::Abs, a)),
            };
            Expr::mul(outer, da)
        }
    }
}
