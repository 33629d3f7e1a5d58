use super::{add, div, mul, neg, pow, sub, unary, BinaryOp, Bindings, Expr, UnaryOp, Var};

impl Expr {
    /// Exact symbolic derivative with respect to `var`.
    ///
    /// `d|f| = sign(f) f'` with `sign(0) = 0`; `sign` itself differentiates
    /// to zero.
    pub fn differentiate(&self, var: Var) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(v) => Expr::Const(if *v == var { 1.0 } else { 0.0 }),
            Expr::Unary(op, a) => {
                let da = a.differentiate(var);
                if da.as_const() == Some(0.0) {
                    return Expr::Const(0.0);
                }
                let a = (**a).clone();
                match op {
                    UnaryOp::Neg => neg(da),
                    UnaryOp::Exp => mul(unary(UnaryOp::Exp, a), da),
                    UnaryOp::Ln => div(da, a),
                    UnaryOp::Sqrt => div(da, mul(Expr::Const(2.0), unary(UnaryOp::Sqrt, a))),
                    UnaryOp::Abs => mul(unary(UnaryOp::Sign, a), da),
                    UnaryOp::Sin => mul(unary(UnaryOp::Cos, a), da),
                    UnaryOp::Cos => neg(mul(unary(UnaryOp::Sin, a), da)),
                    UnaryOp::Sign => Expr::Const(0.0),
                }
            }
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.as_ref(), b.as_ref());
                match op {
                    BinaryOp::Add => add(a.differentiate(var), b.differentiate(var)),
                    BinaryOp::Sub => sub(a.differentiate(var), b.differentiate(var)),
                    BinaryOp::Mul => add(
                        mul(a.differentiate(var), b.clone()),
                        mul(a.clone(), b.differentiate(var)),
                    ),
                    BinaryOp::Div => sub(
                        div(a.differentiate(var), b.clone()),
                        div(mul(a.clone(), b.differentiate(var)), pow(b.clone(), 2.0)),
                    ),
                    BinaryOp::Pow => {
                        let c = b.eval(&Bindings::new()).expect("exponent is a finite constant");
                        let da = a.differentiate(var);
                        if da.as_const() == Some(0.0) || c == 0.0 {
                            return Expr::Const(0.0);
                        }
                        mul(mul(Expr::Const(c), pow(a.clone(), c - 1.0)), da)
                    }
                }
            }
        }
    }

    /// Replaces every occurrence of `var` by `with`.
    pub fn substitute(&self, var: Var, with: &Expr) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) if *v == var => with.clone(),
            Expr::Var(_) => self.clone(),
            Expr::Unary(op, a) => unary(*op, a.substitute(var, with)),
            Expr::Binary(BinaryOp::Pow, a, b) => {
                let c = b.eval(&Bindings::new()).expect("exponent is a finite constant");
                pow(a.substitute(var, with), c)
            }
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.substitute(var, with), b.substitute(var, with));
                match op {
                    BinaryOp::Add => add(a, b),
                    BinaryOp::Sub => sub(a, b),
                    BinaryOp::Mul => mul(a, b),
                    BinaryOp::Div => div(a, b),
                    BinaryOp::Pow => unreachable!(),
                }
            }
        }
    }
}
