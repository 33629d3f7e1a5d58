//! Scalar expression language over `x, y, t, u, v`.
//!
//! Expressions describe coefficient functions, reaction terms, initial data
//! and manufactured solutions. Grammar (EBNF):
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;          (* right-associative *)
//! primary = number | "pi" | var | func "(" expr ")" | "(" expr ")" ;
//! var     = "x" | "y" | "t" | "u" | "v" ;
//! func    = "exp" | "ln" | "sqrt" | "abs" | "sin" | "cos" | "sign" ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! The exponent of `^` must not contain variables. A minus sign directly in
//! front of a numeric literal (and not followed by `^`) is read as a negative
//! constant, so `-2` is `Const(-2)` while `-u` and `-2^2` are negations.

mod calculus;
mod parser;

use std::fmt;

pub use parser::parse;

/// The five symbols an expression may refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
    T,
    U,
    V,
}

impl Var {
    pub const ALL: [Var; 5] = [Var::X, Var::Y, Var::T, Var::U, Var::V];

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::T => "t",
            Var::U => "u",
            Var::V => "v",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == name)
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sin,
    Cos,
    /// Sign function with `sign(0) = 0`; appears as the derivative of `abs`.
    Sign,
}

impl UnaryOp {
    fn func_name(self) -> Option<&'static str> {
        match self {
            UnaryOp::Neg => None,
            UnaryOp::Exp => Some("exp"),
            UnaryOp::Ln => Some("ln"),
            UnaryOp::Sqrt => Some("sqrt"),
            UnaryOp::Abs => Some("abs"),
            UnaryOp::Sin => Some("sin"),
            UnaryOp::Cos => Some("cos"),
            UnaryOp::Sign => Some("sign"),
        }
    }

    pub(crate) fn from_func_name(name: &str) -> Option<UnaryOp> {
        [
            UnaryOp::Exp,
            UnaryOp::Ln,
            UnaryOp::Sqrt,
            UnaryOp::Abs,
            UnaryOp::Sin,
            UnaryOp::Cos,
            UnaryOp::Sign,
        ]
        .into_iter()
        .find(|op| op.func_name() == Some(name))
    }

    fn apply(self, a: f64) -> f64 {
        match self {
            UnaryOp::Neg => -a,
            UnaryOp::Exp => a.exp(),
            UnaryOp::Ln => a.ln(),
            UnaryOp::Sqrt => a.sqrt(),
            UnaryOp::Abs => a.abs(),
            UnaryOp::Sin => a.sin(),
            UnaryOp::Cos => a.cos(),
            UnaryOp::Sign => {
                if a > 0.0 {
                    1.0
                } else if a < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }
}

/// Immutable expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("non-constant exponent at byte {offset}")]
    NonConstantExponent { offset: usize },
    #[error("unbound variable `{0}`")]
    Unbound(Var),
    #[error("domain violation in `{node}`: {reason}")]
    Domain { node: String, reason: String },
}

/// Values for the variables of an expression. Unset slots are unbound.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bindings {
    slots: [Option<f64>; 5],
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: Var, value: f64) -> Self {
        self.set(var, value);
        self
    }

    pub fn set(&mut self, var: Var, value: f64) {
        self.slots[var.slot()] = Some(value);
    }

    pub fn get(&self, var: Var) -> Option<f64> {
        self.slots[var.slot()]
    }

    /// Bindings for a coefficient evaluated at a state `(u, v)`.
    pub fn uv(u: f64, v: f64) -> Self {
        Self::new().with(Var::U, u).with(Var::V, v)
    }
}

impl FromIterator<(Var, f64)> for Bindings {
    fn from_iter<I: IntoIterator<Item = (Var, f64)>>(iter: I) -> Self {
        let mut b = Bindings::new();
        for (var, value) in iter {
            b.set(var, value);
        }
        b
    }
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Expr::Const(_))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Whether `var` occurs anywhere in the tree.
    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Unary(_, a) => a.depends_on(var),
            Expr::Binary(_, a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    /// Sorted, de-duplicated list of variables occurring in the tree.
    pub fn variables(&self) -> Vec<Var> {
        Var::ALL.into_iter().filter(|v| self.depends_on(*v)).collect()
    }

    pub fn has_variables(&self) -> bool {
        Var::ALL.into_iter().any(|v| self.depends_on(v))
    }

    /// Evaluates the tree in IEEE double precision, left operand first.
    ///
    /// Any node producing a non-finite value is reported as a domain
    /// violation naming that node.
    pub fn eval(&self, b: &Bindings) -> Result<f64, ExprError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(v) => b.get(*v).ok_or(ExprError::Unbound(*v)),
            Expr::Unary(op, a) => {
                let x = a.eval(b)?;
                match op {
                    UnaryOp::Ln if x <= 0.0 => return Err(self.domain(format!("logarithm of non-positive value {x}"))),
                    UnaryOp::Sqrt if x < 0.0 => return Err(self.domain(format!("square root of negative value {x}"))),
                    _ => {}
                }
                self.finite(op.apply(x))
            }
            Expr::Binary(op, l, r) => {
                let a = l.eval(b)?;
                let c = r.eval(b)?;
                let value = match op {
                    BinaryOp::Add => a + c,
                    BinaryOp::Sub => a - c,
                    BinaryOp::Mul => a * c,
                    BinaryOp::Div => {
                        if c == 0.0 {
                            return Err(self.domain("division by zero".to_string()));
                        }
                        a / c
                    }
                    BinaryOp::Pow => power(a, c),
                };
                self.finite(value)
            }
        }
    }

    /// Convenience wrapper for coefficients of the state `(u, v)`.
    pub fn eval_uv(&self, u: f64, v: f64) -> Result<f64, ExprError> {
        self.eval(&Bindings::uv(u, v))
    }

    fn finite(&self, value: f64) -> Result<f64, ExprError> {
        if value.is_finite() {
            Ok(value)
        } else {
            Err(self.domain(format!("non-finite result {value}")))
        }
    }

    fn domain(&self, reason: String) -> ExprError {
        ExprError::Domain {
            node: self.to_string(),
            reason,
        }
    }
}

/// `base^exponent` with the continuous extension `0^c = 0` for `c > 0` and
/// `0^0 = 1`.
pub(crate) fn power(base: f64, exponent: f64) -> f64 {
    if exponent == exponent.trunc() && exponent.abs() <= i32::MAX as f64 {
        base.powi(exponent as i32)
    } else {
        base.powf(exponent)
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesised form; `parse` reads it back to an equal tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "({c})")
                } else {
                    write!(f, "{c}")
                }
            }
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Unary(UnaryOp::Neg, a) => match a.as_ref() {
                // `-2` would read back as a negative literal
                Expr::Const(c) if !c.is_sign_negative() => write!(f, "(-({a}))"),
                _ => write!(f, "(-{a})"),
            },
            Expr::Unary(op, a) => {
                write!(f, "{}({a})", op.func_name().expect("named function"))
            }
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

// Smart constructors with constant folding and identity elimination. They are
// used by differentiation and substitution; the parser builds raw trees.

pub fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Binary(BinaryOp::Add, Box::new(a), Box::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x - y),
        (_, Some(y)) if y == 0.0 => a,
        (Some(x), _) if x == 0.0 => neg(b),
        _ => Expr::Binary(BinaryOp::Sub, Box::new(a), Box::new(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x * y),
        (Some(x), _) if x == 0.0 => Expr::Const(0.0),
        (_, Some(y)) if y == 0.0 => Expr::Const(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        (Some(x), _) if x == -1.0 => neg(b),
        (_, Some(y)) if y == -1.0 => neg(a),
        _ => Expr::Binary(BinaryOp::Mul, Box::new(a), Box::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
        (Some(x), _) if x == 0.0 => Expr::Const(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Binary(BinaryOp::Div, Box::new(a), Box::new(b)),
    }
}

/// `base^exponent` for a constant exponent.
pub fn pow(base: Expr, exponent: f64) -> Expr {
    if exponent == 0.0 {
        return Expr::Const(1.0);
    }
    if exponent == 1.0 {
        return base;
    }
    match base.as_const() {
        Some(c) if power(c, exponent).is_finite() => Expr::Const(power(c, exponent)),
        _ => Expr::Binary(BinaryOp::Pow, Box::new(base), Box::new(Expr::Const(exponent))),
    }
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Unary(UnaryOp::Neg, inner) => *inner,
        other => Expr::Unary(UnaryOp::Neg, Box::new(other)),
    }
}

pub fn unary(op: UnaryOp, a: Expr) -> Expr {
    if op == UnaryOp::Neg {
        return neg(a);
    }
    match a.as_const() {
        Some(c) if op.apply(c).is_finite() && !(op == UnaryOp::Ln && c <= 0.0) => Expr::Const(op.apply(c)),
        _ => Expr::Unary(op, Box::new(a)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_product() {
        let e = parse("u*v").unwrap();
        assert_eq!(e.eval(&Bindings::uv(2.0, 3.0)).unwrap(), 6.0);
    }

    #[test]
    fn eval_fractional_power() {
        let e = parse("u^1.5").unwrap();
        assert_eq!(e.eval(&Bindings::new().with(Var::U, 4.0)).unwrap(), 8.0);
    }

    #[test]
    fn eval_logistic_reaction() {
        // r*u - m*u^k with r = 1, m = 1, k = 3 at u = 2: 2 - 8
        let e = parse("1*u - 1*u^3").unwrap();
        let got = e.eval(&Bindings::new().with(Var::U, 2.0)).unwrap();
        let brute = 1.0 * 2.0 - 1.0 * 2.0f64 * 2.0 * 2.0;
        assert_eq!(got, -6.0);
        assert_eq!(got, brute);
    }

    #[test]
    fn zero_base_powers() {
        let b = Bindings::new().with(Var::U, 0.0);
        assert_eq!(parse("u^1.5").unwrap().eval(&b).unwrap(), 0.0);
        assert_eq!(parse("u^0").unwrap().eval(&b).unwrap(), 1.0);
        assert!(matches!(
            parse("u^-0.5").unwrap().eval(&b),
            Err(ExprError::Domain { .. })
        ));
    }

    #[test]
    fn unbound_and_domain_errors() {
        let e = parse("u + v").unwrap();
        assert_eq!(
            e.eval(&Bindings::new().with(Var::U, 1.0)),
            Err(ExprError::Unbound(Var::V))
        );
        let ln = parse("ln(u)").unwrap();
        match ln.eval(&Bindings::new().with(Var::U, 0.0)) {
            Err(ExprError::Domain { node, .. }) => assert_eq!(node, "ln(u)"),
            other => panic!("unexpected {other:?}"),
        }
        let d = parse("1/u").unwrap();
        assert!(matches!(
            d.eval(&Bindings::new().with(Var::U, 0.0)),
            Err(ExprError::Domain { .. })
        ));
    }

    #[test]
    fn print_product() {
        let e = Expr::Binary(BinaryOp::Mul, Box::new(Expr::Var(Var::U)), Box::new(Expr::Var(Var::V)));
        assert_eq!(e.to_string(), "(u * v)");
    }

    #[test]
    fn print_negations_round_trip() {
        let cases = [
            Expr::Unary(UnaryOp::Neg, Box::new(Expr::Const(2.0))),
            Expr::Const(-2.0),
            Expr::Unary(UnaryOp::Neg, Box::new(Expr::Const(-2.0))),
            Expr::Unary(UnaryOp::Neg, Box::new(Expr::Var(Var::U))),
            Expr::Const(-0.0),
        ];
        for e in cases {
            assert_eq!(parse(&e.to_string()).unwrap(), e, "{e}");
        }
    }

    #[test]
    fn smart_constructors_fold() {
        let u = Expr::Var(Var::U);
        assert_eq!(mul(Expr::Const(0.0), u.clone()), Expr::Const(0.0));
        assert_eq!(add(u.clone(), Expr::Const(0.0)), u);
        assert_eq!(pow(u.clone(), 1.0), u);
        assert_eq!(neg(neg(u.clone())), u);
        assert_eq!(div(Expr::Const(6.0), Expr::Const(3.0)), Expr::Const(2.0));
    }

    #[test]
    fn sign_convention() {
        let e = parse("sign(u)").unwrap();
        let at = |u: f64| e.eval(&Bindings::new().with(Var::U, u)).unwrap();
        assert_eq!(at(0.0), 0.0);
        assert_eq!(at(-3.0), -1.0);
        assert_eq!(at(2.0), 1.0);
    }
}
