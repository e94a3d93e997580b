//! Scalar expression trees over `x` and `t`.
//!
//! A [`ScalarField`] is an immutable, cheaply clonable expression tree that
//! evaluates to `f64` and differentiates symbolically in `x`. Derivatives of
//! non-smooth nodes (`abs`, `min`, `max`) introduce internal sign/select
//! nodes that evaluate to NaN exactly at the kink, so a caller checking
//! finiteness detects non-differentiable points.

mod parse;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use parse::parse;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Const(f64),
    Pi,
    X,
    T,
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, f64),
    Abs(Expr),
    Exp(Expr),
    Sqrt(Expr),
    Min(Expr, Expr),
    Max(Expr, Expr),
    /// k-th derivative (k ≤ 3) of the unit bump `exp(1 − 1/(1−z²))` on |z| < 1.
    Bump(u8, Expr),
    /// Sign of the argument; NaN at zero.
    Sign(Expr),
    /// `if a < b { lt } else if a > b { gt } else { tie }`, where a tie
    /// evaluates to NaN unless both branches agree.
    Select {
        a: Expr,
        b: Expr,
        lt: Expr,
        gt: Expr,
    },
}

type Expr = Arc<Node>;

/// An expression `f(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    root: Expr,
}

fn c(v: f64) -> Expr {
    Arc::new(Node::Const(v))
}

fn as_const(e: &Expr) -> Option<f64> {
    match **e {
        Node::Const(v) => Some(v),
        Node::Pi => Some(std::f64::consts::PI),
        _ => None,
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => c(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Arc::new(Node::Add(a, b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => c(x - y),
        (_, Some(y)) if y == 0.0 => a,
        (Some(x), _) if x == 0.0 => neg(b),
        _ => Arc::new(Node::Sub(a, b)),
    }
}

fn neg(a: Expr) -> Expr {
    match as_const(&a) {
        Some(x) => c(-x),
        None => Arc::new(Node::Neg(a)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => c(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => c(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        _ => Arc::new(Node::Mul(a, b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), _) if x == 0.0 => c(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Arc::new(Node::Div(a, b)),
    }
}

fn pow(a: Expr, n: f64) -> Expr {
    if n == 0.0 {
        return c(1.0);
    }
    if n == 1.0 {
        return a;
    }
    Arc::new(Node::Pow(a, n))
}

fn powf(base: f64, n: f64) -> f64 {
    if n.fract() == 0.0 && n.abs() < 1024.0 {
        base.powi(n as i32)
    } else {
        base.powf(n)
    }
}

fn bump(k: u8, z: f64) -> f64 {
    if z.abs() >= 1.0 {
        return 0.0;
    }
    let w = 1.0 - z * z;
    let b = (1.0 - 1.0 / w).exp();
    let g1 = -2.0 * z / (w * w);
    match k {
        0 => b,
        1 => g1 * b,
        2 => {
            let g2 = -2.0 / (w * w) - 8.0 * z * z / (w * w * w);
            (g2 + g1 * g1) * b
        }
        3 => {
            let g2 = -2.0 / (w * w) - 8.0 * z * z / (w * w * w);
            let g3 = -24.0 * z / (w * w * w) - 48.0 * z * z * z / (w * w * w * w);
            (g3 + 3.0 * g1 * g2 + g1 * g1 * g1) * b
        }
        _ => f64::NAN,
    }
}

fn eval_node(e: &Node, x: f64, t: f64) -> f64 {
    match e {
        Node::Const(v) => *v,
        Node::Pi => std::f64::consts::PI,
        Node::X => x,
        Node::T => t,
        Node::Neg(a) => -eval_node(a, x, t),
        Node::Add(a, b) => eval_node(a, x, t) + eval_node(b, x, t),
        Node::Sub(a, b) => eval_node(a, x, t) - eval_node(b, x, t),
        Node::Mul(a, b) => eval_node(a, x, t) * eval_node(b, x, t),
        Node::Div(a, b) => eval_node(a, x, t) / eval_node(b, x, t),
        Node::Pow(a, n) => powf(eval_node(a, x, t), *n),
        Node::Abs(a) => eval_node(a, x, t).abs(),
        Node::Exp(a) => eval_node(a, x, t).exp(),
        Node::Sqrt(a) => eval_node(a, x, t).sqrt(),
        Node::Min(a, b) => eval_node(a, x, t).min(eval_node(b, x, t)),
        Node::Max(a, b) => eval_node(a, x, t).max(eval_node(b, x, t)),
        Node::Bump(k, a) => bump(*k, eval_node(a, x, t)),
        Node::Sign(a) => {
            let v = eval_node(a, x, t);
            if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                f64::NAN
            }
        }
        Node::Select { a, b, lt, gt } => {
            let (va, vb) = (eval_node(a, x, t), eval_node(b, x, t));
            if va < vb {
                eval_node(lt, x, t)
            } else if va > vb {
                eval_node(gt, x, t)
            } else {
                let (l, g) = (eval_node(lt, x, t), eval_node(gt, x, t));
                if l == g {
                    l
                } else {
                    f64::NAN
                }
            }
        }
    }
}

fn depends_on_x(e: &Node) -> bool {
    match e {
        Node::Const(_) | Node::Pi | Node::T => false,
        Node::X => true,
        Node::Neg(a)
        | Node::Pow(a, _)
        | Node::Abs(a)
        | Node::Exp(a)
        | Node::Sqrt(a)
        | Node::Bump(_, a)
        | Node::Sign(a) => depends_on_x(a),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Min(a, b) | Node::Max(a, b) => {
            depends_on_x(a) || depends_on_x(b)
        }
        Node::Select { a, b, lt, gt } => depends_on_x(a) || depends_on_x(b) || depends_on_x(lt) || depends_on_x(gt),
    }
}

fn diff_node(e: &Expr) -> Result<Expr> {
    if !depends_on_x(e) {
        return Ok(c(0.0));
    }
    let d = match &**e {
        Node::Const(_) | Node::Pi | Node::T => c(0.0),
        Node::X => c(1.0),
        Node::Neg(a) => neg(diff_node(a)?),
        Node::Add(a, b) => add(diff_node(a)?, diff_node(b)?),
        Node::Sub(a, b) => sub(diff_node(a)?, diff_node(b)?),
        Node::Mul(a, b) => add(mul(diff_node(a)?, b.clone()), mul(a.clone(), diff_node(b)?)),
        Node::Div(a, b) => {
            // (a'b − ab') / b²
            let num = sub(mul(diff_node(a)?, b.clone()), mul(a.clone(), diff_node(b)?));
            div(num, pow(b.clone(), 2.0))
        }
        Node::Pow(a, n) => mul(mul(c(*n), pow(a.clone(), n - 1.0)), diff_node(a)?),
        Node::Abs(a) => mul(Arc::new(Node::Sign(a.clone())), diff_node(a)?),
        Node::Exp(a) => mul(e.clone(), diff_node(a)?),
        Node::Sqrt(a) => div(diff_node(a)?, mul(c(2.0), e.clone())),
        Node::Min(a, b) => Arc::new(Node::Select { a: a.clone(), b: b.clone(), lt: diff_node(a)?, gt: diff_node(b)? }),
        Node::Max(a, b) => Arc::new(Node::Select { a: a.clone(), b: b.clone(), lt: diff_node(b)?, gt: diff_node(a)? }),
        Node::Bump(k, a) => {
            if *k >= 3 {
                return Err(Error::DomainError("bump derivatives above order 3 are not supported".into()));
            }
            mul(Arc::new(Node::Bump(k + 1, a.clone())), diff_node(a)?)
        }
        // Derivative of sign is zero away from its (already NaN) kink.
        Node::Sign(a) => mul(c(0.0), Arc::new(Node::Sign(a.clone()))),
        Node::Select { a, b, lt, gt } => {
            Arc::new(Node::Select { a: a.clone(), b: b.clone(), lt: diff_node(lt)?, gt: diff_node(gt)? })
        }
    };
    Ok(d)
}

impl ScalarField {
    pub(crate) fn from_node(node: Node) -> Self {
        ScalarField { root: Arc::new(node) }
    }

    pub fn constant(v: f64) -> Self {
        ScalarField { root: c(v) }
    }

    pub fn x() -> Self {
        Self::from_node(Node::X)
    }

    pub fn t() -> Self {
        Self::from_node(Node::T)
    }

    /// The unit bump `exp(1 − 1/(1−z²))` for |z| < 1, 0 otherwise, composed
    /// with `z = (x − center)/radius`.
    pub fn bump(center: f64, radius: f64) -> Self {
        let z = div(sub(Arc::new(Node::X), c(center)), c(radius));
        ScalarField { root: Arc::new(Node::Bump(0, z)) }
    }

    pub fn powf(&self, n: f64) -> Self {
        ScalarField { root: pow(self.root.clone(), n) }
    }

    pub fn abs(&self) -> Self {
        Self::from_node(Node::Abs(self.root.clone()))
    }

    pub fn exp(&self) -> Self {
        Self::from_node(Node::Exp(self.root.clone()))
    }

    pub fn sqrt(&self) -> Self {
        Self::from_node(Node::Sqrt(self.root.clone()))
    }

    pub fn min(&self, other: &Self) -> Self {
        Self::from_node(Node::Min(self.root.clone(), other.root.clone()))
    }

    pub fn max(&self, other: &Self) -> Self {
        Self::from_node(Node::Max(self.root.clone(), other.root.clone()))
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        eval_node(&self.root, x, t)
    }

    /// Evaluates and rejects non-finite results.
    pub fn try_eval(&self, x: f64, t: f64) -> Result<f64> {
        let v = self.eval(x, t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::EvaluationError { x, t, msg: format!("`{self}` evaluates to {v}") })
        }
    }

    /// Symbolic derivative with respect to `x`.
    pub fn derivative(&self) -> Result<Self> {
        Ok(ScalarField { root: diff_node(&self.root)? })
    }

    /// The constant value if the expression does not depend on `x` or `t`.
    pub fn as_constant(&self) -> Option<f64> {
        as_const(&self.root)
    }

    pub fn depends_on_x(&self) -> bool {
        depends_on_x(&self.root)
    }

    /// True when the expression is literally the variable `x`.
    pub fn is_identity(&self) -> bool {
        matches!(*self.root, Node::X)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $f:ident) => {
        impl std::ops::$trait for ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: ScalarField) -> ScalarField {
                ScalarField { root: $f(self.root, rhs.root) }
            }
        }
        impl std::ops::$trait<f64> for ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: f64) -> ScalarField {
                ScalarField { root: $f(self.root, c(rhs)) }
            }
        }
        impl std::ops::$trait<ScalarField> for f64 {
            type Output = ScalarField;
            fn $method(self, rhs: ScalarField) -> ScalarField {
                ScalarField { root: $f(c(self), rhs.root) }
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl std::ops::Neg for ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        ScalarField { root: neg(self.root) }
    }
}

impl std::str::FromStr for ScalarField {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

fn fmt_num(v: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if v < 0.0 || (v == 0.0 && v.is_sign_negative()) {
        write!(f, "(-{:?})", -v)
    } else {
        write!(f, "{v:?}")
    }
}

// Every compound node is parenthesised, so precedence never matters.
fn fmt_node(e: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Node::Const(v) => fmt_num(*v, f),
        Node::Pi => write!(f, "pi"),
        Node::X => write!(f, "x"),
        Node::T => write!(f, "t"),
        Node::Neg(a) => {
            write!(f, "(-")?;
            fmt_node(a, f)?;
            write!(f, ")")
        }
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            let op = match e {
                Node::Add(..) => "+",
                Node::Sub(..) => "-",
                Node::Mul(..) => "*",
                _ => "/",
            };
            write!(f, "(")?;
            fmt_node(a, f)?;
            write!(f, " {op} ")?;
            fmt_node(b, f)?;
            write!(f, ")")
        }
        Node::Pow(a, n) => {
            write!(f, "(")?;
            fmt_node(a, f)?;
            write!(f, "^{n:?})")
        }
        Node::Abs(a) | Node::Exp(a) | Node::Sqrt(a) | Node::Sign(a) => {
            let name = match e {
                Node::Abs(_) => "abs",
                Node::Exp(_) => "exp",
                Node::Sqrt(_) => "sqrt",
                _ => "sgn",
            };
            write!(f, "{name}(")?;
            fmt_node(a, f)?;
            write!(f, ")")
        }
        Node::Bump(k, a) => {
            if *k == 0 {
                write!(f, "bump(")?;
            } else {
                write!(f, "bump_d{k}(")?;
            }
            fmt_node(a, f)?;
            write!(f, ")")
        }
        Node::Min(a, b) | Node::Max(a, b) => {
            write!(f, "{}(", if matches!(e, Node::Min(..)) { "min" } else { "max" })?;
            fmt_node(a, f)?;
            write!(f, ", ")?;
            fmt_node(b, f)?;
            write!(f, ")")
        }
        Node::Select { a, b, lt, gt } => {
            write!(f, "select(")?;
            for (i, part) in [a, b, lt, gt].into_iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                fmt_node(part, f)?;
            }
            write!(f, ")")
        }
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_node(&self.root, f)
    }
}

impl Serialize for ScalarField {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ScalarField {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}
