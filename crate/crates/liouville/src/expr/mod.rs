//! A small closed-form expression language: one variable `x`, named
//! parameters, the usual elementary functions, and exact symbolic
//! differentiation. Initial data and hand-built chiral families are
//! specified in it.
//!
//! The grammar is fixed. `^` is right-associative and binds tighter than
//! unary minus; a non-integer exponent requires a positive base so that
//! differentiation and domain checking stay total.

mod parser;

pub use parser::{parse, ParseError};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::scalar::{approx_f64, real, Scalar};

/// Parameter bindings for evaluation (e.g. `m = 2`).
pub type Params<T> = BTreeMap<String, T>;

/// Unary functions of the grammar. `Neg` is spelled `-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Neg,
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Sqrt,
    Abs,
}

impl UnaryFn {
    /// Function names accepted in call position, sorted.
    pub const NAMES: [&'static str; 10] = [
        "abs", "cos", "cosh", "exp", "log", "sin", "sinh", "sqrt", "tan", "tanh",
    ];

    fn name(self) -> &'static str {
        match self {
            UnaryFn::Neg => "-",
            UnaryFn::Exp => "exp",
            UnaryFn::Log => "log",
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Tan => "tan",
            UnaryFn::Sinh => "sinh",
            UnaryFn::Cosh => "cosh",
            UnaryFn::Tanh => "tanh",
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => UnaryFn::Exp,
            "log" => UnaryFn::Log,
            "sin" => UnaryFn::Sin,
            "cos" => UnaryFn::Cos,
            "tan" => UnaryFn::Tan,
            "sinh" => UnaryFn::Sinh,
            "cosh" => UnaryFn::Cosh,
            "tanh" => UnaryFn::Tanh,
            "sqrt" => UnaryFn::Sqrt,
            "abs" => UnaryFn::Abs,
            _ => return None,
        })
    }
}

/// Binary operators of the grammar.
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
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// An immutable expression tree. Shared subtrees use `Arc`, so values are
/// cheap to clone and safe to evaluate concurrently.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr<T> {
    Const(T),
    /// The distinguished variable `x`.
    Var,
    /// A named parameter bound at evaluation time.
    Param(String),
    Unary(UnaryFn, Arc<Expr<T>>),
    Binary(BinOp, Arc<Expr<T>>, Arc<Expr<T>>),
}

/// Evaluation failure: out-of-domain input or unbound parameter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in `{node}` at x = {x}: {reason}")]
    Domain {
        node: String,
        x: f64,
        reason: &'static str,
    },
    #[error("non-finite value in `{node}` at x = {x}")]
    NonFinite { node: String, x: f64 },
    #[error("unbound parameter `{name}`")]
    UnboundParam { name: String },
}

/// Differentiation failure (only `abs` is rejected).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffError {
    #[error("cannot differentiate `{node}`")]
    NonDifferentiable { node: String },
}

impl<T: Scalar> Expr<T> {
    /// Evaluate at `x` with the given parameter bindings.
    ///
    /// Every intermediate value is checked: an out-of-domain input (log of a
    /// non-positive number, division by zero, ...) or an overflow is a
    /// reported error, never a silent NaN or infinity.
    pub fn eval(&self, x: T, params: &Params<T>) -> Result<T, EvalError> {
        let fin = |v: T, node: &Expr<T>| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(EvalError::NonFinite {
                    node: node.to_string(),
                    x: approx_f64(x),
                })
            }
        };
        let dom = |node: &Expr<T>, reason: &'static str| EvalError::Domain {
            node: node.to_string(),
            x: approx_f64(x),
            reason,
        };

        match self {
            Expr::Const(c) => fin(*c, self),
            Expr::Var => Ok(x),
            Expr::Param(name) => params
                .get(name)
                .copied()
                .ok_or_else(|| EvalError::UnboundParam { name: name.clone() }),
            Expr::Unary(f, a) => {
                let v = a.eval(x, params)?;
                let out = match f {
                    UnaryFn::Neg => -v,
                    UnaryFn::Exp => v.exp(),
                    UnaryFn::Log => {
                        if v <= T::zero() {
                            return Err(dom(self, "log of a non-positive value"));
                        }
                        v.ln()
                    }
                    UnaryFn::Sin => v.sin(),
                    UnaryFn::Cos => v.cos(),
                    UnaryFn::Tan => v.tan(),
                    UnaryFn::Sinh => v.sinh(),
                    UnaryFn::Cosh => v.cosh(),
                    UnaryFn::Tanh => v.tanh(),
                    UnaryFn::Sqrt => {
                        if v < T::zero() {
                            return Err(dom(self, "sqrt of a negative value"));
                        }
                        v.sqrt()
                    }
                    UnaryFn::Abs => v.abs(),
                };
                fin(out, self)
            }
            Expr::Binary(op, a, b) => {
                let va = a.eval(x, params)?;
                let vb = b.eval(x, params)?;
                let out = match op {
                    BinOp::Add => va + vb,
                    BinOp::Sub => va - vb,
                    BinOp::Mul => va * vb,
                    BinOp::Div => {
                        if vb == T::zero() {
                            return Err(dom(self, "division by zero"));
                        }
                        va / vb
                    }
                    BinOp::Pow => match integer_exponent(b) {
                        Some(n) => {
                            if va == T::zero() && n < 0 {
                                return Err(dom(self, "zero base with negative exponent"));
                            }
                            va.powi(n)
                        }
                        None => {
                            if va <= T::zero() {
                                return Err(dom(
                                    self,
                                    "non-integer exponent requires a positive base",
                                ));
                            }
                            va.powf(vb)
                        }
                    },
                };
                fin(out, self)
            }
        }
    }

    /// Exact derivative with respect to `x`. Repeated application yields
    /// higher derivatives; `abs` is rejected.
    pub fn differentiate(&self) -> Result<Expr<T>, DiffError> {
        match self {
            Expr::Const(_) | Expr::Param(_) => Ok(Expr::Const(T::zero())),
            Expr::Var => Ok(Expr::Const(T::one())),
            Expr::Unary(f, a) => {
                let da = a.differentiate()?;
                let a = Expr::clone(a);
                let chain = |outer: Expr<T>| mul(da.clone(), outer);
                Ok(match f {
                    UnaryFn::Neg => neg(da),
                    UnaryFn::Exp => chain(unary(UnaryFn::Exp, a)),
                    UnaryFn::Log => div(da, a),
                    UnaryFn::Sin => chain(unary(UnaryFn::Cos, a)),
                    UnaryFn::Cos => neg(chain(unary(UnaryFn::Sin, a))),
                    // tan' = 1 + tan^2 keeps the result inside the grammar
                    UnaryFn::Tan => chain(add(
                        Expr::Const(T::one()),
                        pow_int(unary(UnaryFn::Tan, a), 2),
                    )),
                    UnaryFn::Sinh => chain(unary(UnaryFn::Cosh, a)),
                    UnaryFn::Cosh => chain(unary(UnaryFn::Sinh, a)),
                    UnaryFn::Tanh => chain(sub(
                        Expr::Const(T::one()),
                        pow_int(unary(UnaryFn::Tanh, a), 2),
                    )),
                    UnaryFn::Sqrt => div(da, mul(Expr::Const(real(2.0)), unary(UnaryFn::Sqrt, a))),
                    UnaryFn::Abs => {
                        return Err(DiffError::NonDifferentiable {
                            node: self.to_string(),
                        })
                    }
                })
            }
            Expr::Binary(op, a, b) => {
                let (a, b) = (Expr::clone(a), Expr::clone(b));
                Ok(match op {
                    BinOp::Add => add(a.differentiate()?, b.differentiate()?),
                    BinOp::Sub => sub(a.differentiate()?, b.differentiate()?),
                    BinOp::Mul => add(
                        mul(a.differentiate()?, b.clone()),
                        mul(a, b.differentiate()?),
                    ),
                    BinOp::Div => {
                        let num = sub(
                            mul(a.differentiate()?, b.clone()),
                            mul(a, b.differentiate()?),
                        );
                        div(num, pow_int(b, 2))
                    }
                    BinOp::Pow => match integer_exponent(&b) {
                        Some(n) => {
                            if n == 0 {
                                Expr::Const(T::zero())
                            } else {
                                let lowered = pow_int(a.clone(), n - 1);
                                mul(
                                    mul(Expr::Const(real(n as f64)), lowered),
                                    a.differentiate()?,
                                )
                            }
                        }
                        // d(a^b) = a^b (b' log a + b a'/a); the positive-base
                        // rule makes log a well-defined wherever a^b is.
                        None => {
                            let whole =
                                Expr::Binary(BinOp::Pow, Arc::new(a.clone()), Arc::new(b.clone()));
                            let inner = add(
                                mul(b.differentiate()?, unary(UnaryFn::Log, a.clone())),
                                div(mul(b, a.differentiate()?), a),
                            );
                            mul(whole, inner)
                        }
                    },
                })
            }
        }
    }

    /// True when the tree contains an `abs` node.
    pub fn contains_abs(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var | Expr::Param(_) => false,
            Expr::Unary(f, a) => *f == UnaryFn::Abs || a.contains_abs(),
            Expr::Binary(_, a, b) => a.contains_abs() || b.contains_abs(),
        }
    }

    /// Unbound parameter names appearing in the tree, sorted.
    pub fn param_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_params(&self, out: &mut Vec<String>) {
        match self {
            Expr::Param(name) => out.push(name.clone()),
            Expr::Unary(_, a) => a.collect_params(out),
            Expr::Binary(_, a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
            _ => {}
        }
    }
}

/// Exponent subtrees that are integral constants get `powi` semantics.
fn integer_exponent<T: Scalar>(e: &Expr<T>) -> Option<i32> {
    match e {
        Expr::Const(c) => {
            let v = approx_f64(*c);
            if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 {
                Some(v as i32)
            } else {
                None
            }
        }
        _ => None,
    }
}

// --- smart constructors -------------------------------------------------
//
// Light peephole folding (0 + e, 1 * e, constant arithmetic) keeps repeated
// differentiation from blowing up the tree. This is not a simplifier; it
// only folds identities that are exact for every argument.

fn is_const<T: Scalar>(e: &Expr<T>, v: f64) -> bool {
    matches!(e, Expr::Const(c) if *c == real::<T>(v))
}

pub(crate) fn add<T: Scalar>(a: Expr<T>, b: Expr<T>) -> Expr<T> {
    if is_const(&a, 0.0) {
        return b;
    }
    if is_const(&b, 0.0) {
        return a;
    }
    if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
        return Expr::Const(*x + *y);
    }
    Expr::Binary(BinOp::Add, Arc::new(a), Arc::new(b))
}

pub(crate) fn sub<T: Scalar>(a: Expr<T>, b: Expr<T>) -> Expr<T> {
    if is_const(&b, 0.0) {
        return a;
    }
    if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
        return Expr::Const(*x - *y);
    }
    if is_const(&a, 0.0) {
        return neg(b);
    }
    Expr::Binary(BinOp::Sub, Arc::new(a), Arc::new(b))
}

pub(crate) fn mul<T: Scalar>(a: Expr<T>, b: Expr<T>) -> Expr<T> {
    if is_const(&a, 0.0) || is_const(&b, 0.0) {
        return Expr::Const(T::zero());
    }
    if is_const(&a, 1.0) {
        return b;
    }
    if is_const(&b, 1.0) {
        return a;
    }
    if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
        return Expr::Const(*x * *y);
    }
    Expr::Binary(BinOp::Mul, Arc::new(a), Arc::new(b))
}

pub(crate) fn div<T: Scalar>(a: Expr<T>, b: Expr<T>) -> Expr<T> {
    if is_const(&a, 0.0) && !is_const(&b, 0.0) {
        return Expr::Const(T::zero());
    }
    if is_const(&b, 1.0) {
        return a;
    }
    Expr::Binary(BinOp::Div, Arc::new(a), Arc::new(b))
}

pub(crate) fn neg<T: Scalar>(a: Expr<T>) -> Expr<T> {
    if let Expr::Const(x) = &a {
        return Expr::Const(-*x);
    }
    Expr::Unary(UnaryFn::Neg, Arc::new(a))
}

pub(crate) fn unary<T: Scalar>(f: UnaryFn, a: Expr<T>) -> Expr<T> {
    Expr::Unary(f, Arc::new(a))
}

fn pow_int<T: Scalar>(a: Expr<T>, n: i32) -> Expr<T> {
    if n == 1 {
        return a;
    }
    Expr::Binary(
        BinOp::Pow,
        Arc::new(a),
        Arc::new(Expr::Const(real(n as f64))),
    )
}

// --- printing -----------------------------------------------------------

/// Precedence for the printer. `Const` with a negative value prints with a
/// leading minus, so it parenthesizes like a unary minus.
fn prec<T: Scalar>(e: &Expr<T>) -> u8 {
    match e {
        Expr::Const(c) if *c < T::zero() => 3,
        Expr::Const(_) | Expr::Var | Expr::Param(_) => 5,
        Expr::Unary(UnaryFn::Neg, _) => 3,
        Expr::Unary(..) => 5,
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Binary(BinOp::Pow, ..) => 4,
    }
}

impl<T: Scalar> fmt::Display for Expr<T> {
    /// Prints in the same grammar `parse` accepts; reparsing the output
    /// reproduces the tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let paren = |f: &mut fmt::Formatter<'_>, e: &Expr<T>, need: bool| {
            if need {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var => write!(f, "x"),
            Expr::Param(name) => write!(f, "{name}"),
            Expr::Unary(UnaryFn::Neg, a) => {
                write!(f, "-")?;
                paren(f, a, prec(a) < 3)
            }
            Expr::Unary(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Binary(op, a, b) => {
                let p = prec(self);
                // Left-associative operators keep equal precedence bare on
                // the left and parenthesized on the right, so the reparse
                // rebuilds the identical tree; `^` is the mirror image, and
                // its exponent position admits a bare unary minus.
                let (left_need, right_need) = match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                        (prec(a) < p, prec(b) <= p)
                    }
                    BinOp::Pow => (prec(a) <= p, prec(b) < 3),
                };
                paren(f, a, left_need)?;
                write!(f, " {} ", op.symbol())?;
                paren(f, b, right_need)
            }
        }
    }
}
