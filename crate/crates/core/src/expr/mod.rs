//! Symbolic expressions over the first-order jet coordinates.
//!
//! An [`Expr`] is an immutable, reference-counted tree. Every constructor goes
//! through a light simplifier (constant folding, neutral elements, flattening
//! of sums and products, cancellation of `t - t` pairs). Nothing beyond that
//! is attempted: semantic zero-testing is done by sampling, see
//! [`crate::sample::is_zero_sampled`].
//!
//! Besides the jet coordinates `x`, `u`, `ux`, the language knows the reduced
//! coordinate `w`, the constants `C`, `C1`, `C2` (bound at evaluation time),
//! and numerically defined solutions of linear equations `psi'' = q(x) psi`
//! (see [`crate::catalog::LinearBasis`]).

mod diff;
mod eval;
mod number;
mod parse;
mod render;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::LinearBasis;

pub use eval::{eval_at, DomainKind, Env, EvalError};
pub use number::Number;
pub use parse::{parse, parse_with, Scope};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{name}` at byte {offset} takes {expected} argument(s), found {found}")]
    Arity {
        name: String,
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error("division by the constant zero at byte {offset}")]
    DivisionByZero { offset: usize },
}

/// Variables of the expression language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Var {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "u")]
    U,
    #[serde(rename = "ux")]
    Ux,
    /// Dependent variable of a reduced (first-order) equation.
    #[serde(rename = "w")]
    W,
    #[serde(rename = "C")]
    C,
    #[serde(rename = "C1")]
    C1,
    #[serde(rename = "C2")]
    C2,
}

impl Var {
    pub const ALL: [Var; 7] = [Var::X, Var::U, Var::Ux, Var::W, Var::C, Var::C1, Var::C2];
    pub const JET: [Var; 3] = [Var::X, Var::U, Var::Ux];

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::U => "u",
            Var::Ux => "ux",
            Var::W => "w",
            Var::C => "C",
            Var::C1 => "C1",
            Var::C2 => "C2",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == name)
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Unary scalar functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Arctan,
    Arctanh,
    Sinh,
    Cosh,
    Tanh,
    Abs,
}

impl Func {
    pub const ALL: [Func; 12] = [
        Func::Sqrt,
        Func::Exp,
        Func::Ln,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Arctan,
        Func::Arctanh,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Arctan => "arctan",
            Func::Arctanh => "arctanh",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        let f = match name {
            "log" => Func::Ln,
            "atan" => Func::Arctan,
            "atanh" => Func::Arctanh,
            other => return Func::ALL.into_iter().find(|f| f.name() == other),
        };
        Some(f)
    }

    /// Value at an exactly-known constant argument, when it is itself exact.
    fn fold_exact(self, arg: &Number) -> Option<Number> {
        if arg.is_zero() {
            return match self {
                Func::Exp | Func::Cos | Func::Cosh => Some(Number::one()),
                Func::Ln => None,
                _ => Some(Number::zero()),
            };
        }
        if arg.is_one() && self == Func::Ln {
            return Some(Number::zero());
        }
        if self == Func::Abs {
            return Some(arg.abs());
        }
        None
    }

    pub fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sqrt => v.sqrt(),
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Arctan => v.atan(),
            Func::Arctanh => v.atanh(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
            Func::Tanh => v.tanh(),
            Func::Abs => v.abs(),
        }
    }
}

/// One function of a numerically generated fundamental pair, or its
/// derivative.
#[derive(Clone)]
pub struct BasisFn {
    pub basis: Arc<LinearBasis>,
    /// 0 or 1.
    pub index: usize,
    pub derivative: bool,
}

impl BasisFn {
    pub fn name(&self) -> String {
        let prefix = if self.derivative { "d" } else { "" };
        format!("{prefix}{}{}", self.basis.name(), self.index + 1)
    }
}

impl PartialEq for BasisFn {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.basis, &other.basis)
            && self.index == other.index
            && self.derivative == other.derivative
    }
}

impl fmt::Debug for BasisFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(Number),
    Var(Var),
    /// Flattened n-ary sum; at most one numeric term, always last.
    Sum(Vec<Expr>),
    /// Flattened n-ary product; at most one numeric factor, always first.
    Product(Vec<Expr>),
    Quotient(Expr, Expr),
    Power(Expr, Expr),
    Neg(Expr),
    Call(Func, Expr),
    Basis(BasisFn),
}

/// Immutable symbolic expression.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Expr {
    fn new(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn number(n: Number) -> Expr {
        Expr::new(Node::Num(n))
    }

    pub fn int(n: i64) -> Expr {
        Expr::number(Number::int(n))
    }

    pub fn rational(num: i64, den: i64) -> Expr {
        Expr::number(Number::rational(num, den))
    }

    pub fn float(v: f64) -> Expr {
        Expr::number(Number::Float(v))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(v: Var) -> Expr {
        Expr::new(Node::Var(v))
    }

    pub fn x() -> Expr {
        Expr::var(Var::X)
    }

    pub fn u() -> Expr {
        Expr::var(Var::U)
    }

    pub fn ux() -> Expr {
        Expr::var(Var::Ux)
    }

    pub fn w() -> Expr {
        Expr::var(Var::W)
    }

    pub fn basis(f: BasisFn) -> Expr {
        Expr::new(Node::Basis(f))
    }

    pub fn as_number(&self) -> Option<&Number> {
        match self.node() {
            Node::Num(n) => Some(n),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_number().is_some_and(Number::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.as_number().is_some_and(Number::is_one)
    }

    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        let mut flat: Vec<Expr> = Vec::new();
        let mut constant = Number::zero();
        for t in terms {
            match t.node() {
                Node::Num(n) => constant = constant.add(n),
                Node::Sum(inner) => {
                    for s in inner {
                        match s.node() {
                            Node::Num(n) => constant = constant.add(n),
                            _ => flat.push(s.clone()),
                        }
                    }
                }
                Node::Neg(a) if matches!(a.node(), Node::Sum(_)) => {
                    let Node::Sum(inner) = a.node() else {
                        unreachable!()
                    };
                    for s in inner {
                        match s.node() {
                            Node::Num(n) => constant = constant.add(&n.neg()),
                            _ => flat.push(s.neg()),
                        }
                    }
                }
                _ => flat.push(t),
            }
        }
        collect_like_terms(&mut flat);
        if !constant.is_zero() {
            flat.push(Expr::number(constant));
        }
        match flat.len() {
            0 => Expr::zero(),
            1 => flat.pop().unwrap(),
            _ => Expr::new(Node::Sum(flat)),
        }
    }

    pub fn product(factors: impl IntoIterator<Item = Expr>) -> Expr {
        let mut flat: Vec<Expr> = Vec::new();
        let mut coeff = Number::one();
        let push = |e: &Expr, flat: &mut Vec<Expr>, coeff: &mut Number| match e.node() {
            Node::Num(n) => *coeff = coeff.mul(n),
            Node::Neg(inner) => {
                *coeff = coeff.neg();
                flat.push(inner.clone());
            }
            _ => flat.push(e.clone()),
        };
        for f in factors {
            match f.node() {
                Node::Product(inner) => {
                    for g in inner {
                        push(g, &mut flat, &mut coeff);
                    }
                }
                _ => push(&f, &mut flat, &mut coeff),
            }
        }
        // A factor pulled out of a Neg may itself be a product.
        if flat
            .iter()
            .any(|e| matches!(e.node(), Node::Product(_) | Node::Num(_)))
        {
            return Expr::product(std::iter::once(Expr::number(coeff)).chain(flat));
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        let rest = match flat.len() {
            0 => return Expr::number(coeff),
            1 => flat.pop().unwrap(),
            _ => Expr::new(Node::Product(flat)),
        };
        if coeff.is_one() {
            rest
        } else if coeff.is_minus_one() {
            Expr::new(Node::Neg(rest))
        } else {
            let mut fs = vec![Expr::number(coeff)];
            match rest.node() {
                Node::Product(inner) => fs.extend(inner.iter().cloned()),
                _ => fs.push(rest),
            }
            Expr::new(Node::Product(fs))
        }
    }

    pub fn neg(&self) -> Expr {
        match self.node() {
            Node::Num(n) => Expr::number(n.neg()),
            Node::Neg(inner) => inner.clone(),
            Node::Product(fs) => match fs[0].as_number() {
                Some(c) => {
                    let c = c.neg();
                    let rest = fs[1..].iter().cloned();
                    if c.is_one() {
                        Expr::product(rest)
                    } else {
                        let mut v = vec![Expr::number(c)];
                        v.extend(rest);
                        Expr::new(Node::Product(v))
                    }
                }
                None => Expr::new(Node::Neg(self.clone())),
            },
            _ => Expr::new(Node::Neg(self.clone())),
        }
    }

    /// Quotient with a check for a literal zero denominator.
    pub fn checked_div(&self, den: &Expr) -> Option<Expr> {
        if den.is_zero() {
            return None;
        }
        Some(self.div_nonzero(den))
    }

    fn div_nonzero(&self, den: &Expr) -> Expr {
        if den.is_one() || self.is_zero() {
            return self.clone();
        }
        if let (Some(a), Some(b)) = (self.as_number(), den.as_number()) {
            return Expr::number(a.div(b));
        }
        if den.as_number().is_some_and(Number::is_minus_one) {
            return self.neg();
        }
        if self == den {
            return Expr::one();
        }
        if let Some(n @ Number::Rat(_)) = den.as_number() {
            return self * Expr::number(Number::one().div(n));
        }
        // Signs are kept outside quotients so that rendering and re-parsing
        // reproduce the same tree.
        if self.has_negative_sign() {
            return self.neg().div_nonzero(den).neg();
        }
        if den.has_negative_sign() {
            return self.div_nonzero(&den.neg()).neg();
        }
        Expr::new(Node::Quotient(self.clone(), den.clone()))
    }

    /// True for `-t`, negative literals and products with a negative
    /// coefficient.
    pub(crate) fn has_negative_sign(&self) -> bool {
        match self.node() {
            Node::Neg(_) => true,
            Node::Num(n) => n.is_negative(),
            Node::Product(fs) => fs[0].as_number().is_some_and(Number::is_negative),
            _ => false,
        }
    }

    pub fn pow(&self, exponent: &Expr) -> Expr {
        if exponent.is_zero() || self.is_one() {
            return Expr::one();
        }
        if exponent.is_one() {
            return self.clone();
        }
        if let (Some(b), Some(e)) = (self.as_number(), exponent.as_number()) {
            if let Some(v) = b.pow(e) {
                return Expr::number(v);
            }
        }
        if self.is_zero() && exponent.as_number().is_some_and(|e| e.to_f64() > 0.0) {
            return Expr::zero();
        }
        Expr::new(Node::Power(self.clone(), exponent.clone()))
    }

    pub fn powi(&self, n: i64) -> Expr {
        self.pow(&Expr::int(n))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        if let Some(n) = arg.as_number() {
            if let Some(v) = f.fold_exact(n) {
                return Expr::number(v);
            }
            if let Number::Float(v) = n {
                let r = f.apply(*v);
                if r.is_finite() {
                    return Expr::float(r);
                }
            }
        }
        Expr::new(Node::Call(f, arg))
    }

    pub fn sqrt(&self) -> Expr {
        Expr::call(Func::Sqrt, self.clone())
    }

    pub fn exp(&self) -> Expr {
        Expr::call(Func::Exp, self.clone())
    }

    pub fn ln(&self) -> Expr {
        Expr::call(Func::Ln, self.clone())
    }

    pub fn sin(&self) -> Expr {
        Expr::call(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Expr {
        Expr::call(Func::Cos, self.clone())
    }

    pub fn tan(&self) -> Expr {
        Expr::call(Func::Tan, self.clone())
    }

    pub fn arctan(&self) -> Expr {
        Expr::call(Func::Arctan, self.clone())
    }

    pub fn arctanh(&self) -> Expr {
        Expr::call(Func::Arctanh, self.clone())
    }

    pub fn tanh(&self) -> Expr {
        Expr::call(Func::Tanh, self.clone())
    }

    /// Exact partial derivative.
    pub fn diff(&self, v: Var) -> Expr {
        diff::diff(self, v)
    }

    /// Replace every occurrence of `v` by `by`.
    pub fn subst(&self, v: Var, by: &Expr) -> Expr {
        self.map_vars(&|var| (var == v).then(|| by.clone()))
    }

    /// Simultaneous substitution; `f` returns the replacement for a variable,
    /// or `None` to keep it.
    pub fn map_vars(&self, f: &dyn Fn(Var) -> Option<Expr>) -> Expr {
        match self.node() {
            Node::Num(_) | Node::Basis(_) => self.clone(),
            Node::Var(v) => f(*v).unwrap_or_else(|| self.clone()),
            Node::Sum(ts) => Expr::sum(ts.iter().map(|t| t.map_vars(f))),
            Node::Product(fs) => Expr::product(fs.iter().map(|t| t.map_vars(f))),
            Node::Quotient(a, b) => {
                let den = b.map_vars(f);
                // A substitution can only produce a literal zero denominator
                // from an expression that was already singular there.
                a.map_vars(f)
                    .checked_div(&den)
                    .unwrap_or_else(|| Expr::float(f64::NAN))
            }
            Node::Power(b, e) => b.map_vars(f).pow(&e.map_vars(f)),
            Node::Neg(a) => a.map_vars(f).neg(),
            Node::Call(func, a) => Expr::call(*func, a.map_vars(f)),
        }
    }

    /// Variables occurring in the expression, in `Var` order.
    pub fn free_vars(&self) -> Vec<Var> {
        let mut seen = [false; 7];
        self.visit(&mut |node| match node {
            Node::Var(v) => seen[v.index()] = true,
            Node::Basis(_) => seen[Var::X.index()] = true,
            _ => {}
        });
        Var::ALL.into_iter().filter(|v| seen[v.index()]).collect()
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.free_vars().contains(&v)
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    fn visit(&self, f: &mut dyn FnMut(&Node)) {
        f(self.node());
        match self.node() {
            Node::Num(_) | Node::Var(_) | Node::Basis(_) => {}
            Node::Sum(xs) | Node::Product(xs) => xs.iter().for_each(|e| e.visit(f)),
            Node::Quotient(a, b) | Node::Power(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Node::Neg(a) | Node::Call(_, a) => a.visit(f),
        }
    }

    /// Top-level additive terms (the expression itself when it is not a sum).
    pub fn terms(&self) -> Vec<Expr> {
        match self.node() {
            Node::Sum(ts) => ts.clone(),
            Node::Neg(inner) => match inner.node() {
                Node::Sum(ts) => ts.iter().map(Expr::neg).collect(),
                _ => vec![self.clone()],
            },
            _ => vec![self.clone()],
        }
    }

    pub fn eval(&self, env: &Env) -> Result<f64, EvalError> {
        eval::eval(self, env)
    }
}

/// Removes pairs `t`, `-t` from a flattened list of terms.
/// Merges terms that differ only in their numeric coefficient, keeping the
/// order of first appearance and dropping those that cancel.
fn collect_like_terms(terms: &mut Vec<Expr>) {
    fn split(t: &Expr) -> (Number, Expr) {
        match t.node() {
            Node::Neg(inner) => {
                let (c, rest) = split(inner);
                (c.neg(), rest)
            }
            Node::Product(fs) => match fs[0].as_number() {
                Some(c) => (*c, Expr::product(fs[1..].iter().cloned())),
                None => (Number::one(), t.clone()),
            },
            _ => (Number::one(), t.clone()),
        }
    }
    let mut groups: Vec<(Number, Expr)> = Vec::with_capacity(terms.len());
    for t in terms.iter() {
        let (c, rest) = split(t);
        match groups.iter_mut().find(|(_, r)| *r == rest) {
            Some((acc, _)) => *acc = acc.add(&c),
            None => groups.push((c, rest)),
        }
    }
    if groups.len() == terms.len() {
        return;
    }
    *terms = groups
        .into_iter()
        .filter(|(c, _)| !c.is_zero())
        .map(|(c, rest)| Expr::product([Expr::number(c), rest]))
        .collect();
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl From<Var> for Expr {
    fn from(v: Var) -> Expr {
        Expr::var(v)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, |$a:ident, $b:ident| $body:expr) => {
        impl std::ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let ($a, $b) = (&self, &rhs);
                $body
            }
        }
        impl std::ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let ($a, $b) = (&self, rhs);
                $body
            }
        }
        impl std::ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let ($a, $b) = (self, &rhs);
                $body
            }
        }
        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let ($a, $b) = (self, rhs);
                $body
            }
        }
        impl std::ops::$trait<i64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: i64) -> Expr {
                let rhs = Expr::int(rhs);
                let ($a, $b) = (&self, &rhs);
                $body
            }
        }
        impl std::ops::$trait<i64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: i64) -> Expr {
                let rhs = Expr::int(rhs);
                let ($a, $b) = (self, &rhs);
                $body
            }
        }
        impl std::ops::$trait<Expr> for i64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let lhs = Expr::int(self);
                let ($a, $b) = (&lhs, &rhs);
                $body
            }
        }
        impl std::ops::$trait<&Expr> for i64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let lhs = Expr::int(self);
                let ($a, $b) = (&lhs, rhs);
                $body
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::sum([a.clone(), b.clone()]));
binop!(Sub, sub, |a, b| Expr::sum([a.clone(), b.neg()]));
binop!(Mul, mul, |a, b| Expr::product([a.clone(), b.clone()]));
binop!(Div, div, |a, b| a
    .checked_div(b)
    .expect("division by the constant zero"));

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}
