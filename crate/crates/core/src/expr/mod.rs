//! Immutable expression trees over the jet coordinates `x`, `u`, `u_x`, `v_x`,
//! named parameters and a small set of elementary functions.
//!
//! Nodes are reference counted and never mutated, so an [`Expr`] is cheap to
//! clone and can be shared between threads. Sub-expressions are shared freely
//! (the invariant formulas reuse `F`, `F_u`, ... many times), which makes the
//! trees DAGs in practice; the traversals in this module family memoize on
//! node identity so that sharing is preserved.

mod diff;
mod eval;
mod parse;
mod simplify;
mod zero;

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use diff::differentiate;
pub use eval::{evaluate, Binding, EvalError, Tape};
pub use parse::{parse, parse_with_params, ParseError, ParseErrorKind};
pub use simplify::{simplify, simplify_with, Assumptions};
pub use zero::{
    is_constant, is_identically_zero, ConstVerdict, Domain, OracleError, SampleBox, ZeroOracle, ZeroVerdict,
};

/// Coordinates on the equation manifold that expressions may depend on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Var {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "u")]
    U,
    #[serde(rename = "u_x")]
    Ux,
    #[serde(rename = "v_x")]
    Vx,
}

impl Var {
    pub const ALL: [Var; 4] = [Var::X, Var::U, Var::Ux, Var::Vx];

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::U => "u",
            Var::Ux => "u_x",
            Var::Vx => "v_x",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        match name {
            "x" => Some(Var::X),
            "u" => Some(Var::U),
            "u_x" => Some(Var::Ux),
            "v_x" => Some(Var::Vx),
            _ => None,
        }
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

/// Elementary functions accepted by the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Arctan,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Arctan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Arctan => "arctan",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Real-valued application; `None` outside the real domain.
    pub fn apply(self, a: f64) -> Option<f64> {
        let v = match self {
            Func::Exp => a.exp(),
            Func::Ln => {
                if a <= 0.0 {
                    return None;
                }
                a.ln()
            }
            Func::Sqrt => {
                if a < 0.0 {
                    return None;
                }
                a.sqrt()
            }
            Func::Sin => a.sin(),
            Func::Cos => a.cos(),
            Func::Tan => {
                if a.cos() == 0.0 {
                    return None;
                }
                a.tan()
            }
            Func::Sinh => a.sinh(),
            Func::Cosh => a.cosh(),
            Func::Tanh => a.tanh(),
            Func::Arctan => a.atan(),
        };
        v.is_finite().then_some(v)
    }

    /// Derivative f'(a) as a number, used for error-magnitude propagation.
    pub(crate) fn slope(self, a: f64, fa: f64) -> f64 {
        match self {
            Func::Exp => fa,
            Func::Ln => 1.0 / a,
            Func::Sqrt => {
                if fa == 0.0 {
                    0.0
                } else {
                    0.5 / fa
                }
            }
            Func::Sin => a.cos(),
            Func::Cos => -a.sin(),
            Func::Tan => 1.0 + fa * fa,
            Func::Sinh => a.cosh(),
            Func::Cosh => a.sinh(),
            Func::Tanh => 1.0 - fa * fa,
            Func::Arctan => 1.0 / (1.0 + a * a),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug)]
pub enum Node {
    Num(f64),
    Var(Var),
    Param(Arc<str>),
    Neg(Expr),
    Binary(BinOp, Expr, Expr),
    Pow(Expr, Expr),
    Func(Func, Expr),
}

/// Shared, immutable expression.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

/// Violations of the construction invariants.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConstructionError {
    #[error("number literal must be finite, got {0}")]
    NonFiniteLiteral(f64),
    #[error("division by a literal zero")]
    LiteralZeroDenominator,
    #[error("literal zero raised to a non-positive literal exponent")]
    ZeroToNonPositivePower,
}

impl Expr {
    fn from_node(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn id(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// A finite number literal. Panics on NaN or infinity.
    pub fn num(value: f64) -> Expr {
        Expr::try_num(value).expect("number literal must be finite")
    }

    pub fn try_num(value: f64) -> Result<Expr, ConstructionError> {
        if !value.is_finite() {
            return Err(ConstructionError::NonFiniteLiteral(value));
        }
        // normalise -0.0 so structural equality is not sign-of-zero sensitive
        let value = if value == 0.0 { 0.0 } else { value };
        Ok(Expr::from_node(Node::Num(value)))
    }

    pub fn zero() -> Expr {
        Expr::num(0.0)
    }

    pub fn one() -> Expr {
        Expr::num(1.0)
    }

    pub fn var(v: Var) -> Expr {
        Expr::from_node(Node::Var(v))
    }

    pub fn param(name: &str) -> Expr {
        Expr::from_node(Node::Param(Arc::from(name)))
    }

    /// Unfolded binary node, as produced by the parser.
    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Result<Expr, ConstructionError> {
        if op == BinOp::Div && b.is_literal_zero() {
            return Err(ConstructionError::LiteralZeroDenominator);
        }
        Ok(Expr::from_node(Node::Binary(op, a, b)))
    }

    /// Unfolded power node.
    pub fn pow_raw(base: Expr, exponent: Expr) -> Result<Expr, ConstructionError> {
        if base.is_literal_zero() {
            if let Some(k) = exponent.literal_value() {
                if k <= 0.0 {
                    return Err(ConstructionError::ZeroToNonPositivePower);
                }
            }
        }
        Ok(Expr::from_node(Node::Pow(base, exponent)))
    }

    /// Unfolded negation.
    pub fn neg_raw(a: Expr) -> Expr {
        Expr::from_node(Node::Neg(a))
    }

    /// Unfolded function application.
    pub fn func_raw(f: Func, a: Expr) -> Expr {
        Expr::from_node(Node::Func(f, a))
    }

    pub fn as_num(&self) -> Option<f64> {
        match self.node() {
            Node::Num(c) => Some(*c),
            _ => None,
        }
    }

    /// Literal value, looking through syntactic negation (`-2` parses as `Neg(2)`).
    pub fn literal_value(&self) -> Option<f64> {
        match self.node() {
            Node::Num(c) => Some(*c),
            Node::Neg(a) => a.literal_value().map(|c| -c),
            _ => None,
        }
    }

    pub fn is_literal_zero(&self) -> bool {
        self.literal_value() == Some(0.0)
    }

    pub fn is_literal_one(&self) -> bool {
        self.as_num() == Some(1.0)
    }

    /// Folding power: `a^0 = 1`, `a^1 = a`, literal^literal evaluated.
    pub fn pow(&self, exponent: &Expr) -> Expr {
        if let Some(k) = exponent.as_num() {
            if k == 1.0 {
                return self.clone();
            }
            if k == 0.0 && !self.is_literal_zero() {
                return Expr::one();
            }
            if let Some(c) = self.as_num() {
                let v = c.powf(k);
                if v.is_finite() && !(c < 0.0 && k.fract() != 0.0) {
                    return Expr::num(v);
                }
            }
        }
        if self.is_literal_one() {
            return Expr::one();
        }
        Expr::pow_raw(self.clone(), exponent.clone()).expect("literal zero raised to a non-positive power")
    }

    pub fn powf(&self, k: f64) -> Expr {
        self.pow(&Expr::num(k))
    }

    pub fn powi(&self, k: i32) -> Expr {
        self.powf(f64::from(k))
    }

    /// Folding function application.
    pub fn apply(&self, f: Func) -> Expr {
        if let Some(c) = self.as_num() {
            if let Some(v) = f.apply(c) {
                // keep exactness: only fold results that are exact or trivial
                if v.fract() == 0.0 || c == 0.0 {
                    return Expr::num(v);
                }
            }
        }
        Expr::func_raw(f, self.clone())
    }

    pub fn exp(&self) -> Expr {
        self.apply(Func::Exp)
    }

    pub fn ln(&self) -> Expr {
        self.apply(Func::Ln)
    }

    pub fn sqrt(&self) -> Expr {
        self.apply(Func::Sqrt)
    }

    /// Division that reports a literal-zero denominator instead of panicking.
    pub fn checked_div(&self, rhs: &Expr) -> Result<Expr, ConstructionError> {
        if rhs.is_literal_zero() {
            return Err(ConstructionError::LiteralZeroDenominator);
        }
        Ok(fold_div(self, rhs))
    }

    /// True if `v` occurs anywhere in the tree.
    pub fn depends_on(&self, v: Var) -> bool {
        let mut memo = HashMap::new();
        depends(self, v, &mut memo)
    }

    pub fn variables(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.visit(&mut |n| {
            if let Node::Var(v) = n {
                out.insert(*v);
            }
        });
        out
    }

    pub fn parameters(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |n| {
            if let Node::Param(p) = n {
                out.insert(p.to_string());
            }
        });
        out
    }

    /// Number of distinct nodes (shared sub-trees are counted once).
    pub fn dag_size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    fn visit(&self, f: &mut dyn FnMut(&Node)) {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.id()) {
                continue;
            }
            f(e.node());
            match e.node() {
                Node::Num(_) | Node::Var(_) | Node::Param(_) => {}
                Node::Neg(a) | Node::Func(_, a) => stack.push(a.clone()),
                Node::Binary(_, a, b) | Node::Pow(a, b) => {
                    stack.push(a.clone());
                    stack.push(b.clone());
                }
            }
        }
    }

    /// Replace every occurrence of `v` by `with`.
    pub fn substitute(&self, v: Var, with: &Expr) -> Expr {
        let mut memo = HashMap::new();
        subst(self, v, with, &mut memo)
    }

    /// Simultaneous replacement of several variables.
    pub fn substitute_many(&self, pairs: &[(Var, Expr)]) -> Expr {
        let mut memo = HashMap::new();
        rebuild(
            self,
            &mut |n| match n {
                Node::Var(w) => pairs.iter().find(|(v, _)| v == w).map(|(_, e)| e.clone()),
                _ => None,
            },
            &mut memo,
        )
    }

    /// Replace every parameter that has a value in `values` by its literal.
    pub fn bind_params(&self, values: &Binding) -> Expr {
        let mut memo = HashMap::new();
        bind(self, values, &mut memo)
    }
}

fn depends(e: &Expr, v: Var, memo: &mut HashMap<*const Node, bool>) -> bool {
    if let Some(&r) = memo.get(&e.id()) {
        return r;
    }
    let r = match e.node() {
        Node::Var(w) => *w == v,
        Node::Num(_) | Node::Param(_) => false,
        Node::Neg(a) | Node::Func(_, a) => depends(a, v, memo),
        Node::Binary(_, a, b) | Node::Pow(a, b) => depends(a, v, memo) || depends(b, v, memo),
    };
    memo.insert(e.id(), r);
    r
}

fn rebuild(e: &Expr, leaf: &mut dyn FnMut(&Node) -> Option<Expr>, memo: &mut HashMap<*const Node, Expr>) -> Expr {
    if let Some(r) = memo.get(&e.id()) {
        return r.clone();
    }
    let r = if let Some(r) = leaf(e.node()) {
        r
    } else {
        match e.node() {
            Node::Num(_) | Node::Var(_) | Node::Param(_) => e.clone(),
            Node::Neg(a) => -rebuild(a, leaf, memo),
            Node::Func(f, a) => rebuild(a, leaf, memo).apply(*f),
            Node::Binary(op, a, b) => {
                let (a, b) = (rebuild(a, leaf, memo), rebuild(b, leaf, memo));
                if *op == BinOp::Div && b.is_literal_zero() {
                    raw(BinOp::Div, &a, &shield_zero())
                } else {
                    fold_binary(*op, &a, &b)
                }
            }
            Node::Pow(a, b) => {
                let (a, b) = (rebuild(a, leaf, memo), rebuild(b, leaf, memo));
                if a.is_literal_zero() && b.literal_value().is_none_or(|k| k <= 0.0) {
                    Expr::from_node(Node::Pow(shield_zero(), b))
                } else {
                    a.pow(&b)
                }
            }
        }
    };
    memo.insert(e.id(), r.clone());
    r
}

// A substitution can turn a denominator into a literal zero. `0^1` keeps the
// node constructible and still fails at evaluation.
fn shield_zero() -> Expr {
    Expr::from_node(Node::Pow(Expr::zero(), Expr::one()))
}

fn subst(e: &Expr, v: Var, with: &Expr, memo: &mut HashMap<*const Node, Expr>) -> Expr {
    rebuild(
        e,
        &mut |n| match n {
            Node::Var(w) if *w == v => Some(with.clone()),
            _ => None,
        },
        memo,
    )
}

fn bind(e: &Expr, values: &Binding, memo: &mut HashMap<*const Node, Expr>) -> Expr {
    rebuild(
        e,
        &mut |n| match n {
            Node::Param(p) => values.param(p).map(Expr::num),
            _ => None,
        },
        memo,
    )
}

pub(crate) fn fold_binary(op: BinOp, a: &Expr, b: &Expr) -> Expr {
    match op {
        BinOp::Add => fold_add(a, b),
        BinOp::Sub => fold_sub(a, b),
        BinOp::Mul => fold_mul(a, b),
        BinOp::Div => fold_div(a, b),
    }
}

fn literal(v: f64) -> Option<Expr> {
    v.is_finite().then(|| Expr::num(v))
}

fn fold_add(a: &Expr, b: &Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => literal(x + y).unwrap_or_else(|| raw(BinOp::Add, a, b)),
        (Some(0.0), _) => b.clone(),
        (_, Some(0.0)) => a.clone(),
        _ => raw(BinOp::Add, a, b),
    }
}

fn fold_sub(a: &Expr, b: &Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => literal(x - y).unwrap_or_else(|| raw(BinOp::Sub, a, b)),
        (Some(0.0), _) => -b,
        (_, Some(0.0)) => a.clone(),
        _ => raw(BinOp::Sub, a, b),
    }
}

fn fold_mul(a: &Expr, b: &Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => literal(x * y).unwrap_or_else(|| raw(BinOp::Mul, a, b)),
        (Some(0.0), _) | (_, Some(0.0)) => Expr::zero(),
        (Some(1.0), _) => b.clone(),
        (_, Some(1.0)) => a.clone(),
        (Some(-1.0), _) => -b,
        (_, Some(-1.0)) => -a,
        _ => raw(BinOp::Mul, a, b),
    }
}

fn fold_div(a: &Expr, b: &Expr) -> Expr {
    assert!(!b.is_literal_zero(), "division by a literal zero");
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => literal(x / y).unwrap_or_else(|| raw(BinOp::Div, a, b)),
        (Some(0.0), _) => Expr::zero(),
        (_, Some(1.0)) => a.clone(),
        (_, Some(-1.0)) => -a,
        _ => raw(BinOp::Div, a, b),
    }
}

fn raw(op: BinOp, a: &Expr, b: &Expr) -> Expr {
    Expr::from_node(Node::Binary(op, a.clone(), b.clone()))
}

fn fold_neg(a: &Expr) -> Expr {
    match a.node() {
        Node::Num(c) => Expr::num(-c),
        Node::Neg(inner) => inner.clone(),
        _ => Expr::neg_raw(a.clone()),
    }
}

macro_rules! binary_ops {
    ($($trait:ident, $method:ident, $op:expr;)*) => {$(
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                fold_binary($op, self, rhs)
            }
        }
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                fold_binary($op, &self, &rhs)
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                fold_binary($op, &self, rhs)
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                fold_binary($op, self, &rhs)
            }
        }
        impl ops::$trait<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                fold_binary($op, self, &Expr::num(rhs))
            }
        }
        impl ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                fold_binary($op, &self, &Expr::num(rhs))
            }
        }
        impl ops::$trait<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                fold_binary($op, &Expr::num(self), rhs)
            }
        }
        impl ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                fold_binary($op, &Expr::num(self), &rhs)
            }
        }
    )*};
}

binary_ops! {
    Add, add, BinOp::Add;
    Sub, sub, BinOp::Sub;
    Mul, mul, BinOp::Mul;
    Div, div, BinOp::Div;
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        fold_neg(self)
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        fold_neg(&self)
    }
}

impl From<Var> for Expr {
    fn from(v: Var) -> Expr {
        Expr::var(v)
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Expr {
        Expr::num(v)
    }
}

// Structural ordering. Node kinds are ranked, then children compared.
fn rank(n: &Node) -> u8 {
    match n {
        Node::Num(_) => 0,
        Node::Var(_) => 1,
        Node::Param(_) => 2,
        Node::Func(..) => 3,
        Node::Pow(..) => 4,
        Node::Neg(_) => 5,
        Node::Binary(..) => 6,
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Expr) -> Ordering {
        if self.ptr_eq(other) {
            return Ordering::Equal;
        }
        match (self.node(), other.node()) {
            (Node::Num(a), Node::Num(b)) => a.total_cmp(b),
            (Node::Var(a), Node::Var(b)) => a.cmp(b),
            (Node::Param(a), Node::Param(b)) => a.cmp(b),
            (Node::Neg(a), Node::Neg(b)) => a.cmp(b),
            (Node::Func(f, a), Node::Func(g, b)) => f.cmp(g).then_with(|| a.cmp(b)),
            (Node::Pow(a1, b1), Node::Pow(a2, b2)) => a1.cmp(a2).then_with(|| b1.cmp(b2)),
            (Node::Binary(o1, a1, b1), Node::Binary(o2, a2, b2)) => {
                o1.cmp(o2).then_with(|| a1.cmp(a2)).then_with(|| b1.cmp(b2))
            }
            (a, b) => rank(a).cmp(&rank(b)),
        }
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Expr) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self.node() {
            Node::Num(c) => {
                0u8.hash(state);
                c.to_bits().hash(state);
            }
            Node::Var(v) => {
                1u8.hash(state);
                v.hash(state);
            }
            Node::Param(p) => {
                2u8.hash(state);
                p.hash(state);
            }
            Node::Func(f, a) => {
                3u8.hash(state);
                f.hash(state);
                a.hash(state);
            }
            Node::Pow(a, b) => {
                4u8.hash(state);
                a.hash(state);
                b.hash(state);
            }
            Node::Neg(a) => {
                5u8.hash(state);
                a.hash(state);
            }
            Node::Binary(op, a, b) => {
                6u8.hash(state);
                op.hash(state);
                a.hash(state);
                b.hash(state);
            }
        }
    }
}

// Printing. Precedence: 1 sums, 2 products, 3 unary minus, 4 powers, 5 atoms.
fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Node::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        Node::Neg(_) => 3,
        Node::Num(c) if *c < 0.0 => 3,
        Node::Pow(..) => 4,
        _ => 5,
    }
}

fn write_num(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    // `{:?}` gives the shortest representation that round-trips.
    let s = format!("{c:?}");
    f.write_str(s.strip_suffix(".0").unwrap_or(&s))
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Num(c) => write_num(f, *c),
            Node::Var(v) => f.write_str(v.name()),
            Node::Param(p) => f.write_str(p),
            Node::Func(func, a) => write!(f, "{}({a})", func.name()),
            Node::Neg(a) => {
                f.write_str("-")?;
                write_wrapped(f, a, precedence(a) < 4)
            }
            Node::Pow(a, b) => {
                write_wrapped(f, a, precedence(a) < 5)?;
                f.write_str("^")?;
                write_wrapped(f, b, precedence(b) < 3)
            }
            Node::Binary(op, a, b) => {
                let p = match op {
                    BinOp::Add | BinOp::Sub => 1,
                    BinOp::Mul | BinOp::Div => 2,
                };
                write_wrapped(f, a, precedence(a) < p)?;
                f.write_str(op.symbol())?;
                // the right operand of a left-associative chain needs its own group
                write_wrapped(f, b, precedence(b) <= p)
            }
        }
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

#[cfg(test)]
mod tests {
    use super::*;

    fn u() -> Expr {
        Expr::var(Var::U)
    }

    #[test]
    fn folding_constructors_drop_identities() {
        assert_eq!(&u() * 1.0 + 0.0, u());
        assert_eq!(&u() * 0.0, Expr::zero());
        assert_eq!(-(-u()), u());
        assert_eq!(u().powf(1.0), u());
        assert_eq!(Expr::num(2.0).powf(3.0), Expr::num(8.0));
    }

    #[test]
    fn literal_zero_denominator_is_rejected() {
        assert_eq!(Expr::binary(BinOp::Div, u(), Expr::zero()).unwrap_err(), ConstructionError::LiteralZeroDenominator);
        assert_eq!(
            Expr::pow_raw(Expr::zero(), Expr::num(-1.0)).unwrap_err(),
            ConstructionError::ZeroToNonPositivePower
        );
        assert!(Expr::try_num(f64::NAN).is_err());
        assert!(u().checked_div(&Expr::zero()).is_err());
    }

    #[test]
    fn display_inserts_needed_parentheses() {
        let e = Expr::binary(BinOp::Sub, u(), Expr::binary(BinOp::Add, u(), Expr::one()).unwrap()).unwrap();
        assert_eq!(e.to_string(), "u - (u + 1)");
        let p = Expr::pow_raw(Expr::num(-2.0), u()).unwrap();
        assert_eq!(p.to_string(), "(-2)^u");
        let n = Expr::neg_raw(Expr::binary(BinOp::Mul, u(), u()).unwrap());
        assert_eq!(n.to_string(), "-(u*u)");
        assert_eq!(Expr::num(0.5).to_string(), "0.5");
        assert_eq!(Expr::num(3.0).to_string(), "3");
    }

    #[test]
    fn substitution_and_dependency() {
        let e = &Expr::var(Var::X) * &u();
        assert!(e.depends_on(Var::X));
        let s = e.substitute(Var::X, &Expr::num(2.0));
        assert!(!s.depends_on(Var::X));
        assert_eq!(s.to_string(), "2*u");
        assert_eq!(e.variables().len(), 2);
    }
}
