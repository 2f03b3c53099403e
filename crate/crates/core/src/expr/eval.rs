//! Numerical evaluation.
//!
//! Expressions are compiled to a straight-line [`Tape`] with value numbering,
//! so shared and structurally repeated sub-expressions are computed once per
//! point. The tape can also propagate a first-order rounding magnitude, which
//! the zero oracle uses as its local scale.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::{BinOp, Expr, Func, Node, Var};

/// Values for variables and parameters.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Binding {
    vars: BTreeMap<Var, f64>,
    params: BTreeMap<String, f64>,
}

impl Binding {
    pub fn new() -> Binding {
        Binding::default()
    }

    pub fn with_var(mut self, v: Var, value: f64) -> Binding {
        self.vars.insert(v, value);
        self
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Binding {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn set_var(&mut self, v: Var, value: f64) {
        self.vars.insert(v, value);
    }

    pub fn set_param(&mut self, name: &str, value: f64) {
        self.params.insert(name.to_string(), value);
    }

    pub fn var(&self, v: Var) -> Option<f64> {
        self.vars.get(&v).copied()
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn params(&self) -> impl Iterator<Item = (&str, f64)> {
        self.params.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn vars(&self) -> impl Iterator<Item = (Var, f64)> + '_ {
        self.vars.iter().map(|(k, v)| (*k, *v))
    }

    /// Parameters only, dropping variable values.
    pub fn params_only(&self) -> Binding {
        Binding { vars: BTreeMap::new(), params: self.params.clone() }
    }

    pub(crate) fn var_array(&self) -> [f64; 4] {
        let mut out = [f64::NAN; 4];
        for (v, x) in &self.vars {
            out[v.index()] = *x;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(Var),
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("division by zero in `{subexpr}`")]
    DivisionByZero { subexpr: String },
    #[error("argument outside the real domain in `{subexpr}`")]
    Domain { subexpr: String },
    #[error("non-finite value in `{subexpr}`")]
    NonFinite { subexpr: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Op {
    Const(u64),
    Var(usize),
    Neg(u32),
    Bin(BinOp, u32, u32),
    Pow(u32, u32),
    Func(Func, u32),
}

#[derive(Clone, Copy, Debug)]
enum Fault {
    DivZero,
    Domain,
    NonFinite,
}

/// Straight-line program computing one or more expressions.
#[derive(Clone, Debug)]
pub struct Tape {
    ops: Vec<Op>,
    origin: Vec<Expr>,
    outputs: Vec<u32>,
    uses: [bool; 4],
}

impl Tape {
    /// Compile `exprs`, substituting parameter values from `params`.
    pub fn compile(exprs: &[Expr], params: &Binding) -> Result<Tape, EvalError> {
        let mut c = Compiler {
            ops: Vec::new(),
            origin: Vec::new(),
            by_ptr: HashMap::new(),
            by_value: HashMap::new(),
            params,
            uses: [false; 4],
        };
        let outputs = exprs.iter().map(|e| c.lower(e)).collect::<Result<Vec<_>, _>>()?;
        Ok(Tape { ops: c.ops, origin: c.origin, outputs, uses: c.uses })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn uses(&self, v: Var) -> bool {
        self.uses[v.index()]
    }

    pub fn used_vars(&self) -> Vec<Var> {
        Var::ALL.into_iter().filter(|v| self.uses(*v)).collect()
    }

    /// Evaluate at `point` (indexed by [`Var`] order: x, u, u_x, v_x).
    pub fn eval(&self, point: &[f64; 4]) -> Result<Vec<f64>, EvalError> {
        let mut regs = Vec::with_capacity(self.ops.len());
        self.run(point, &mut regs, None)?;
        Ok(self.outputs.iter().map(|&i| regs[i as usize]).collect())
    }

    /// Evaluate into a caller-provided buffer, avoiding allocation in hot loops.
    pub fn eval_into(&self, point: &[f64; 4], regs: &mut Vec<f64>, out: &mut [f64]) -> Result<(), EvalError> {
        self.run(point, regs, None)?;
        for (o, &i) in out.iter_mut().zip(&self.outputs) {
            *o = regs[i as usize];
        }
        Ok(())
    }

    /// Values together with a first-order rounding magnitude `m` per output:
    /// the absolute rounding error of the value is roughly `eps * m`.
    pub fn eval_with_scale(&self, point: &[f64; 4]) -> Result<Vec<(f64, f64)>, EvalError> {
        let mut regs = Vec::with_capacity(self.ops.len());
        let mut mags = Vec::with_capacity(self.ops.len());
        self.run(point, &mut regs, Some(&mut mags))?;
        Ok(self.outputs.iter().map(|&i| (regs[i as usize], mags[i as usize])).collect())
    }

    fn run(&self, point: &[f64; 4], regs: &mut Vec<f64>, mut mags: Option<&mut Vec<f64>>) -> Result<(), EvalError> {
        for v in Var::ALL {
            if self.uses[v.index()] && !point[v.index()].is_finite() {
                return Err(EvalError::UnboundVariable(v));
            }
        }
        regs.clear();
        if let Some(m) = mags.as_deref_mut() {
            m.clear();
        }
        for (k, op) in self.ops.iter().enumerate() {
            let r = |i: &u32| regs[*i as usize];
            let step = match *op {
                Op::Const(bits) => Ok(f64::from_bits(bits)),
                Op::Var(i) => Ok(point[i]),
                Op::Neg(a) => Ok(-r(&a)),
                Op::Bin(BinOp::Add, a, b) => Ok(r(&a) + r(&b)),
                Op::Bin(BinOp::Sub, a, b) => Ok(r(&a) - r(&b)),
                Op::Bin(BinOp::Mul, a, b) => Ok(r(&a) * r(&b)),
                Op::Bin(BinOp::Div, a, b) => {
                    if r(&b) == 0.0 {
                        Err(Fault::DivZero)
                    } else {
                        Ok(r(&a) / r(&b))
                    }
                }
                Op::Pow(a, b) => power(r(&a), r(&b)),
                Op::Func(f, a) => f.apply(r(&a)).ok_or(Fault::Domain),
            };
            let value = step
                .and_then(|v| if v.is_finite() { Ok(v) } else { Err(Fault::NonFinite) })
                .map_err(|fault| self.fault(k, fault))?;
            if let Some(m) = mags.as_deref_mut() {
                let mag = |i: &u32| m[*i as usize];
                let mk = match *op {
                    Op::Const(_) | Op::Var(_) => value.abs(),
                    Op::Neg(a) => mag(&a),
                    Op::Bin(BinOp::Add | BinOp::Sub, a, b) => mag(&a) + mag(&b) + value.abs(),
                    Op::Bin(BinOp::Mul, a, b) => mag(&a) * r(&b).abs() + r(&a).abs() * mag(&b) + value.abs(),
                    Op::Bin(BinOp::Div, a, b) => {
                        let d = r(&b).abs();
                        mag(&a) / d + value.abs() * mag(&b) / d + value.abs()
                    }
                    Op::Pow(a, b) => {
                        let (x, y) = (r(&a), r(&b));
                        let mut mk = value.abs();
                        if x != 0.0 {
                            mk += value.abs() * y.abs() * mag(&a) / x.abs();
                        }
                        if x > 0.0 {
                            mk += value.abs() * x.ln().abs() * mag(&b);
                        }
                        mk
                    }
                    Op::Func(f, a) => f.slope(r(&a), value).abs() * mag(&a) + value.abs(),
                };
                m.push(if mk.is_finite() { mk } else { f64::MAX });
            }
            regs.push(value);
        }
        Ok(())
    }

    fn fault(&self, k: usize, fault: Fault) -> EvalError {
        let mut subexpr = self.origin[k].to_string();
        if subexpr.len() > 200 {
            subexpr.truncate(200);
            subexpr.push_str("...");
        }
        match fault {
            Fault::DivZero => EvalError::DivisionByZero { subexpr },
            Fault::Domain => EvalError::Domain { subexpr },
            Fault::NonFinite => EvalError::NonFinite { subexpr },
        }
    }
}

fn power(x: f64, y: f64) -> Result<f64, Fault> {
    if x == 0.0 && y < 0.0 {
        return Err(Fault::DivZero);
    }
    if y.fract() == 0.0 && y.abs() <= 64.0 {
        return Ok(x.powi(y as i32));
    }
    if x < 0.0 {
        return Err(Fault::Domain);
    }
    Ok(x.powf(y))
}

struct Compiler<'a> {
    ops: Vec<Op>,
    origin: Vec<Expr>,
    by_ptr: HashMap<*const Node, u32>,
    by_value: HashMap<Op, u32>,
    params: &'a Binding,
    uses: [bool; 4],
}

impl Compiler<'_> {
    fn lower(&mut self, e: &Expr) -> Result<u32, EvalError> {
        if let Some(&r) = self.by_ptr.get(&e.id()) {
            return Ok(r);
        }
        let op = match e.node() {
            Node::Num(c) => Op::Const(c.to_bits()),
            Node::Var(v) => {
                self.uses[v.index()] = true;
                Op::Var(v.index())
            }
            Node::Param(p) => {
                let value = self.params.param(p).ok_or_else(|| EvalError::UnboundParameter(p.to_string()))?;
                Op::Const(value.to_bits())
            }
            Node::Neg(a) => Op::Neg(self.lower(a)?),
            Node::Binary(op, a, b) => Op::Bin(*op, self.lower(a)?, self.lower(b)?),
            Node::Pow(a, b) => Op::Pow(self.lower(a)?, self.lower(b)?),
            Node::Func(f, a) => Op::Func(*f, self.lower(a)?),
        };
        let r = match self.by_value.get(&op) {
            Some(&r) => r,
            None => {
                let r = self.ops.len() as u32;
                self.ops.push(op);
                self.origin.push(e.clone());
                self.by_value.insert(op, r);
                r
            }
        };
        self.by_ptr.insert(e.id(), r);
        Ok(r)
    }
}

/// Value of `e` at `b`. Every variable and parameter in `e` must be bound.
pub fn evaluate(e: &Expr, b: &Binding) -> Result<f64, EvalError> {
    let tape = Tape::compile(std::slice::from_ref(e), b)?;
    for v in Var::ALL {
        if tape.uses(v) && b.var(v).is_none() {
            return Err(EvalError::UnboundVariable(v));
        }
    }
    Ok(tape.eval(&b.var_array())?[0])
}
