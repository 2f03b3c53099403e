//! Exact symbolic partial derivatives.

use std::collections::HashMap;

use super::{BinOp, Expr, Func, Node, Var};

/// Partial derivative of `e` with respect to `v`; parameters and the other
/// variables are held fixed.
///
/// A power `b^k` whose exponent does not involve `v` is differentiated as
/// `k*b^(k-1)*b'` even for symbolic `k`, which is valid where `b > 0`.
pub fn differentiate(e: &Expr, v: Var) -> Expr {
    let mut memo = HashMap::new();
    let mut deps = HashMap::new();
    d(e, v, &mut memo, &mut deps)
}

fn depends(e: &Expr, v: Var, deps: &mut HashMap<*const Node, bool>) -> bool {
    if let Some(&r) = deps.get(&e.id()) {
        return r;
    }
    let r = match e.node() {
        Node::Var(w) => *w == v,
        Node::Num(_) | Node::Param(_) => false,
        Node::Neg(a) | Node::Func(_, a) => depends(a, v, deps),
        Node::Binary(_, a, b) | Node::Pow(a, b) => depends(a, v, deps) || depends(b, v, deps),
    };
    deps.insert(e.id(), r);
    r
}

fn d(e: &Expr, v: Var, memo: &mut HashMap<*const Node, Expr>, deps: &mut HashMap<*const Node, bool>) -> Expr {
    if let Some(r) = memo.get(&e.id()) {
        return r.clone();
    }
    let r = if !depends(e, v, deps) {
        Expr::zero()
    } else {
        match e.node() {
            Node::Num(_) | Node::Param(_) => Expr::zero(),
            Node::Var(w) => {
                if *w == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Neg(a) => -d(a, v, memo, deps),
            Node::Binary(op, a, b) => {
                let da = d(a, v, memo, deps);
                let db = d(b, v, memo, deps);
                match op {
                    BinOp::Add => da + db,
                    BinOp::Sub => da - db,
                    BinOp::Mul => &da * b + a * &db,
                    BinOp::Div => {
                        if db.is_literal_zero() {
                            da / b
                        } else {
                            (&da * b - a * &db) / b.powi(2)
                        }
                    }
                }
            }
            Node::Pow(base, k) => {
                let db = d(base, v, memo, deps);
                if !depends(k, v, deps) {
                    k * base.pow(&(k - 1.0)) * db
                } else {
                    let dk = d(k, v, memo, deps);
                    if !depends(base, v, deps) {
                        e * base.ln() * dk
                    } else {
                        e * (dk * base.ln() + k * db / base)
                    }
                }
            }
            Node::Func(f, a) => {
                let da = d(a, v, memo, deps);
                let outer = match f {
                    Func::Exp => e.clone(),
                    Func::Ln => return cache(memo, e, da / a),
                    Func::Sqrt => return cache(memo, e, da / (2.0 * e)),
                    Func::Sin => a.apply(Func::Cos),
                    Func::Cos => -a.apply(Func::Sin),
                    Func::Tan => 1.0 + e.powi(2),
                    Func::Sinh => a.apply(Func::Cosh),
                    Func::Cosh => a.apply(Func::Sinh),
                    Func::Tanh => 1.0 - e.powi(2),
                    Func::Arctan => return cache(memo, e, da / (1.0 + a.powi(2))),
                };
                outer * da
            }
        }
    };
    cache(memo, e, r)
}

fn cache(memo: &mut HashMap<*const Node, Expr>, e: &Expr, r: Expr) -> Expr {
    memo.insert(e.id(), r.clone());
    r
}
