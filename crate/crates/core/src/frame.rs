//! Coordinate frames carried through the normalizations.
//!
//! A frame stores the effective coefficient `F` together with the two
//! coordinate vector fields of the normalized chart, written as first-order
//! derivations with coefficients in the original `(x, u)`. Nothing ever
//! integrates the change of variables; invariants only need these fields.

use serde::Serialize;

use crate::expr::{differentiate, simplify_with, Assumptions, Expr, Var};

/// `cx * d/dx + cu * d/du`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Derivation {
    pub cx: Expr,
    pub cu: Expr,
}

impl Derivation {
    pub fn new(cx: Expr, cu: Expr) -> Derivation {
        Derivation { cx, cu }
    }

    pub fn partial_x() -> Derivation {
        Derivation::new(Expr::one(), Expr::zero())
    }

    pub fn partial_u() -> Derivation {
        Derivation::new(Expr::zero(), Expr::one())
    }

    pub fn partial(v: Var) -> Derivation {
        match v {
            Var::X => Derivation::partial_x(),
            Var::U => Derivation::partial_u(),
            _ => panic!("derivations act on x and u only"),
        }
    }

    /// Unsimplified application to `e`; jet variables are held fixed.
    pub fn apply_raw(&self, e: &Expr) -> Expr {
        let tx = (!self.cx.is_literal_zero()).then(|| &self.cx * differentiate(e, Var::X));
        let tu = (!self.cu.is_literal_zero()).then(|| &self.cu * differentiate(e, Var::U));
        match (tx, tu) {
            (Some(a), Some(b)) => a + b,
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => Expr::zero(),
        }
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: &Expr, other: &Derivation, beta: &Expr) -> Derivation {
        Derivation::new(alpha * &self.cx + beta * &other.cx, alpha * &self.cu + beta * &other.cu)
    }

    pub fn simplified(&self, assume: &Assumptions) -> Derivation {
        Derivation::new(simplify_with(&self.cx, assume), simplify_with(&self.cu, assume))
    }

    pub fn substitute(&self, v: Var, with: &Expr) -> Derivation {
        Derivation::new(self.cx.substitute(v, with), self.cu.substitute(v, with))
    }

    pub fn is_identity_on(&self, v: Var) -> bool {
        let (on, off) = match v {
            Var::X => (&self.cx, &self.cu),
            _ => (&self.cu, &self.cx),
        };
        on.is_literal_one() && off.is_literal_zero()
    }
}

impl std::fmt::Display for Derivation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.cx.is_literal_zero(), self.cu.is_literal_zero()) {
            (true, true) => write!(f, "0"),
            (false, true) => write!(f, "({})*d/dx", self.cx),
            (true, false) => write!(f, "({})*d/du", self.cu),
            (false, false) => write!(f, "({})*d/dx + ({})*d/du", self.cx, self.cu),
        }
    }
}

/// Effective coefficient `F` and the normalized coordinate fields. The
/// normalized `G` is identically one.
#[derive(Clone, Debug, Serialize)]
pub struct Frame {
    pub f: Expr,
    pub dx: Derivation,
    pub du: Derivation,
    /// Original variable held fixed along the normalized `u`-lines.
    pub frozen: Var,
    #[serde(skip)]
    pub(crate) assume: Assumptions,
}

impl Frame {
    pub fn identity(f: Expr, assume: Assumptions) -> Frame {
        Frame { f, dx: Derivation::partial_x(), du: Derivation::partial_u(), frozen: Var::X, assume }
    }

    pub fn d_x(&self, e: &Expr) -> Expr {
        simplify_with(&self.dx.apply_raw(e), &self.assume)
    }

    pub fn d_u(&self, e: &Expr) -> Expr {
        simplify_with(&self.du.apply_raw(e), &self.assume)
    }

    /// `F * F_xu - F_x * F_u` in the normalized chart; it vanishes exactly
    /// when `F` separates as `S(x) * F(u)`.
    pub fn log_mixed_gate(&self) -> Expr {
        let fu = self.d_u(&self.f);
        let fx = self.d_x(&self.f);
        let fxu = self.d_x(&fu);
        &self.f * fxu - fx * fu
    }

    /// Restrict to the normalized `u`-line through `frozen = value`.
    pub fn curve(&self, value: f64) -> CurveFrame {
        let at = Expr::num(value);
        let var = match self.frozen {
            Var::X => Var::U,
            _ => Var::X,
        };
        let coef = match var {
            Var::U => &self.du.cu,
            _ => &self.du.cx,
        };
        CurveFrame {
            f: simplify_with(&self.f.substitute(self.frozen, &at), &self.assume),
            coef: simplify_with(&coef.substitute(self.frozen, &at), &self.assume),
            var,
            frozen: (self.frozen, value),
            assume: self.assume.clone(),
        }
    }
}

/// A frame restricted to one curve: `F(s)` and the field `coef(s) * d/ds`.
#[derive(Clone, Debug, Serialize)]
pub struct CurveFrame {
    pub f: Expr,
    pub coef: Expr,
    pub var: Var,
    pub frozen: (Var, f64),
    #[serde(skip)]
    pub(crate) assume: Assumptions,
}

impl CurveFrame {
    /// A curve with the plain `d/du` field, for systems already of the form `F(u)`.
    pub fn plain(f: Expr) -> CurveFrame {
        CurveFrame { f, coef: Expr::one(), var: Var::U, frozen: (Var::X, f64::NAN), assume: Assumptions::none() }
    }

    pub fn d(&self, e: &Expr) -> Expr {
        let raw = &self.coef * differentiate(e, self.var);
        simplify_with(&raw, &self.assume)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{evaluate, parse, Binding};

    #[test]
    fn combine_and_apply() {
        let d = Derivation::partial_x().combine(&Expr::one(), &Derivation::partial_u(), &parse("1/x").unwrap());
        let e = d.apply_raw(&parse("x*u").unwrap());
        let b = Binding::new().with_var(Var::X, 2.0).with_var(Var::U, 3.0);
        assert_eq!(evaluate(&e, &b).unwrap(), 3.0 + 2.0 / 2.0);
    }

    #[test]
    fn separable_gate_vanishes_for_products() {
        let frame = Frame::identity(parse("x*exp(u)").unwrap(), Assumptions::none());
        assert_eq!(crate::expr::simplify(&frame.log_mixed_gate()), Expr::zero());
    }

    #[test]
    fn curve_freezes_the_right_variable() {
        let mut frame = Frame::identity(parse("x^2*exp(u)").unwrap(), Assumptions::none());
        frame.du = Derivation::new(Expr::zero(), parse("x").unwrap());
        let c = frame.curve(3.0);
        assert_eq!(c.var, Var::U);
        assert_eq!(c.coef, Expr::num(3.0));
        assert_eq!(c.f, parse("9*exp(u)").unwrap());
    }
}
