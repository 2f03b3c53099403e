//! Differential invariants of `u_t = a(x,u) v_x`, `v_t = b(x,u) u_x`.
//!
//! Everything is written in terms of `F = (a b)^(1/2)` and `G = (b/a)^(1/2)`.
//! The jet coordinates `u_x`, `v_x` of the expressions are those of the chart
//! the formulas are built in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{
    differentiate, parse_with_params, simplify_with, Assumptions, Binding, ConstVerdict, Domain, Expr, SampleBox, Tape,
    Var, ZeroOracle,
};
use crate::frame::{CurveFrame, Frame};

/// Simplification is skipped above this DAG size.
const TIDY_LIMIT: usize = 3000;

pub(crate) fn tidy(e: &Expr, assume: &Assumptions) -> Expr {
    if e.dag_size() <= TIDY_LIMIT {
        simplify_with(e, assume)
    } else {
        e.clone()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WaveSystem {
    pub a: Expr,
    pub b: Expr,
    #[serde(rename = "F")]
    pub f: Expr,
    #[serde(rename = "G")]
    pub g: Expr,
    pub params: Binding,
    pub sample_box: SampleBox,
}

impl WaveSystem {
    /// Parses `a` and `b`; the names bound in `params` are the declared parameters.
    pub fn parse(a: &str, b: &str, params: Binding, sample_box: SampleBox) -> Result<WaveSystem> {
        let names: Vec<&str> = params.params().map(|(n, _)| n).collect();
        let pa = parse_with_params(a, &names).map_err(|source| Error::Parse { field: "a".into(), source })?;
        let pb = parse_with_params(b, &names).map_err(|source| Error::Parse { field: "b".into(), source })?;
        WaveSystem::new(pa, pb, params, sample_box)
    }

    /// Checks that `a`, `b` depend on `(x, u)` only, that every parameter is
    /// bound, and that `a b > 0` at sampled points of the box.
    pub fn new(a: Expr, b: Expr, params: Binding, sample_box: SampleBox) -> Result<WaveSystem> {
        for (name, e) in [("a", &a), ("b", &b)] {
            if let Some(v) = e.variables().into_iter().find(|v| matches!(v, Var::Ux | Var::Vx)) {
                return Err(Error::Inadmissible(format!("{name} may not depend on {}", v.name())));
            }
            if let Some(p) = e.parameters().into_iter().find(|p| params.param(p).is_none()) {
                return Err(Error::Inadmissible(format!("parameter {p} has no value")));
            }
        }
        for v in [Var::X, Var::U] {
            if sample_box.range(v).is_none() {
                return Err(Error::Inadmissible(format!("no range given for {}", v.name())));
            }
        }
        let a_sign = check_positive(&a, &b, &params, &sample_box)?;
        let assume = assumptions(&sample_box, &params);
        let (f, g) = if a == b {
            // a^2 > 0 on a connected box, so a keeps its sign and F = |a|
            let f = if a_sign > 0.0 { a.clone() } else { -&a };
            (simplify_with(&f, &assume), Expr::one())
        } else {
            build_f_g(&a, &b, &assume)
        };
        Ok(WaveSystem { a, b, f, g, params, sample_box })
    }

    pub fn domain(&self) -> Domain {
        Domain::new(self.sample_box.clone(), self.params.clone())
    }

    /// Sign facts valid on the box: positive coordinates and parameters.
    pub fn assumptions(&self) -> Assumptions {
        assumptions(&self.sample_box, &self.params)
    }
}

fn assumptions(sample_box: &SampleBox, params: &Binding) -> Assumptions {
    params.params().filter(|(_, v)| *v > 0.0).fold(sample_box.assumptions(), |a, (n, _)| a.positive_param(n))
}

/// Returns `a` at the box center.
fn check_positive(a: &Expr, b: &Expr, params: &Binding, sample_box: &SampleBox) -> Result<f64> {
    let tape = Tape::compile(&[a.clone(), b.clone()], params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut at_center = f64::NAN;
    for k in 0..65 {
        let p = if k == 0 { sample_box.center() } else { sample_box.sample(&mut rng) };
        let vals = tape.eval(&p).map_err(|e| {
            Error::Inadmissible(format!(
                "coefficients undefined at x={}, u={}: {e}",
                p[Var::X.index()],
                p[Var::U.index()]
            ))
        })?;
        if k == 0 {
            at_center = vals[0];
        }
        if vals[0] * vals[1] <= 0.0 {
            return Err(Error::Inadmissible(format!(
                "a*b must be positive; a={}, b={} at x={}, u={}",
                vals[0],
                vals[1],
                p[Var::X.index()],
                p[Var::U.index()]
            )));
        }
    }
    Ok(at_center)
}

/// `F = (a b)^(1/2)`, `G = (b/a)^(1/2)`, simplified under `assume`.
pub fn build_f_g(a: &Expr, b: &Expr, assume: &Assumptions) -> (Expr, Expr) {
    let f = simplify_with(&(a * b).powf(0.5), assume);
    let g = simplify_with(&(b / a).powf(0.5), assume);
    (f, g)
}

/// A point of the equation manifold. `t` and `v` are carried for
/// completeness; no implemented invariant depends on them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct JetPoint {
    pub x: f64,
    pub u: f64,
    pub u_x: f64,
    pub v_x: f64,
    pub t: f64,
    pub v: f64,
}

impl JetPoint {
    pub fn new(x: f64, u: f64, u_x: f64, v_x: f64) -> JetPoint {
        JetPoint { x, u, u_x, v_x, ..JetPoint::default() }
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.x, self.u, self.u_x, self.v_x]
    }

    pub fn binding(&self, params: &Binding) -> Binding {
        params
            .clone()
            .with_var(Var::X, self.x)
            .with_var(Var::U, self.u)
            .with_var(Var::Ux, self.u_x)
            .with_var(Var::Vx, self.v_x)
    }
}

/// A denominator that must stay away from zero where an invariant is sampled.
#[derive(Clone, Debug, Serialize)]
pub struct Guard {
    pub name: String,
    pub expr: Expr,
}

fn guard(name: &str, expr: Expr) -> Guard {
    Guard { name: name.to_string(), expr }
}

fn ux() -> Expr {
    Expr::var(Var::Ux)
}

fn vx() -> Expr {
    Expr::var(Var::Vx)
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseAInvariants {
    #[serde(rename = "P")]
    pub p: Expr,
    #[serde(rename = "P_x")]
    pub p_x: Expr,
    #[serde(rename = "P_u")]
    pub p_u: Expr,
    #[serde(rename = "R")]
    pub r: Expr,
    #[serde(rename = "K1")]
    pub k1: Expr,
    #[serde(rename = "K2")]
    pub k2: Expr,
    #[serde(rename = "K3")]
    pub k3: Expr,
    pub guards: Vec<Guard>,
}

impl CaseAInvariants {
    /// The components of the classifying map, in order.
    pub fn map(&self) -> Vec<(&'static str, Expr)> {
        vec![
            ("P", self.p.clone()),
            ("R", self.r.clone()),
            ("K1", self.k1.clone()),
            ("K2", self.k2.clone()),
            ("K3", self.k3.clone()),
        ]
    }
}

/// `P = G_x F^2 / F_u`.
pub fn build_p(f: &Expr, g: &Expr, assume: &Assumptions) -> Result<Expr> {
    let fu = simplify_with(&differentiate(f, Var::U), assume);
    if fu.is_literal_zero() {
        return Err(Error::gate("F_u is not identically zero"));
    }
    let gx = differentiate(g, Var::X);
    Ok(simplify_with(&(gx * f.powi(2) / fu), assume))
}

/// Case A invariants after checking `G_x != 0`, `F_u != 0` and `P != const`.
pub fn build_case_a(sys: &WaveSystem, oracle: &ZeroOracle) -> Result<CaseAInvariants> {
    let domain = sys.domain();
    let assume = sys.assumptions();
    if oracle.is_zero(&differentiate(&sys.g, Var::X), &domain)?.is_zero() {
        return Err(Error::gate("G_x is not identically zero"));
    }
    if oracle.is_zero(&differentiate(&sys.f, Var::U), &domain)?.is_zero() {
        return Err(Error::gate("F_u is not identically zero"));
    }
    let p = build_p(&sys.f, &sys.g, &assume)?;
    if let ConstVerdict::Constant { value, .. } = oracle.is_constant(&p, &[Var::X, Var::U], &domain)? {
        return Err(Error::gate(format!("P is not constant (P = {value})")));
    }
    Ok(case_a_formulas(&sys.f, &sys.g, &assume))
}

/// P, R, K1, K2, K3 without gate checks.
pub fn case_a_formulas(f: &Expr, g: &Expr, assume: &Assumptions) -> CaseAInvariants {
    let d = |e: &Expr, v: Var| simplify_with(&differentiate(e, v), assume);
    let fx = d(f, Var::X);
    let fu = d(f, Var::U);
    let fuu = d(&fu, Var::U);
    let fxu = d(&fu, Var::X);
    let gx = d(g, Var::X);
    let gu = d(g, Var::U);
    let p = simplify_with(&(&gx * f.powi(2) / &fu), assume);
    let px = d(&p, Var::X);
    let pu = d(&p, Var::U);
    let (ux, vx) = (ux(), vx());
    let fg = f * g;

    // P - F G u_x + F v_x  and  P - F G u_x - F v_x
    let plus = &p - &fg * &ux + f * &vx;
    let minus = &p - &fg * &ux - f * &vx;
    let mixed = g * &px + (g * &ux - &vx) * &pu;

    let r = &fu * (&fg * &px + &p * &pu) * plus.powi(2) / (2.0 * f.powi(3) * mixed.powi(2));

    let k1_num = 2.0
        * f
        * &vx
        * (2.0 * fu.powi(2) * g * &p + &fu * &gu * f * &p
            - &fuu * f * g * &p
            - g.powi(2) * f.powi(2) * &fxu
            - &fu * f * g * &pu
            + g.powi(2) * &fx * &fu * f);
    let k1_den = (&p - &ux * g * f + f * &vx) * fu.powi(2) * g * (-&p + &ux * g * f + f * &vx);
    let k1 = k1_num / k1_den;

    let k2 = &fu * (-&p + &ux * g * f + f * &vx) * (-&p + &ux * g * f - f * &vx).powi(2)
        / (2.0 * f.powi(3) * &vx * (&ux * &pu * g + &px * g - &pu * &vx));

    let k3 = &vx * (&p * &pu + &fg * &px) / ((&fg * &ux + f * &vx - &p) * (g * &px + g * &pu * &ux - &pu * &vx));

    let guards = vec![
        guard("F", f.clone()),
        guard("G", g.clone()),
        guard("F_u", fu.clone()),
        guard("v_x", vx.clone()),
        guard("P - F*G*u_x + F*v_x", plus),
        guard("P - F*G*u_x - F*v_x", minus),
        guard("G*P_x + (G*u_x - v_x)*P_u", mixed),
    ];
    CaseAInvariants {
        p,
        p_x: px,
        p_u: pu,
        r: tidy(&r, assume),
        k1: tidy(&k1, assume),
        k2: tidy(&k2, assume),
        k3: tidy(&k3, assume),
        guards,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseBInvariants {
    #[serde(rename = "L1")]
    pub l1: Expr,
    #[serde(rename = "L2")]
    pub l2: Expr,
    #[serde(rename = "L3")]
    pub l3: Expr,
    #[serde(rename = "L4")]
    pub l4: Expr,
    #[serde(rename = "L1_x")]
    pub l1_x: Expr,
    #[serde(rename = "L2_x")]
    pub l2_x: Expr,
    pub guards: Vec<Guard>,
}

impl CaseBInvariants {
    pub fn map(&self) -> Vec<(&'static str, Expr)> {
        vec![("L1", self.l1.clone()), ("L2", self.l2.clone()), ("L3", self.l3.clone()), ("L4", self.l4.clone())]
    }
}

/// Case B invariants in `frame` after checking `F F_xu - F_x F_u != 0`.
pub fn build_case_b(frame: &Frame, domain: &Domain, oracle: &ZeroOracle) -> Result<CaseBInvariants> {
    if oracle.is_zero(&frame.log_mixed_gate(), domain)?.is_zero() {
        return Err(Error::gate("(ln F)_xu is not identically zero"));
    }
    Ok(case_b_formulas(frame))
}

/// L1..L4 without gate checks. `L1_x`, `L2_x` are partial derivatives along
/// the frame's `x` field with `u`, `u_x`, `v_x` held fixed.
pub fn case_b_formulas(frame: &Frame) -> CaseBInvariants {
    let f = &frame.f;
    let fx = frame.d_x(f);
    let fu = frame.d_u(f);
    let fuu = frame.d_u(&fu);
    let fxu = frame.d_x(&fu);
    let (ux, vx) = (ux(), vx());
    let ux2 = ux.powi(2);
    let vx2 = vx.powi(2);
    let fu2 = fu.powi(2);
    let jet = &ux2 - &vx2;
    let gate = f * &fxu - &fx * &fu;

    let l1 = (3.0 * &vx2 * &fu2 - 3.0 * &fuu * &vx2 * f - 5.0 * &vx * &fxu * f + 5.0 * &vx * &fx * &fu
        - 3.0 * &ux * &fx * &fu
        + 3.0 * &fuu * &ux2 * f
        - 3.0 * &ux2 * &fu2
        + 3.0 * &ux * &fxu * f)
        / (&jet * &fu2);

    let l2 = (&fu2 * &l1 * &ux + 8.0 * &vx * &fu2 - 8.0 * &vx * f * &fuu + &fu2 * &l1 * &vx)
        / (&fu2 * (3.0 * &ux - 5.0 * &vx));

    let l1_x = frame.dx.apply_raw(&l1);
    let l2_x = frame.dx.apply_raw(&l2);

    let l3 = (1.0 / 64.0)
        * fu.powi(3)
        * &jet
        * (6.0 * &ux2 * &fu * &l2 * &l1 - &ux2 * &fu * l1.powi(2) - 9.0 * &ux2 * &fu * l2.powi(2)
            + 8.0 * &fx * &l1 * &vx
            - 24.0 * f * &vx * &l2_x
            + 8.0 * f * &l1_x * &vx
            - 6.0 * &fu * &vx2 * &l2 * &l1
            + &fu * l1.powi(2) * &vx2
            - 24.0 * &fx * &l2 * &vx
            + 9.0 * &fu * &vx2 * l2.powi(2))
        / (&vx2 * gate.powi(2));

    let l4 = -(1.0 / 16.0)
        * &fu
        * &jet
        * (6.0 * &ux2 * &fu * l2.powi(2) + 9.0 * &ux2 * &fu * &l2
            - 3.0 * &ux2 * &fu * &l1
            - 4.0 * &ux2 * &fu * l1.powi(2)
            + 10.0 * &ux2 * &fu * &l2 * &l1
            + 18.0 * &ux * &fx * &l2
            - 6.0 * &ux * &fx * &l1
            - 6.0 * &fu * &vx2 * l2.powi(2)
            + 10.0 * &fx * &l1 * &vx
            + 4.0 * &fu * l1.powi(2) * &vx2
            + 16.0 * f * &l1_x * &vx
            - 9.0 * &fu * &vx2 * &l2
            + 3.0 * &fu * &l1 * &vx2
            - 30.0 * &fx * &l2 * &vx
            - 10.0 * &fu * &vx2 * &l2 * &l1)
        / &gate;

    let guards = vec![
        guard("F_u", fu.clone()),
        guard("v_x", vx.clone()),
        guard("u_x^2 - v_x^2", jet),
        guard("3*u_x - 5*v_x", 3.0 * &ux - 5.0 * &vx),
        guard("F*F_xu - F_x*F_u", gate),
    ];
    CaseBInvariants { l1, l2, l3, l4, l1_x, l2_x, guards }
}

/// Invariants of `u_t = F(u) v_x`, `v_t = F(u) u_x` along a curve frame.
///
/// `M2`, `M3` and the invariant derivatives need `M1_u != 0`; they are absent
/// when `M1_u` simplifies to zero.
#[derive(Clone, Debug, Serialize)]
pub struct FOnlyInvariants {
    /// Coordinate the expressions depend on.
    pub variable: Var,
    #[serde(rename = "F_u")]
    pub f_u: Expr,
    #[serde(rename = "M1")]
    pub m1: Expr,
    #[serde(rename = "M1_u")]
    pub m1_u: Expr,
    #[serde(rename = "M1_uu")]
    pub m1_uu: Expr,
    #[serde(rename = "M2")]
    pub m2: Option<Expr>,
    #[serde(rename = "M3")]
    pub m3: Option<Expr>,
    #[serde(rename = "D4M1")]
    pub delta4_m1: Expr,
    pub guards: Vec<Guard>,
    #[serde(skip)]
    curve: CurveFrame,
}

impl FOnlyInvariants {
    /// `D3 = M1_u^-1 d/du`.
    pub fn delta3(&self, e: &Expr) -> Option<Expr> {
        let q = self.curve.d(e).checked_div(&self.m1_u).ok()?;
        Some(tidy(&q, &self.curve.assume))
    }

    /// `D4 = (1 - 4 F^2 M1_u^2 / F_u^2) M1_u^-1 d/du`.
    pub fn delta4(&self, e: &Expr) -> Option<Expr> {
        let q = (&self.delta4_m1 * self.curve.d(e)).checked_div(&self.m1_u).ok()?;
        Some(tidy(&q, &self.curve.assume))
    }

    /// `(M1, M2, D4 M1)`, the curve whose shape decides equivalence in the
    /// non-constant case.
    pub fn map(&self) -> Option<Vec<(&'static str, Expr)>> {
        Some(vec![("M1", self.m1.clone()), ("M2", self.m2.clone()?), ("D4M1", self.delta4_m1.clone())])
    }

    pub fn curve(&self) -> &CurveFrame {
        &self.curve
    }
}

/// M-invariants after checking `F_u != 0`.
pub fn build_f_only(curve: &CurveFrame, domain: &Domain, oracle: &ZeroOracle) -> Result<FOnlyInvariants> {
    if oracle.is_zero(&curve.d(&curve.f), domain)?.is_zero() {
        return Err(Error::gate("F_u is not identically zero"));
    }
    Ok(f_only_formulas(curve))
}

/// `M1`, `M2`, `M3` and `D4 M1` without gate checks.
pub fn f_only_formulas(curve: &CurveFrame) -> FOnlyInvariants {
    let assume = &curve.assume;
    let f = &curve.f;
    let f1 = curve.d(f);
    let f2 = curve.d(&f1);
    let f3 = curve.d(&f2);
    let m1 =
        (4.0 * f * f1.powi(2) * &f2 + 4.0 * f.powi(2) * f2.powi(2) - 4.0 * f.powi(2) * &f1 * &f3 - 3.0 * f1.powi(4))
            / f1.powi(4);
    let m1 = tidy(&m1, assume);
    let m1_u = tidy(&curve.d(&m1), assume);
    let m1_uu = tidy(&curve.d(&m1_u), assume);
    let delta4_m1 = tidy(&(1.0 - 4.0 * f.powi(2) * m1_u.powi(2) / f1.powi(2)), assume);
    let (m2, m3) = if m1_u.is_literal_zero() {
        (None, None)
    } else {
        let m2 = (2.0 * f * &f2 * &m1_u - f * &f1 * &m1_uu - 2.0 * f1.powi(2) * &m1_u) / (f * &f1 * m1_u.powi(2));
        let m2 = tidy(&m2, assume);
        let d3_of_d4m1 = tidy(&(curve.d(&delta4_m1) / &m1_u), assume);
        let m3 = -(&m2 * &delta4_m1 + d3_of_d4m1);
        (Some(m2), Some(m3))
    };
    let guards = vec![guard("F", f.clone()), guard("F_u", f1.clone()), guard("M1_u", m1_u.clone())];
    FOnlyInvariants { variable: curve.var, f_u: f1, m1, m1_u, m1_uu, m2, m3, delta4_m1, guards, curve: curve.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{evaluate, parse, parse_with_params, simplify};

    fn sys(a: &str, b: &str) -> WaveSystem {
        WaveSystem::parse(a, b, Binding::new(), SampleBox::default()).unwrap()
    }

    #[test]
    fn f_and_g_from_coefficients() {
        let s = sys("exp(u)", "exp(u)");
        assert_eq!(s.f, parse("exp(u)").unwrap());
        assert_eq!(s.g, Expr::one());

        let s = sys("exp(2*u)/x", "x");
        assert_eq!(s.f, parse("exp(u)").unwrap());
        assert_eq!(s.g, simplify(&parse("x*exp(-u)").unwrap()));

        let s = sys("exp(u - x)", "exp(u + x)");
        assert_eq!(s.f, parse("exp(u)").unwrap());
        assert_eq!(s.g, parse("exp(x)").unwrap());
    }

    #[test]
    fn f_and_g_reproduce_a_and_b() {
        let s = sys("(1 + x^2)*exp(u)", "u/x");
        let dom = s.domain();
        let o = ZeroOracle::default();
        assert!(o.is_zero(&(&s.f / &s.g - &s.a), &dom).unwrap().is_zero());
        assert!(o.is_zero(&(&s.f * &s.g - &s.b), &dom).unwrap().is_zero());
    }

    #[test]
    fn rejects_sign_changes_and_jets() {
        let bad = WaveSystem::parse("u - 1", "1", Binding::new(), SampleBox::default());
        assert!(matches!(bad, Err(Error::Inadmissible(_))));
        let bad = WaveSystem::parse("u_x", "1", Binding::new(), SampleBox::default());
        assert!(matches!(bad, Err(Error::Inadmissible(_))));
        let bad = WaveSystem::parse("u^m", "u^m", Binding::new(), SampleBox::default());
        assert!(bad.is_err());
    }

    #[test]
    fn p_examples() {
        let a = Assumptions::none().positive_var(Var::X);
        let p = build_p(&parse("exp(u)").unwrap(), &parse("exp(x)").unwrap(), &a).unwrap();
        assert_eq!(p, simplify(&parse("exp(x + u)").unwrap()));
        let p = build_p(&parse("exp(u)").unwrap(), &parse("x*exp(-u)").unwrap(), &a).unwrap();
        assert_eq!(p, Expr::one());
        let p = build_p(&parse("u").unwrap(), &parse("x").unwrap(), &a).unwrap();
        assert_eq!(p, parse("u^2").unwrap());
        assert!(build_p(&parse("x").unwrap(), &parse("x").unwrap(), &a).is_err());
    }

    #[test]
    fn case_a_gate_rejects_constant_p() {
        let s = sys("exp(2*u)/x", "x");
        let err = build_case_a(&s, &ZeroOracle::default()).unwrap_err();
        assert!(err.to_string().contains("P is not constant"), "{err}");
        assert!(build_case_a(&sys("exp(u - x)", "exp(u + x)"), &ZeroOracle::default()).is_ok());
    }

    #[test]
    fn case_b_gate() {
        let dom = Domain::default();
        let o = ZeroOracle::default();
        let good = Frame::identity(parse("exp(x*u)").unwrap(), Assumptions::none());
        assert!(build_case_b(&good, &dom, &o).is_ok());
        let bad = Frame::identity(parse("x*exp(u)").unwrap(), Assumptions::none());
        assert!(matches!(build_case_b(&bad, &dom, &o), Err(Error::Gate { .. })));
    }

    #[test]
    fn l1_is_finite_at_a_generic_point() {
        let frame = Frame::identity(parse("exp(x*u)").unwrap(), Assumptions::none());
        let l = case_b_formulas(&frame);
        let b = JetPoint::new(1.0, 0.0, 1.0, 2.0).binding(&Binding::new());
        for (_, e) in l.map() {
            assert!(evaluate(&e, &b).unwrap().is_finite());
        }
    }

    #[test]
    fn m1_closed_forms() {
        let inv = f_only_formulas(&CurveFrame::plain(parse("exp(u)").unwrap()));
        assert_eq!(inv.m1, Expr::one());
        assert!(inv.m2.is_none() && inv.delta3(&inv.m1).is_none());
        for m in [2.0, 3.0, 5.0] {
            let f = parse_with_params("u^m", &["m"]).unwrap();
            let inv = f_only_formulas(&CurveFrame::plain(f));
            let b = Binding::new().with_param("m", m).with_var(Var::U, 0.7);
            let got = evaluate(&inv.m1, &b).unwrap();
            assert!((got - (1.0 - 4.0 / (m * m))).abs() < 1e-12);
        }
    }

    #[test]
    fn delta3_of_m1_is_one() {
        let inv = f_only_formulas(&CurveFrame::plain(parse("1/(1 + u^2)").unwrap()));
        let d = inv.delta3(&inv.m1).unwrap() - 1.0;
        assert!(ZeroOracle::default().is_zero(&d, &Domain::default()).unwrap().is_zero());
    }
}
