//! Changes of variables that bring a system to the form `u_t = F v_x`,
//! `v_t = F u_x`.
//!
//! Each change is stored as the pullback of the new coordinate fields, with
//! coefficients in the original `(x, u)`, together with the rule that maps
//! old jets `(u_x, v_x)` to new ones. The potentials themselves are never
//! integrated.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{
    differentiate, simplify_with, Assumptions, Binding, ConstVerdict, Domain, Expr, Tape, Var, ZeroOracle,
};
use crate::frame::{CurveFrame, Derivation, Frame};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    CaseBStraighten,
    CaseCStraightenSwap,
    PConstPotential,
    SeparableScale,
    TimeScale,
}

impl StepKind {
    pub fn label(self) -> &'static str {
        match self {
            StepKind::CaseBStraighten => "case-B straighten",
            StepKind::CaseCStraightenSwap => "case-C straighten + swap",
            StepKind::PConstPotential => "P-const potential",
            StepKind::SeparableScale => "separable scale",
            StepKind::TimeScale => "time scale",
        }
    }
}

/// New jets `(u_x, v_x)` as expressions in the previous chart's
/// `(x, u, u_x, v_x)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JetRule {
    pub u_x: Expr,
    pub v_x: Expr,
}

impl JetRule {
    pub fn identity() -> JetRule {
        JetRule { u_x: Expr::var(Var::Ux), v_x: Expr::var(Var::Vx) }
    }

    /// `next` applied after `self`.
    pub fn then(&self, next: &JetRule) -> JetRule {
        let pairs = [(Var::Ux, self.u_x.clone()), (Var::Vx, self.v_x.clone())];
        JetRule { u_x: next.u_x.substitute_many(&pairs), v_x: next.v_x.substitute_many(&pairs) }
    }

    pub fn apply(&self, point: &[f64; 4], params: &Binding) -> Result<(f64, f64)> {
        let tape = Tape::compile(&[self.u_x.clone(), self.v_x.clone()], params)?;
        let out = tape.eval(point)?;
        Ok((out[0], out[1]))
    }

    /// Determinant of `d(new jets)/d(old jets)`.
    pub fn jacobian(&self) -> Expr {
        let d = |e: &Expr, v| differentiate(e, v);
        d(&self.u_x, Var::Ux) * d(&self.v_x, Var::Vx) - d(&self.u_x, Var::Vx) * d(&self.v_x, Var::Ux)
    }

    /// True if both components are affine in `(u_x, v_x)`.
    pub fn is_affine(&self) -> bool {
        [&self.u_x, &self.v_x].iter().all(|e| {
            [Var::Ux, Var::Vx].iter().all(|&v| {
                let dv = differentiate(e, v);
                !dv.depends_on(Var::Ux) && !dv.depends_on(Var::Vx)
            })
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalizationStep {
    pub kind: StepKind,
    /// New `d/dx` in original coordinates.
    pub dx: Derivation,
    /// New `d/du` in original coordinates.
    pub du: Derivation,
    pub jet_rule: JetRule,
    /// `m` for the potential step, `1/m` for the time scale.
    pub constant: Option<f64>,
    /// Frozen coordinate and its value for the separable step.
    pub reference: Option<(Var, f64)>,
    pub note: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalizedSystem {
    pub frame: Frame,
    pub steps: Vec<NormalizationStep>,
    /// Composition of every step's jet rule.
    pub jet_rule: JetRule,
}

impl NormalizedSystem {
    fn single(frame: Frame, step: NormalizationStep) -> NormalizedSystem {
        NormalizedSystem { frame, jet_rule: step.jet_rule.clone(), steps: vec![step] }
    }

    pub(crate) fn push(&mut self, step: NormalizationStep) {
        self.jet_rule = self.jet_rule.then(&step.jet_rule);
        self.steps.push(step);
    }
}

fn require_zero(e: &Expr, domain: &Domain, oracle: &ZeroOracle, predicate: &str) -> Result<()> {
    if oracle.is_zero(e, domain)?.is_zero() {
        Ok(())
    } else {
        Err(Error::gate(predicate))
    }
}

/// `G = G(u)`: new `u` with `du~ = G du`.
pub fn reduce_case_b(
    f: &Expr,
    g: &Expr,
    assume: &Assumptions,
    domain: &Domain,
    oracle: &ZeroOracle,
) -> Result<NormalizedSystem> {
    require_zero(&differentiate(g, Var::X), domain, oracle, "G_x == 0")?;
    let inv_g = simplify_with(&(1.0 / g), assume);
    let du = Derivation::new(Expr::zero(), inv_g);
    let jet_rule = JetRule { u_x: simplify_with(&(g * Expr::var(Var::Ux)), assume), v_x: Expr::var(Var::Vx) };
    let note = if g.is_literal_one() { "G = 1; identity".to_string() } else { format!("u~ = H(u) with H' = {g}") };
    let frame =
        Frame { f: f.clone(), dx: Derivation::partial_x(), du: du.clone(), frozen: Var::X, assume: assume.clone() };
    let step = NormalizationStep {
        kind: StepKind::CaseBStraighten,
        dx: Derivation::partial_x(),
        du,
        jet_rule,
        constant: None,
        reference: None,
        note,
    };
    Ok(NormalizedSystem::single(frame, step))
}

/// `F = F(x)`: straighten `x` with `dx~ = dx/F`, then exchange the roles of
/// `(t, x)` and `(v, u)`. The result has coefficient `1/G` with the new `x`
/// running along the old `u`.
pub fn reduce_case_c(
    f: &Expr,
    g: &Expr,
    assume: &Assumptions,
    domain: &Domain,
    oracle: &ZeroOracle,
) -> Result<NormalizedSystem> {
    require_zero(&differentiate(f, Var::U), domain, oracle, "F_u == 0")?;
    let (ux, vx) = (Expr::var(Var::Ux), Expr::var(Var::Vx));
    let straighten = JetRule { u_x: f * &ux, v_x: f * &vx };
    // after straightening the system reads u_t = v_x/G, v_t = G u_x
    let j = g * ux.powi(2) - vx.powi(2) / g;
    let swap = JetRule { u_x: g * &ux / &j, v_x: -&vx / &j };
    let composed = straighten.then(&swap);
    let jet_rule = JetRule { u_x: simplify_with(&composed.u_x, assume), v_x: simplify_with(&composed.v_x, assume) };
    let dx = Derivation::partial_u();
    let du = Derivation::new(f.clone(), Expr::zero());
    let frame = Frame {
        f: simplify_with(&(1.0 / g), assume),
        dx: dx.clone(),
        du: du.clone(),
        frozen: Var::U,
        assume: assume.clone(),
    };
    let step = NormalizationStep {
        kind: StepKind::CaseCStraightenSwap,
        dx,
        du,
        jet_rule,
        constant: None,
        reference: None,
        note: format!("x~ = H(x) with H' = 1/({f}); then t' = v, x' = u, u' = x~, v' = t; new F = 1/({g})"),
    };
    Ok(NormalizedSystem::single(frame, step))
}

/// `P = m`: new `u` is the potential with `dH = -m/F dx + G du`, and
/// `v~ = v - m t`.
pub fn reduce_p_const(
    f: &Expr,
    g: &Expr,
    m: f64,
    assume: &Assumptions,
    domain: &Domain,
    oracle: &ZeroOracle,
) -> Result<NormalizedSystem> {
    let p = crate::invariants::build_p(f, g, assume)?;
    require_zero(&(&p - m), domain, oracle, &format!("P == {m}"))?;
    if oracle.is_zero(g, domain)?.is_zero() {
        return Err(Error::gate("G != 0"));
    }
    let m_e = Expr::num(m);
    let dx = Derivation::new(Expr::one(), simplify_with(&(&m_e / (f * g)), assume));
    let du = Derivation::new(Expr::zero(), simplify_with(&(1.0 / g), assume));
    let jet_rule =
        JetRule { u_x: simplify_with(&(-(&m_e / f) + g * Expr::var(Var::Ux)), assume), v_x: Expr::var(Var::Vx) };
    let frame = Frame { f: f.clone(), dx: dx.clone(), du: du.clone(), frozen: Var::X, assume: assume.clone() };
    let step = NormalizationStep {
        kind: StepKind::PConstPotential,
        dx,
        du,
        jet_rule,
        constant: Some(m),
        reference: None,
        note: format!("u~ = H(x, u) with H_x = -{m}/F, H_u = G; v~ = v - {m}*t"),
    };
    Ok(NormalizedSystem::single(frame, step))
}

/// `d/du(-m/F) - d/dx(G)`; the potential of [`reduce_p_const`] exists where
/// this vanishes.
pub fn p_const_compatibility(f: &Expr, g: &Expr, m: f64) -> Expr {
    differentiate(&(-m / f), Var::U) - differentiate(g, Var::X)
}

/// `F = S(x) F~(u)` in the normalized chart: restrict to the line through
/// `frozen = reference`. The scale `S` drops out of every M-invariant.
pub fn reduce_separable(
    mut ns: NormalizedSystem,
    reference: f64,
    domain: &Domain,
    oracle: &ZeroOracle,
) -> Result<(NormalizedSystem, CurveFrame)> {
    require_zero(&ns.frame.log_mixed_gate(), domain, oracle, "(ln F)_xu == 0")?;
    let curve = ns.frame.curve(reference);
    let frozen = ns.frame.frozen;
    let step = NormalizationStep {
        kind: StepKind::SeparableScale,
        dx: ns.frame.dx.clone(),
        du: ns.frame.du.clone(),
        jet_rule: JetRule::identity(),
        constant: None,
        reference: Some((frozen, reference)),
        note: format!("F = S*F~(u~); evaluated on {} = {reference}", frozen.name()),
    };
    ns.push(step);
    Ok((ns, curve))
}

/// Constant `F = m`: `t -> t/m` gives the linear wave system.
pub fn time_scale(m: f64) -> NormalizationStep {
    NormalizationStep {
        kind: StepKind::TimeScale,
        dx: Derivation::partial_x(),
        du: Derivation::partial_u(),
        jet_rule: JetRule::identity(),
        constant: Some(1.0 / m),
        reference: None,
        note: format!("t -> t/m with m = {m}"),
    }
}

/// Value of `e` if it is constant on the box.
pub(crate) fn constant_value(e: &Expr, domain: &Domain, oracle: &ZeroOracle) -> Result<Option<f64>> {
    match oracle.is_constant(e, &[Var::X, Var::U], domain)? {
        ConstVerdict::Constant { value, .. } => Ok(Some(value)),
        ConstVerdict::NonConstant { .. } => Ok(None),
    }
}
