//! The five-way decision tree.
//!
//! Order of the tests:
//!
//! 1. `F_u == 0`, `G_x == 0` and `G_u == 0`: P5.
//! 2. `G_x == 0`: straighten `u`, continue at the case-B route.
//! 3. `F_u == 0`: straighten `x` and swap, continue at the case-B route.
//! 4. Otherwise `P = G_x F^2 / F_u`. Constant: potential change, case-B
//!    route. Not constant: P1.
//!
//! Case-B route: `(ln F)_xu != 0` gives P2. Otherwise restrict to a curve;
//! `F_u == 0` there gives P5, constant `M1` gives P4, anything else P3.

use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::error::Result;
use crate::expr::{differentiate, Binding, ConstVerdict, Domain, Expr, Var, ZeroOracle, ZeroVerdict};
use crate::frame::CurveFrame;
use crate::invariants::{
    build_p, case_a_formulas, case_b_formulas, f_only_formulas, tidy, CaseAInvariants, CaseBInvariants,
    FOnlyInvariants, WaveSystem,
};
use crate::normalize::{
    constant_value, reduce_case_b, reduce_case_c, reduce_p_const, reduce_separable, time_scale, JetRule,
    NormalizationStep, NormalizedSystem,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Subclass {
    P1,
    P2,
    P3,
    P4,
    P5,
}

impl Subclass {
    pub const ALL: [Subclass; 5] = [Subclass::P1, Subclass::P2, Subclass::P3, Subclass::P4, Subclass::P5];

    pub fn linearizable(self) -> bool {
        matches!(self, Subclass::P3 | Subclass::P4 | Subclass::P5)
    }
}

impl fmt::Display for Subclass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GateOutcome {
    Zero,
    NonZero,
    Constant,
    NonConstant,
}

impl GateOutcome {
    fn word(self) -> &'static str {
        match self {
            GateOutcome::Zero => "holds (identically zero)",
            GateOutcome::NonZero => "fails (nonzero)",
            GateOutcome::Constant => "holds (constant)",
            GateOutcome::NonConstant => "fails (not constant)",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateRecord {
    pub predicate: String,
    pub outcome: GateOutcome,
    pub trials: usize,
    /// The constant for `Constant`, the witness value for `NonZero`, the
    /// derivative at the witness for `NonConstant`.
    pub value: Option<f64>,
    pub witness: Option<Binding>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind")]
pub enum AttachedInvariants {
    CaseA(CaseAInvariants),
    CaseB(CaseBInvariants),
    FOnly(FOnlyInvariants),
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SymmetryNote {
    /// `dim Cont = 6 - dim C(4) >= 2`. `upper_bound` is `6 - rho` once a
    /// cloud has been sampled.
    Finite {
        lower_bound: usize,
        upper_bound: Option<usize>,
    },
    Infinite,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassificationReport {
    pub tag: Subclass,
    pub system: WaveSystem,
    pub gates: Vec<GateRecord>,
    pub trail: Vec<NormalizationStep>,
    /// Composite jet rule of the trail; the invariants read the new jets.
    pub jet_rule: JetRule,
    pub invariants: AttachedInvariants,
    #[serde(rename = "M1")]
    pub m1: Option<f64>,
    pub symmetry: SymmetryNote,
    pub linearizable: bool,
    pub notes: Vec<String>,
}

impl ClassificationReport {
    pub fn gate(&self, predicate: &str) -> Option<&GateRecord> {
        self.gates.iter().find(|g| g.predicate == predicate)
    }

    /// `(predicate, outcome)` for every recorded gate.
    pub fn gate_outcomes(&self) -> Vec<(String, GateOutcome)> {
        self.gates.iter().map(|g| (g.predicate.clone(), g.outcome)).collect()
    }

    pub fn f_only(&self) -> Option<&FOnlyInvariants> {
        match &self.invariants {
            AttachedInvariants::FOnly(inv) => Some(inv),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ClassifyConfig {
    pub oracle: ZeroOracle,
    /// Value of the frozen coordinate in the separable case; box center if unset.
    pub reference: Option<f64>,
}

impl ClassifyConfig {
    pub fn with_seed(self, seed: u64) -> ClassifyConfig {
        ClassifyConfig { oracle: self.oracle.with_seed(seed), ..self }
    }
}

pub mod gates {
    pub const F_U_ZERO: &str = "F_u == 0";
    pub const G_X_ZERO: &str = "G_x == 0";
    pub const G_U_ZERO: &str = "G_u == 0";
    pub const P_CONST: &str = "P constant";
    pub const LOG_MIXED_ZERO: &str = "(ln F)_xu == 0";
    pub const CURVE_F_U_ZERO: &str = "F_u == 0 after normalization";
    pub const M1_CONST: &str = "M1 constant";
}

struct Run<'a> {
    sys: &'a WaveSystem,
    cfg: &'a ClassifyConfig,
    domain: Domain,
    gates: Vec<GateRecord>,
}

impl Run<'_> {
    fn zero(&mut self, predicate: &str, e: &Expr) -> Result<bool> {
        let v = self.cfg.oracle.is_zero(e, &self.domain)?;
        let rec = match v {
            ZeroVerdict::IdenticallyZero { trials, .. } => GateRecord {
                predicate: predicate.into(),
                outcome: GateOutcome::Zero,
                trials,
                value: None,
                witness: None,
            },
            ZeroVerdict::NonZero { witness, value, .. } => GateRecord {
                predicate: predicate.into(),
                outcome: GateOutcome::NonZero,
                trials: self.cfg.oracle.trials,
                value: Some(value),
                witness: Some(witness),
            },
        };
        let zero = rec.outcome == GateOutcome::Zero;
        self.gates.push(rec);
        Ok(zero)
    }

    fn constant(&mut self, predicate: &str, e: &Expr, vars: &[Var]) -> Result<Option<f64>> {
        let v = self.cfg.oracle.is_constant(e, vars, &self.domain)?;
        let (rec, out) = match v {
            ConstVerdict::Constant { value, trials } => (
                GateRecord {
                    predicate: predicate.into(),
                    outcome: GateOutcome::Constant,
                    trials,
                    value: Some(value),
                    witness: None,
                },
                Some(value),
            ),
            ConstVerdict::NonConstant { witness, derivative, .. } => (
                GateRecord {
                    predicate: predicate.into(),
                    outcome: GateOutcome::NonConstant,
                    trials: self.cfg.oracle.trials,
                    value: Some(derivative),
                    witness: Some(witness),
                },
                None,
            ),
        };
        self.gates.push(rec);
        Ok(out)
    }

    fn report(
        self,
        tag: Subclass,
        trail: Vec<NormalizationStep>,
        invariants: AttachedInvariants,
    ) -> ClassificationReport {
        let symmetry = if tag.linearizable() {
            SymmetryNote::Infinite
        } else {
            SymmetryNote::Finite { lower_bound: 2, upper_bound: None }
        };
        let mut notes = Vec::new();
        match tag {
            Subclass::P1 => notes.push("K4..K20 are not available; equivalence can only be refuted".to_string()),
            Subclass::P2 => {
                notes.push("L5..L8 are not available; equivalence can only be refuted".to_string());
                notes.push("L1_x, L2_x are partial x-derivatives with u, u_x, v_x held fixed".to_string());
            }
            _ => {}
        }
        ClassificationReport {
            tag,
            system: self.sys.clone(),
            gates: self.gates,
            trail,
            jet_rule: JetRule::identity(),
            invariants,
            m1: None,
            symmetry,
            linearizable: tag.linearizable(),
            notes,
        }
    }
}

/// Assigns exactly one subclass; every gate verdict is kept in the report.
pub fn classify(sys: &WaveSystem, cfg: &ClassifyConfig) -> Result<ClassificationReport> {
    let assume = sys.assumptions();
    let mut run = Run { sys, cfg, domain: sys.domain(), gates: Vec::new() };
    let (f, g) = (&sys.f, &sys.g);
    let fu = tidy(&differentiate(f, Var::U), &assume);
    let gx = tidy(&differentiate(g, Var::X), &assume);
    let fu_zero = run.zero(gates::F_U_ZERO, &fu)?;
    let gx_zero = run.zero(gates::G_X_ZERO, &gx)?;

    if fu_zero && gx_zero {
        let gu = tidy(&differentiate(g, Var::U), &assume);
        if run.zero(gates::G_U_ZERO, &gu)? {
            let mut trail = Vec::new();
            match constant_value(f, &run.domain, &cfg.oracle)? {
                Some(m) => trail.push(time_scale(m)),
                None => {
                    let ns = reduce_case_c(f, g, &assume, &run.domain, &cfg.oracle)?;
                    trail.extend(ns.steps);
                }
            }
            return Ok(run.report(Subclass::P5, trail, AttachedInvariants::None));
        }
    }

    let ns = if gx_zero {
        reduce_case_b(f, g, &assume, &run.domain, &cfg.oracle)?
    } else if fu_zero {
        reduce_case_c(f, g, &assume, &run.domain, &cfg.oracle)?
    } else {
        let p = build_p(f, g, &assume)?;
        match run.constant(gates::P_CONST, &p, &[Var::X, Var::U])? {
            Some(m) => reduce_p_const(f, g, m, &assume, &run.domain, &cfg.oracle)?,
            None => {
                let inv = case_a_formulas(f, g, &assume);
                return Ok(run.report(Subclass::P1, Vec::new(), AttachedInvariants::CaseA(inv)));
            }
        }
    };
    case_b_route(run, ns)
}

fn case_b_route(mut run: Run<'_>, ns: NormalizedSystem) -> Result<ClassificationReport> {
    if !run.zero(gates::LOG_MIXED_ZERO, &ns.frame.log_mixed_gate())? {
        let inv = case_b_formulas(&ns.frame);
        let mut report = run.report(Subclass::P2, ns.steps, AttachedInvariants::CaseB(inv));
        report.jet_rule = ns.jet_rule;
        return Ok(report);
    }
    let frozen = ns.frame.frozen;
    let reference = run.cfg.reference.unwrap_or_else(|| run.domain.sample_box.center()[frozen.index()]);
    let (ns, curve) = reduce_separable(ns, reference, &run.domain, &run.cfg.oracle)?;
    let jet_rule = ns.jet_rule;
    let mut trail = ns.steps;
    let fu = curve.d(&curve.f);
    if run.zero(gates::CURVE_F_U_ZERO, &fu)? {
        if let Some(m) = curve_value(&curve, &run.domain) {
            trail.push(time_scale(m));
        }
        return Ok(run.report(Subclass::P5, trail, AttachedInvariants::None));
    }
    let inv = f_only_formulas(&curve);
    let m1 = run.constant(gates::M1_CONST, &inv.m1, &[curve.var])?;
    let tag = if m1.is_some() { Subclass::P4 } else { Subclass::P3 };
    let mut report = run.report(tag, trail, AttachedInvariants::FOnly(inv));
    report.jet_rule = jet_rule;
    report.m1 = m1;
    Ok(report)
}

fn curve_value(curve: &CurveFrame, domain: &Domain) -> Option<f64> {
    let center = domain.sample_box.center();
    let b = domain.params.clone().with_var(curve.var, center[curve.var.index()]);
    crate::expr::evaluate(&curve.f, &b).ok()
}

/// One sentence stating what decides equivalence within the subclass.
pub fn criterion(tag: Subclass) -> &'static str {
    match tag {
        Subclass::P1 => {
            "Two P1 systems are equivalent iff their fourth-order classifying manifolds built from K1..K20 \
             locally overlap; only P, R, K1..K3 are available, so a match is reported as consistent, never as proof."
        }
        Subclass::P2 => {
            "Two P2 systems are equivalent iff their fourth-order classifying manifolds built from L1..L8 \
             locally overlap; only L1..L4 are available, so a match is reported as consistent, never as proof."
        }
        Subclass::P3 => {
            "Two P3 systems are equivalent iff M2 = H1(M1) and D4(M1) = H2(M1) with the same functions H1, H2."
        }
        Subclass::P4 => "Two P4 systems are equivalent iff they have the same constant value of M1.",
        Subclass::P5 => "Every P5 system is equivalent to u_t = v_x, v_t = u_x after t -> t/m.",
    }
}

fn symmetry_line(note: &SymmetryNote) -> String {
    match note {
        SymmetryNote::Finite { lower_bound, upper_bound } => {
            let mut s = format!("finite, dim Cont = 6 - dim C(4) >= {lower_bound}");
            if let Some(u) = upper_bound {
                let _ = write!(s, ", <= {u}");
            }
            s
        }
        SymmetryNote::Infinite => "infinite-dimensional pseudo-group".to_string(),
    }
}

/// Deterministic text rendering.
pub fn explain_text(report: &ClassificationReport) -> String {
    let mut s = String::new();
    let sys = &report.system;
    let _ = writeln!(s, "subclass: {}", report.tag);
    let _ = writeln!(s, "system: u_t = ({}) v_x, v_t = ({}) u_x", sys.a, sys.b);
    let _ = writeln!(s, "F = {}", sys.f);
    let _ = writeln!(s, "G = {}", sys.g);
    let params: Vec<String> = sys.params.params().map(|(n, v)| format!("{n} = {v}")).collect();
    if !params.is_empty() {
        let _ = writeln!(s, "parameters: {}", params.join(", "));
    }
    let _ = writeln!(s, "gates:");
    for g in &report.gates {
        let _ = write!(s, "  {}: {} [{} trials]", g.predicate, g.outcome.word(), g.trials);
        if let Some(v) = g.value {
            let _ = write!(s, " value {v}");
        }
        s.push('\n');
    }
    if !report.trail.is_empty() {
        let _ = writeln!(s, "normalization:");
        for step in &report.trail {
            let _ = writeln!(s, "  - {}: {}", step.kind.label(), step.note);
            let _ = writeln!(s, "    d/dx~ = {}; d/du~ = {}", step.dx, step.du);
            let _ = writeln!(s, "    u_x~ = {}; v_x~ = {}", step.jet_rule.u_x, step.jet_rule.v_x);
        }
    }
    if let Some(m1) = report.m1 {
        let _ = writeln!(s, "M1 = {m1}");
    }
    let _ = writeln!(s, "symmetry: {}", symmetry_line(&report.symmetry));
    let _ = writeln!(s, "linearizable: {}", if report.linearizable { "yes" } else { "no" });
    let _ = writeln!(s, "criterion: {}", criterion(report.tag));
    for n in &report.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

/// JSON rendering; same content as [`explain_text`] plus the invariant expressions.
pub fn explain_json(report: &ClassificationReport) -> serde_json::Value {
    let mut v = serde_json::to_value(report).expect("reports serialize");
    v["criterion"] = serde_json::Value::String(criterion(report.tag).to_string());
    v
}
