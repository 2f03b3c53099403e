#![allow(dead_code)]

use wave_equiv::classify::{classify, ClassificationReport, ClassifyConfig, Subclass};
use wave_equiv::expr::{Binding, SampleBox};
use wave_equiv::invariants::WaveSystem;

pub struct Member {
    pub name: &'static str,
    pub a: &'static str,
    pub b: &'static str,
    pub tag: Subclass,
}

const fn m(name: &'static str, a: &'static str, b: &'static str, tag: Subclass) -> Member {
    Member { name, a, b, tag }
}

/// Systems with hand-derived subclasses, covering every route of the decision tree.
pub const CORPUS: &[Member] = &[
    m("exp-ux", "exp(u - x)", "exp(u + x)", Subclass::P1),
    m("exp-2u", "exp(2*u - x)", "exp(u + 2*x)", Subclass::P1),
    m("gauss-x", "x*exp(u^2)", "x*exp(u^2)/(1 + x^2)", Subclass::P1),
    m("poly", "u*x", "x^2 + u", Subclass::P1),
    m("exp-xu", "exp(x*u)", "exp(x*u)", Subclass::P2),
    m("exp-xu2", "exp(x*u^2)", "exp(x*u^2)", Subclass::P2),
    m("sum", "x + u", "x + u", Subclass::P2),
    m("swap-p2", "(1 + x)*exp(-x*u)", "(1 + x)*exp(x*u)", Subclass::P2),
    m("lorentz", "1/(1 + u^2)", "1/(1 + u^2)", Subclass::P3),
    m("lorentz-shift", "1/(1 + (u + 0.3)^2)", "1/(1 + (u + 0.3)^2)", Subclass::P3),
    m("quartic", "1/(1 + u^4)", "1/(1 + u^4)", Subclass::P3),
    m("swap-p3", "1/(1 + x^2)", "1 + x^2", Subclass::P3),
    m("exp", "exp(u)", "exp(u)", Subclass::P4),
    m("square", "u^2", "u^2", Subclass::P4),
    m("cube", "u^3", "u^3", Subclass::P4),
    m("fifth", "u^5", "u^5", Subclass::P4),
    m("inverse-cube", "u^(-3)", "u^(-3)", Subclass::P4),
    m("arctan-sinh", "exp(arctan(sinh(u)))", "exp(arctan(sinh(u)))", Subclass::P4),
    m("separable", "x*exp(u)", "x*exp(u)", Subclass::P4),
    m("p-const", "exp(2*u)/x", "x", Subclass::P4),
    m("linear", "1", "1", Subclass::P5),
    m("rescaled", "2", "3", Subclass::P5),
    m("x-only", "x", "x", Subclass::P5),
];

pub fn system(member: &Member) -> WaveSystem {
    WaveSystem::parse(member.a, member.b, Binding::new(), SampleBox::default()).unwrap()
}

pub fn report(member: &Member) -> ClassificationReport {
    classify(&system(member), &ClassifyConfig::default()).unwrap()
}

pub fn inline(a: &str, b: &str) -> ClassificationReport {
    let sys = WaveSystem::parse(a, b, Binding::new(), SampleBox::default()).unwrap();
    classify(&sys, &ClassifyConfig::default()).unwrap()
}

pub fn with_tag(tag: Subclass) -> impl Iterator<Item = &'static Member> {
    CORPUS.iter().filter(move |m| m.tag == tag)
}

/// Five-point first and second, six-point third derivative, all O(h^4).
pub fn fd_derivatives(f: impl Fn(f64) -> f64, u: f64) -> (f64, f64, f64) {
    fd_derivatives_step(f, u, 1e-2 * u.abs().max(0.1))
}

pub fn fd_derivatives_step(f: impl Fn(f64) -> f64, u: f64, h: f64) -> (f64, f64, f64) {
    let v = |k: f64| f(u + k * h);
    let d1 = (-v(2.0) + 8.0 * v(1.0) - 8.0 * v(-1.0) + v(-2.0)) / (12.0 * h);
    let d2 = (-v(2.0) + 16.0 * v(1.0) - 30.0 * v(0.0) + 16.0 * v(-1.0) - v(-2.0)) / (12.0 * h * h);
    let d3 = (-v(3.0) + 8.0 * v(2.0) - 13.0 * v(1.0) + 13.0 * v(-1.0) - 8.0 * v(-2.0) + v(-3.0)) / (8.0 * h * h * h);
    (d1, d2, d3)
}

/// `M1` from the values of `F` and its first three `u`-derivatives.
pub fn m1_from_jets(f: f64, fu: f64, fuu: f64, fuuu: f64) -> f64 {
    (4.0 * f * fu * fu * fuu + 4.0 * f * f * fuu * fuu - 4.0 * f * f * fu * fuuu - 3.0 * fu.powi(4)) / fu.powi(4)
}

/// `M1` of `F = u^m`.
pub fn m1_of_power(m: f64) -> f64 {
    1.0 - 4.0 / (m * m)
}

/// A coefficient, its constant `M1` and a closure for finite differences.
pub type PowerCase = (&'static str, f64, fn(f64) -> f64);
