mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{inline, report, with_tag, CORPUS};
use wave_equiv::classify::{ClassificationReport, Subclass, SymmetryNote};
use wave_equiv::expr::{evaluate, Binding, SampleBox, Var};
use wave_equiv::manifold::{decide_equivalence, estimate_dimension, sample_cloud, EquivalenceConfig, MapKind, Verdict};

fn cloud_members() -> impl Iterator<Item = &'static common::Member> {
    CORPUS.iter().filter(|m| matches!(m.tag, Subclass::P1 | Subclass::P2 | Subclass::P3))
}

#[test]
fn image_dimension_respects_the_bounds() {
    for member in cloud_members() {
        let r = report(member);
        let cloud = sample_cloud(&r, &r.system.sample_box, 60, 3).unwrap();
        let rho = cloud.dimension.rho;
        match member.tag {
            Subclass::P3 => {
                assert_eq!(cloud.map, MapKind::MCurve);
                assert_eq!(rho, 1, "{}", member.name);
            }
            _ => {
                assert!(rho <= 4, "{}: rho {rho}", member.name);
                assert!(rho >= 1, "{}: rho {rho}", member.name);
                match cloud.symmetry_note() {
                    SymmetryNote::Finite { lower_bound, upper_bound } => {
                        assert_eq!(lower_bound, 2);
                        assert!(upper_bound.unwrap() >= 2, "{}", member.name);
                    }
                    SymmetryNote::Infinite => panic!("{}: infinite", member.name),
                }
            }
        }
        assert!(rho <= cloud.map.dimension_bound());
        assert_eq!(estimate_dimension(&cloud).unwrap(), cloud.dimension);
    }
}

#[test]
fn clouds_are_reproducible_and_finite() {
    for member in cloud_members() {
        let r = report(member);
        let a = sample_cloud(&r, &r.system.sample_box, 50, 7).unwrap();
        let b = sample_cloud(&r, &r.system.sample_box, 50, 7).unwrap();
        assert_eq!(a.len(), 50);
        assert_eq!(a.to_csv(), b.to_csv(), "{}", member.name);
        assert!(a.acceptance_rate() > 0.01);
        for s in &a.samples {
            assert!(s.image.iter().all(|v| v.is_finite()));
            let again = a.evaluate(&s.point).unwrap();
            assert_eq!(again, s.image);
        }
        let header = a.to_csv().lines().next().unwrap().to_string();
        assert!(header.starts_with("x,u,u_x,v_x,"), "{header}");
        assert_eq!(header.split(',').count(), 4 + a.names.len());
    }
}

#[test]
fn clouds_need_a_nontrivial_manifold_and_enough_points() {
    for tag in [Subclass::P4, Subclass::P5] {
        for member in with_tag(tag) {
            let r = report(member);
            assert!(sample_cloud(&r, &r.system.sample_box, 100, 0).is_err(), "{}", member.name);
        }
    }
    let r = inline("1/(1 + u^2)", "1/(1 + u^2)");
    assert!(sample_cloud(&r, &r.system.sample_box, 49, 0).is_err());
    let narrow = r.system.sample_box.clone().with_range(Var::U, 0.1, 2.0);
    assert_eq!(sample_cloud(&r, &narrow, 100, 0).unwrap().len(), 100);
}

#[test]
fn sampled_m1_matches_the_reported_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for member in with_tag(Subclass::P4) {
        let r = report(member);
        let m1 = r.m1.unwrap();
        let expr = &r.f_only().unwrap().m1;
        for _ in 0..100 {
            let b = r
                .system
                .params
                .clone()
                .with_var(Var::X, rng.gen_range(0.2..2.0))
                .with_var(Var::U, rng.gen_range(0.2..2.0));
            let v = evaluate(expr, &b).unwrap();
            assert!((v - m1).abs() <= 1e-9 * (1.0 + m1.abs()), "{}: {v} vs {m1}", member.name);
        }
    }
}

fn decide(a: &ClassificationReport, b: &ClassificationReport) -> Verdict {
    decide_equivalence(a, b, &EquivalenceConfig::default()).unwrap().verdict
}

#[test]
fn verdicts_are_symmetric_and_respect_the_partition() {
    let reports: Vec<_> = CORPUS.iter().map(report).collect();
    for i in 0..reports.len() {
        for j in i..reports.len() {
            let (a, b) = (&reports[i], &reports[j]);
            let (ab, ba) = (decide(a, b), decide(b, a));
            let names = (CORPUS[i].name, CORPUS[j].name);
            assert_eq!(ab, ba, "{names:?}");
            if a.tag != b.tag {
                assert_eq!(ab, Verdict::Inequivalent, "{names:?}");
            }
            if i == j {
                assert_ne!(ab, Verdict::Inequivalent, "{names:?}");
            }
        }
    }
}

#[test]
fn worked_equivalence_decisions() {
    let cube = inline("u^3", "u^3");
    let inverse = inline("u^(-3)", "u^(-3)");
    assert_eq!(decide(&cube, &inverse), Verdict::Equivalent);
    assert_eq!(decide(&inline("exp(u)", "exp(u)"), &inline("u^2", "u^2")), Verdict::Inequivalent);
    let lorentz = inline("1/(1 + u^2)", "1/(1 + u^2)");
    assert_eq!(decide(&lorentz, &lorentz), Verdict::Equivalent);
    assert_eq!(decide(&lorentz, &inline("1/(1 + (u + 0.3)^2)", "1/(1 + (u + 0.3)^2)")), Verdict::Equivalent);
    assert_eq!(decide(&lorentz, &inline("1/(1 + u^4)", "1/(1 + u^4)")), Verdict::Inequivalent);
    assert_eq!(decide(&inline("1", "1"), &inline("2", "3")), Verdict::Equivalent);

    let p1 = inline("exp(u - x)", "exp(u + x)");
    let v = decide_equivalence(&p1, &p1, &EquivalenceConfig::default()).unwrap();
    assert_eq!(v.verdict, Verdict::ConsistentUnknown);
    assert_eq!(v.evidence.hausdorff, Some(0.0));
}

#[test]
fn contact_maps_do_not_change_the_verdict() {
    // u -> u + c and F -> c F applied to a = b = F
    let cases = [
        ("1/(1 + u^2)", "1/(1 + (u + 0.15)^2)", "2.5/(1 + u^2)"),
        ("1/(1 + u^4)", "1/(1 + (u - 0.1)^4)", "0.4/(1 + u^4)"),
        ("exp(u)", "exp(u + 0.7)", "3*exp(u)"),
        ("u^3", "(u + 0.2)^3", "0.5*u^3"),
        ("u^(-3)", "(u - 0.1)^(-3)", "7*u^(-3)"),
        ("exp(arctan(sinh(u)))", "exp(arctan(sinh(u + 0.3)))", "2*exp(arctan(sinh(u)))"),
    ];
    for (base, shifted, scaled) in cases {
        let r = inline(base, base);
        let own = decide(&r, &r);
        assert_eq!(own, Verdict::Equivalent, "{base}");
        for other in [shifted, scaled] {
            let o = inline(other, other);
            assert_eq!(o.tag, r.tag, "{other}");
            assert_eq!(decide(&r, &o), own, "{base} vs {other}");
        }
    }
}

#[test]
fn p3_comparison_reports_its_evidence() {
    let a = inline("1/(1 + u^2)", "1/(1 + u^2)");
    let b = inline("1/(1 + (u + 0.3)^2)", "1/(1 + (u + 0.3)^2)");
    let v = decide_equivalence(&a, &b, &EquivalenceConfig::default()).unwrap();
    let ev = &v.evidence;
    assert!(ev.max_deviation.unwrap() <= ev.tolerance);
    let (lo, hi, coverage) = ev.m1_overlap.unwrap();
    assert!(lo < hi && coverage >= 0.1);
    assert_eq!(ev.samples, (200, 200));

    // disjoint M1 ranges
    let narrow_a = SampleBox::default().with_range(Var::U, 0.2, 0.4);
    let narrow_b = SampleBox::default().with_range(Var::U, 1.5, 2.0);
    let sa = wave_equiv::invariants::WaveSystem::parse("1/(1 + u^2)", "1/(1 + u^2)", Binding::new(), narrow_a).unwrap();
    let sb = wave_equiv::invariants::WaveSystem::parse("1/(1 + u^2)", "1/(1 + u^2)", Binding::new(), narrow_b).unwrap();
    let cfg = wave_equiv::classify::ClassifyConfig::default();
    let (ra, rb) =
        (wave_equiv::classify::classify(&sa, &cfg).unwrap(), wave_equiv::classify::classify(&sb, &cfg).unwrap());
    let v = decide_equivalence(&ra, &rb, &EquivalenceConfig::default()).unwrap();
    assert_eq!(v.verdict, Verdict::Inequivalent);
    assert!(v.evidence.notes.iter().any(|n| n.contains("disjoint classifying curves")), "{:?}", v.evidence);
}
