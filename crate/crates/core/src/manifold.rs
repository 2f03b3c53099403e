//! Sampled classifying manifolds and the equivalence decision.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{AttachedInvariants, ClassificationReport, Subclass, SymmetryNote};
use crate::error::{Error, Result};
use crate::expr::{Expr, SampleBox, Tape, Var};
use crate::invariants::Guard;

/// Singular-locus threshold for guard expressions.
pub const GUARD_EPS: f64 = 1e-6;
/// Relative singular-value cutoff for the rank estimate.
pub const RANK_RTOL: f64 = 1e-8;
/// Order bound of the classifying manifolds in the complete criterion.
pub const ORDER_BOUND: usize = 4;

const MAX_ATTEMPTS_PER_SAMPLE: usize = 100;
const MIN_ACCEPTANCE: f64 = 0.01;
const CURVE_GRID: usize = 2001;
const PROJECTION_POINTS: usize = 64;
const PROJECTION_STARTS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MapKind {
    #[serde(rename = "K-map")]
    KMap,
    #[serde(rename = "L-map")]
    LMap,
    #[serde(rename = "M-curve")]
    MCurve,
}

impl MapKind {
    pub fn label(self) -> &'static str {
        match self {
            MapKind::KMap => "K-map",
            MapKind::LMap => "L-map",
            MapKind::MCurve => "M-curve",
        }
    }

    /// Largest admissible dimension of the image.
    pub fn dimension_bound(self) -> usize {
        match self {
            MapKind::KMap | MapKind::LMap => 4,
            MapKind::MCurve => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub point: [f64; 4],
    pub image: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub rho: usize,
    /// Singular values at the first sample whose rank equals `rho`.
    pub singular_values: Vec<f64>,
    /// `rank_counts[r]` samples had numerical rank `r`.
    pub rank_counts: Vec<usize>,
}

/// The invariant map, composed with the jet rule of the normalization.
#[derive(Debug)]
struct CloudMap {
    kind: MapKind,
    names: Vec<String>,
    guard_names: Vec<String>,
    jets: Option<Tape>,
    tape: Tape,
    curve_var: Option<Var>,
}

#[derive(Clone, Debug, PartialEq)]
enum Reject {
    Guard(usize),
    Eval,
}

type MapParts<'a> = (MapKind, Vec<(&'static str, Expr)>, &'a [Guard], Option<Var>);

impl CloudMap {
    fn new(report: &ClassificationReport) -> Result<CloudMap> {
        let (kind, map, guards, curve_var): MapParts<'_> = match &report.invariants {
            AttachedInvariants::CaseA(inv) if report.tag == Subclass::P1 => {
                (MapKind::KMap, inv.map(), &inv.guards, None)
            }
            AttachedInvariants::CaseB(inv) if report.tag == Subclass::P2 => {
                (MapKind::LMap, inv.map(), &inv.guards, None)
            }
            AttachedInvariants::FOnly(inv) if report.tag == Subclass::P3 => {
                let map = inv.map().ok_or_else(|| Error::Sampling("M1_u vanishes identically".into()))?;
                (MapKind::MCurve, map, &inv.guards, Some(inv.curve().var))
            }
            _ => {
                return Err(Error::Sampling(format!(
                    "no classifying cloud for {}: the classifying manifold is a point",
                    report.tag
                )))
            }
        };
        let params = &report.system.params;
        let mut exprs: Vec<Expr> = map.iter().map(|(_, e)| e.clone()).collect();
        exprs.extend(guards.iter().map(|g| g.expr.clone()));
        let tape = Tape::compile(&exprs, params)?;
        let rule = &report.jet_rule;
        let identity = rule.u_x == Expr::var(Var::Ux) && rule.v_x == Expr::var(Var::Vx);
        let jets = if identity || kind == MapKind::MCurve {
            None
        } else {
            Some(Tape::compile(&[rule.u_x.clone(), rule.v_x.clone()], params)?)
        };
        Ok(CloudMap {
            kind,
            names: map.iter().map(|(n, _)| n.to_string()).collect(),
            guard_names: guards.iter().map(|g| g.name.clone()).collect(),
            jets,
            tape,
            curve_var,
        })
    }

    fn dim(&self) -> usize {
        self.names.len()
    }

    fn raw(&self, z: &[f64; 4]) -> std::result::Result<Vec<f64>, Reject> {
        let w = match &self.jets {
            Some(j) => {
                let t = j.eval(z).map_err(|_| Reject::Eval)?;
                [z[0], z[1], t[0], t[1]]
            }
            None => *z,
        };
        let out = self.tape.eval(&w).map_err(|_| Reject::Eval)?;
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(Reject::Eval)
        }
    }

    /// Image with the singular locus removed.
    fn guarded(&self, z: &[f64; 4]) -> std::result::Result<Vec<f64>, Reject> {
        let mut out = self.raw(z)?;
        let k = self.dim();
        if let Some(i) = out[k..].iter().position(|g| g.abs() < GUARD_EPS) {
            return Err(Reject::Guard(i));
        }
        out.truncate(k);
        Ok(out)
    }

    fn image(&self, z: &[f64; 4]) -> Option<Vec<f64>> {
        let mut out = self.raw(z).ok()?;
        out.truncate(self.dim());
        Some(out)
    }

    fn jacobian(&self, z: &[f64; 4], free: &[usize]) -> Option<DMatrix<f64>> {
        let mut jac = DMatrix::zeros(self.dim(), free.len());
        for (c, &i) in free.iter().enumerate() {
            let h = 1e-5 * z[i].abs().max(1.0);
            let (mut zp, mut zm) = (*z, *z);
            zp[i] += h;
            zm[i] -= h;
            let (fp, fm) = (self.image(&zp)?, self.image(&zm)?);
            for r in 0..self.dim() {
                jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        Some(jac)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassifyingCloud {
    pub map: MapKind,
    pub names: Vec<String>,
    pub samples: Vec<Sample>,
    pub sample_box: SampleBox,
    pub seed: u64,
    pub attempts: usize,
    /// Rejected candidates per guard name (or "evaluation").
    pub rejections: BTreeMap<String, usize>,
    pub dimension: DimensionEstimate,
    pub order_bound: usize,
    #[serde(skip)]
    eval: Arc<CloudMap>,
}

impl ClassifyingCloud {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.samples.len() as f64 / self.attempts.max(1) as f64
    }

    /// Invariant values at an arbitrary point, without the guard check.
    pub fn evaluate(&self, point: &[f64; 4]) -> Option<Vec<f64>> {
        self.eval.image(point)
    }

    /// `dim Cont <= 6 - rho`; the lower bound 2 follows from `rho <= 4`.
    pub fn symmetry_note(&self) -> SymmetryNote {
        SymmetryNote::Finite { lower_bound: 2, upper_bound: Some(6 - self.dimension.rho.min(4)) }
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["x".to_string(), "u".into(), "u_x".into(), "v_x".into()];
        header.extend(self.names.iter().cloned());
        let io = |e: csv::Error| Error::Sampling(format!("csv export: {e}"));
        w.write_record(&header).map_err(io)?;
        for s in &self.samples {
            let row: Vec<String> = s.point.iter().chain(&s.image).map(|v| v.to_string()).collect();
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Sampling(format!("csv export: {e}")))?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Accepts `n` guarded samples from `sample_box`; deterministic in `seed`.
pub fn sample_cloud(
    report: &ClassificationReport,
    sample_box: &SampleBox,
    n: usize,
    seed: u64,
) -> Result<ClassifyingCloud> {
    if n < 50 {
        return Err(Error::Sampling(format!("at least 50 samples are required, got {n}")));
    }
    for v in Var::ALL {
        if sample_box.range(v).is_none() {
            return Err(Error::Sampling(format!("the sampling box has no range for {v}")));
        }
    }
    let eval = Arc::new(CloudMap::new(report)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = MAX_ATTEMPTS_PER_SAMPLE * n;
    let mut samples = Vec::with_capacity(n);
    let mut rejections = BTreeMap::new();
    let mut attempts = 0;
    while samples.len() < n && attempts < max_attempts {
        let batch: Vec<[f64; 4]> =
            (0..(2 * n).min(max_attempts - attempts)).map(|_| sample_box.sample(&mut rng)).collect();
        let results: Vec<_> = batch.par_iter().map(|z| eval.guarded(z)).collect();
        for (z, r) in batch.into_iter().zip(results) {
            if samples.len() == n {
                break;
            }
            attempts += 1;
            match r {
                Ok(image) => samples.push(Sample { point: z, image }),
                Err(reason) => {
                    let key = match reason {
                        Reject::Guard(i) => eval.guard_names[i].clone(),
                        Reject::Eval => "evaluation".to_string(),
                    };
                    *rejections.entry(key).or_insert(0) += 1;
                }
            }
        }
    }
    let rate = samples.len() as f64 / attempts.max(1) as f64;
    if samples.len() < n || rate < MIN_ACCEPTANCE {
        return Err(Error::Sampling(format!(
            "box inadmissible: accepted {} of {attempts} candidates (rejections: {rejections:?})",
            samples.len()
        )));
    }
    let mut cloud = ClassifyingCloud {
        map: eval.kind,
        names: eval.names.clone(),
        samples,
        sample_box: sample_box.clone(),
        seed,
        attempts,
        rejections,
        dimension: DimensionEstimate { rho: 0, singular_values: Vec::new(), rank_counts: Vec::new() },
        order_bound: ORDER_BOUND,
        eval,
    };
    cloud.dimension = estimate_dimension(&cloud)?;
    Ok(cloud)
}

/// Median numerical rank of the finite-difference Jacobian over the samples.
pub fn estimate_dimension(cloud: &ClassifyingCloud) -> Result<DimensionEstimate> {
    if cloud.len() < 20 {
        return Err(Error::Sampling(format!("dimension estimate needs 20 samples, got {}", cloud.len())));
    }
    let first = cloud.samples[0].point;
    if cloud.samples.iter().all(|s| s.point == first) {
        return Err(Error::Sampling("degenerate sampling: all points coincide".into()));
    }
    let all = [0, 1, 2, 3];
    let per_sample: Vec<Option<(usize, Vec<f64>)>> = cloud
        .samples
        .par_iter()
        .map(|s| {
            let jac = cloud.eval.jacobian(&s.point, &all)?;
            let sv: Vec<f64> = jac.singular_values().iter().copied().collect();
            let max = sv.iter().copied().fold(0.0, f64::max);
            let rank = if max > 0.0 { sv.iter().filter(|&&v| v > RANK_RTOL * max).count() } else { 0 };
            Some((rank, sv))
        })
        .collect();
    let ok: Vec<&(usize, Vec<f64>)> = per_sample.iter().flatten().collect();
    if ok.is_empty() {
        return Err(Error::Sampling("no sample admits a finite-difference Jacobian".into()));
    }
    let mut ranks: Vec<usize> = ok.iter().map(|(r, _)| *r).collect();
    ranks.sort_unstable();
    let rho = ranks[ranks.len() / 2];
    let mut rank_counts = vec![0; cloud.names.len().min(4) + 1];
    for r in ranks {
        rank_counts[r] += 1;
    }
    let mut singular_values = ok.iter().find(|(r, _)| *r == rho).map(|(_, s)| s.clone()).unwrap_or_default();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    Ok(DimensionEstimate { rho, singular_values, rank_counts })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Equivalent,
    Inequivalent,
    ConsistentUnknown,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evidence {
    pub tags: (Subclass, Subclass),
    pub method: String,
    pub max_deviation: Option<f64>,
    pub tolerance: f64,
    pub samples: (usize, usize),
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m1: Option<(f64, f64)>,
    /// Common `M1` interval and the smaller fraction of either cloud's samples inside it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m1_overlap: Option<(f64, f64, f64)>,
    /// Points compared on the common range, per direction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compared: Option<(usize, usize)>,
    /// Symmetric nearest-neighbour distance in scaled image coordinates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hausdorff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hausdorff_threshold: Option<f64>,
    /// Fraction of each cloud's probe points lying on the other manifold.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap_fraction: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dimensions: Option<(usize, usize)>,
    pub notes: Vec<String>,
}

impl Evidence {
    fn new(a: &ClassificationReport, b: &ClassificationReport, method: &str, tolerance: f64) -> Evidence {
        Evidence {
            tags: (a.tag, b.tag),
            method: method.into(),
            max_deviation: None,
            tolerance,
            samples: (0, 0),
            m1: None,
            m1_overlap: None,
            compared: None,
            hausdorff: None,
            hausdorff_threshold: None,
            overlap_fraction: None,
            dimensions: None,
            notes: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceVerdict {
    pub verdict: Verdict,
    pub evidence: Evidence,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EquivalenceConfig {
    pub n: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for EquivalenceConfig {
    fn default() -> EquivalenceConfig {
        EquivalenceConfig { n: 200, seed: 0, tol: 1e-6 }
    }
}

fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

fn grade(dev: f64, tol: f64) -> Verdict {
    if dev <= tol {
        Verdict::Equivalent
    } else if dev > 10.0 * tol {
        Verdict::Inequivalent
    } else {
        Verdict::ConsistentUnknown
    }
}

pub fn decide_equivalence(
    a: &ClassificationReport,
    b: &ClassificationReport,
    cfg: &EquivalenceConfig,
) -> Result<EquivalenceVerdict> {
    if a.tag != b.tag {
        let mut ev = Evidence::new(a, b, "subclass", cfg.tol);
        ev.notes.push("the subclasses are invariant, so different tags refute equivalence".into());
        return Ok(EquivalenceVerdict { verdict: Verdict::Inequivalent, evidence: ev });
    }
    match a.tag {
        Subclass::P5 => {
            let mut ev = Evidence::new(a, b, "linear wave", cfg.tol);
            ev.notes.push("both map to u_t = v_x, v_t = u_x".into());
            Ok(EquivalenceVerdict { verdict: Verdict::Equivalent, evidence: ev })
        }
        Subclass::P4 => {
            let (ma, mb) = match (a.m1, b.m1) {
                (Some(x), Some(y)) => (x, y),
                _ => return Err(Error::Sampling("P4 report without a constant M1".into())),
            };
            let dev = (ma - mb).abs();
            let tol = 1e-9 * (1.0 + ma.abs().max(mb.abs()));
            let mut ev = Evidence::new(a, b, "constant M1", tol);
            ev.m1 = Some((ma, mb));
            ev.max_deviation = Some(dev);
            let verdict = if dev <= tol { Verdict::Equivalent } else { Verdict::Inequivalent };
            Ok(EquivalenceVerdict { verdict, evidence: ev })
        }
        Subclass::P3 => {
            let ca = sample_cloud(a, &a.system.sample_box, cfg.n, cfg.seed)?;
            let cb = sample_cloud(b, &b.system.sample_box, cfg.n, cfg.seed)?;
            let mut v = curve_compare_p3(&ca, &cb, cfg.tol)?;
            v.evidence.tags = (a.tag, b.tag);
            Ok(v)
        }
        Subclass::P1 | Subclass::P2 => {
            let ca = sample_cloud(a, &a.system.sample_box, cfg.n, cfg.seed)?;
            let cb = sample_cloud(b, &b.system.sample_box, cfg.n, cfg.seed)?;
            let mut v = cloud_overlap(&ca, &cb, cfg.tol)?;
            v.evidence.tags = (a.tag, b.tag);
            Ok(v)
        }
    }
}

/// `M1` on a dense grid of the curve variable, plus evaluation of the whole map.
struct CurveView<'a> {
    cloud: &'a ClassifyingCloud,
    var: Var,
    base: [f64; 4],
    grid: Vec<(f64, f64)>,
}

impl<'a> CurveView<'a> {
    fn new(cloud: &'a ClassifyingCloud) -> Result<CurveView<'a>> {
        let var = cloud.eval.curve_var.ok_or_else(|| Error::Sampling("curve comparison needs an M-curve".into()))?;
        let (lo, hi) = cloud.sample_box.range(var).expect("checked when sampling");
        let base = cloud.samples[0].point;
        let mut view = CurveView { cloud, var, base, grid: Vec::new() };
        view.grid = (0..CURVE_GRID)
            .filter_map(|k| {
                let s = lo + (hi - lo) * k as f64 / (CURVE_GRID - 1) as f64;
                view.at(s).map(|img| (s, img[0]))
            })
            .collect();
        if view.grid.len() < 2 {
            return Err(Error::Sampling("M1 cannot be evaluated along the curve".into()));
        }
        Ok(view)
    }

    fn at(&self, s: f64) -> Option<Vec<f64>> {
        let mut z = self.base;
        z[self.var.index()] = s;
        self.cloud.eval.image(&z)
    }

    fn m1(&self, s: f64) -> Option<f64> {
        self.at(s).map(|v| v[0])
    }

    fn range(&self) -> (f64, f64) {
        let vals = self.grid.iter().map(|g| g.1).chain(self.cloud.samples.iter().map(|s| s.image[0]));
        vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    /// Parameter values where `M1 = m`.
    fn roots(&self, m: f64) -> Vec<f64> {
        let d: Vec<f64> = self.grid.iter().map(|g| g.1 - m).collect();
        let mut out = Vec::new();
        for k in 0..d.len() {
            if d[k] == 0.0 {
                out.push(self.grid[k].0);
                continue;
            }
            if k + 1 < d.len() && d[k] * d[k + 1] < 0.0 {
                if let Some(r) = self.bisect(self.grid[k].0, self.grid[k + 1].0, m) {
                    out.push(r);
                }
            }
            let interior = k > 0 && k + 1 < d.len();
            if interior
                && d[k - 1] * d[k] > 0.0
                && d[k] * d[k + 1] > 0.0
                && d[k].abs() <= d[k - 1].abs()
                && d[k].abs() <= d[k + 1].abs()
            {
                if let Some(r) = self.touch(self.grid[k - 1].0, self.grid[k + 1].0, m) {
                    out.push(r);
                }
            }
        }
        out
    }

    fn bisect(&self, mut lo: f64, mut hi: f64, m: f64) -> Option<f64> {
        let mut flo = self.m1(lo)? - m;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = self.m1(mid)? - m;
            if fm == 0.0 {
                return Some(mid);
            }
            if (fm < 0.0) == (flo < 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Tangential contact of `M1` with the level `m`, found by golden-section search.
    fn touch(&self, mut lo: f64, mut hi: f64, m: f64) -> Option<f64> {
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let f = |s: f64| self.m1(s).map(|v| (v - m).abs()).unwrap_or(f64::INFINITY);
        for _ in 0..100 {
            let (c, d) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
            if f(c) < f(d) {
                hi = d;
            } else {
                lo = c;
            }
        }
        let s = 0.5 * (lo + hi);
        (f(s) <= 1e-10 * (1.0 + m.abs())).then_some(s)
    }

    /// Smallest deviation of `(M2, D4M1)` from `image` over every branch with the same `M1`.
    fn deviation(&self, image: &[f64]) -> Option<f64> {
        self.roots(image[0])
            .into_iter()
            .filter_map(|s| {
                let other = self.at(s)?;
                Some(rel_dev(image[1], other[1]).max(rel_dev(image[2], other[2])))
            })
            .min_by(f64::total_cmp)
    }
}

/// Compares the curves `M1 -> (M2, D4M1)` of two P3 clouds on their common `M1` range.
pub fn curve_compare_p3(a: &ClassifyingCloud, b: &ClassifyingCloud, tol: f64) -> Result<EquivalenceVerdict> {
    let (va, vb) = (CurveView::new(a)?, CurveView::new(b)?);
    let (ra, rb) = (va.range(), vb.range());
    let (lo, hi) = (ra.0.max(rb.0), ra.1.min(rb.1));
    let mut ev = Evidence {
        tags: (Subclass::P3, Subclass::P3),
        method: "M-curve comparison".into(),
        max_deviation: None,
        tolerance: tol,
        samples: (a.len(), b.len()),
        m1: None,
        m1_overlap: None,
        compared: None,
        hausdorff: None,
        hausdorff_threshold: None,
        overlap_fraction: None,
        dimensions: Some((a.dimension.rho, b.dimension.rho)),
        notes: Vec::new(),
    };
    if lo > hi {
        ev.notes.push("disjoint classifying curves".into());
        return Ok(EquivalenceVerdict { verdict: Verdict::Inequivalent, evidence: ev });
    }

    let one_way = |from: &ClassifyingCloud, to: &CurveView| -> (usize, f64) {
        let devs: Vec<f64> = from
            .samples
            .par_iter()
            .filter(|s| s.image[0] >= lo && s.image[0] <= hi)
            .filter_map(|s| to.deviation(&s.image))
            .collect();
        (devs.len(), devs.into_iter().fold(0.0, f64::max))
    };
    let (na, da) = one_way(a, &vb);
    let (nb, db) = one_way(b, &va);
    ev.compared = Some((na, nb));
    let relative = (na as f64 / a.len() as f64).min(nb as f64 / b.len() as f64);
    ev.m1_overlap = Some((lo, hi, relative));
    if na + nb == 0 {
        ev.notes.push("no sample falls on the common M1 range".into());
        return Ok(EquivalenceVerdict { verdict: Verdict::ConsistentUnknown, evidence: ev });
    }
    let dev = da.max(db);
    ev.max_deviation = Some(dev);
    let mut verdict = grade(dev, tol);
    if relative < 0.1 && verdict != Verdict::Inequivalent {
        ev.notes.push("fewer than 10% of the samples of one cloud fall on the common M1 range".into());
        verdict = Verdict::ConsistentUnknown;
    }
    Ok(EquivalenceVerdict { verdict, evidence: ev })
}

/// Per-coordinate centring and scaling shared by both clouds.
struct Scaling {
    center: Vec<f64>,
    scale: Vec<f64>,
}

impl Scaling {
    fn fit(a: &ClassifyingCloud, b: &ClassifyingCloud) -> Scaling {
        let k = a.names.len();
        let mut center = Vec::with_capacity(k);
        let mut scale = Vec::with_capacity(k);
        for j in 0..k {
            let mut col: Vec<f64> = a.samples.iter().chain(&b.samples).map(|s| s.image[j]).collect();
            col.sort_by(f64::total_cmp);
            let q = |p: f64| col[((col.len() - 1) as f64 * p).round() as usize];
            center.push(q(0.5));
            let spread = q(0.9) - q(0.1);
            let size = col.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            scale.push(if spread > 1e-9 * (1.0 + size) && spread.is_finite() { spread } else { 1.0 });
        }
        Scaling { center, scale }
    }

    fn apply(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(self.center.iter().zip(&self.scale)).map(|(v, (c, s))| (v - c) / s).collect()
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn directed_nn(from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
    from.par_iter().map(|p| to.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min)).reduce(|| 0.0, f64::max)
}

/// Distance from `target` to the image of `cloud` over its box, by bounded Levenberg-Marquardt.
fn project(cloud: &ClassifyingCloud, scaling: &Scaling, target: &[f64], start: [f64; 4]) -> f64 {
    let free: Vec<usize> = (0..4).collect();
    let bounds: Vec<(f64, f64)> = Var::ALL.iter().map(|v| cloud.sample_box.range(*v).expect("checked")).collect();
    let resid = |z: &[f64; 4]| -> Option<DVector<f64>> {
        let y = scaling.apply(&cloud.eval.image(z)?);
        Some(DVector::from_iterator(y.len(), y.iter().zip(target).map(|(a, b)| a - b)))
    };
    let mut z = start;
    let Some(mut r) = resid(&z) else {
        return f64::INFINITY;
    };
    let mut lambda = 1e-3;
    for _ in 0..80 {
        let norm = r.norm();
        if norm < 1e-14 {
            break;
        }
        let Some(mut jac) = cloud.eval.jacobian(&z, &free) else {
            break;
        };
        for (r, s) in jac.row_iter_mut().zip(&scaling.scale) {
            let mut row = r;
            row /= *s;
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let mut improved = false;
        while lambda < 1e12 {
            let mut m = jtj.clone();
            for i in 0..4 {
                m[(i, i)] += lambda * (jtj[(i, i)] + 1e-12);
            }
            let Some(step) = m.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = z;
            for i in 0..4 {
                trial[i] = (z[i] + step[i]).clamp(bounds[i].0, bounds[i].1);
            }
            match resid(&trial) {
                Some(rt) if rt.norm() < norm => {
                    z = trial;
                    r = rt;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = true;
                    break;
                }
                _ => lambda *= 4.0,
            }
        }
        if !improved {
            break;
        }
    }
    r.norm()
}

fn probe_fraction(
    from: &ClassifyingCloud,
    to: &ClassifyingCloud,
    scaling: &Scaling,
    to_scaled: &[Vec<f64>],
    tol: f64,
) -> f64 {
    let probes: Vec<Vec<f64>> = from.samples.iter().take(PROJECTION_POINTS).map(|s| scaling.apply(&s.image)).collect();
    let hits = probes
        .par_iter()
        .filter(|y| {
            let mut near: Vec<(f64, usize)> = to_scaled.iter().enumerate().map(|(i, q)| (dist(y, q), i)).collect();
            near.sort_by(|a, b| a.0.total_cmp(&b.0));
            near.iter()
                .take(PROJECTION_STARTS)
                .any(|&(d0, i)| d0 <= tol || project(to, scaling, y, to.samples[i].point) <= tol)
        })
        .count();
    hits as f64 / probes.len() as f64
}

/// Overlap test on zeroth-order clouds: refutes or reports consistency, never proves.
pub fn cloud_overlap(a: &ClassifyingCloud, b: &ClassifyingCloud, tol: f64) -> Result<EquivalenceVerdict> {
    if a.map != b.map {
        return Err(Error::Sampling("clouds of different maps cannot be compared".into()));
    }
    let scaling = Scaling::fit(a, b);
    let sa: Vec<Vec<f64>> = a.samples.iter().map(|s| scaling.apply(&s.image)).collect();
    let sb: Vec<Vec<f64>> = b.samples.iter().map(|s| scaling.apply(&s.image)).collect();
    let hausdorff = directed_nn(&sa, &sb).max(directed_nn(&sb, &sa));
    let (mut lo, mut hi) = (vec![f64::INFINITY; a.names.len()], vec![f64::NEG_INFINITY; a.names.len()]);
    for p in sa.iter().chain(&sb) {
        for j in 0..p.len() {
            lo[j] = lo[j].min(p[j]);
            hi[j] = hi[j].max(p[j]);
        }
    }
    let diameter = dist(&lo, &hi);
    let on_tol = tol * (a.names.len() as f64).sqrt();
    let fa = probe_fraction(a, b, &scaling, &sb, on_tol);
    let fb = probe_fraction(b, a, &scaling, &sa, on_tol);
    let verdict = if fa == 0.0 && fb == 0.0 { Verdict::Inequivalent } else { Verdict::ConsistentUnknown };
    let mut ev = Evidence {
        tags: (Subclass::P1, Subclass::P1),
        method: format!("{} overlap", a.map.label()),
        max_deviation: None,
        tolerance: on_tol,
        samples: (a.len(), b.len()),
        m1: None,
        m1_overlap: None,
        compared: None,
        hausdorff: Some(hausdorff),
        hausdorff_threshold: Some(1e-3 * diameter),
        overlap_fraction: Some((fa, fb)),
        dimensions: Some((a.dimension.rho, b.dimension.rho)),
        notes: Vec::new(),
    };
    ev.notes.push(
        "only zeroth-order invariants are available; a match is consistent with equivalence but does not prove it"
            .into(),
    );
    if verdict == Verdict::Inequivalent {
        ev.notes.push("no probe point of either cloud lies on the other manifold within the sampled boxes".into());
    }
    Ok(EquivalenceVerdict { verdict, evidence: ev })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{classify, ClassifyConfig};
    use crate::expr::Binding;
    use crate::invariants::WaveSystem;

    fn report(a: &str, b: &str, sample_box: SampleBox) -> ClassificationReport {
        let sys = WaveSystem::parse(a, b, Binding::new(), sample_box).unwrap();
        classify(&sys, &ClassifyConfig::default()).unwrap()
    }

    fn p3(f: &str) -> ClassificationReport {
        report(f, f, SampleBox::default())
    }

    #[test]
    fn p3_cloud_is_a_curve() {
        let bx = SampleBox::default().with_range(Var::U, 0.1, 2.0);
        let r = report("1/(1+u^2)", "1/(1+u^2)", bx.clone());
        let c = sample_cloud(&r, &bx, 100, 0).unwrap();
        assert_eq!(c.len(), 100);
        assert_eq!(c.map, MapKind::MCurve);
        assert_eq!(c.dimension.rho, 1);
        assert!(c.samples.iter().all(|s| s.image.iter().all(|v| v.is_finite())));
    }

    #[test]
    fn p4_has_no_cloud() {
        let r = p3("exp(u)");
        assert!(sample_cloud(&r, &SampleBox::default(), 100, 0).is_err());
    }

    #[test]
    fn too_few_samples() {
        let r = p3("1/(1+u^2)");
        assert!(sample_cloud(&r, &SampleBox::default(), 10, 0).is_err());
    }

    #[test]
    fn k_map_cloud() {
        let r = report("exp(u - x)", "exp(u + x)", SampleBox::default());
        let c = sample_cloud(&r, &SampleBox::default(), 60, 3).unwrap();
        assert_eq!(c.names, ["P", "R", "K1", "K2", "K3"]);
        assert!(c.dimension.rho <= 4);
        let csv = c.to_csv();
        assert!(csv.starts_with("x,u,u_x,v_x,P,R,K1,K2,K3\n"));
        assert_eq!(csv.lines().count(), 61);
    }

    #[test]
    fn sampling_is_deterministic() {
        let r = p3("1/(1+u^2)");
        let c1 = sample_cloud(&r, &SampleBox::default(), 50, 9).unwrap();
        let c2 = sample_cloud(&r, &SampleBox::default(), 50, 9).unwrap();
        assert_eq!(c1.samples, c2.samples);
    }

    #[test]
    fn shifted_curve_is_equivalent() {
        let v = decide_equivalence(&p3("1/(1+u^2)"), &p3("1/(1+(u+0.3)^2)"), &EquivalenceConfig::default()).unwrap();
        assert_eq!(v.verdict, Verdict::Equivalent, "{:?}", v.evidence);
    }

    #[test]
    fn p4_values() {
        let cfg = EquivalenceConfig::default();
        assert_eq!(decide_equivalence(&p3("u^3"), &p3("u^(-3)"), &cfg).unwrap().verdict, Verdict::Equivalent);
        assert_eq!(decide_equivalence(&p3("exp(u)"), &p3("u^2"), &cfg).unwrap().verdict, Verdict::Inequivalent);
    }

    #[test]
    fn identical_p1_is_consistent() {
        let r = report("exp(u - x)", "exp(u + x)", SampleBox::default());
        let cfg = EquivalenceConfig { n: 60, ..Default::default() };
        let v = decide_equivalence(&r, &r, &cfg).unwrap();
        assert_eq!(v.verdict, Verdict::ConsistentUnknown);
        assert_eq!(v.evidence.hausdorff, Some(0.0));
    }
}
