//! The base-plane loop Γ: a small circle `C_ρ` around the branch value,
//! with one detour per projected double point `p_i`, reached through a
//! thin straight tube.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::double_points::{DoublePoint, SolverConfig};
use crate::locus::{
    find_branch_crossings, path_locus_intersections, sample_locus, LocusError, LocusTolerances,
    TripleCoincidence,
};
use crate::surface::{root_of_unity, BranchedDiskModel, PerturbationParams, C64};
use crate::trace::lift_fiber;
use crate::Sign;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    /// ρ used when there are no double points, as a fraction of `r0ᴺ`.
    pub default_rho: f64,
    pub max_detour_radius: f64,
    /// Junction-angle perturbation step (radians) and retry count.
    pub angle_step: f64,
    pub max_retries: usize,
    /// Step for the point where a tube meets its detour circle.
    pub attach_step: f64,
    pub max_attach_retries: usize,
    pub rho_shrink: f64,
    pub max_rho_shrinks: usize,
    pub radius_shrink: f64,
    pub max_radius_shrinks: usize,
    /// Samples per segment when searching for locus crossings.
    pub hit_samples: usize,
    /// Grid resolution for the locus sampling used to find singular points.
    pub locus_resolution: usize,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            default_rho: 0.3,
            max_detour_radius: 0.05,
            angle_step: 0.02,
            max_retries: 25,
            attach_step: 0.15,
            max_attach_retries: 10,
            rho_shrink: 0.7,
            max_rho_shrinks: 12,
            radius_shrink: 0.7,
            max_radius_shrinks: 24,
            hit_samples: 1024,
            locus_resolution: 96,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), String> {
        let frac = |x: f64| x > 0.0 && x < 1.0;
        if !(self.default_rho > 0.0 && self.default_rho < 0.5) {
            return Err("loop.default_rho must lie in (0, 0.5)".into());
        }
        if !(self.max_detour_radius > 0.0) || !(self.angle_step > 0.0) || !(self.attach_step > 0.0) {
            return Err("loop radii and angle steps must be positive".into());
        }
        if !frac(self.rho_shrink) || !frac(self.radius_shrink) {
            return Err("loop shrink factors must lie in (0, 1)".into());
        }
        if self.hit_samples < 16 || self.locus_resolution < 32 {
            return Err("loop.hit_samples must be ≥ 16 and loop.locus_resolution ≥ 32".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoopError {
    #[error("could not construct a valid loop: {0}")]
    ConstructionFailure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SegmentGeometry {
    /// `center + radius·exp(i(start + s·sweep))`, `s ∈ [0, 1]`.
    Arc {
        center: C64,
        radius: f64,
        start: f64,
        sweep: f64,
    },
    Line { from: C64, to: C64 },
}

impl SegmentGeometry {
    pub fn point(&self, s: f64) -> C64 {
        match *self {
            SegmentGeometry::Arc {
                center,
                radius,
                start,
                sweep,
            } => center + C64::from_polar(radius, start + s * sweep),
            SegmentGeometry::Line { from, to } => from + (to - from) * s,
        }
    }

    /// Derivative with respect to the segment parameter `s`.
    pub fn tangent(&self, s: f64) -> C64 {
        match *self {
            SegmentGeometry::Arc {
                radius,
                start,
                sweep,
                ..
            } => C64::new(0.0, sweep) * C64::from_polar(radius, start + s * sweep),
            SegmentGeometry::Line { from, to } => to - from,
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            SegmentGeometry::Arc { radius, sweep, .. } => radius * sweep.abs(),
            SegmentGeometry::Line { from, to } => (to - from).norm(),
        }
    }

    pub fn start(&self) -> C64 {
        self.point(0.0)
    }

    pub fn end(&self) -> C64 {
        self.point(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentKind {
    BaseArc,
    /// A straight side of a tube, leaving `C_ρ` when `outbound`.
    TubeSide { outbound: bool },
    DetourArc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopSegment {
    pub kind: SegmentKind,
    pub geometry: SegmentGeometry,
    pub detour: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detour {
    pub center: C64,
    pub radius: f64,
    pub tube_half_width: f64,
    /// Angle on `C_ρ` of the tube axis.
    pub junction_angle: f64,
    /// Angle on the detour circle where the tube axis arrives.
    pub attach_angle: f64,
    /// Index of the double point in the input list.
    pub double_point: usize,
    pub sign: Sign,
}

impl Detour {
    fn axis(&self, rho: f64) -> (C64, C64) {
        (
            C64::from_polar(rho, self.junction_angle),
            self.center + C64::from_polar(self.radius, self.attach_angle),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopGamma {
    pub segments: Vec<LoopSegment>,
    pub rho: f64,
    pub base_point: C64,
    /// Sorted by decreasing `arg(p_i)` in `[0, 2π)`.
    pub detours: Vec<Detour>,
    /// Singular points of the crossing locus and crossings of its branches.
    pub singular_points: Vec<C64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransversalHit {
    pub segment: usize,
    /// Segment parameter in `[0, 1]`.
    pub theta: f64,
    pub k: usize,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCheck {
    pub origin_inside: bool,
    pub double_points_inside: bool,
    pub triples_outside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeCheck {
    pub detour: usize,
    /// The detour circle meets the locus in exactly two transverse points.
    pub two_circle_hits: bool,
    /// Neither of them lies in the tube mouth.
    pub mouth_clear: bool,
    /// The junction arc on `C_ρ` misses the locus.
    pub junction_clear: bool,
    /// No other double point or singular point lies in the tube.
    pub tube_clear: bool,
}

impl TubeCheck {
    pub fn passed(&self) -> bool {
        self.two_circle_hits && self.mouth_clear && self.junction_clear && self.tube_clear
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopValidationReport {
    pub transversal_hits: Vec<TransversalHit>,
    pub all_transverse: bool,
    pub region_check: RegionCheck,
    pub tube_checks: Vec<TubeCheck>,
    pub failures: Vec<String>,
}

impl LoopValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn wrap(a: f64) -> f64 {
    a.rem_euclid(TAU)
}

/// Counterclockwise angle from `a` to `b` in `[0, 2π)`.
fn ccw(a: f64, b: f64) -> f64 {
    wrap(b - a)
}

/// Whether angle `x` lies in the ccw interval `[a, a + width]`, widened by `margin`.
fn in_arc(x: f64, a: f64, width: f64, margin: f64) -> bool {
    ccw(a - margin, x) <= width + 2.0 * margin
}

fn point_segment_distance(q: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (q - a).norm();
    }
    let t = (((q - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (q - (a + d * t)).norm()
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segments_distance(a: C64, b: C64, c: C64, d: C64) -> f64 {
    let o1 = cross(b - a, c - a);
    let o2 = cross(b - a, d - a);
    let o3 = cross(d - c, a - c);
    let o4 = cross(d - c, b - c);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Roots `t` of `|o + t·e − center| = radius` for unit `e`, ascending.
fn line_circle(o: C64, e: C64, center: C64, radius: f64) -> Option<(f64, f64)> {
    let q = o - center;
    let b = (q.conj() * e).re;
    let c = q.norm_sqr() - radius * radius;
    let disc = b * b - c;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some((-b - s, -b + s))
}

/// Crossings of the locus along a path, over every unordered sheet pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairHit {
    pub s: f64,
    pub k: usize,
    pub slope: f64,
}

pub fn path_crossings(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    path: &dyn Fn(f64) -> C64,
    samples: usize,
    tol: &LocusTolerances,
) -> Result<Vec<PairHit>, LocusError> {
    let n = model.branch_order();
    let w0 = lift_fiber(path(0.0), n)[0];
    let mut hits = Vec::new();
    for j in 0..n {
        for k in 1..n {
            // each unordered pair once
            if (j + k) % n <= j {
                continue;
            }
            let lift = w0 * root_of_unity(n, j);
            for h in path_locus_intersections(model, params, path, 0.0, 1.0, lift, k, samples, tol)? {
                hits.push(PairHit {
                    s: h.theta,
                    k,
                    slope: h.slope,
                });
            }
        }
    }
    hits.sort_by(|a, b| a.s.total_cmp(&b.s));
    Ok(hits)
}

/// Default ρ before any shrinking.
pub fn default_rho(
    model: &BranchedDiskModel,
    images: &[C64],
    triples: &[TripleCoincidence],
    cfg: &LoopConfig,
) -> f64 {
    let rn = model.domain_radius().powi(model.branch_order() as i32);
    let mut rho = if images.is_empty() {
        cfg.default_rho * rn.min(1.0)
    } else {
        let pmin = images.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min);
        (0.4 * pmin).min(0.3 * rn)
    };
    for t in triples {
        rho = rho.min(0.8 * t.image_z.norm());
    }
    rho
}

/// A requested detour placement; geometry is derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetourSpec {
    pub double_point: usize,
    pub center: C64,
    pub radius: f64,
    pub junction_angle: f64,
    pub attach_angle: f64,
    pub sign: Sign,
}

/// Resolved tube geometry for one detour.
#[derive(Debug, Clone, Copy)]
struct Tube {
    spec: DetourSpec,
    half_width: f64,
    /// Points where the two sides leave `C_ρ` and reach the detour circle.
    out_start: C64,
    out_end: C64,
    in_end: C64,
    in_start: C64,
    /// ccw junction interval on `C_ρ`.
    junction_from: f64,
    junction_width: f64,
    /// ccw traversed interval on the detour circle.
    arc_from: f64,
    arc_sweep: f64,
}

impl Tube {
    fn new(rho: f64, spec: DetourSpec) -> Option<Tube> {
        let hw = spec.radius / 4.0;
        let c = C64::from_polar(rho, spec.junction_angle);
        let u = spec.center + C64::from_polar(spec.radius, spec.attach_angle);
        let len = (u - c).norm();
        if len == 0.0 {
            return None;
        }
        let e = (u - c) / len;
        let nrm = C64::new(0.0, 1.0) * e;
        let side = |offset: f64| -> Option<(C64, C64)> {
            let o = c + nrm * offset;
            let (t1, t2) = line_circle(o, e, C64::new(0.0, 0.0), rho)?;
            let ts = if t1.abs() < t2.abs() { t1 } else { t2 };
            let (te, _) = line_circle(o, e, spec.center, spec.radius)?;
            if te <= ts {
                return None;
            }
            let start = o + e * ts;
            // the side must leave the disk |z| < ρ, not cross it
            if (start.conj() * e).re <= 0.0 {
                return None;
            }
            Some((start, o + e * te))
        };
        let (out_start, out_end) = side(-hw)?;
        let (in_start, in_end) = side(hw)?;
        let junction_from = wrap(out_start.arg());
        let junction_width = ccw(junction_from, in_start.arg());
        let arc_from = wrap((out_end - spec.center).arg());
        let arc_sweep = ccw(arc_from, (in_end - spec.center).arg());
        if junction_width > 0.5 || arc_sweep <= PI {
            return None;
        }
        Some(Tube {
            spec,
            half_width: hw,
            out_start,
            out_end,
            in_end,
            in_start,
            junction_from,
            junction_width,
            arc_from,
            arc_sweep,
        })
    }

    fn axis(&self, rho: f64) -> (C64, C64) {
        (
            C64::from_polar(rho, self.spec.junction_angle),
            self.spec.center + C64::from_polar(self.spec.radius, self.spec.attach_angle),
        )
    }

    fn detour(&self) -> Detour {
        Detour {
            center: self.spec.center,
            radius: self.spec.radius,
            tube_half_width: self.half_width,
            junction_angle: self.spec.junction_angle,
            attach_angle: self.spec.attach_angle,
            double_point: self.spec.double_point,
            sign: self.spec.sign,
        }
    }
}

/// Assembles the loop from explicit detour placements, starting at the
/// point of `C_ρ` with angle `base_angle`. Returns `None` if some tube
/// does not fit the requested geometry.
pub fn assemble_loop(
    rho: f64,
    base_angle: f64,
    detours: &[DetourSpec],
    singular_points: Vec<C64>,
) -> Option<LoopGamma> {
    let tubes: Vec<Tube> = detours
        .iter()
        .map(|d| Tube::new(rho, *d))
        .collect::<Option<_>>()?;
    Some(assemble(rho, base_angle, &tubes, singular_points))
}

fn assemble(rho: f64, base_angle: f64, tubes: &[Tube], singular_points: Vec<C64>) -> LoopGamma {
    let origin = C64::new(0.0, 0.0);
    let phi0 = wrap(base_angle);
    // visit junctions counterclockwise from the base point
    let mut order: Vec<usize> = (0..tubes.len()).collect();
    order.sort_by(|&a, &b| {
        ccw(phi0, tubes[a].junction_from).total_cmp(&ccw(phi0, tubes[b].junction_from))
    });
    let mut segments = Vec::new();
    let mut cur = phi0;
    for &i in &order {
        let t = &tubes[i];
        segments.push(LoopSegment {
            kind: SegmentKind::BaseArc,
            geometry: SegmentGeometry::Arc {
                center: origin,
                radius: rho,
                start: cur,
                sweep: ccw(cur, t.junction_from),
            },
            detour: None,
        });
        segments.push(LoopSegment {
            kind: SegmentKind::TubeSide { outbound: true },
            geometry: SegmentGeometry::Line {
                from: t.out_start,
                to: t.out_end,
            },
            detour: Some(i),
        });
        segments.push(LoopSegment {
            kind: SegmentKind::DetourArc,
            geometry: SegmentGeometry::Arc {
                center: t.spec.center,
                radius: t.spec.radius,
                start: t.arc_from,
                sweep: t.arc_sweep,
            },
            detour: Some(i),
        });
        segments.push(LoopSegment {
            kind: SegmentKind::TubeSide { outbound: false },
            geometry: SegmentGeometry::Line {
                from: t.in_end,
                to: t.in_start,
            },
            detour: Some(i),
        });
        cur = wrap(t.junction_from + t.junction_width);
    }
    let last = if tubes.is_empty() { TAU } else { ccw(cur, phi0) };
    segments.push(LoopSegment {
        kind: SegmentKind::BaseArc,
        geometry: SegmentGeometry::Arc {
            center: origin,
            radius: rho,
            start: cur,
            sweep: last,
        },
        detour: None,
    });
    segments.retain(|s| s.geometry.length() > 0.0);
    LoopGamma {
        segments,
        rho,
        base_point: C64::from_polar(rho, phi0),
        detours: tubes.iter().map(Tube::detour).collect(),
        singular_points,
    }
}

struct Features {
    /// `(image, double point index, sign)` sorted by decreasing argument.
    points: Vec<(C64, usize, Sign)>,
    triples: Vec<C64>,
    singular: Vec<C64>,
}

fn arg_2pi(z: C64) -> f64 {
    wrap(z.arg())
}

fn collect_features(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    dps: &[DoublePoint],
    triples: &[TripleCoincidence],
    cfg: &LoopConfig,
) -> Features {
    let mut points: Vec<(C64, usize, Sign)> = dps
        .iter()
        .enumerate()
        .map(|(i, d)| (d.image.z1, i, d.sign))
        .collect();
    points.sort_by(|a, b| arg_2pi(b.0).total_cmp(&arg_2pi(a.0)));
    let scfg = SolverConfig::for_model(model);
    let sample = sample_locus(model, params, cfg.locus_resolution, &scfg, &LocusTolerances::default());
    let mut singular = sample.singular_candidates;
    if model.branch_order() >= 4 {
        singular.extend(find_branch_crossings(model, params, &scfg));
    }
    Features {
        points,
        triples: triples.iter().map(|t| t.image_z).collect(),
        singular,
    }
}

/// Builds Γ for the given double points and triple coincidences.
pub fn build_loop(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    dps: &[DoublePoint],
    triples: &[TripleCoincidence],
    cfg: &LoopConfig,
) -> Result<LoopGamma, LoopError> {
    build_loop_capped(model, params, dps, triples, cfg, f64::INFINITY)
}

/// As [`build_loop`], with ρ additionally bounded by `rho_cap`.
pub fn build_loop_capped(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    dps: &[DoublePoint],
    triples: &[TripleCoincidence],
    cfg: &LoopConfig,
    rho_cap: f64,
) -> Result<LoopGamma, LoopError> {
    let feats = collect_features(model, params, dps, triples, cfg);
    let images: Vec<C64> = feats.points.iter().map(|p| p.0).collect();
    let mut rho = default_rho(model, &images, triples, cfg).min(rho_cap);
    let mut reasons = Vec::new();
    for _ in 0..=cfg.max_rho_shrinks {
        match try_build(model, params, &feats, rho, cfg) {
            Ok(lp) => {
                let report = validate_loop(model, params, &lp, dps, triples);
                if report.passed() {
                    return Ok(lp);
                }
                reasons.push(format!("ρ = {rho:.3e}: {}", report.failures.join("; ")));
            }
            Err(reason) => reasons.push(format!("ρ = {rho:.3e}: {reason}")),
        }
        rho *= cfg.rho_shrink;
    }
    Err(LoopError::ConstructionFailure(reasons.join(" | ")))
}

fn circle_hits(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    center: C64,
    radius: f64,
    samples: usize,
) -> Result<Vec<f64>, LocusError> {
    let path = move |s: f64| center + C64::from_polar(radius, TAU * s);
    Ok(path_crossings(model, params, &path, samples, &LocusTolerances::default())?
        .into_iter()
        .map(|h| wrap(TAU * h.s))
        .collect())
}

fn try_build(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    feats: &Features,
    rho: f64,
    cfg: &LoopConfig,
) -> Result<LoopGamma, String> {
    let n = model.branch_order();
    let origin = C64::new(0.0, 0.0);
    let base_hits = circle_hits(model, params, origin, rho, 4 * cfg.hit_samples)
        .map_err(|e| format!("base circle: {e}"))?;
    if base_hits.len() != n - 1 {
        return Err(format!(
            "base circle meets the locus {} times, expected {}",
            base_hits.len(),
            n - 1
        ));
    }
    // detour radii
    let mut specs: Vec<(DetourSpec, Vec<f64>)> = Vec::new();
    for (idx, &(p, dp, sign)) in feats.points.iter().enumerate() {
        let gap = feats
            .points
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != idx)
            .map(|(_, q)| (q.0 - p).norm())
            .chain(feats.triples.iter().map(|x| (x - p).norm()))
            .fold(f64::INFINITY, f64::min);
        let mut r = (0.2 * p.norm())
            .min(0.5 * (p.norm() - rho))
            .min(0.25 * gap)
            .min(cfg.max_detour_radius);
        if r <= 0.0 {
            return Err(format!("double point image {p} too close to the base circle"));
        }
        let mut hits = None;
        for _ in 0..=cfg.max_radius_shrinks {
            match circle_hits(model, params, p, r, cfg.hit_samples) {
                Ok(h) if h.len() == 2 => {
                    hits = Some(h);
                    break;
                }
                _ => r *= cfg.radius_shrink,
            }
        }
        let hits = hits.ok_or_else(|| {
            format!("no detour circle around {p} meets the locus exactly twice")
        })?;
        specs.push((
            DetourSpec {
                double_point: dp,
                center: p,
                radius: r,
                junction_angle: arg_2pi(p),
                attach_angle: wrap((-p).arg()),
                sign,
            },
            hits,
        ));
    }
    let mut placed: Vec<Tube> = Vec::new();
    for (idx, (spec, hits)) in specs.iter().enumerate() {
        let tube = place_tube(spec, hits, idx, &specs, &placed, &base_hits, feats, rho, cfg)
            .ok_or_else(|| format!("no admissible tube to the detour around {}", spec.center))?;
        placed.push(tube);
    }
    // base point: middle of the widest gap between forbidden angles on C_ρ
    let mut forbidden: Vec<(f64, f64)> = base_hits.iter().map(|&a| (a, 0.0)).collect();
    forbidden.extend(placed.iter().map(|t| (t.junction_from, t.junction_width)));
    forbidden.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = (0.0, -1.0);
    for (i, &(a, w)) in forbidden.iter().enumerate() {
        let next = forbidden[(i + 1) % forbidden.len()].0;
        let gap = if forbidden.len() == 1 { TAU - w } else { ccw(a + w, next) };
        if gap > best.1 {
            best = (a + w + gap / 2.0, gap);
        }
    }
    let base_angle = if forbidden.is_empty() { 0.0 } else { best.0 };
    Ok(assemble(rho, base_angle, &placed, feats.singular.clone()))
}

#[allow(clippy::too_many_arguments)]
fn place_tube(
    spec: &DetourSpec,
    circle_hits: &[f64],
    idx: usize,
    all: &[(DetourSpec, Vec<f64>)],
    placed: &[Tube],
    base_hits: &[f64],
    feats: &Features,
    rho: f64,
    cfg: &LoopConfig,
) -> Option<Tube> {
    let offsets = |step: f64, count: usize| {
        let mut v = vec![0.0];
        for j in 1..=count {
            v.push(j as f64 * step);
            v.push(-(j as f64) * step);
        }
        v
    };
    let phis = offsets(cfg.angle_step, cfg.max_retries);
    let psis = offsets(cfg.attach_step, cfg.max_attach_retries);
    for dphi in &phis {
        let phi = wrap(spec.junction_angle + dphi);
        let c = C64::from_polar(rho, phi);
        let facing = wrap((c - spec.center).arg());
        for dpsi in &psis {
            let cand = DetourSpec {
                junction_angle: phi,
                attach_angle: wrap(facing + dpsi),
                ..*spec
            };
            let Some(t) = Tube::new(rho, cand) else {
                continue;
            };
            if tube_admissible(&t, circle_hits, idx, all, placed, base_hits, feats, rho) {
                return Some(t);
            }
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn tube_admissible(
    t: &Tube,
    circle_hits: &[f64],
    idx: usize,
    all: &[(DetourSpec, Vec<f64>)],
    placed: &[Tube],
    base_hits: &[f64],
    feats: &Features,
    rho: f64,
) -> bool {
    let hw = t.half_width;
    // mouth on the detour circle must avoid its two locus crossings
    let mouth_from = t.arc_from + t.arc_sweep;
    let mouth = TAU - t.arc_sweep;
    if circle_hits
        .iter()
        .any(|&a| in_arc(a, mouth_from, mouth, 0.25 * mouth))
    {
        return false;
    }
    // junction arc on C_ρ must avoid the base crossings
    if base_hits
        .iter()
        .any(|&a| in_arc(a, t.junction_from, t.junction_width, 0.25 * t.junction_width))
    {
        return false;
    }
    let (a, b) = t.axis(rho);
    for (j, (other, _)) in all.iter().enumerate() {
        if j != idx && point_segment_distance(other.center, a, b) <= other.radius + 1.5 * hw {
            return false;
        }
    }
    for x in feats.triples.iter().chain(feats.singular.iter()) {
        if point_segment_distance(*x, a, b) <= 1.5 * hw {
            return false;
        }
    }
    for o in placed {
        let (c, d) = o.axis(rho);
        if segments_distance(a, b, c, d) <= 1.5 * (hw + o.half_width) {
            return false;
        }
        let margin = 0.5 * t.junction_width.max(o.junction_width);
        if in_arc(t.junction_from, o.junction_from, o.junction_width, margin)
            || in_arc(o.junction_from, t.junction_from, t.junction_width, margin)
        {
            return false;
        }
    }
    true
}

/// Winding number of the loop around `q`, by adaptive angle summation.
pub fn winding_number(lp: &LoopGamma, q: C64) -> i64 {
    let mut total = 0.0;
    for seg in &lp.segments {
        let g = &seg.geometry;
        let len = g.length();
        let mut s = 0.0;
        let mut prev = g.point(0.0) - q;
        while s < 1.0 {
            let ds = (0.05 * prev.norm() / len.max(f64::MIN_POSITIVE)).clamp(1e-9, 0.02);
            s = (s + ds).min(1.0);
            let cur = g.point(s) - q;
            total += (cur / prev).arg();
            prev = cur;
        }
    }
    (total / TAU).round() as i64
}

fn tube_region_contains(d: &Detour, rho: f64, q: C64) -> bool {
    let (a, b) = d.axis(rho);
    point_segment_distance(q, a, b) <= d.tube_half_width
}

/// Checks every condition the braid tracer relies on.
pub fn validate_loop(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    lp: &LoopGamma,
    dps: &[DoublePoint],
    triples: &[TripleCoincidence],
) -> LoopValidationReport {
    let cfg = LoopConfig::default();
    let tol = LocusTolerances::default();
    let mut failures = Vec::new();
    let mut hits = Vec::new();
    let mut all_transverse = true;
    for (i, seg) in lp.segments.iter().enumerate() {
        let g = seg.geometry;
        let path = move |s: f64| g.point(s);
        match path_crossings(model, params, &path, cfg.hit_samples, &tol) {
            Ok(hs) => hits.extend(hs.into_iter().map(|h| TransversalHit {
                segment: i,
                theta: h.s,
                k: h.k,
                slope: h.slope,
            })),
            Err(e) => {
                all_transverse = false;
                failures.push(format!("segment {i}: {e}"));
            }
        }
    }
    let origin_inside = winding_number(lp, C64::new(0.0, 0.0)) == 1;
    let double_points_inside = dps.iter().all(|d| winding_number(lp, d.image.z1) == 1);
    let triples_outside = triples.iter().all(|t| winding_number(lp, t.image_z) == 0);
    if !origin_inside {
        failures.push("loop does not wind once around the branch value".into());
    }
    if !double_points_inside {
        failures.push("some double point image is not enclosed once".into());
    }
    if !triples_outside {
        failures.push("some triple coincidence is enclosed".into());
    }
    let base_hits = circle_hits(model, params, C64::new(0.0, 0.0), lp.rho, 4 * cfg.hit_samples)
        .unwrap_or_default();
    let mut tube_checks = Vec::new();
    for (i, d) in lp.detours.iter().enumerate() {
        let mut check = TubeCheck {
            detour: i,
            two_circle_hits: false,
            mouth_clear: false,
            junction_clear: false,
            tube_clear: false,
        };
        let arc = lp.segments.iter().find_map(|s| match (s.kind, s.detour, s.geometry) {
            (SegmentKind::DetourArc, Some(j), SegmentGeometry::Arc { start, sweep, .. }) if j == i => {
                Some((start, sweep))
            }
            _ => None,
        });
        let junction = {
            let out = lp.segments.iter().find_map(|s| match (s.kind, s.detour) {
                (SegmentKind::TubeSide { outbound: true }, Some(j)) if j == i => Some(s.geometry.start()),
                _ => None,
            });
            let back = lp.segments.iter().find_map(|s| match (s.kind, s.detour) {
                (SegmentKind::TubeSide { outbound: false }, Some(j)) if j == i => Some(s.geometry.end()),
                _ => None,
            });
            out.zip(back).map(|(a, b)| (wrap(a.arg()), ccw(a.arg(), b.arg())))
        };
        if let Ok(h) = circle_hits(model, params, d.center, d.radius, cfg.hit_samples) {
            check.two_circle_hits = h.len() == 2;
            if let Some((start, sweep)) = arc {
                check.mouth_clear = h.iter().all(|&a| in_arc(a, start, sweep, 0.0));
            }
        }
        if let Some((from, width)) = junction {
            check.junction_clear = !base_hits.iter().any(|&a| in_arc(a, from, width, 0.0));
        }
        check.tube_clear = dps
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != d.double_point)
            .map(|(_, q)| q.image.z1)
            .chain(lp.singular_points.iter().copied())
            .all(|q| !tube_region_contains(d, lp.rho, q));
        if !check.passed() {
            failures.push(format!("detour {i} fails its tube checks: {check:?}"));
        }
        tube_checks.push(check);
    }
    LoopValidationReport {
        transversal_hits: hits,
        all_transverse,
        region_check: RegionCheck {
            origin_inside,
            double_points_inside,
            triples_outside,
        },
        tube_checks,
        failures,
    }
}

/// Arc-length parametrization of the loop by `θ ∈ [0, 2π)`.
#[derive(Debug, Clone)]
pub struct LoopParametrization {
    segments: Vec<LoopSegment>,
    /// Cumulative parameter value at the start of each segment, then `2π`.
    breaks: Vec<f64>,
}

impl LoopParametrization {
    pub fn new(lp: &LoopGamma) -> Self {
        let total: f64 = lp.segments.iter().map(|s| s.geometry.length()).sum();
        let mut breaks = vec![0.0];
        let mut acc = 0.0;
        for s in &lp.segments {
            acc += s.geometry.length();
            breaks.push(TAU * acc / total);
        }
        *breaks.last_mut().unwrap() = TAU;
        LoopParametrization {
            segments: lp.segments.clone(),
            breaks,
        }
    }

    pub fn segment_range(&self, i: usize) -> (f64, f64) {
        (self.breaks[i], self.breaks[i + 1])
    }

    fn locate(&self, theta: f64) -> (usize, f64) {
        let t = wrap(theta);
        let i = match self.breaks.binary_search_by(|b| b.total_cmp(&t)) {
            Ok(i) => i.min(self.segments.len() - 1),
            Err(i) => i - 1,
        };
        let (a, b) = self.segment_range(i);
        (i, (t - a) / (b - a))
    }

    /// `(z(θ), dz/dθ)`; at a corner the outgoing derivative is returned.
    pub fn eval(&self, theta: f64) -> (C64, C64) {
        let (i, s) = self.locate(theta);
        let (a, b) = self.segment_range(i);
        let g = &self.segments[i].geometry;
        (g.point(s), g.tangent(s) / (b - a))
    }

    /// Parameters where the derivative jumps.
    pub fn corners(&self) -> Vec<f64> {
        let m = self.segments.len();
        (0..m)
            .filter(|&i| {
                let prev = &self.segments[(i + m - 1) % m].geometry;
                let cur = &self.segments[i].geometry;
                let (pa, pb) = self.segment_range((i + m - 1) % m);
                let (ca, cb) = self.segment_range(i);
                let d0 = prev.tangent(1.0) / (pb - pa);
                let d1 = cur.tangent(0.0) / (cb - ca);
                (d0 - d1).norm() > 1e-9 * d0.norm().max(d1.norm())
            })
            .map(|i| self.breaks[i])
            .collect()
    }
}

pub fn parametrize_loop(lp: &LoopGamma) -> LoopParametrization {
    LoopParametrization::new(lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::double_points::find_double_points;
    use crate::locus::find_triple_coincidences;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn closed(lp: &LoopGamma) -> bool {
        let m = lp.segments.len();
        (0..m).all(|i| {
            (lp.segments[i].geometry.end() - lp.segments[(i + 1) % m].geometry.start()).norm() < 1e-12
        })
    }

    fn trefoil_setup() -> (
        BranchedDiskModel,
        PerturbationParams,
        Vec<DoublePoint>,
        Vec<TripleCoincidence>,
    ) {
        let m = BranchedDiskModel::torus(2, 3).unwrap();
        let p = PerturbationParams::real(0.1, 0.0).unwrap();
        let cfg = SolverConfig::for_model(&m);
        let dps = find_double_points(&m, &p, &cfg).unwrap().points;
        let triples = find_triple_coincidences(&m, &p, &cfg);
        (m, p, dps, triples)
    }

    #[test]
    fn trefoil_loop() {
        let (m, p, dps, triples) = trefoil_setup();
        let cfg = LoopConfig::default();
        let images: Vec<C64> = dps.iter().map(|d| d.image.z1).collect();
        assert!((default_rho(&m, &images, &triples, &cfg) - 0.04).abs() < 1e-12);
        let lp = build_loop(&m, &p, &dps, &triples, &cfg).unwrap();
        assert!(closed(&lp));
        // at ρ = 0.04 the base circle also crosses the far branch of the locus
        assert!((lp.rho - 0.028).abs() < 1e-12);
        assert!(lp.rho < 0.5 * 0.1);
        assert_eq!(lp.detours.len(), 1);
        let d = lp.detours[0];
        assert!((d.radius - 0.02).abs() < 1e-12);
        assert!((d.tube_half_width - 0.005).abs() < 1e-12);
        assert!((d.center - c(-0.1, 0.0)).norm() < 1e-9);
        assert!(d.junction_angle != PI);
        let report = validate_loop(&m, &p, &lp, &dps, &triples);
        assert!(report.passed(), "{:?}", report.failures);
        assert_eq!(winding_number(&lp, c(0.0, 0.0)), 1);
        assert_eq!(winding_number(&lp, c(-0.1, 0.0)), 1);
        assert_eq!(winding_number(&lp, c(0.2, 0.0)), 0);
        // the two detour crossings of the locus are the real axis points
        let hits = circle_hits(&m, &p, d.center, d.radius, 1024).unwrap();
        assert_eq!(hits.len(), 2);
        // deterministic
        let again = validate_loop(&m, &p, &lp, &dps, &triples);
        assert_eq!(report, again);
    }

    #[test]
    fn junction_on_the_locus_is_rejected() {
        let (m, p, dps, triples) = trefoil_setup();
        let spec = DetourSpec {
            double_point: 0,
            center: dps[0].image.z1,
            radius: 0.02,
            junction_angle: PI,
            attach_angle: 0.3,
            sign: dps[0].sign,
        };
        let lp = assemble_loop(0.028, 0.5, &[spec], vec![]).unwrap();
        assert!(closed(&lp));
        let report = validate_loop(&m, &p, &lp, &dps, &triples);
        assert!(!report.tube_checks[0].junction_clear);
        assert!(!report.passed());
    }

    #[test]
    fn circle_only_loop() {
        let m = BranchedDiskModel::new(3, vec![]).unwrap();
        let p = PerturbationParams::real(0.1, 0.0).unwrap();
        let lp = build_loop(&m, &p, &[], &[], &LoopConfig::default()).unwrap();
        assert_eq!(lp.segments.len(), 1);
        assert!((lp.rho - 0.3).abs() < 1e-15);
        let report = validate_loop(&m, &p, &lp, &[], &[]);
        assert!(report.passed());
        assert_eq!(report.transversal_hits.len(), 2);
        let par = parametrize_loop(&lp);
        let (z0, _) = par.eval(0.0);
        assert!((z0 - lp.base_point).norm() < 1e-15);
        let (z1, _) = par.eval(TAU - 1e-12);
        assert!((z1 - lp.base_point).norm() < 1e-10);
        let (z, dz) = par.eval(1.0);
        assert!((z - lp.base_point * C64::from_polar(1.0, 1.0)).norm() < 1e-12);
        assert!((dz - C64::new(0.0, 1.0) * z).norm() < 1e-12);
        assert!(par.corners().is_empty());
    }

    #[test]
    fn equal_arguments_get_separate_junctions() {
        // two double points on the same ray; the far one is reached around the near disk
        let m = BranchedDiskModel::torus(2, 3).unwrap();
        let p = PerturbationParams::real(0.1, 0.0).unwrap();
        let feats = Features {
            points: vec![(c(-0.1, 0.0), 0, Sign::Positive), (c(-0.2, 0.0), 1, Sign::Positive)],
            triples: vec![],
            singular: vec![],
        };
        let specs = [
            DetourSpec {
                double_point: 0,
                center: c(-0.1, 0.0),
                radius: 0.005,
                junction_angle: PI,
                attach_angle: 0.0,
                sign: Sign::Positive,
            },
            DetourSpec {
                double_point: 1,
                center: c(-0.2, 0.0),
                radius: 0.02,
                junction_angle: PI,
                attach_angle: 0.0,
                sign: Sign::Positive,
            },
        ];
        let all: Vec<(DetourSpec, Vec<f64>)> = specs.iter().map(|s| (*s, vec![])).collect();
        let cfg = LoopConfig::default();
        let t0 = place_tube(&specs[0], &[], 0, &all, &[], &[], &feats, 0.028, &cfg).unwrap();
        let t1 = place_tube(&specs[1], &[], 1, &all, &[t0], &[], &feats, 0.028, &cfg).unwrap();
        assert!((t0.spec.junction_angle - PI).abs() < 1e-12);
        let off = ccw(PI, t1.spec.junction_angle).min(ccw(t1.spec.junction_angle, PI));
        assert!(off > 0.0);
        assert!((off / cfg.angle_step - (off / cfg.angle_step).round()).abs() < 1e-9);
        let (a, b) = t0.axis(0.028);
        let (cc, d) = t1.axis(0.028);
        assert!(segments_distance(a, b, cc, d) > t0.half_width + t1.half_width);
        let _ = (m, p);
    }

    #[test]
    fn corner_count() {
        let (m, p, dps, triples) = trefoil_setup();
        let lp = build_loop(&m, &p, &dps, &triples, &LoopConfig::default()).unwrap();
        let par = parametrize_loop(&lp);
        // two base arcs, two tube sides, one detour arc: every join is a corner
        assert_eq!(lp.segments.len(), 5);
        assert_eq!(par.corners().len(), 4);
    }

    #[test]
    fn geometry_helpers() {
        assert!((ccw(6.0, 0.5) - (0.5 + TAU - 6.0)).abs() < 1e-12);
        assert!(in_arc(0.1, 6.0, 0.5, 0.0));
        assert!(!in_arc(1.0, 6.0, 0.5, 0.0));
        assert_eq!(segments_distance(c(0.0, 0.0), c(1.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)), 0.0);
        assert!((segments_distance(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)) - 1.0).abs() < 1e-15);
        let (t1, t2) = line_circle(c(-2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), 1.0).unwrap();
        assert!((t1 - 1.0).abs() < 1e-15 && (t2 - 3.0).abs() < 1e-15);
    }
}
