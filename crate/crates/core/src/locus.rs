//! The crossing locus: base points over which two sheets of the projection
//! to the first three coordinates share a height.
//!
//! Over `z = wᴺ` the sheets `w` and `νᵏw` have equal height iff
//! `a_k(w) = Re G_k(w) = 0`. The locus is sampled in the `w`-plane and
//! pushed forward by `w ↦ wᴺ`, which avoids lifting through the branch cut.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::double_points::{
    pair_mismatch, pair_mismatch_wirtinger, real_partials, SolverConfig,
};
use crate::newton::{self, Eval2};
use crate::surface::{eval_z2, root_of_unity, z2_wirtinger, BranchedDiskModel, PerturbationParams, C64};
use crate::trace::nearest_root;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocusTolerances {
    pub tol_locus: f64,
    pub tol_grad: f64,
    pub tol_theta: f64,
}

impl Default for LocusTolerances {
    fn default() -> Self {
        LocusTolerances {
            tol_locus: 1e-8,
            tol_grad: 1e-6,
            tol_theta: 1e-10,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocusError {
    #[error("path meets the crossing locus tangentially at parameter {theta} (slope {slope:e})")]
    TangencyDetected { theta: f64, slope: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceValue {
    pub k: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleCoincidence {
    pub w: C64,
    pub k: usize,
    pub l: usize,
    pub image_z: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub k: usize,
    pub points: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocusSample {
    /// Zero contours in the base plane, one entry per connected piece.
    pub polylines: Vec<Polyline>,
    /// Base points where some `a_k` vanishes with (numerically) zero gradient.
    pub singular_candidates: Vec<C64>,
    /// Radial step of the sampling grid in the `w`-plane.
    pub cell_size: f64,
}

/// `a_k(w)`.
pub fn eval_coincidence(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    k: usize,
    w: C64,
) -> f64 {
    pair_mismatch(model, params, k, w).re
}

pub fn coincidence(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    k: usize,
    w: C64,
) -> CoincidenceValue {
    CoincidenceValue {
        k,
        value: eval_coincidence(model, params, k, w),
    }
}

/// `(∂a_k/∂x, ∂a_k/∂y)`.
pub fn coincidence_gradient(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    k: usize,
    w: C64,
) -> [f64; 2] {
    let (dw, dwb) = pair_mismatch_wirtinger(model, params, k, w);
    let (gx, gy) = real_partials(dw, dwb);
    [gx.re, gy.re]
}

/// Height difference between sheets `νᵃw` and `νᵇw`, with its gradient in `w`.
fn sheet_gap(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    a: usize,
    b: usize,
    w: C64,
) -> (f64, [f64; 2]) {
    let n = model.branch_order();
    let (na, nb) = (root_of_unity(n, a), root_of_unity(n, b));
    let value = (eval_z2(model, params, na * w) - eval_z2(model, params, nb * w)).re;
    let (a1, a2) = z2_wirtinger(model, params, na * w);
    let (b1, b2) = z2_wirtinger(model, params, nb * w);
    let (gx, gy) = real_partials(na * a1 - nb * b1, na.conj() * a2 - nb.conj() * b2);
    (value, [gx.re, gy.re])
}

fn two_gap_system<'a>(
    model: &'a BranchedDiskModel,
    params: &'a PerturbationParams,
    first: (usize, usize),
    second: (usize, usize),
) -> impl Fn(C64) -> Eval2 + 'a {
    move |w| {
        let (v1, g1) = sheet_gap(model, params, first.0, first.1, w);
        let (v2, g2) = sheet_gap(model, params, second.0, second.1, w);
        ([v1, v2], [g1, g2])
    }
}

fn solve_gap_pair(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    first: (usize, usize),
    second: (usize, usize),
    cfg: &SolverConfig,
) -> Vec<C64> {
    let r0 = model.domain_radius();
    let sys = two_gap_system(model, params, first, second);
    let mut roots: Vec<C64> = Vec::new();
    // coinciding branches meet along whole curves; keep transverse crossings only
    let transverse = |w: C64| {
        let (_, [g1, g2]) = sys(w);
        let cross = (g1[0] * g2[1] - g1[1] * g2[0]).abs();
        cross > 1e-6 * g1[0].hypot(g1[1]) * g2[0].hypot(g2[1])
    };
    let push = |w: C64, roots: &mut Vec<C64>| {
        if w.norm() > cfg.exclusion_radius
            && w.norm() < r0
            && transverse(w)
            && !roots.iter().any(|u| (*u - w).norm() < cfg.tol_dedupe)
        {
            roots.push(w);
        }
    };
    let solve = |seed: C64| {
        newton::solve(&sys, seed, cfg.newton_max_iter, cfg.tol_residual, 1.5 * r0)
            .ok()
            .map(|r| r.root)
    };
    for seed in newton::polar_seeds(cfg.exclusion_radius, r0, cfg.grid_radii, cfg.grid_angles) {
        if let Some(w) = solve(seed) {
            push(w, &mut roots);
        }
    }
    let centers = roots.clone();
    for c in centers {
        for seed in newton::local_seeds(c, 1e-5 * r0, 0.05 * r0, 6, 12) {
            if let Some(w) = solve(seed) {
                push(w, &mut roots);
            }
        }
    }
    roots
}

fn dedupe_by_image<T>(items: &mut Vec<T>, image: impl Fn(&T) -> C64, tol: f64) {
    let mut kept: Vec<T> = Vec::new();
    for it in items.drain(..) {
        let z = image(&it);
        if !kept.iter().any(|o| (image(o) - z).norm() < tol) {
            kept.push(it);
        }
    }
    *items = kept;
}

/// Points where three sheets share a height; for `N = 2` there are none.
pub fn find_triple_coincidences(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    cfg: &SolverConfig,
) -> Vec<TripleCoincidence> {
    let n = model.branch_order();
    let mut out = Vec::new();
    for k in 1..n {
        for l in k + 1..n {
            for w in solve_gap_pair(model, params, (0, k), (0, l), cfg) {
                out.push(TripleCoincidence {
                    w,
                    k,
                    l,
                    image_z: w.powu(n as u32),
                });
            }
        }
    }
    dedupe_by_image(&mut out, |t| t.image_z, cfg.tol_dedupe);
    out.sort_by(|a, b| {
        a.image_z
            .arg()
            .total_cmp(&b.image_z.arg())
            .then(a.image_z.norm().total_cmp(&b.image_z.norm()))
    });
    out
}

/// Base points where two disjoint sheet pairs have equal heights at once
/// (crossings of distinct branches of the locus). Only possible for `N ≥ 4`.
pub fn find_branch_crossings(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    cfg: &SolverConfig,
) -> Vec<C64> {
    let n = model.branch_order();
    let mut out: Vec<C64> = Vec::new();
    for k in 1..n {
        for a in 1..n {
            for b in a + 1..n {
                if a == k || b == k {
                    continue;
                }
                for w in solve_gap_pair(model, params, (0, k), (a, b), cfg) {
                    out.push(w.powu(n as u32));
                }
            }
        }
    }
    dedupe_by_image(&mut out, |z| *z, cfg.tol_dedupe);
    out
}

/// Marching squares on a grid periodic in its second index. Returns
/// segments as pairs of grid-coordinate points `(i + s, j + t)`.
fn marching_segments(values: &[Vec<f64>], periodic: bool) -> Vec<[(f64, f64); 2]> {
    let rows = values.len();
    let cols = values[0].len();
    let col_count = if periodic { cols } else { cols - 1 };
    let mut segs = Vec::new();
    let interp = |a: f64, b: f64| if a == b { 0.5 } else { a / (a - b) };
    for i in 0..rows - 1 {
        for j in 0..col_count {
            let j1 = (j + 1) % cols;
            // corners counterclockwise: (i,j) (i+1,j) (i+1,j+1) (i,j+1)
            let v = [values[i][j], values[i + 1][j], values[i + 1][j1], values[i][j1]];
            let pos = |x: f64| x > 0.0;
            let (i0, j0) = (i as f64, j as f64);
            let edge = |e: usize| -> (f64, f64) {
                match e {
                    0 => (i0 + interp(v[0], v[1]), j0),
                    1 => (i0 + 1.0, j0 + interp(v[1], v[2])),
                    2 => (i0 + 1.0 - interp(v[2], v[3]), j0 + 1.0),
                    _ => (i0, j0 + 1.0 - interp(v[3], v[0])),
                }
            };
            let crossing: Vec<usize> = (0..4)
                .filter(|&e| pos(v[e]) != pos(v[(e + 1) % 4]))
                .collect();
            match crossing.len() {
                2 => segs.push([edge(crossing[0]), edge(crossing[1])]),
                4 => {
                    let center = 0.25 * (v[0] + v[1] + v[2] + v[3]);
                    if pos(center) == pos(v[0]) {
                        segs.push([edge(0), edge(1)]);
                        segs.push([edge(2), edge(3)]);
                    } else {
                        segs.push([edge(3), edge(0)]);
                        segs.push([edge(1), edge(2)]);
                    }
                }
                _ => {}
            }
        }
    }
    segs
}

/// Chains segments sharing endpoints into polylines.
fn chain_segments(segs: &[[(f64, f64); 2]], period: f64) -> Vec<Vec<(f64, f64)>> {
    use std::collections::HashMap;
    let key = |p: (f64, f64)| -> (i64, i64) {
        let j = if period > 0.0 { p.1.rem_euclid(period) } else { p.1 };
        ((p.0 * 1e9).round() as i64, (j * 1e9).round() as i64)
    };
    let mut adj: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (s, seg) in segs.iter().enumerate() {
        adj.entry(key(seg[0])).or_default().push(s);
        adj.entry(key(seg[1])).or_default().push(s);
    }
    let mut used = vec![false; segs.len()];
    let mut lines = Vec::new();
    // start from open ends first so open curves are not split
    let mut order: Vec<usize> = (0..segs.len()).collect();
    order.sort_by_key(|&s| {
        let ends = segs[s]
            .iter()
            .filter(|p| adj[&key(**p)].len() == 1)
            .count();
        std::cmp::Reverse(ends)
    });
    for start in order {
        if used[start] {
            continue;
        }
        used[start] = true;
        let seg = segs[start];
        let (a, b) = if adj[&key(seg[1])].len() == 1 {
            (seg[1], seg[0])
        } else {
            (seg[0], seg[1])
        };
        let mut line = vec![a, b];
        let mut tip = b;
        loop {
            let next = adj[&key(tip)].iter().copied().find(|&s| !used[s]);
            match next {
                Some(s) => {
                    used[s] = true;
                    let other = if key(segs[s][0]) == key(tip) {
                        segs[s][1]
                    } else {
                        segs[s][0]
                    };
                    line.push(other);
                    tip = other;
                }
                None => break,
            }
        }
        lines.push(line);
    }
    lines
}

/// Zero contours of every `a_k` (`k ≤ N/2`; the others give the same base
/// set) over a polar grid of `resolution` radii and `4·resolution` angles.
pub fn sample_locus(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    resolution: usize,
    cfg: &SolverConfig,
    tol: &LocusTolerances,
) -> LocusSample {
    assert!(resolution >= 32, "grid resolution must be at least 32");
    let n = model.branch_order();
    let r0 = model.domain_radius();
    let inner = cfg.exclusion_radius;
    let radial = resolution;
    let angular = 4 * resolution;
    let dr = (r0 - inner) / (radial - 1) as f64;
    let dphi = 2.0 * std::f64::consts::PI / angular as f64;
    let to_w = |p: (f64, f64)| C64::from_polar(inner + p.0 * dr, p.1 * dphi);
    let mut polylines = Vec::new();
    let mut singular: Vec<C64> = Vec::new();
    for k in 1..=n / 2 {
        let values: Vec<Vec<f64>> = (0..radial)
            .map(|i| {
                (0..angular)
                    .map(|j| eval_coincidence(model, params, k, to_w((i as f64, j as f64))))
                    .collect()
            })
            .collect();
        let segs = marching_segments(&values, true);
        for line in chain_segments(&segs, angular as f64) {
            polylines.push(Polyline {
                k,
                points: line.iter().map(|&p| to_w(p).powu(n as u32)).collect(),
            });
        }
        // singular points of the contour: refine ∇a_k = 0 from every cell the contour crosses
        let grad_sys = |w: C64| -> Eval2 {
            let g = coincidence_gradient(model, params, k, w);
            let h = 1e-7;
            let gx = coincidence_gradient(model, params, k, w + h);
            let gx2 = coincidence_gradient(model, params, k, w - h);
            let gy = coincidence_gradient(model, params, k, w + C64::new(0.0, h));
            let gy2 = coincidence_gradient(model, params, k, w - C64::new(0.0, h));
            let hxx = (gx[0] - gx2[0]) / (2.0 * h);
            let hxy = (gy[0] - gy2[0]) / (2.0 * h);
            let hyx = (gx[1] - gx2[1]) / (2.0 * h);
            let hyy = (gy[1] - gy2[1]) / (2.0 * h);
            (g, [[hxx, hxy], [hyx, hyy]])
        };
        for seg in &segs {
            let mid = ((seg[0].0 + seg[1].0) / 2.0, (seg[0].1 + seg[1].1) / 2.0);
            let seed = to_w(mid);
            if let Ok(r) = newton::solve(grad_sys, seed, 30, tol.tol_grad, 1.5 * r0) {
                let w = r.root;
                if (w - seed).norm() > 2.0 * dr.max(seed.norm() * dphi) || w.norm() <= inner || w.norm() >= r0 {
                    continue;
                }
                if eval_coincidence(model, params, k, w).abs() < tol.tol_locus {
                    let z = w.powu(n as u32);
                    if !singular.iter().any(|s| (*s - z).norm() < cfg.tol_dedupe) {
                        singular.push(z);
                    }
                }
            }
        }
    }
    LocusSample {
        polylines,
        singular_candidates: singular,
        cell_size: dr,
    }
}

/// Hausdorff distance between two point clouds.
pub fn hausdorff(a: &[C64], b: &[C64]) -> f64 {
    let directed = |x: &[C64], y: &[C64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocusHit {
    pub theta: f64,
    pub slope: f64,
    pub k: usize,
    /// Lift of the path at the hit.
    pub w: C64,
}

/// Parameters in `[t0, t1]` where `a_k` changes sign along the strand lift
/// starting at `lift0` over the base path.
#[allow(clippy::too_many_arguments)]
pub fn path_locus_intersections(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    path: &dyn Fn(f64) -> C64,
    t0: f64,
    t1: f64,
    lift0: C64,
    k: usize,
    samples: usize,
    tol: &LocusTolerances,
) -> Result<Vec<LocusHit>, LocusError> {
    let n = model.branch_order();
    let a = |w: C64| eval_coincidence(model, params, k, w);
    let mut hits = Vec::new();
    let mut t_prev = t0;
    let mut w_prev = nearest_root(path(t0), n, lift0);
    let mut v_prev = a(w_prev);
    for s in 1..=samples {
        let t = t0 + (t1 - t0) * s as f64 / samples as f64;
        let w = nearest_root(path(t), n, w_prev);
        let v = a(w);
        if (v_prev > 0.0) != (v > 0.0) {
            let (mut lo, mut hi) = (t_prev, t);
            let (mut wlo, mut vlo) = (w_prev, v_prev);
            while (hi - lo).abs() > tol.tol_theta {
                let mid = 0.5 * (lo + hi);
                let wm = nearest_root(path(mid), n, wlo);
                let vm = a(wm);
                if (vm > 0.0) == (vlo > 0.0) {
                    lo = mid;
                    wlo = wm;
                    vlo = vm;
                } else {
                    hi = mid;
                }
            }
            let theta = 0.5 * (lo + hi);
            let wc = nearest_root(path(theta), n, wlo);
            let dt = tol.tol_theta.sqrt() * (t1 - t0).abs().max(1e-300);
            let wp = nearest_root(path(theta + dt), n, wc);
            let wm = nearest_root(path(theta - dt), n, wc);
            let slope = (a(wp) - a(wm)) / (2.0 * dt);
            if slope.abs() < tol.tol_grad {
                return Err(LocusError::TangencyDetected { theta, slope });
            }
            hits.push(LocusHit { theta, slope, k, w: wc });
        }
        t_prev = t;
        w_prev = w;
        v_prev = v;
    }
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn trefoil() -> (BranchedDiskModel, PerturbationParams) {
        (
            BranchedDiskModel::torus(2, 3).unwrap(),
            PerturbationParams::real(0.1, 0.0).unwrap(),
        )
    }

    #[test]
    fn coincidence_examples() {
        let (m, p) = trefoil();
        for t in [-0.7, -0.2, 0.05, 0.4, 0.9] {
            assert!(eval_coincidence(&m, &p, 1, c(0.0, t)).abs() < 1e-15);
        }
        assert!((eval_coincidence(&m, &p, 1, c(1.0, 0.0)) - 2.2).abs() < 1e-14);
        let lin = BranchedDiskModel::new(2, vec![]).unwrap();
        let p1 = PerturbationParams::real(1.0, 0.0).unwrap();
        let w = c(0.3, -0.6);
        assert!((eval_coincidence(&lin, &p1, 1, w) - 0.6).abs() < 1e-14);
    }

    #[test]
    fn no_triples_for_two_sheets_or_linear_maps() {
        let (m, p) = trefoil();
        let cfg = SolverConfig::for_model(&m);
        assert!(find_triple_coincidences(&m, &p, &cfg).is_empty());
        let lin = BranchedDiskModel::new(3, vec![]).unwrap();
        let p = PerturbationParams::real(0.1, 0.02).unwrap();
        assert!(find_triple_coincidences(&lin, &p, &cfg).is_empty());
    }

    #[test]
    fn triples_of_a_torus_model_are_roots() {
        let m = BranchedDiskModel::torus(3, 4).unwrap();
        let p = PerturbationParams::real(0.1, 0.02).unwrap();
        let cfg = SolverConfig::for_model(&m);
        let triples = find_triple_coincidences(&m, &p, &cfg);
        assert!(!triples.is_empty());
        for t in &triples {
            assert!(eval_coincidence(&m, &p, t.k, t.w).abs() < 1e-10);
            assert!(eval_coincidence(&m, &p, t.l, t.w).abs() < 1e-10);
            // grid scan around the root confirms a sign change of both functions
            let h = 1e-4;
            for k in [t.k, t.l] {
                let vals: Vec<f64> = (0..16)
                    .map(|j| {
                        let a = 2.0 * std::f64::consts::PI * j as f64 / 16.0;
                        eval_coincidence(&m, &p, k, t.w + C64::from_polar(h, a))
                    })
                    .collect();
                assert!(vals.iter().any(|v| *v > 0.0) && vals.iter().any(|v| *v < 0.0));
            }
        }
    }

    #[test]
    fn trefoil_locus_contains_negative_axis() {
        let (m, p) = trefoil();
        let cfg = SolverConfig::for_model(&m);
        let sample = sample_locus(&m, &p, 48, &cfg, &LocusTolerances::default());
        // points on the negative real axis near 0 are close to the sampled locus
        let pts: Vec<C64> = sample.polylines.iter().flat_map(|l| l.points.clone()).collect();
        for x in [0.01, 0.02, 0.05] {
            let d = pts.iter().map(|q| (q - c(-x, 0.0)).norm()).fold(f64::INFINITY, f64::min);
            assert!(d < 0.01, "distance {d} at -{x}");
        }
        // the hyperbola branch meets the axis at w = ±i/√30: a singular point at z = -1/30
        assert!(sample
            .singular_candidates
            .iter()
            .any(|z| (*z - c(-1.0 / 30.0, 0.0)).norm() < 1e-6));
    }

    #[test]
    fn linear_locus_is_negative_axis() {
        let m = BranchedDiskModel::new(2, vec![]).unwrap();
        let p = PerturbationParams::real(1.0, 0.0).unwrap();
        let cfg = SolverConfig::for_model(&m);
        let sample = sample_locus(&m, &p, 32, &cfg, &LocusTolerances::default());
        assert!(!sample.polylines.is_empty());
        for line in &sample.polylines {
            for z in &line.points {
                assert!(z.im.abs() < 1e-9 && z.re <= 1e-12, "{z}");
            }
        }
    }

    #[test]
    fn refinement_is_consistent() {
        let (m, p) = trefoil();
        let cfg = SolverConfig::for_model(&m);
        let tol = LocusTolerances::default();
        let a = sample_locus(&m, &p, 32, &cfg, &tol);
        let b = sample_locus(&m, &p, 64, &cfg, &tol);
        let pa: Vec<C64> = a.polylines.iter().flat_map(|l| l.points.clone()).collect();
        let pb: Vec<C64> = b.polylines.iter().flat_map(|l| l.points.clone()).collect();
        // in the base plane a w-cell of size δ at radius r has size ≈ N r δ ≤ 2δ here
        let cell = 2.0 * a.cell_size * 2.0;
        assert!(hausdorff(&pa, &pb) < 2.0 * cell);
    }

    #[test]
    fn circle_crossings() {
        let (m, p) = trefoil();
        let tol = LocusTolerances::default();
        let rho = 0.02;
        let circle = move |t: f64| C64::from_polar(rho, t);
        let lift0 = C64::from_polar(rho.sqrt(), 0.0);
        let hits = path_locus_intersections(
            &m, &p, &circle, 0.0, 2.0 * std::f64::consts::PI, lift0, 1, 512, &tol,
        )
        .unwrap();
        assert_eq!(hits.len(), 1);
        assert!((hits[0].theta - std::f64::consts::PI).abs() < 1e-8);

        let around = |t: f64| c(-0.1, 0.0) + C64::from_polar(0.02, t);
        let lift0 = (c(-0.1, 0.0) + 0.02).sqrt();
        let hits = path_locus_intersections(
            &m, &p, &around, 0.0, 2.0 * std::f64::consts::PI, lift0, 1, 512, &tol,
        )
        .unwrap();
        assert_eq!(hits.len(), 2);

        let away = |t: f64| c(0.3, 0.0) + C64::from_polar(0.05, t);
        let hits = path_locus_intersections(
            &m, &p, &away, 0.0, 2.0 * std::f64::consts::PI, c(0.3f64.sqrt(), 0.0), 1, 256, &tol,
        )
        .unwrap();
        assert!(hits.is_empty());
    }
}
