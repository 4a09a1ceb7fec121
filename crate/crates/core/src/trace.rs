//! Lifting Γ through `w ↦ wᴺ` and reading off the braid of the `N` strands
//! ordered by height `Re z₂`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braid::{BraidWord, Letter};
use crate::loop_gamma::{parametrize_loop, LoopGamma, SegmentKind};
use crate::surface::{eval_z2, z2_wirtinger, BranchedDiskModel, PerturbationParams, C64};
use crate::Sign;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    /// Lower bound on the number of steps around the whole loop.
    pub min_steps: usize,
    pub tol_gap: f64,
    /// Heights closer than this without crossing force a smaller step.
    pub guard_band: f64,
    /// Bound on a lift's move per step, relative to `|w|`.
    pub max_lift_step: f64,
    pub tol_theta: f64,
    pub tol_grad: f64,
    /// Smallest step in `θ` before giving up.
    pub min_step: f64,
    /// `|μ/λ|` at or below this (or `|λ/μ|`) selects a regime sign.
    pub regime_ratio: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            min_steps: 4096,
            tol_gap: 1e-9,
            guard_band: 1e-8,
            max_lift_step: 0.1,
            tol_theta: 1e-10,
            tol_grad: 1e-6,
            min_step: 1e-13,
            regime_ratio: 0.1,
        }
    }
}

impl TraceConfig {
    /// Every adaptive tolerance halved (and twice the step count).
    pub fn refined(&self) -> Self {
        TraceConfig {
            min_steps: 2 * self.min_steps,
            guard_band: self.guard_band / 2.0,
            max_lift_step: self.max_lift_step / 2.0,
            tol_theta: self.tol_theta / 2.0,
            min_step: self.min_step / 2.0,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.min_steps < 16 {
            return Err("trace.min_steps must be at least 16".into());
        }
        for (name, v) in [
            ("trace.tol_gap", self.tol_gap),
            ("trace.guard_band", self.guard_band),
            ("trace.max_lift_step", self.max_lift_step),
            ("trace.tol_theta", self.tol_theta),
            ("trace.tol_grad", self.tol_grad),
            ("trace.min_step", self.min_step),
            ("trace.regime_ratio", self.regime_ratio),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive"));
            }
        }
        if self.regime_ratio >= 1.0 || self.max_lift_step >= 1.0 {
            return Err("trace.regime_ratio and trace.max_lift_step must be below 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("the fiber over 0 is degenerate")]
    ZeroFiber,
    #[error("loop passes through a double point at θ = {theta} (depth gap {im_gap:e})")]
    DoublePointOnLoop { theta: f64, im_gap: f64 },
    #[error("strands touch without crossing at θ = {theta} (slope {slope:e})")]
    TangencyDetected { theta: f64, slope: f64 },
    #[error("lift tracking is ambiguous at θ = {theta}")]
    LiftAmbiguity { theta: f64 },
    #[error("word permutation {word:?} differs from the fiber monodromy {fiber:?}")]
    MonodromyMismatch { word: Vec<usize>, fiber: Vec<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    BaseArc,
    DetourArc(usize),
    TubeSide { detour: usize, outbound: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrandState {
    pub theta: f64,
    pub lifts: Vec<C64>,
    pub heights: Vec<f64>,
    pub depths: Vec<f64>,
    /// Strand indices by decreasing height.
    pub order: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub theta_star: f64,
    /// 1-based height position of the upper strand before the crossing.
    pub position: usize,
    pub sign: Sign,
    pub provenance: Provenance,
    pub segment: usize,
    /// Depth difference `D_{k+1} − D_k` at the crossing.
    pub im_gap: f64,
    /// `dH_k/dθ − dH_{k+1}/dθ` at the crossing.
    pub slope_gap: f64,
}

impl CrossingEvent {
    pub fn letter(&self) -> Letter {
        Letter::new(self.position, self.sign)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracedBraid {
    pub word: BraidWord,
    pub events: Vec<CrossingEvent>,
    /// Position permutation of the word (`perm[p]` = final position).
    pub permutation: Vec<usize>,
    /// The same permutation read from matching lifts at the two ends.
    pub fiber_permutation: Vec<usize>,
    pub strand_count: usize,
    pub steps: usize,
}

/// All `N`-th roots of `z`, sorted by argument in `[0, 2π)`.
pub fn lift_fiber(z: C64, n: usize) -> Vec<C64> {
    let r = z.norm().powf(1.0 / n as f64);
    let a = z.arg().rem_euclid(TAU) / n as f64;
    (0..n)
        .map(|k| C64::from_polar(r, a + TAU * k as f64 / n as f64))
        .collect()
}

pub fn try_lift_fiber(z: C64, n: usize) -> Result<Vec<C64>, TraceError> {
    if z.norm() == 0.0 {
        return Err(TraceError::ZeroFiber);
    }
    Ok(lift_fiber(z, n))
}

/// The `N`-th root of `z` closest to `prev`.
pub fn nearest_root(z: C64, n: usize, prev: C64) -> C64 {
    let r = z.norm().powf(1.0 / n as f64);
    let a = z.arg() / n as f64;
    let step = TAU / n as f64;
    // rotate the principal root by the multiple of 2π/N nearest to prev
    let k = ((prev.arg() - a) / step).round();
    C64::from_polar(r, a + k * step)
}

fn height_depth(model: &BranchedDiskModel, params: &PerturbationParams, w: C64) -> (f64, f64) {
    let z2 = eval_z2(model, params, w);
    (z2.re, z2.im)
}

/// `dH/ds` for the strand at `w` moving over a base velocity `dz`.
fn height_rate(model: &BranchedDiskModel, params: &PerturbationParams, w: C64, dz: C64) -> f64 {
    let n = model.branch_order();
    let dw = dz / (w.powu(n as u32 - 1) * n as f64);
    let (a, b) = z2_wirtinger(model, params, w);
    (a * dw + b * dw.conj()).re
}

fn sort_order(heights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..heights.len()).collect();
    order.sort_by(|&a, &b| heights[b].total_cmp(&heights[a]));
    order
}

/// Moves each lift to the nearest root of `z`, failing when two lifts
/// would land on the same root or a lift moves too far.
fn advance(lifts: &[C64], z: C64, n: usize, max_rel: f64) -> Option<Vec<C64>> {
    let next: Vec<C64> = lifts.iter().map(|&w| nearest_root(z, n, w)).collect();
    let spacing = 2.0 * z.norm().powf(1.0 / n as f64) * (std::f64::consts::PI / n as f64).sin();
    for (a, b) in lifts.iter().zip(&next) {
        let d = (a - b).norm();
        if d > max_rel * a.norm() || d > 0.25 * spacing {
            return None;
        }
    }
    Some(next)
}

/// Regime sign: `+1` when `λ` dominates, `−1` when `μ` does.
pub fn regime_sign(params: &PerturbationParams, ratio: f64) -> Option<Sign> {
    let (l, m) = (params.lambda.norm(), params.mu.norm());
    if m <= ratio * l {
        Some(Sign::Positive)
    } else if l <= ratio * m {
        Some(Sign::Negative)
    } else {
        None
    }
}

struct Tracer<'a> {
    model: &'a BranchedDiskModel,
    params: &'a PerturbationParams,
    cfg: &'a TraceConfig,
    n: usize,
}

impl Tracer<'_> {
    fn heights(&self, lifts: &[C64]) -> (Vec<f64>, Vec<f64>) {
        lifts
            .iter()
            .map(|&w| height_depth(self.model, self.params, w))
            .unzip()
    }
}

/// Traces the braid along the loop, starting at its base point.
pub fn trace_braid(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    lp: &LoopGamma,
    cfg: &TraceConfig,
) -> Result<TracedBraid, TraceError> {
    let n = model.branch_order();
    let tr = Tracer {
        model,
        params,
        cfg,
        n,
    };
    let par = parametrize_loop(lp);
    let mut features: Vec<C64> = lp.detours.iter().map(|d| d.center).collect();
    features.extend(lp.singular_points.iter().copied());

    let start = try_lift_fiber(lp.base_point, n)?;
    let mut lifts = start.clone();
    let (h0, _) = tr.heights(&lifts);
    let initial_order = sort_order(&h0);
    let mut order = initial_order.clone();
    let mut events = Vec::new();
    let mut steps = 0usize;

    for (si, seg) in lp.segments.iter().enumerate() {
        let g = seg.geometry;
        let (ta, tb) = par.segment_range(si);
        let span = tb - ta;
        let len = g.length();
        let provenance = match (seg.kind, seg.detour) {
            (SegmentKind::BaseArc, _) => Provenance::BaseArc,
            (SegmentKind::DetourArc, Some(i)) => Provenance::DetourArc(i),
            (SegmentKind::TubeSide { outbound }, Some(i)) => Provenance::TubeSide {
                detour: i,
                outbound,
            },
            (_, None) => Provenance::BaseArc,
        };
        let base_ds = 1.0 / (64.0f64).max((cfg.min_steps as f64 * span / TAU).ceil());
        let min_ds = cfg.min_step / span;
        let mut s = 0.0;
        // the loop is continuous, so segment starts match the previous end
        while s < 1.0 {
            let z = g.point(s);
            let dist = features
                .iter()
                .map(|f| (f - z).norm())
                .fold(f64::INFINITY, f64::min);
            let mut ds = base_ds.min(0.05 * dist / len).min(1.0 - s).max(min_ds.min(1.0 - s));
            loop {
                match tr.try_step(&g, s, ds, &lifts, &order) {
                    StepOutcome::Accept { lifts: next, changed } => {
                        let theta_of = |x: f64| ta + x * span;
                        let mut found = Vec::new();
                        for q in changed {
                            found.push(tr.locate_crossing(&g, s, ds, &lifts, &order, q, theta_of, span)?);
                        }
                        found.sort_by(|a, b| {
                            a.theta_star
                                .total_cmp(&b.theta_star)
                                .then(a.position.cmp(&b.position))
                        });
                        // simultaneous crossings must be far apart and are listed by position
                        for pair in found.windows(2) {
                            if (pair[1].theta_star - pair[0].theta_star).abs() < 10.0 * cfg.tol_theta
                                && pair[1].position.abs_diff(pair[0].position) < 2
                            {
                                return Err(TraceError::LiftAmbiguity {
                                    theta: pair[0].theta_star,
                                });
                            }
                        }
                        let mut cluster_start = 0;
                        for i in 1..=found.len() {
                            if i == found.len()
                                || found[i].theta_star - found[cluster_start].theta_star
                                    >= 10.0 * cfg.tol_theta
                            {
                                found[cluster_start..i].sort_by_key(|e| e.position);
                                cluster_start = i;
                            }
                        }
                        for mut e in found {
                            e.segment = si;
                            e.provenance = provenance;
                            order.swap(e.position - 1, e.position);
                            events.push(e);
                        }
                        lifts = next;
                        s += ds;
                        steps += 1;
                        break;
                    }
                    StepOutcome::Refine => {
                        if ds <= min_ds {
                            return Err(TraceError::LiftAmbiguity {
                                theta: ta + s * span,
                            });
                        }
                        ds = (ds / 2.0).max(min_ds);
                    }
                }
            }
        }
    }

    let word = BraidWord::new(n, events.iter().map(|e| e.letter()).collect())
        .expect("positions lie in 1..N-1");
    let permutation = word.permutation();
    // strand a ends on the starting lift of strand b, which had position pos0[b]
    let mut pos0 = vec![0; n];
    for (p, &s) in initial_order.iter().enumerate() {
        pos0[s] = p;
    }
    let mut fiber_permutation = vec![0; n];
    for a in 0..n {
        let b = (0..n)
            .min_by(|&i, &j| (lifts[a] - start[i]).norm().total_cmp(&(lifts[a] - start[j]).norm()))
            .unwrap();
        fiber_permutation[pos0[a]] = pos0[b];
    }
    if permutation != fiber_permutation {
        return Err(TraceError::MonodromyMismatch {
            word: permutation,
            fiber: fiber_permutation,
        });
    }
    Ok(TracedBraid {
        word,
        events,
        permutation,
        fiber_permutation,
        strand_count: n,
        steps,
    })
}

enum StepOutcome {
    /// Step accepted; `changed` lists 0-based positions `q` whose pair
    /// `(q, q+1)` swapped.
    Accept { lifts: Vec<C64>, changed: Vec<usize> },
    Refine,
}

impl Tracer<'_> {
    fn try_step(
        &self,
        g: &crate::loop_gamma::SegmentGeometry,
        s: f64,
        ds: f64,
        lifts: &[C64],
        order: &[usize],
    ) -> StepOutcome {
        let n = self.n;
        let z1 = g.point(s + ds);
        let Some(next) = advance(lifts, z1, n, self.cfg.max_lift_step) else {
            return StepOutcome::Refine;
        };
        let (h0, _) = self.heights(lifts);
        let (h1, _) = self.heights(&next);
        // any pair that swapped must be height-adjacent, and swaps must not overlap
        let mut changed = Vec::new();
        for p in 0..n {
            for q in p + 1..n {
                let (a, b) = (order[p], order[q]);
                if h1[a] <= h1[b] {
                    if q != p + 1 {
                        return StepOutcome::Refine;
                    }
                    changed.push(p);
                }
            }
        }
        if changed.windows(2).any(|w| w[1] == w[0] + 1) {
            return StepOutcome::Refine;
        }
        // a pair may touch twice within one step: check the cubic interpolant
        let dz0 = g.tangent(s) * ds;
        let dz1 = g.tangent(s + ds) * ds;
        for p in 0..n - 1 {
            if changed.contains(&p) {
                continue;
            }
            let (a, b) = (order[p], order[p + 1]);
            let g0 = h0[a] - h0[b];
            let g1 = h1[a] - h1[b];
            if g1 < self.cfg.guard_band && ds > self.cfg.min_step {
                return StepOutcome::Refine;
            }
            let d0 = height_rate(self.model, self.params, lifts[a], dz0)
                - height_rate(self.model, self.params, lifts[b], dz0);
            let d1 = height_rate(self.model, self.params, next[a], dz1)
                - height_rate(self.model, self.params, next[b], dz1);
            for i in 1..16 {
                let t = i as f64 / 16.0;
                let (t2, t3) = (t * t, t * t * t);
                let v = (2.0 * t3 - 3.0 * t2 + 1.0) * g0
                    + (t3 - 2.0 * t2 + t) * d0
                    + (-2.0 * t3 + 3.0 * t2) * g1
                    + (t3 - t2) * d1;
                if v <= 0.0 {
                    return StepOutcome::Refine;
                }
            }
        }
        StepOutcome::Accept {
            lifts: next,
            changed,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn locate_crossing(
        &self,
        g: &crate::loop_gamma::SegmentGeometry,
        s: f64,
        ds: f64,
        lifts: &[C64],
        order: &[usize],
        q: usize,
        theta_of: impl Fn(f64) -> f64,
        span: f64,
    ) -> Result<CrossingEvent, TraceError> {
        let n = self.n;
        let (a, b) = (order[q], order[q + 1]);
        let at = |x: f64, from: [C64; 2]| -> [C64; 2] {
            let z = g.point(x);
            [nearest_root(z, n, from[0]), nearest_root(z, n, from[1])]
        };
        let gap = |ws: [C64; 2]| {
            height_depth(self.model, self.params, ws[0]).0 - height_depth(self.model, self.params, ws[1]).0
        };
        let (mut lo, mut hi) = (s, s + ds);
        let mut wlo = [lifts[a], lifts[b]];
        while (hi - lo) * span > self.cfg.tol_theta {
            let mid = 0.5 * (lo + hi);
            let wm = at(mid, wlo);
            if gap(wm) > 0.0 {
                lo = mid;
                wlo = wm;
            } else {
                hi = mid;
            }
        }
        let x = 0.5 * (lo + hi);
        let wc = at(x, wlo);
        let im_gap = height_depth(self.model, self.params, wc[1]).1
            - height_depth(self.model, self.params, wc[0]).1;
        // central differences in θ
        let h = self.cfg.tol_theta.sqrt();
        let hs = h / span;
        let slope_gap = (gap(at(x + hs, wc)) - gap(at(x - hs, wc))) / (2.0 * h);
        let theta_star = theta_of(x);
        if im_gap.abs() <= self.cfg.tol_gap {
            return Err(TraceError::DoublePointOnLoop { theta: theta_star, im_gap });
        }
        if slope_gap.abs() <= self.cfg.tol_grad {
            return Err(TraceError::TangencyDetected {
                theta: theta_star,
                slope: slope_gap,
            });
        }
        Ok(CrossingEvent {
            theta_star,
            position: q + 1,
            sign: Sign::of(im_gap * slope_gap),
            provenance: Provenance::BaseArc,
            segment: 0,
            im_gap,
            slope_gap,
        })
    }
}

/// Events of one detour, in loop order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetourEvents {
    pub detour: usize,
    pub outbound: Vec<Letter>,
    pub arc: Vec<Letter>,
    pub inbound: Vec<Letter>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventClassification {
    /// Indices into the event list of the base-circle crossings.
    pub base: Vec<usize>,
    pub detours: Vec<DetourEvents>,
    pub regime: Option<Sign>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("block structure check failed: {0}")]
    BlockStructureFailure(String),
}

/// Partitions events by where on Γ they occur and checks the structure
/// the band decomposition relies on.
pub fn classify_events(
    traced: &TracedBraid,
    lp: &LoopGamma,
    params: &PerturbationParams,
    cfg: &TraceConfig,
) -> Result<EventClassification, ClassifyError> {
    let n = traced.strand_count;
    let fail = |m: String| Err(ClassifyError::BlockStructureFailure(m));
    let base: Vec<usize> = traced
        .events
        .iter()
        .enumerate()
        .filter(|(_, e)| e.provenance == Provenance::BaseArc)
        .map(|(i, _)| i)
        .collect();
    let letters: Vec<Letter> = base.iter().map(|&i| traced.events[i].letter()).collect();
    if letters.len() != n - 1 {
        return fail(format!("{} base crossings, expected {}", letters.len(), n - 1));
    }
    let mut ks: Vec<usize> = letters.iter().map(|l| l.k).collect();
    ks.sort_unstable();
    if ks != (1..n).collect::<Vec<_>>() {
        return fail(format!("base generators {ks:?} are not 1..{}", n - 1));
    }
    // parities form at most two cyclic runs
    let parity: Vec<usize> = letters.iter().map(|l| l.k % 2).collect();
    let switches = (0..parity.len())
        .filter(|&i| parity[i] != parity[(i + 1) % parity.len()])
        .count();
    if switches > 2 {
        return fail(format!("base generators {:?} do not form two blocks", letters.iter().map(|l| l.k).collect::<Vec<_>>()));
    }
    let regime = regime_sign(params, cfg.regime_ratio);
    if let Some(s) = regime {
        if let Some(l) = letters.iter().find(|l| l.sign != s) {
            return fail(format!("base crossing {l} has the wrong sign for the regime"));
        }
    }
    let mut detours = Vec::new();
    for i in 0..lp.detours.len() {
        let pick = |want: Provenance| -> Vec<Letter> {
            traced
                .events
                .iter()
                .filter(|e| e.provenance == want)
                .map(|e| e.letter())
                .collect()
        };
        let outbound = pick(Provenance::TubeSide {
            detour: i,
            outbound: true,
        });
        let inbound = pick(Provenance::TubeSide {
            detour: i,
            outbound: false,
        });
        let arc = pick(Provenance::DetourArc(i));
        if arc.len() != 2 || arc[0] != arc[1] {
            return fail(format!("detour {i} contributes {arc:?}, expected two equal letters"));
        }
        let undo: Vec<Letter> = outbound.iter().rev().map(|l| l.inverse()).collect();
        if inbound != undo {
            return fail(format!(
                "tube {i}: return crossings {inbound:?} do not cancel {outbound:?}"
            ));
        }
        detours.push(DetourEvents {
            detour: i,
            outbound,
            arc,
            inbound,
        });
    }
    Ok(EventClassification {
        base,
        detours,
        regime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loop_gamma::{build_loop, LoopConfig};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn fibers() {
        let f = lift_fiber(c(1.0, 0.0), 2);
        assert!((f[0] - c(1.0, 0.0)).norm() < 1e-15 && (f[1] - c(-1.0, 0.0)).norm() < 1e-15);
        let f = lift_fiber(c(-0.001, 0.0), 3);
        for (w, a) in f.iter().zip([1.0, 3.0, 5.0]) {
            assert!((w.norm() - 0.1).abs() < 1e-15);
            assert!((w.arg().rem_euclid(TAU) - a * std::f64::consts::PI / 3.0).abs() < 1e-12);
        }
        for n in 2..6 {
            let z = c(0.3, -0.2);
            let prod = lift_fiber(z, n).iter().fold(c(1.0, 0.0), |a, b| a * b);
            let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
            assert!((prod - z * sign).norm() < 1e-14);
        }
        assert_eq!(try_lift_fiber(c(0.0, 0.0), 3), Err(TraceError::ZeroFiber));
    }

    fn circle_trace(n: usize, lambda: f64, mu: f64) -> TracedBraid {
        let m = BranchedDiskModel::new(n, vec![]).unwrap();
        let p = PerturbationParams::real(lambda, mu).unwrap();
        let lp = build_loop(&m, &p, &[], &[], &LoopConfig::default()).unwrap();
        trace_braid(&m, &p, &lp, &TraceConfig::default()).unwrap()
    }

    #[test]
    fn two_strand_circles() {
        let t = circle_trace(2, 0.1, 0.0);
        assert_eq!(t.word.to_text(), "s1");
        assert_eq!(t.permutation, vec![1, 0]);
        let t = circle_trace(2, 0.0, 0.1);
        assert_eq!(t.word.to_text(), "s1^-1");
    }

    #[test]
    fn blocks_on_four_strands() {
        let m = BranchedDiskModel::new(4, vec![]).unwrap();
        let p = PerturbationParams::real(0.1, 0.0).unwrap();
        let lp = build_loop(&m, &p, &[], &[], &LoopConfig::default()).unwrap();
        let t = trace_braid(&m, &p, &lp, &TraceConfig::default()).unwrap();
        assert_eq!(t.word.len(), 3);
        assert!(t.word.letters().iter().all(|l| l.sign == Sign::Positive));
        let cls = classify_events(&t, &lp, &p, &TraceConfig::default()).unwrap();
        assert_eq!(cls.base.len(), 3);
        assert_eq!(cls.regime, Some(Sign::Positive));
        assert_eq!(t.word.closure_components(), 1);
    }

    #[test]
    fn regime_guard() {
        let p = |l, m| PerturbationParams::real(l, m).unwrap();
        assert_eq!(regime_sign(&p(0.1, 0.0), 0.1), Some(Sign::Positive));
        assert_eq!(regime_sign(&p(0.0, 0.1), 0.1), Some(Sign::Negative));
        assert_eq!(regime_sign(&p(0.1, 0.05), 0.1), None);
    }

    #[test]
    fn height_rate_matches_differences() {
        let m = BranchedDiskModel::torus(3, 4).unwrap();
        let p = PerturbationParams::real(0.1, 0.03).unwrap();
        let z = c(0.02, 0.01);
        let dz = c(-0.3, 0.7);
        let w = lift_fiber(z, 3)[1];
        let h = 1e-6;
        let fwd = height_depth(&m, &p, nearest_root(z + dz * h, 3, w)).0;
        let bwd = height_depth(&m, &p, nearest_root(z - dz * h, 3, w)).0;
        assert!(((fwd - bwd) / (2.0 * h) - height_rate(&m, &p, w, dz)).abs() < 1e-7);
    }
}
