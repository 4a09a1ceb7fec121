//! Self-intersections of the perturbed disk.
//!
//! Two preimages share the first coordinate exactly when `w₂ = νᵏ w₁` with
//! `ν = e^{2πi/N}`, so each sheet pairing `k` reduces the search to the
//! zeros of the complex mismatch `G_k(w) = z2(w) − z2(νᵏw)` away from the
//! branch point.

use nalgebra::{DMatrix, Schur};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::locus::{find_triple_coincidences, TripleCoincidence};
use crate::newton::{self, Eval2, NewtonFailure};
use crate::surface::{
    eval_f, eval_z2, jacobian_f, root_of_unity, z2_wirtinger, BranchedDiskModel, Jacobian,
    PerturbationParams, Point4, C64,
};
use crate::Sign;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SheetPairing {
    pub k: usize,
    pub nu: C64,
}

impl SheetPairing {
    pub fn new(n: usize, k: usize) -> Self {
        assert!(k >= 1 && k < n, "sheet pairing {k} out of range for N = {n}");
        SheetPairing {
            k,
            nu: root_of_unity(n, k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublePoint {
    pub w1: C64,
    pub w2: C64,
    pub pairing: SheetPairing,
    pub image: Point4,
    pub sign: Sign,
    pub residual: f64,
    pub transversality_margin: f64,
}

impl DoublePoint {
    /// Projection of the double point to the base plane, `w₁^N`.
    pub fn base_point(&self) -> C64 {
        self.image.z1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid_radii: usize,
    pub grid_angles: usize,
    pub newton_max_iter: usize,
    pub tol_residual: f64,
    pub tol_dedupe: f64,
    pub tol_transverse: f64,
    pub exclusion_radius: f64,
}

impl SolverConfig {
    pub fn for_model(model: &BranchedDiskModel) -> Self {
        SolverConfig {
            exclusion_radius: 1e-4 * model.domain_radius(),
            ..Self::default()
        }
    }

    pub fn validate(&self, r0: f64) -> Result<(), String> {
        let positive = self.grid_radii > 0
            && self.grid_angles > 0
            && self.newton_max_iter > 0
            && self.tol_residual > 0.0
            && self.tol_dedupe > 0.0
            && self.tol_transverse > 0.0
            && self.exclusion_radius > 0.0;
        if !positive {
            return Err("solver settings must all be positive".into());
        }
        if self.exclusion_radius >= r0 {
            return Err(format!(
                "exclusion radius {} must be below the domain radius {r0}",
                self.exclusion_radius
            ));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid_radii: 24,
            grid_angles: 48,
            newton_max_iter: 50,
            tol_residual: 1e-10,
            tol_dedupe: 1e-6,
            tol_transverse: 1e-12,
            exclusion_radius: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub seeds: usize,
    pub nonconverged: usize,
    pub escaped: usize,
    pub branch_point_hits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoublePointSet {
    pub points: Vec<DoublePoint>,
    pub diagnostics: SolverDiagnostics,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DoublePointError {
    #[error("tangent planes are not transverse at {} double point(s)", failing.len())]
    GenericityFailure {
        points: Vec<DoublePoint>,
        failing: Vec<usize>,
    },
    #[error("oracle precondition violated: {0}")]
    PreconditionViolated(&'static str),
    #[error("companion eigenvalue computation failed")]
    EigenFailure,
}

/// `G_k(w) = z2(w) − z2(νᵏ w)`.
pub fn pair_mismatch(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    k: usize,
    w: C64,
) -> C64 {
    let nu = root_of_unity(model.branch_order(), k);
    eval_z2(model, params, w) - eval_z2(model, params, nu * w)
}

/// Wirtinger derivatives of `G_k`.
pub fn pair_mismatch_wirtinger(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    k: usize,
    w: C64,
) -> (C64, C64) {
    let nu = root_of_unity(model.branch_order(), k);
    let (a, b) = z2_wirtinger(model, params, w);
    let (c, d) = z2_wirtinger(model, params, nu * w);
    (a - nu * c, b - nu.conj() * d)
}

/// Real partials `(∂G/∂x, ∂G/∂y)` from Wirtinger derivatives.
pub(crate) fn real_partials(dw: C64, dwb: C64) -> (C64, C64) {
    (dw + dwb, C64::new(0.0, 1.0) * (dw - dwb))
}

fn mismatch_system<'a>(
    model: &'a BranchedDiskModel,
    params: &PerturbationParams,
    k: usize,
) -> impl Fn(C64) -> Eval2 + 'a {
    let params = *params;
    move |w| {
        let g = pair_mismatch(model, &params, k, w);
        let (dw, dwb) = pair_mismatch_wirtinger(model, &params, k, w);
        let (gx, gy) = real_partials(dw, dwb);
        ([g.re, g.im], [[gx.re, gy.re], [gx.im, gy.im]])
    }
}

fn arg_2pi(w: C64) -> f64 {
    let a = w.arg();
    if a < 0.0 {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

/// Merges points closer than `tol`, keeping the first of each cluster.
fn dedupe(points: &mut Vec<(C64, f64)>, tol: f64) {
    let mut out: Vec<(C64, f64)> = Vec::with_capacity(points.len());
    for &(w, res) in points.iter() {
        match out.iter_mut().find(|(u, _)| (*u - w).norm() < tol) {
            Some(existing) => {
                if res < existing.1 {
                    *existing = (w, res);
                }
            }
            None => out.push((w, res)),
        }
    }
    *points = out;
}

const MAX_RESEED_CENTERS: usize = 64;

/// Multistart Newton solve of `G_k = 0` on the punctured disk.
pub(crate) fn pair_roots(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    k: usize,
    cfg: &SolverConfig,
    diag: &mut SolverDiagnostics,
) -> Vec<(C64, f64)> {
    let r0 = model.domain_radius();
    let eps0 = cfg.exclusion_radius;
    let sys = mismatch_system(model, params, k);
    let mut found: Vec<(C64, f64)> = Vec::new();
    let run = |seed: C64, found: &mut Vec<(C64, f64)>, diag: &mut SolverDiagnostics| {
        diag.seeds += 1;
        match newton::solve(&sys, seed, cfg.newton_max_iter, cfg.tol_residual, 1.5 * r0) {
            Ok(root) => {
                let m = root.root.norm();
                if m <= eps0 {
                    diag.branch_point_hits += 1;
                } else if m < r0 {
                    found.push((root.root, root.residual));
                }
            }
            Err(NewtonFailure::NoConvergence) => diag.nonconverged += 1,
            Err(NewtonFailure::Escaped) => diag.escaped += 1,
        }
    };
    for seed in newton::polar_seeds(eps0, r0, cfg.grid_radii, cfg.grid_angles) {
        run(seed, &mut found, diag);
    }
    dedupe(&mut found, cfg.tol_dedupe);
    // clustered roots have small basins; reseed locally around every hit.
    // Hundreds of hits mean a degenerate (non-isolated) zero set, where
    // reseeding adds nothing.
    let centers: Vec<C64> = found.iter().map(|p| p.0).collect();
    for c in centers.into_iter().take(MAX_RESEED_CENTERS) {
        for seed in newton::local_seeds(c, 1e-5 * r0, 0.05 * r0, 6, 12) {
            run(seed, &mut found, diag);
        }
    }
    dedupe(&mut found, cfg.tol_dedupe);
    found
}

/// Determinant of the 4×4 matrix with the given columns.
pub fn det4(cols: [[f64; 4]; 4]) -> f64 {
    let m = DMatrix::from_fn(4, 4, |r, c| cols[c][r]);
    m.determinant()
}

/// Intersection sign from the oriented 4-frame `(∂ₓF(w₁), ∂ᵧF(w₁), ∂ₓF(w₂), ∂ᵧF(w₂))`,
/// together with `|det|` as the transversality margin.
pub fn sign_from_jacobians(j1: &Jacobian, j2: &Jacobian) -> (Sign, f64) {
    let det = det4([j1[0], j1[1], j2[0], j2[1]]);
    (Sign::of(det), det.abs())
}

/// Sign of a double point from the 4×4 determinant of the stacked Jacobians.
pub fn double_point_sign(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    w1: C64,
    w2: C64,
    tol_transverse: f64,
) -> Result<(Sign, f64), f64> {
    let (sign, margin) = sign_from_jacobians(
        &jacobian_f(model, params, w1),
        &jacobian_f(model, params, w2),
    );
    if margin > tol_transverse {
        Ok((sign, margin))
    } else {
        Err(margin)
    }
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Sign of a double point computed in the adapted frame `(u, v, e₃, e₄)`,
/// where `u` spans the projection to the base plane of the line shared by
/// the two tangent planes after dropping the last coordinate, and `v = iu`.
/// Both tangent planes lift `u` and `v` to vectors `(1,0,α,γ)`, `(0,1,β,δ)`
/// and the sign is that of `−(β − β')(γ − γ')`.
///
/// Returns `None` if the construction degenerates.
pub fn sign_by_frame_decomposition(j1: &Jacobian, j2: &Jacobian) -> Option<Sign> {
    let pi3 = |v: [f64; 4]| [v[0], v[1], v[2]];
    let n0 = cross3(pi3(j1[0]), pi3(j1[1]));
    let n1 = cross3(pi3(j2[0]), pi3(j2[1]));
    let line = cross3(n0, n1);
    let u = [line[0], line[1]];
    let un = u[0].hypot(u[1]);
    if un == 0.0 || !un.is_finite() {
        return None;
    }
    let u = [u[0] / un, u[1] / un];
    let v = [-u[1], u[0]];
    // lift a base-plane vector `a` into the tangent plane spanned by the columns of j
    let lift = |j: &Jacobian, a: [f64; 2]| -> Option<[f64; 4]> {
        let (p, q, r, s) = (j[0][0], j[1][0], j[0][1], j[1][1]);
        let det = p * s - q * r;
        if det == 0.0 {
            return None;
        }
        let c0 = (s * a[0] - q * a[1]) / det;
        let c1 = (-r * a[0] + p * a[1]) / det;
        Some([
            c0 * j[0][0] + c1 * j[1][0],
            c0 * j[0][1] + c1 * j[1][1],
            c0 * j[0][2] + c1 * j[1][2],
            c0 * j[0][3] + c1 * j[1][3],
        ])
    };
    let u0 = lift(j1, u)?;
    let v0 = lift(j1, v)?;
    let u1 = lift(j2, u)?;
    let v1 = lift(j2, v)?;
    // coordinates in (u, v, e3, e4): the e3/e4 components are unchanged
    let (beta, beta_p) = (v0[2], v1[2]);
    let (gamma, gamma_p) = (u0[3], u1[3]);
    let value = -(beta - beta_p) * (gamma - gamma_p);
    if value == 0.0 {
        None
    } else {
        Some(Sign::of(value))
    }
}

fn canonical_representative(n: usize, k: usize, w: C64) -> C64 {
    if 2 * k == n {
        let other = root_of_unity(n, k) * w;
        if arg_2pi(other) < arg_2pi(w) {
            return other;
        }
    }
    w
}

fn build_point(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    k: usize,
    w1: C64,
    residual: f64,
) -> DoublePoint {
    let n = model.branch_order();
    let pairing = SheetPairing::new(n, k);
    let w2 = pairing.nu * w1;
    let (sign, margin) = sign_from_jacobians(
        &jacobian_f(model, params, w1),
        &jacobian_f(model, params, w2),
    );
    DoublePoint {
        w1,
        w2,
        pairing,
        image: eval_f(model, params, w1),
        sign,
        residual,
        transversality_margin: margin,
    }
}

/// All double points with `ε₀ < |w₁| < r0`, one per unordered preimage pair,
/// sorted by `(k, arg w₁, |w₁|)`.
pub fn find_double_points(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    cfg: &SolverConfig,
) -> Result<DoublePointSet, DoublePointError> {
    let n = model.branch_order();
    let mut diagnostics = SolverDiagnostics::default();
    let mut points = Vec::new();
    for k in 1..=n / 2 {
        let mut roots = pair_roots(model, params, k, cfg, &mut diagnostics);
        for r in roots.iter_mut() {
            r.0 = canonical_representative(n, k, r.0);
        }
        dedupe(&mut roots, cfg.tol_dedupe);
        points.extend(
            roots
                .into_iter()
                .map(|(w, res)| build_point(model, params, k, w, res)),
        );
    }
    points.sort_by(|a, b| {
        a.pairing
            .k
            .cmp(&b.pairing.k)
            .then(arg_2pi(a.w1).total_cmp(&arg_2pi(b.w1)))
            .then(a.w1.norm().total_cmp(&b.w1.norm()))
    });
    let failing: Vec<usize> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.transversality_margin <= cfg.tol_transverse)
        .map(|(i, _)| i)
        .collect();
    if !failing.is_empty() {
        return Err(DoublePointError::GenericityFailure { points, failing });
    }
    Ok(DoublePointSet {
        points,
        diagnostics,
    })
}

/// Roots of the univariate polynomial `G_k(w)/w` for a holomorphic
/// configuration, from the eigenvalues of its companion matrix.
pub fn holomorphic_oracle(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    k: usize,
) -> Result<Vec<C64>, DoublePointError> {
    if !model.is_holomorphic() {
        return Err(DoublePointError::PreconditionViolated(
            "h contains conjugate monomials",
        ));
    }
    if params.mu != C64::new(0.0, 0.0) || params.gamma != C64::new(0.0, 0.0) {
        return Err(DoublePointError::PreconditionViolated(
            "mu and gamma must vanish",
        ));
    }
    let n = model.branch_order();
    let max_deg = model.terms().iter().map(|m| m.deg_w).max().unwrap_or(1) as usize;
    // coefficients of G_k(w)/w, index = power of w
    let mut coeffs = vec![C64::new(0.0, 0.0); max_deg.max(1)];
    coeffs[0] = params.lambda * (1.0 - root_of_unity(n, k));
    for m in model.terms() {
        let d = m.deg_w as usize;
        coeffs[d - 1] += m.coeff * (1.0 - root_of_unity(n, (k * d) % n));
    }
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    // 1 − ν^{kd} is only zero up to rounding when kd ≡ 0 mod N
    while coeffs.len() > 1 && coeffs.last().unwrap().norm() <= 1e-12 * scale {
        coeffs.pop();
    }
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    // QR stalls when every root has the same modulus (`a·wᵈ + b`); shifting
    // the variable breaks the symmetry
    let mut eig = None;
    for s in [C64::new(0.0, 0.0), C64::new(0.3, 0.17), C64::new(-0.21, 0.42)] {
        let shifted = taylor_shift(&coeffs, s * scale_root(&coeffs));
        if let Some(roots) = companion_eigenvalues(&shifted) {
            eig = Some(roots.into_iter().map(|z| z + s * scale_root(&coeffs)).collect::<Vec<_>>());
            break;
        }
    }
    let eig = eig.ok_or(DoublePointError::EigenFailure)?;
    // polish on the polynomial itself
    let poly = |w: C64| coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * w + c);
    let dpoly = |w: C64| {
        coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, (i, c)| acc * w + c * i as f64)
    };
    Ok(eig
        .iter()
        .map(|&z| {
            let mut z = z;
            for _ in 0..3 {
                let d = dpoly(z);
                if d.norm() > 0.0 {
                    z -= poly(z) / d;
                }
            }
            z
        })
        .collect())
}

/// Coefficients of `p(x + s)`, lowest degree first.
fn taylor_shift(coeffs: &[C64], s: C64) -> Vec<C64> {
    let mut c = coeffs.to_vec();
    let n = c.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            let next = c[j + 1];
            c[j] += s * next;
        }
    }
    c
}

/// Typical root size, from the Cauchy-style bound `max |cᵢ/c_d|^{1/(d−i)}`.
fn scale_root(coeffs: &[C64]) -> f64 {
    let d = coeffs.len() - 1;
    let lead = coeffs[d].norm();
    (0..d)
        .map(|i| (coeffs[i].norm() / lead).powf(1.0 / (d - i) as f64))
        .fold(0.0, f64::max)
}

fn companion_eigenvalues(coeffs: &[C64]) -> Option<Vec<C64>> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    let companion = DMatrix::from_fn(deg, deg, |r, c| {
        if c == deg - 1 {
            -coeffs[r] / lead
        } else if r == c + 1 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let schur = Schur::try_new(companion, f64::EPSILON, 10_000)?;
    Some(schur.eigenvalues()?.iter().copied().collect())
}

/// γ values tried in order when a configuration fails a genericity check.
pub fn gamma_schedule(params: &PerturbationParams) -> Vec<C64> {
    let base = 0.01 * params.scale();
    (0..7)
        .map(|j| {
            C64::from_polar(
                base * 0.5f64.powi(j),
                2.0 * std::f64::consts::PI * j as f64 / 7.0,
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericityReport {
    pub transverse: bool,
    pub distinct_projections: bool,
    pub avoids_triple_coincidences: bool,
    pub min_margin: Option<f64>,
    pub min_projection_gap: Option<f64>,
    pub min_triple_gap: Option<f64>,
    pub triple_coincidences: Vec<TripleCoincidence>,
    pub note: String,
}

impl GenericityReport {
    pub fn passed(&self) -> bool {
        self.transverse && self.distinct_projections && self.avoids_triple_coincidences
    }
}

/// Numerical stand-ins for the genericity properties: transverse tangent
/// planes, pairwise distinct base projections, and no double point over a
/// triple coincidence.
pub fn check_genericity(
    model: &BranchedDiskModel,
    params: &PerturbationParams,
    dps: &[DoublePoint],
    cfg: &SolverConfig,
) -> GenericityReport {
    let min_margin = dps
        .iter()
        .map(|d| d.transversality_margin)
        .min_by(f64::total_cmp);
    let transverse = min_margin.is_none_or(|m| m > cfg.tol_transverse);
    let mut min_gap: Option<f64> = None;
    for (i, a) in dps.iter().enumerate() {
        for b in &dps[i + 1..] {
            let gap = (a.base_point() - b.base_point()).norm();
            min_gap = Some(min_gap.map_or(gap, |g: f64| g.min(gap)));
        }
    }
    let distinct_projections = min_gap.is_none_or(|g| g > cfg.tol_dedupe);
    let triples = if dps.is_empty() {
        Vec::new()
    } else {
        find_triple_coincidences(model, params, cfg)
    };
    let mut min_triple_gap: Option<f64> = None;
    for d in dps {
        for t in &triples {
            let gap = (d.base_point() - t.image_z).norm();
            min_triple_gap = Some(min_triple_gap.map_or(gap, |g: f64| g.min(gap)));
        }
    }
    let avoids_triple_coincidences = min_triple_gap.is_none_or(|g| g > cfg.tol_dedupe);
    GenericityReport {
        transverse,
        distinct_projections,
        avoids_triple_coincidences,
        min_margin,
        min_projection_gap: min_gap,
        min_triple_gap,
        triple_coincidences: triples,
        note: "numerical margins; not a certified genericity proof".into(),
    }
}
