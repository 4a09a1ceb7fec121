//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::time::{Duration, Instant};

use bandtrace::braid::{reduced_burau, BraidWord, LaurentPolynomial, Letter};
use bandtrace::config::RunConfig;
use bandtrace::double_points::{find_double_points, holomorphic_oracle, DoublePointError, SolverConfig};
use bandtrace::pipeline::{run_double_points, run_pipeline, RunReport};
use bandtrace::surface::{eval_f, jacobian_f, root_of_unity};
use bandtrace::trace::regime_sign;
use bandtrace::{BranchedDiskModel, Monomial, PerturbationParams, Sign, C64};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Default)]
struct Criterion {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Criterion {
    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn report(&self, id: usize, title: &str) -> bool {
        let ok = self.failures.is_empty();
        println!(
            "criterion {id} ({title}): {}{}",
            if ok { "PASS" } else { "FAIL" },
            if self.notes.is_empty() { String::new() } else { format!("  [{}]", self.notes.join("; ")) }
        );
        for f in &self.failures {
            println!("    - {f}");
        }
        ok
    }
}

struct Run {
    label: String,
    cfg: RunConfig,
    report: RunReport,
    elapsed: Duration,
}

fn run(label: String, model: BranchedDiskModel, lambda: f64, mu: f64) -> Run {
    let cfg = RunConfig::new(model, PerturbationParams::real(lambda, mu).unwrap());
    let t = Instant::now();
    let report = run_pipeline(&cfg);
    Run {
        label,
        cfg,
        report,
        elapsed: t.elapsed(),
    }
}

fn word_of(r: &Run) -> Option<&BraidWord> {
    r.report.traced.as_ref().map(|t| &t.word)
}

// --- independent oracles -------------------------------------------------

/// Dense integer polynomial division; `None` unless exact.
fn poly_div(num: &[i64], den: &[i64]) -> Option<Vec<i64>> {
    let mut rem = num.to_vec();
    let dl = den.len();
    let lead = *den.last()?;
    if rem.len() < dl {
        return None;
    }
    let mut q = vec![0i64; rem.len() - dl + 1];
    for i in (0..q.len()).rev() {
        let c = rem[i + dl - 1];
        if c % lead != 0 {
            return None;
        }
        q[i] = c / lead;
        for (j, d) in den.iter().enumerate() {
            rem[i + j] -= q[i] * d;
        }
    }
    rem.iter().all(|&c| c == 0).then_some(q)
}

fn poly_mul(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn one_minus_t_pow(d: usize) -> Vec<i64> {
    let mut v = vec![0; d + 1];
    v[0] = 1;
    v[d] = -1;
    v
}

/// `(1 − t)(1 − t^{NM}) / ((1 − t^N)(1 − t^M))`, centred on degree 0.
fn torus_alexander(n: usize, m: usize) -> LaurentPolynomial {
    let num = poly_mul(&one_minus_t_pow(1), &one_minus_t_pow(n * m));
    let den = poly_mul(&one_minus_t_pow(n), &one_minus_t_pow(m));
    let q = poly_div(&num, &den).expect("exact quotient");
    let deg = (q.len() - 1) as i32;
    assert_eq!(deg % 2, 0);
    LaurentPolynomial::from_coeffs(q.iter().enumerate().map(|(i, &c)| (i as i32 - deg / 2, c)))
}

/// Double points of `(w^N, w^M + λw)`: for each sheet offset `k`,
/// `w^{M−1} = −λ(1 − νᵏ)/(1 − ν^{kM})`.
fn torus_double_points(n: usize, m: usize, lambda: f64, r0: f64) -> Vec<PairKey> {
    let mut out = Vec::new();
    for k in 1..n {
        let nu = root_of_unity(n, k);
        let denom = C64::new(1.0, 0.0) - nu.powu(m as u32);
        if denom.norm() < 1e-12 {
            continue;
        }
        let rhs = -(C64::new(1.0, 0.0) - nu) * lambda / denom;
        let (r, a) = rhs.to_polar();
        for j in 0..m - 1 {
            let w = C64::from_polar(
                r.powf(1.0 / (m - 1) as f64),
                (a + 2.0 * std::f64::consts::PI * j as f64) / (m - 1) as f64,
            );
            if w.norm() < r0 {
                push_key(&mut out, pair_key(w, nu * w));
            }
        }
    }
    out
}

/// An unordered preimage pair `{w₁, w₂}` as `(w₁ + w₂, w₁w₂)`.
type PairKey = (C64, C64);

fn pair_key(a: C64, b: C64) -> PairKey {
    (a + b, a * b)
}

fn key_dist(a: &PairKey, b: &PairKey) -> f64 {
    (a.0 - b.0).norm().max((a.1 - b.1).norm())
}

fn push_key(set: &mut Vec<PairKey>, k: PairKey) {
    if !set.iter().any(|o| key_dist(o, &k) < 1e-9) {
        set.push(k);
    }
}

fn pair_hausdorff(a: &[PairKey], b: &[PairKey]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let one = |x: &[PairKey], y: &[PairKey]| {
        x.iter()
            .map(|p| y.iter().map(|q| key_dist(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

/// Double points of the solver (transverse or not) as pair keys.
fn solver_pairs(model: &BranchedDiskModel, params: &PerturbationParams, solver: &SolverConfig) -> Vec<PairKey> {
    match find_double_points(model, params, solver) {
        Ok(s) => s.points,
        Err(DoublePointError::GenericityFailure { points, .. }) => points,
        Err(e) => panic!("{e}"),
    }
    .iter()
    .map(|d| pair_key(d.w1, d.w2))
    .collect()
}

fn oracle_pairs(model: &BranchedDiskModel, params: &PerturbationParams, solver: &SolverConfig) -> Vec<PairKey> {
    let n = model.branch_order();
    let mut out = Vec::new();
    for k in 1..n {
        for w in holomorphic_oracle(model, params, k).unwrap() {
            if w.norm() > solver.exclusion_radius && w.norm() < model.domain_radius() {
                push_key(&mut out, pair_key(w, root_of_unity(n, k) * w));
            }
        }
    }
    out
}

fn is_n_cycle(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    let mut i = 0;
    for _ in 0..perm.len() {
        if seen[i] {
            return false;
        }
        seen[i] = true;
        i = perm[i];
    }
    i == 0 && seen.iter().all(|&s| s)
}

// --- shared checks ---------------------------------------------------------

fn writhe_check(c: &mut Criterion, r: &Run) {
    let (Some(w), Some(s)) = (word_of(r), regime_sign(&r.report.params, r.cfg.trace_cfg.regime_ratio)) else {
        return;
    };
    let n = r.cfg.model.branch_order() as i64;
    let eps: i64 = r.report.double_points.iter().map(|d| d.sign.value() as i64).sum();
    let expected = s.value() as i64 * (n - 1) + 2 * eps;
    c.require(
        w.exponent_sum() == expected,
        format!("{}: exponent sum {} ≠ {expected}", r.label, w.exponent_sum()),
    );
}

fn detour_check(c: &mut Criterion, r: &Run) {
    let (Some(cls), Some(lp)) = (&r.report.classification, &r.report.loop_gamma) else {
        return;
    };
    for d in &cls.detours {
        let dp = &r.report.double_points[lp.detours[d.detour].double_point];
        c.require(
            d.arc.len() == 2 && d.arc.iter().all(|l| l.sign == dp.sign),
            format!("{}: detour {} arc {:?} vs sign {:?}", r.label, d.detour, d.arc, dp.sign),
        );
        let undo: Vec<Letter> = d.outbound.iter().rev().map(|l| l.inverse()).collect();
        c.require(
            d.inbound == undo,
            format!("{}: tube {} does not cancel", r.label, d.detour),
        );
    }
}

fn monodromy_check(c: &mut Criterion, r: &Run) {
    let Some(t) = &r.report.traced else {
        return;
    };
    c.require(
        t.permutation == t.fiber_permutation && t.word.permutation() == t.permutation,
        format!("{}: permutation mismatch", r.label),
    );
    c.require(is_n_cycle(&t.permutation), format!("{}: not an N-cycle", r.label));
}

fn main() {
    let mut all_ok = true;
    let mut runs: Vec<Run> = Vec::new();

    // 1. unknot regime
    let mut c1 = Criterion::default();
    for n in 2..=5 {
        for (lambda, mu, s) in [(0.1, 0.0, Sign::Positive), (0.0, 0.1, Sign::Negative)] {
            let r = run(
                format!("unknot N={n} λ={lambda} μ={mu}"),
                BranchedDiskModel::new(n, vec![]).unwrap(),
                lambda,
                mu,
            );
            c1.require(r.report.succeeded(), format!("{}: {:?}", r.label, r.report.failure));
            c1.require(r.report.double_points.is_empty(), format!("{}: double points found", r.label));
            c1.require(r.elapsed < Duration::from_secs(10), format!("{}: took {:?}", r.label, r.elapsed));
            if let Some(w) = word_of(&r) {
                let even = (2..n).step_by(2);
                let odd = (1..n).step_by(2);
                let expected = BraidWord::new(n, even.chain(odd).map(|k| Letter::new(k, s)).collect()).unwrap();
                c1.require(
                    bandtrace::braid::cyclically_equal(w, &expected),
                    format!("{}: word {} vs {}", r.label, w.to_text(), expected.to_text()),
                );
                c1.require(w.closure_components() == 1, format!("{}: not a knot", r.label));
            }
            let alex = r.report.invariants.as_ref().and_then(|i| i.alexander.clone());
            c1.require(
                alex == Some(LaurentPolynomial::one()),
                format!("{}: Δ = {alex:?}", r.label),
            );
            runs.push(r);
        }
    }
    c1.notes.push(format!(
        "max runtime {:.2?}",
        runs.iter().map(|r| r.elapsed).max().unwrap()
    ));
    all_ok &= c1.report(1, "unknot regime");

    // 2. torus knots
    let mut c2 = Criterion::default();
    let mut worst_root_gap: f64 = 0.0;
    let torus_start = runs.len();
    for (n, m) in [(2usize, 3usize), (2, 5), (3, 4), (3, 5)] {
        let model = BranchedDiskModel::torus(n, m as u32).unwrap();
        let r = run(format!("T({n},{m})"), model.clone(), 0.1, 0.0);
        c2.require(r.report.succeeded(), format!("{}: {:?}", r.label, r.report.failure));
        c2.require(r.elapsed < Duration::from_secs(60), format!("{}: took {:?}", r.label, r.elapsed));
        let dps = &r.report.double_points;
        let delta = (n - 1) * (m - 1) / 2;
        c2.require(dps.len() == delta, format!("{}: {} double points, expected {delta}", r.label, dps.len()));
        c2.require(
            dps.iter().all(|d| d.sign == Sign::Positive),
            format!("{}: negative double point", r.label),
        );

        // solver roots at γ = 0 against both the companion-matrix oracle and the closed form
        let params = PerturbationParams::real(0.1, 0.0).unwrap();
        let solver = SolverConfig::for_model(&model);
        let found = solver_pairs(&model, &params, &solver);
        let companion = oracle_pairs(&model, &params, &solver);
        let closed = torus_double_points(n, m, 0.1, model.domain_radius());
        let g1 = pair_hausdorff(&found, &companion);
        let g2 = pair_hausdorff(&found, &closed);
        worst_root_gap = worst_root_gap.max(g1).max(g2);
        c2.require(
            found.len() == closed.len() && found.len() == companion.len() && g1 < 1e-8 && g2 < 1e-8,
            format!("{}: roots off oracle ({g1:e}, {g2:e}), {} vs {}", r.label, found.len(), closed.len()),
        );

        if let (Some(w), Some(inv)) = (word_of(&r), r.report.invariants.as_ref()) {
            c2.require(
                w.exponent_sum() == (m * (n - 1)) as i64,
                format!("{}: exponent sum {}", r.label, w.exponent_sum()),
            );
            let want = torus_alexander(n, m);
            c2.require(
                inv.alexander.as_ref() == Some(&want),
                format!("{}: Δ = {:?}, expected {want}", r.label, inv.alexander.as_ref().map(|a| a.to_string())),
            );
            c2.require(
                inv.genus == Some(Ratio::from_integer(delta as i64)),
                format!("{}: genus {:?}", r.label, inv.genus),
            );
        }
        runs.push(r);
    }
    c2.notes.push(format!("worst root gap {worst_root_gap:.1e}"));
    c2.notes.push(format!(
        "max runtime {:.2?}",
        runs[torus_start..].iter().map(|r| r.elapsed).max().unwrap()
    ));
    all_ok &= c2.report(2, "torus knots");

    // 3-5 on every successful run above
    let mut c3 = Criterion::default();
    let mut c4 = Criterion::default();
    let mut c5 = Criterion::default();
    let mut detours = 0;
    for r in runs.iter().filter(|r| r.report.succeeded()) {
        writhe_check(&mut c3, r);
        detour_check(&mut c4, r);
        monodromy_check(&mut c5, r);
        detours += r.report.classification.as_ref().map_or(0, |c| c.detours.len());
    }
    c3.notes.push(format!("{} runs", runs.len()));
    c4.notes.push(format!("{detours} detours"));
    all_ok &= c3.report(3, "writhe identity");
    all_ok &= c4.report(4, "detour signs and tube cancellation");
    all_ok &= c5.report(5, "monodromy");

    // 6. random holomorphic configurations against the companion-matrix oracle
    let mut c6 = Criterion::default();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut retried = 0;
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let n = rng.random_range(2..=5usize);
        let terms: Vec<Monomial> = (n + 1..=n + 4)
            .map(|d| {
                let c = C64::new(rng.random_range(-0.5..=0.5), rng.random_range(-0.5..=0.5));
                Monomial::holomorphic(c, d as u32)
            })
            .collect();
        let lambda = rng.random_range(0.05..0.2);
        let model = BranchedDiskModel::new(n, terms).unwrap();
        let params = PerturbationParams::real(lambda, 0.0).unwrap();
        let solver = SolverConfig::for_model(&model);
        let label = format!("random #{case} (N={n})");
        let found = solver_pairs(&model, &params, &solver);
        let oracle = oracle_pairs(&model, &params, &solver);
        let gap = pair_hausdorff(&found, &oracle);
        worst = worst.max(gap);
        c6.require(
            found.len() == oracle.len() && gap < 1e-8,
            format!("{label}: {} vs {} points, Hausdorff {gap:e}", found.len(), oracle.len()),
        );
        let cfg = RunConfig::new(model, params);
        let dp = run_double_points(&cfg);
        if dp.gamma_attempts > 1 {
            retried += 1;
        }
        c6.require(
            dp.succeeded() && dp.gamma_attempts <= 8,
            format!("{label}: genericity not reached ({} attempts)", dp.gamma_attempts),
        );
    }
    c6.notes.push(format!("worst Hausdorff {worst:.1e}, {retried} needed γ retries"));
    all_ok &= c6.report(6, "oracle equivalence stress");

    // 7. invariant suites
    let mut c7 = Criterion::default();
    let mut knots = 0;
    for r in &runs {
        if let Some(a) = r.report.invariants.as_ref().and_then(|i| i.alexander.as_ref()) {
            knots += 1;
            c7.require(a.is_symmetric(), format!("{}: Δ not symmetric: {a}", r.label));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let random_word = |rng: &mut ChaCha8Rng, n: usize| {
        let len = rng.random_range(0..8);
        let ls = (0..len)
            .map(|_| {
                let s = if rng.random_bool(0.5) { Sign::Positive } else { Sign::Negative };
                Letter::new(rng.random_range(1..n), s)
            })
            .collect();
        BraidWord::new(n, ls).unwrap()
    };
    let mut burau_bad = 0;
    for _ in 0..200 {
        let n = rng.random_range(2..=6);
        let (a, b) = (random_word(&mut rng, n), random_word(&mut rng, n));
        let lhs = reduced_burau(&a.multiply(&b).unwrap());
        let rhs = reduced_burau(&a).mul(&reduced_burau(&b));
        burau_bad += usize::from(lhs != rhs);
    }
    c7.require(burau_bad == 0, format!("Burau product fails on {burau_bad} pairs"));
    let mut worst_jac: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=5);
        let model = BranchedDiskModel::new(
            n,
            vec![
                Monomial::new(C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)), n as u32 + 1, 0),
                Monomial::new(C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)), 1, n as u32 + 1),
            ],
        )
        .unwrap();
        let params = PerturbationParams::new(
            C64::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)),
            C64::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)),
            C64::new(0.0, 0.0),
        )
        .unwrap();
        let w = C64::from_polar(rng.random_range(0.1..0.9), rng.random_range(0.0..std::f64::consts::TAU));
        let jac = jacobian_f(&model, &params, w);
        let h = 1e-6;
        for (col, dir) in [C64::new(h, 0.0), C64::new(0.0, h)].into_iter().enumerate() {
            let (p, q) = (eval_f(&model, &params, w + dir).coords(), eval_f(&model, &params, w - dir).coords());
            let fd: Vec<f64> = (0..4).map(|i| (p[i] - q[i]) / (2.0 * h)).collect();
            let scale = jac[col].iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-12);
            let err = (0..4).map(|i| (fd[i] - jac[col][i]).abs()).fold(0.0, f64::max) / scale;
            worst_jac = worst_jac.max(err);
        }
    }
    c7.require(worst_jac < 1e-6, format!("Jacobian relative error {worst_jac:e}"));
    let mut stable = 0;
    for r in runs.iter().filter(|r| r.report.succeeded()) {
        let mut cfg = r.cfg.clone();
        cfg.trace_cfg = cfg.trace_cfg.refined();
        let again = run_pipeline(&cfg);
        let (a, b) = (word_of(r).map(|w| w.to_text()), again.traced.as_ref().map(|t| t.word.to_text()));
        c7.require(a == b, format!("{}: refined trace gives {b:?}, was {a:?}", r.label));
        stable += usize::from(a == b);
    }
    c7.notes.push(format!(
        "{knots} knots symmetric, Burau 200 pairs, Jacobian err {worst_jac:.1e}, {stable} traces stable"
    ));
    all_ok &= c7.report(7, "invariant suites");

    assert!(all_ok, "some acceptance criteria failed");
}
