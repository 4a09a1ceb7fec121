//! End-to-end run: double points, loop, trace, band template, invariants.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::braid::{
    alexander_of_closure, band_euler_characteristic, match_band_template, BandRepresentation,
    LaurentPolynomial,
};
use crate::config::RunConfig;
use crate::double_points::{check_genericity, find_double_points, gamma_schedule, DoublePoint, GenericityReport};
use crate::locus::{sample_locus, LocusSample, LocusTolerances};
use crate::loop_gamma::{build_loop_capped, validate_loop, LoopGamma, LoopValidationReport};
use crate::surface::PerturbationParams;
use crate::trace::{classify_events, trace_braid, EventClassification, TracedBraid};
use crate::Sign;

/// Loop rebuilds with a tighter ρ after a trace or classification failure.
const MAX_LOOP_ATTEMPTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    DoublePoints,
    Genericity,
    Loop,
    Trace,
    Classify,
    Template,
    Invariants,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::DoublePoints | Stage::Genericity => 2,
            Stage::Loop | Stage::Trace | Stage::Classify => 3,
            Stage::Template | Stage::Invariants => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::DoublePoints => "double_points",
            Stage::Genericity => "genericity",
            Stage::Loop => "loop",
            Stage::Trace => "trace",
            Stage::Classify => "classify",
            Stage::Template => "template",
            Stage::Invariants => "invariants",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: Stage,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invariants {
    pub exponent_sum: i64,
    pub components: usize,
    /// Only for knot closures.
    pub alexander: Option<LaurentPolynomial>,
    pub chi: Option<i64>,
    pub genus: Option<Ratio<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    /// Parameters actually used, after any γ retry.
    pub params: PerturbationParams,
    pub gamma_attempts: usize,
    pub double_points: Vec<DoublePoint>,
    pub genericity: Option<GenericityReport>,
    pub loop_gamma: Option<LoopGamma>,
    pub loop_validation: Option<LoopValidationReport>,
    pub traced: Option<TracedBraid>,
    pub classification: Option<EventClassification>,
    pub bands: Option<BandRepresentation>,
    pub invariants: Option<Invariants>,
    pub checks: Vec<Check>,
    pub locus: Option<LocusSample>,
    pub failure: Option<StageFailure>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        self.failure.as_ref().map_or(0, |f| f.stage.exit_code())
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn fail(mut self, stage: Stage, message: impl Into<String>) -> Self {
        self.failure = Some(StageFailure {
            stage,
            message: message.into(),
        });
        self
    }
}

fn is_n_cycle(perm: &[usize]) -> bool {
    if perm.is_empty() {
        return false;
    }
    let (mut i, mut len) = (perm[0], 1);
    while i != 0 && len <= perm.len() {
        i = perm[i];
        len += 1;
    }
    i == 0 && len == perm.len()
}

fn empty_report(cfg: &RunConfig) -> RunReport {
    RunReport {
        config: cfg.clone(),
        params: cfg.params,
        gamma_attempts: 0,
        double_points: Vec::new(),
        genericity: None,
        loop_gamma: None,
        loop_validation: None,
        traced: None,
        classification: None,
        bands: None,
        invariants: None,
        checks: Vec::new(),
        locus: None,
        failure: None,
    }
}

/// Finds double points, retrying γ until the configuration is generic.
/// Returns the parameters that worked.
fn double_point_stage(cfg: &RunConfig, report: &mut RunReport) -> Result<PerturbationParams, String> {
    let mut gammas = vec![cfg.params.gamma];
    gammas.extend(gamma_schedule(&cfg.params));
    let mut last_error = String::new();
    for g in gammas {
        report.gamma_attempts += 1;
        let Ok(params) = cfg.params.with_gamma(g) else {
            continue;
        };
        report.params = params;
        match find_double_points(&cfg.model, &params, &cfg.solver) {
            Err(e) => {
                last_error = e.to_string();
                report.double_points.clear();
            }
            Ok(set) => {
                let gen = check_genericity(&cfg.model, &params, &set.points, &cfg.solver);
                report.double_points = set.points;
                let ok = gen.passed();
                if !ok {
                    last_error = format!("genericity check failed: {}", gen.note);
                }
                report.genericity = Some(gen);
                if ok {
                    return Ok(params);
                }
            }
        }
    }
    Err(format!(
        "no generic perturbation after {} attempts: {last_error}",
        report.gamma_attempts
    ))
}

/// Only the double point and genericity stages.
pub fn run_double_points(cfg: &RunConfig) -> RunReport {
    let mut report = empty_report(cfg);
    match double_point_stage(cfg, &mut report) {
        Ok(_) => report,
        Err(msg) => report.fail(Stage::Genericity, msg),
    }
}

pub fn run_pipeline(cfg: &RunConfig) -> RunReport {
    let model = &cfg.model;
    let n = model.branch_order();
    let mut report = empty_report(cfg);
    let params = match double_point_stage(cfg, &mut report) {
        Ok(p) => p,
        Err(msg) => return report.fail(Stage::Genericity, msg),
    };

    if cfg.outputs.svg.wants_disk() {
        report.locus = Some(sample_locus(
            model,
            &params,
            cfg.loop_cfg.locus_resolution,
            &cfg.solver,
            &LocusTolerances::default(),
        ));
    }

    let triples = report
        .genericity
        .as_ref()
        .map(|g| g.triple_coincidences.clone())
        .unwrap_or_default();
    let dps = report.double_points.clone();
    let mut cap = f64::INFINITY;
    let mut outcome = None;
    let mut last = (Stage::Loop, String::new());
    for _ in 0..MAX_LOOP_ATTEMPTS {
        let lp = match build_loop_capped(model, &params, &dps, &triples, &cfg.loop_cfg, cap) {
            Ok(lp) => lp,
            Err(e) => {
                last = (Stage::Loop, e.to_string());
                break;
            }
        };
        cap = lp.rho * cfg.loop_cfg.rho_shrink;
        report.loop_validation = Some(validate_loop(model, &params, &lp, &dps, &triples));
        report.loop_gamma = Some(lp.clone());
        let traced = match trace_braid(model, &params, &lp, &cfg.trace_cfg) {
            Ok(t) => t,
            Err(e) => {
                last = (Stage::Trace, e.to_string());
                continue;
            }
        };
        report.traced = Some(traced.clone());
        match classify_events(&traced, &lp, &params, &cfg.trace_cfg) {
            Ok(c) => {
                outcome = Some((lp, traced, c));
                break;
            }
            Err(e) => last = (Stage::Classify, e.to_string()),
        }
    }
    let Some((lp, traced, classes)) = outcome else {
        return report.fail(last.0, last.1);
    };
    report.classification = Some(classes.clone());

    let word = &traced.word;
    let mut checks = Vec::new();
    let mut check = |name: &str, passed: bool, detail: String| {
        checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        })
    };

    check(
        "monodromy",
        traced.permutation == traced.fiber_permutation && is_n_cycle(&traced.permutation),
        format!("word {:?}, fiber {:?}", traced.permutation, traced.fiber_permutation),
    );

    let mut template_error = None;
    if classes.regime.is_some() {
        match match_band_template(&traced, &classes, &lp) {
            Ok(rep) => report.bands = Some(rep),
            Err(e) => template_error = Some(e.to_string()),
        }
    } else {
        check(
            "template",
            true,
            "skipped: parameters are outside both regimes".into(),
        );
    }

    let exponent_sum = word.exponent_sum();
    if let Some(s) = classes.regime {
        let eps: i64 = dps.iter().map(|d| d.sign.value() as i64).sum();
        let expected = s.value() as i64 * (n as i64 - 1) + 2 * eps;
        check(
            "writhe",
            exponent_sum == expected,
            format!("exponent sum {exponent_sum}, expected {expected}"),
        );
    }

    let mut sign_ok = true;
    let mut tube_ok = true;
    for d in &classes.detours {
        let want = lp.detours[d.detour].sign;
        sign_ok &= d.arc.len() == 2 && d.arc.iter().all(|l| l.sign == want);
        let undo: Vec<_> = d.outbound.iter().rev().map(|l| l.inverse()).collect();
        tube_ok &= d.inbound == undo;
    }
    check(
        "detour_signs",
        sign_ok,
        format!("{} detour(s)", classes.detours.len()),
    );
    check("tube_cancellation", tube_ok, String::new());

    let components = word.closure_components();
    let alexander = if components == 1 {
        match alexander_of_closure(word) {
            Ok(a) => {
                check("alexander_symmetry", a.is_symmetric(), a.to_string());
                Some(a)
            }
            Err(e) => {
                check("alexander", false, e.to_string());
                None
            }
        }
    } else {
        None
    };
    let surface = report.bands.as_ref().map(band_euler_characteristic);
    if let (Some(a), Some(Some(g))) = (&alexander, surface.as_ref().map(|s| s.genus)) {
        let span = a.max_degree().unwrap_or(0) - a.min_degree().unwrap_or(0);
        check(
            "genus_bound",
            Ratio::from_integer(span as i64) <= g * 2,
            format!("Alexander span {span}, band genus {g}"),
        );
    }
    report.invariants = Some(Invariants {
        exponent_sum,
        components,
        alexander,
        chi: surface.as_ref().map(|s| s.chi),
        genus: surface.and_then(|s| s.genus),
    });
    report.checks = checks;

    if let Some(e) = template_error {
        return report.fail(Stage::Template, e);
    }
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    if !failed.is_empty() {
        let msg = format!("failed checks: {}", failed.join(", "));
        return report.fail(Stage::Invariants, msg);
    }
    report
}

/// Regime sign of the run, if the template applies.
pub fn regime_of(report: &RunReport) -> Option<Sign> {
    report.classification.as_ref().and_then(|c| c.regime)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn cycles() {
        assert!(is_n_cycle(&[1, 2, 0]));
        assert!(is_n_cycle(&[0]));
        assert!(!is_n_cycle(&[1, 0, 2]));
        assert!(!is_n_cycle(&[0, 1]));
    }

    #[test]
    fn trefoil_run() {
        let cfg = parse_config("n = 2\nh = 1+0i * w^3\nlambda = 0.1+0i\nmu = 0+0i\n").unwrap();
        let r = run_pipeline(&cfg);
        assert!(r.succeeded(), "{:?}", r.failure);
        assert_eq!(r.double_points.len(), 1);
        let inv = r.invariants.as_ref().unwrap();
        assert_eq!(inv.exponent_sum, 3);
        assert_eq!(inv.alexander.as_ref().unwrap().to_string(), "t^-1 - 1 + t");
        assert_eq!(inv.genus, Some(Ratio::from_integer(1)));
    }

    #[test]
    fn template_mismatch_is_detected() {
        let cfg = parse_config("n = 2\nh = 1+0i * w^3\nlambda = 0.1+0i\nmu = 0+0i\n").unwrap();
        let r = run_pipeline(&cfg);
        let mut traced = r.traced.clone().unwrap();
        let extra = crate::braid::BraidWord::parse(2, "s1 s1").unwrap();
        traced.word = traced.word.multiply(&extra).unwrap();
        let cls = r.classification.as_ref().unwrap();
        assert!(match_band_template(&traced, cls, r.loop_gamma.as_ref().unwrap()).is_err());
        assert_eq!(Stage::Template.exit_code(), 4);
    }

    #[test]
    fn report_round_trip() {
        let mut cfg = parse_config("n = 3\nh = 1 * w^4\nlambda = 0.1\nmu = 0\n").unwrap();
        cfg.outputs.svg = crate::config::SvgOutput::Disk;
        let r = run_pipeline(&cfg);
        assert!(r.succeeded(), "{:?}", r.failure);
        let a = crate::report::to_json_string(&r);
        assert_eq!(a, crate::report::to_json_string(&run_pipeline(&cfg)));
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        let checks = crate::report::verify_report(&v).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
        let svg = crate::svg::render_svg(&v, crate::svg::View::Disk).unwrap();
        assert_eq!(svg.matches("class=\"detour\"").count(), 3);
        assert_eq!(svg.matches("class=\"double-point\"").count(), 3);
    }

    #[test]
    fn balanced_perturbation_is_not_generic() {
        let cfg = parse_config("n = 2\nh = 1 * w^3\nlambda = 0.1\nmu = 0.1\n").unwrap();
        let r = run_pipeline(&cfg);
        assert_eq!(r.exit_code(), 2, "{:?}", r.failure);
    }
}
