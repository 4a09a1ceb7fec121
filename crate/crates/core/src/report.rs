//! JSON rendering of a [`RunReport`] and re-verification of stored reports.
//!
//! Keys are sorted and floats use shortest round-trip formatting, so the
//! same configuration always produces byte-identical output. Complex
//! numbers are `[re, im]` pairs; signs are `1` or `-1`; braid words use the
//! `s1 s2^-1` text format; Alexander polynomials map exponents to integer
//! coefficients.
//!
//! Top-level keys: `status`, `input`, `gamma_attempts`, `params`,
//! `double_points`, `genericity`, `loop`, `braid`, `classification`,
//! `bands`, `invariants`, `checks`, and `locus` when a disk plot was
//! requested. Stages that did not run are `null`.

use serde_json::{json, Map, Value};

use crate::braid::{
    alexander_of_closure, cyclically_equal, BandRepresentation, BraidWord, LaurentPolynomial, Letter,
};
use crate::config::serialize_config;
use crate::loop_gamma::{LoopGamma, SegmentGeometry, SegmentKind};
use crate::pipeline::{Check, RunReport};
use crate::surface::C64;
use crate::trace::Provenance;
use crate::Sign;

fn cx(z: C64) -> Value {
    json!([z.re, z.im])
}

fn sign(s: Sign) -> Value {
    json!(s.value())
}

fn letters_text(n: usize, ls: &[Letter]) -> String {
    BraidWord::new(n, ls.to_vec()).map(|w| w.to_text()).unwrap_or_default()
}

pub fn alexander_json(p: &LaurentPolynomial) -> Value {
    let m: Map<String, Value> = p.terms().map(|(e, c)| (e.to_string(), json!(c))).collect();
    Value::Object(m)
}

fn alexander_from_json(v: &Value) -> Option<LaurentPolynomial> {
    let obj = v.as_object()?;
    let mut pairs = Vec::new();
    for (k, c) in obj {
        pairs.push((k.parse::<i32>().ok()?, c.as_i64()?));
    }
    Some(LaurentPolynomial::from_coeffs(pairs))
}

fn loop_json(lp: &LoopGamma) -> Value {
    let segments: Vec<Value> = lp
        .segments
        .iter()
        .map(|s| {
            let kind = match s.kind {
                SegmentKind::BaseArc => "base_arc",
                SegmentKind::TubeSide { outbound: true } => "tube_out",
                SegmentKind::TubeSide { outbound: false } => "tube_in",
                SegmentKind::DetourArc => "detour_arc",
            };
            let geometry = match s.geometry {
                SegmentGeometry::Arc {
                    center,
                    radius,
                    start,
                    sweep,
                } => json!({"arc": {"center": cx(center), "radius": radius, "start": start, "sweep": sweep}}),
                SegmentGeometry::Line { from, to } => {
                    json!({"line": {"from": cx(from), "to": cx(to)}})
                }
            };
            json!({"kind": kind, "detour": s.detour, "geometry": geometry})
        })
        .collect();
    let detours: Vec<Value> = lp
        .detours
        .iter()
        .map(|d| {
            json!({
                "center": cx(d.center),
                "radius": d.radius,
                "tube_half_width": d.tube_half_width,
                "junction_angle": d.junction_angle,
                "attach_angle": d.attach_angle,
                "double_point": d.double_point,
                "sign": sign(d.sign),
            })
        })
        .collect();
    json!({
        "rho": lp.rho,
        "base_point": cx(lp.base_point),
        "detours": detours,
        "segments": segments,
        "singular_points": lp.singular_points.iter().map(|&z| cx(z)).collect::<Vec<_>>(),
    })
}

fn bands_json(rep: &BandRepresentation) -> Value {
    let n = rep.strands;
    json!({
        "strands": n,
        "even_block": letters_text(n, &rep.even_block),
        "odd_block": letters_text(n, &rep.odd_block),
        "bands": rep.bands.iter().map(|b| json!({
            "conjugator": b.conjugator.to_text(),
            "k": b.k,
            "epsilon": sign(b.epsilon),
            "double_point": b.double_point,
        })).collect::<Vec<_>>(),
        "expanded": rep.expand().to_text(),
    })
}

fn checks_json(checks: &[Check]) -> Value {
    Value::Array(
        checks
            .iter()
            .map(|c| json!({"name": c.name, "passed": c.passed, "detail": c.detail}))
            .collect(),
    )
}

pub fn to_json(r: &RunReport) -> Value {
    let cfg = &r.config;
    let status = match &r.failure {
        None => json!({"exit_code": 0, "stage": null, "message": null}),
        Some(f) => json!({"exit_code": r.exit_code(), "stage": f.stage.name(), "message": f.message}),
    };
    let input = json!({
        "config": serialize_config(cfg),
        "n": cfg.model.branch_order(),
        "r0": cfg.model.domain_radius(),
        "h": cfg.model.terms().iter().map(|m| json!({
            "coeff": cx(m.coeff), "deg_w": m.deg_w, "deg_conj": m.deg_conj,
        })).collect::<Vec<_>>(),
        "lambda": cx(cfg.params.lambda),
        "mu": cx(cfg.params.mu),
        "gamma": cx(cfg.params.gamma),
    });
    let double_points: Vec<Value> = r
        .double_points
        .iter()
        .map(|d| {
            json!({
                "w1": cx(d.w1),
                "w2": cx(d.w2),
                "k": d.pairing.k,
                "image": {"z1": cx(d.image.z1), "z2": cx(d.image.z2)},
                "sign": sign(d.sign),
                "residual": d.residual,
                "margin": d.transversality_margin,
            })
        })
        .collect();
    let genericity = r.genericity.as_ref().map(|g| {
        json!({
            "passed": g.passed(),
            "transverse": g.transverse,
            "distinct_projections": g.distinct_projections,
            "avoids_triple_coincidences": g.avoids_triple_coincidences,
            "min_margin": g.min_margin,
            "min_projection_gap": g.min_projection_gap,
            "min_triple_gap": g.min_triple_gap,
            "triple_coincidences": g.triple_coincidences.iter().map(|t| json!({
                "w": cx(t.w), "k": t.k, "l": t.l, "z": cx(t.image_z),
            })).collect::<Vec<_>>(),
            "note": g.note,
        })
    });
    let loop_v = r.loop_gamma.as_ref().map(|lp| {
        let mut v = loop_json(lp);
        if let Some(val) = &r.loop_validation {
            v["validation"] = json!({
                "passed": val.passed(),
                "transversal_hits": val.transversal_hits.len(),
                "failures": val.failures,
            });
        }
        v
    });
    let braid = r.traced.as_ref().map(|t| {
        json!({
            "strands": t.strand_count,
            "word": t.word.to_text(),
            "permutation": t.permutation,
            "fiber_permutation": t.fiber_permutation,
            "steps": t.steps,
            "events": t.events.iter().map(|e| {
                let (kind, detour) = match e.provenance {
                    Provenance::BaseArc => ("base_arc", None),
                    Provenance::DetourArc(i) => ("detour_arc", Some(i)),
                    Provenance::TubeSide { detour, outbound: true } => ("tube_out", Some(detour)),
                    Provenance::TubeSide { detour, outbound: false } => ("tube_in", Some(detour)),
                };
                json!({
                    "theta": e.theta_star,
                    "letter": e.letter().to_string(),
                    "where": kind,
                    "detour": detour,
                    "segment": e.segment,
                })
            }).collect::<Vec<_>>(),
        })
    });
    let n = cfg.model.branch_order();
    let classification = r.classification.as_ref().map(|c| {
        json!({
            "regime": c.regime.map(sign),
            "base_events": c.base.len(),
            "detours": c.detours.iter().map(|d| json!({
                "detour": d.detour,
                "outbound": letters_text(n, &d.outbound),
                "arc": letters_text(n, &d.arc),
                "inbound": letters_text(n, &d.inbound),
            })).collect::<Vec<_>>(),
        })
    });
    let invariants = r.invariants.as_ref().map(|i| {
        json!({
            "exponent_sum": i.exponent_sum,
            "components": i.components,
            "alexander": i.alexander.as_ref().map(alexander_json),
            "chi": i.chi,
            "genus": i.genus.map(|g| g.to_string()),
        })
    });
    let mut out = json!({
        "status": status,
        "input": input,
        "gamma_attempts": r.gamma_attempts,
        "params": {"lambda": cx(r.params.lambda), "mu": cx(r.params.mu), "gamma": cx(r.params.gamma)},
        "double_points": double_points,
        "genericity": genericity,
        "loop": loop_v,
        "braid": braid,
        "classification": classification,
        "bands": r.bands.as_ref().map(bands_json),
        "invariants": invariants,
        "checks": checks_json(&r.checks),
    });
    if let Some(l) = &r.locus {
        out["locus"] = json!({
            "cell_size": l.cell_size,
            "polylines": l.polylines.iter().map(|p| json!({
                "k": p.k,
                "points": p.points.iter().map(|&z| cx(z)).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "singular_points": l.singular_candidates.iter().map(|&z| cx(z)).collect::<Vec<_>>(),
        });
    }
    out
}

pub fn to_json_string(r: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(&to_json(r)).expect("report values are finite");
    s.push('\n');
    s
}

/// Recomputes the invariant suite from the word and bands stored in a
/// report. Each returned check compares a stored value with a fresh one.
pub fn verify_report(v: &Value) -> Result<Vec<Check>, String> {
    let braid = v
        .get("braid")
        .filter(|b| !b.is_null())
        .ok_or("report has no braid")?;
    let n = braid["strands"].as_u64().ok_or("braid.strands missing")? as usize;
    let word = BraidWord::parse(n, braid["word"].as_str().ok_or("braid.word missing")?)
        .map_err(|e| e.to_string())?;
    let inv = v
        .get("invariants")
        .filter(|i| !i.is_null())
        .ok_or("report has no invariants")?;
    let mut checks = Vec::new();
    let mut check = |name: &str, passed: bool, detail: String| {
        checks.push(Check {
            name: name.into(),
            passed,
            detail,
        })
    };

    let es = word.exponent_sum();
    check(
        "exponent_sum",
        inv["exponent_sum"].as_i64() == Some(es),
        format!("recomputed {es}"),
    );
    let comps = word.closure_components();
    check(
        "components",
        inv["components"].as_u64() == Some(comps as u64),
        format!("recomputed {comps}"),
    );
    let perm: Option<Vec<usize>> = braid["permutation"]
        .as_array()
        .and_then(|a| a.iter().map(|x| x.as_u64().map(|u| u as usize)).collect());
    let fiber: Option<Vec<usize>> = braid["fiber_permutation"]
        .as_array()
        .and_then(|a| a.iter().map(|x| x.as_u64().map(|u| u as usize)).collect());
    check(
        "monodromy",
        perm.as_deref() == Some(word.permutation().as_slice()) && perm == fiber,
        format!("stored {perm:?}, fiber {fiber:?}"),
    );
    if comps == 1 {
        let fresh = alexander_of_closure(&word).map_err(|e| e.to_string())?;
        let stored = alexander_from_json(&inv["alexander"]);
        check(
            "alexander",
            stored.as_ref() == Some(&fresh),
            format!("recomputed {fresh}"),
        );
        check("alexander_symmetry", fresh.is_symmetric(), fresh.to_string());
    }

    let regime = v["classification"]["regime"].as_i64();
    let dps = v["double_points"].as_array().cloned().unwrap_or_default();
    if let Some(s) = regime {
        let eps: i64 = dps.iter().filter_map(|d| d["sign"].as_i64()).sum();
        let expected = s * (n as i64 - 1) + 2 * eps;
        check("writhe", es == expected, format!("expected {expected}"));
    }
    if let Some(b) = v.get("bands").filter(|b| !b.is_null()) {
        let expanded = BraidWord::parse(n, b["expanded"].as_str().ok_or("bands.expanded missing")?)
            .map_err(|e| e.to_string())?;
        check(
            "template",
            cyclically_equal(&expanded, &word),
            expanded.to_text(),
        );
        let blocks = b["even_block"].as_str().unwrap_or("").split_whitespace().count()
            + b["odd_block"].as_str().unwrap_or("").split_whitespace().count();
        let nb = b["bands"].as_array().map_or(0, |a| a.len());
        let chi = n as i64 - blocks as i64 - 2 * nb as i64;
        check(
            "euler_characteristic",
            inv["chi"].as_i64() == Some(chi),
            format!("recomputed {chi}"),
        );
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alexander_round_trip() {
        let p = LaurentPolynomial::from_coeffs([(-1, 1), (0, -1), (1, 1)]);
        let v = alexander_json(&p);
        assert_eq!(v.to_string(), r#"{"-1":1,"0":-1,"1":1}"#);
        assert_eq!(alexander_from_json(&v), Some(p));
    }
}
