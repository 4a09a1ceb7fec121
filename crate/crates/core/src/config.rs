//! Line-oriented `key = value` run configuration.
//!
//! ```text
//! # trefoil
//! n = 2
//! h = 1+0i * w^3
//! lambda = 0.1+0i
//! mu = 0+0i
//! trace.min_steps = 8192
//! ```
//!
//! `h` may be repeated, one monomial `c * w^a * cw^b` per line (`cw` is the
//! conjugate of `w`). Complex literals are written `a+bi`, `a-bi`, `a` or `bi`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::double_points::SolverConfig;
use crate::loop_gamma::LoopConfig;
use crate::surface::{BranchedDiskModel, Monomial, PerturbationParams, C64};
use crate::trace::TraceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SvgOutput {
    None,
    Disk,
    Braid,
    Both,
}

impl SvgOutput {
    pub fn wants_disk(self) -> bool {
        matches!(self, SvgOutput::Disk | SvgOutput::Both)
    }

    fn as_str(self) -> &'static str {
        match self {
            SvgOutput::None => "none",
            SvgOutput::Disk => "disk",
            SvgOutput::Braid => "braid",
            SvgOutput::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputFlags {
    pub json: bool,
    pub svg: SvgOutput,
}

impl Default for OutputFlags {
    fn default() -> Self {
        OutputFlags {
            json: true,
            svg: SvgOutput::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: BranchedDiskModel,
    pub params: PerturbationParams,
    pub solver: SolverConfig,
    pub loop_cfg: LoopConfig,
    pub trace_cfg: TraceConfig,
    pub outputs: OutputFlags,
    pub seed: u64,
}

impl RunConfig {
    /// Defaults for everything but the model and perturbation.
    pub fn new(model: BranchedDiskModel, params: PerturbationParams) -> Self {
        RunConfig {
            solver: SolverConfig::for_model(&model),
            model,
            params,
            loop_cfg: LoopConfig::default(),
            trace_cfg: TraceConfig::default(),
            outputs: OutputFlags::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Validation(String),
}

pub fn parse_complex(text: &str) -> Result<C64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("malformed complex number {text:?}");
    let num = |t: &str| -> Result<f64, String> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().map_err(|_| bad()),
        }
    };
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('i') else {
        let re = s.parse::<f64>().map_err(|_| bad())?;
        return if re.is_finite() { Ok(C64::new(re, 0.0)) } else { Err(bad()) };
    };
    // split before the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (
            body[..i].parse::<f64>().map_err(|_| bad())?,
            num(&body[i..])?,
        ),
        None => (0.0, num(body)?),
    };
    if !re.is_finite() || !im.is_finite() {
        return Err(bad());
    }
    Ok(C64::new(re, im))
}

pub fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:?}{sign}{:?}i", z.re, z.im.abs())
}

fn parse_monomial(text: &str) -> Result<Monomial, String> {
    let mut parts = text.split('*').map(str::trim);
    let coeff = parse_complex(parts.next().unwrap_or(""))?;
    let (mut dw, mut dc) = (None, None);
    for f in parts {
        let (base, exp) = match f.split_once('^') {
            Some((b, e)) => (
                b.trim(),
                e.trim()
                    .parse::<u32>()
                    .map_err(|_| format!("bad exponent in factor {f:?}"))?,
            ),
            None => (f, 1),
        };
        let slot = match base {
            "w" => &mut dw,
            "cw" => &mut dc,
            _ => return Err(format!("unknown factor {f:?}; expected w or cw")),
        };
        if slot.replace(exp).is_some() {
            return Err(format!("factor {base} repeated"));
        }
    }
    Ok(Monomial::new(coeff, dw.unwrap_or(0), dc.unwrap_or(0)))
}

fn format_monomial(m: &Monomial) -> String {
    let mut s = format_complex(m.coeff);
    if m.deg_w > 0 {
        s.push_str(&format!(" * w^{}", m.deg_w));
    }
    if m.deg_conj > 0 {
        s.push_str(&format!(" * cw^{}", m.deg_conj));
    }
    s
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got {v:?}")),
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse::<T>().map_err(|_| format!("malformed number {v:?}"))
}

fn set_f64(slot: &mut f64, v: &str) -> Result<(), String> {
    let x: f64 = parse_num(v)?;
    if !x.is_finite() {
        return Err(format!("{v:?} is not finite"));
    }
    *slot = x;
    Ok(())
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut n: Option<usize> = None;
    let mut r0 = 1.0;
    let mut terms = Vec::new();
    let (mut lambda, mut mu, mut gamma) = (None, None, C64::new(0.0, 0.0));
    let mut solver: Vec<(usize, String, String)> = Vec::new();
    let mut loop_cfg = LoopConfig::default();
    let mut trace_cfg = TraceConfig::default();
    let mut outputs = OutputFlags::default();
    let mut seed = 0u64;
    let mut seen = std::collections::HashSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let err = |column: usize, message: String| ConfigError::Parse {
            line,
            column,
            message,
        };
        let Some(eq) = content.find('=') else {
            return Err(err(1, "expected `key = value`".into()));
        };
        let key = content[..eq].trim();
        let value = content[eq + 1..].trim();
        let vcol = eq + 2 + (content[eq + 1..].len() - content[eq + 1..].trim_start().len());
        if key != "h" && !seen.insert(key.to_string()) {
            return Err(err(1, format!("duplicate key {key:?}")));
        }
        let at_value = |m: String| err(vcol, m);
        match key {
            "n" => n = Some(parse_num(value).map_err(at_value)?),
            "r0" => set_f64(&mut r0, value).map_err(at_value)?,
            "h" => terms.push(parse_monomial(value).map_err(at_value)?),
            "lambda" => lambda = Some(parse_complex(value).map_err(at_value)?),
            "mu" => mu = Some(parse_complex(value).map_err(at_value)?),
            "gamma" => gamma = parse_complex(value).map_err(at_value)?,
            "seed" => seed = parse_num(value).map_err(at_value)?,
            "output.json" => outputs.json = parse_bool(value).map_err(at_value)?,
            "output.svg" => {
                outputs.svg = match value {
                    "none" => SvgOutput::None,
                    "disk" => SvgOutput::Disk,
                    "braid" => SvgOutput::Braid,
                    "both" => SvgOutput::Both,
                    _ => return Err(at_value(format!("unknown svg output {value:?}"))),
                }
            }
            k if k.starts_with("solver.") => solver.push((line, k.to_string(), value.to_string())),
            k if k.starts_with("loop.") => {
                let c = &mut loop_cfg;
                match &k[5..] {
                    "default_rho" => set_f64(&mut c.default_rho, value),
                    "max_detour_radius" => set_f64(&mut c.max_detour_radius, value),
                    "angle_step" => set_f64(&mut c.angle_step, value),
                    "max_retries" => parse_num(value).map(|v| c.max_retries = v),
                    "attach_step" => set_f64(&mut c.attach_step, value),
                    "max_attach_retries" => parse_num(value).map(|v| c.max_attach_retries = v),
                    "rho_shrink" => set_f64(&mut c.rho_shrink, value),
                    "max_rho_shrinks" => parse_num(value).map(|v| c.max_rho_shrinks = v),
                    "radius_shrink" => set_f64(&mut c.radius_shrink, value),
                    "max_radius_shrinks" => parse_num(value).map(|v| c.max_radius_shrinks = v),
                    "hit_samples" => parse_num(value).map(|v| c.hit_samples = v),
                    "locus_resolution" => parse_num(value).map(|v| c.locus_resolution = v),
                    _ => return Err(err(1, format!("unknown key {k:?}"))),
                }
                .map_err(at_value)?
            }
            k if k.starts_with("trace.") => {
                let c = &mut trace_cfg;
                match &k[6..] {
                    "min_steps" => parse_num(value).map(|v| c.min_steps = v),
                    "tol_gap" => set_f64(&mut c.tol_gap, value),
                    "guard_band" => set_f64(&mut c.guard_band, value),
                    "max_lift_step" => set_f64(&mut c.max_lift_step, value),
                    "tol_theta" => set_f64(&mut c.tol_theta, value),
                    "tol_grad" => set_f64(&mut c.tol_grad, value),
                    "min_step" => set_f64(&mut c.min_step, value),
                    "regime_ratio" => set_f64(&mut c.regime_ratio, value),
                    _ => return Err(err(1, format!("unknown key {k:?}"))),
                }
                .map_err(at_value)?
            }
            _ => return Err(err(1, format!("unknown key {key:?}"))),
        }
    }

    let missing = |what: &str| ConfigError::Validation(format!("missing required key {what}"));
    let n = n.ok_or_else(|| missing("n"))?;
    let lambda = lambda.ok_or_else(|| missing("lambda"))?;
    let mu = mu.ok_or_else(|| missing("mu"))?;
    let model = BranchedDiskModel::with_radius(n, terms, r0)
        .map_err(|e| ConfigError::Validation(e.to_string()))?;
    let params =
        PerturbationParams::new(lambda, mu, gamma).map_err(|e| ConfigError::Validation(e.to_string()))?;
    let mut s = SolverConfig::for_model(&model);
    for (line, k, value) in solver {
        let r = match &k[7..] {
            "grid_radii" => parse_num(&value).map(|v| s.grid_radii = v),
            "grid_angles" => parse_num(&value).map(|v| s.grid_angles = v),
            "newton_max_iter" => parse_num(&value).map(|v| s.newton_max_iter = v),
            "tol_residual" => set_f64(&mut s.tol_residual, &value),
            "tol_dedupe" => set_f64(&mut s.tol_dedupe, &value),
            "tol_transverse" => set_f64(&mut s.tol_transverse, &value),
            "exclusion_radius" => set_f64(&mut s.exclusion_radius, &value),
            _ => Err(format!("unknown key {k:?}")),
        };
        r.map_err(|message| ConfigError::Parse {
            line,
            column: 1,
            message,
        })?;
    }
    s.validate(model.domain_radius()).map_err(ConfigError::Validation)?;
    loop_cfg.validate().map_err(ConfigError::Validation)?;
    trace_cfg.validate().map_err(ConfigError::Validation)?;
    Ok(RunConfig {
        model,
        params,
        solver: s,
        loop_cfg,
        trace_cfg,
        outputs,
        seed,
    })
}

/// Writes every setting explicitly; `parse_config` inverts it exactly.
pub fn serialize_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
    kv("n", cfg.model.branch_order().to_string());
    kv("r0", format!("{:?}", cfg.model.domain_radius()));
    for m in cfg.model.terms() {
        kv("h", format_monomial(m));
    }
    kv("lambda", format_complex(cfg.params.lambda));
    kv("mu", format_complex(cfg.params.mu));
    kv("gamma", format_complex(cfg.params.gamma));
    let s = &cfg.solver;
    kv("solver.grid_radii", s.grid_radii.to_string());
    kv("solver.grid_angles", s.grid_angles.to_string());
    kv("solver.newton_max_iter", s.newton_max_iter.to_string());
    kv("solver.tol_residual", format!("{:?}", s.tol_residual));
    kv("solver.tol_dedupe", format!("{:?}", s.tol_dedupe));
    kv("solver.tol_transverse", format!("{:?}", s.tol_transverse));
    kv("solver.exclusion_radius", format!("{:?}", s.exclusion_radius));
    let l = &cfg.loop_cfg;
    kv("loop.default_rho", format!("{:?}", l.default_rho));
    kv("loop.max_detour_radius", format!("{:?}", l.max_detour_radius));
    kv("loop.angle_step", format!("{:?}", l.angle_step));
    kv("loop.max_retries", l.max_retries.to_string());
    kv("loop.attach_step", format!("{:?}", l.attach_step));
    kv("loop.max_attach_retries", l.max_attach_retries.to_string());
    kv("loop.rho_shrink", format!("{:?}", l.rho_shrink));
    kv("loop.max_rho_shrinks", l.max_rho_shrinks.to_string());
    kv("loop.radius_shrink", format!("{:?}", l.radius_shrink));
    kv("loop.max_radius_shrinks", l.max_radius_shrinks.to_string());
    kv("loop.hit_samples", l.hit_samples.to_string());
    kv("loop.locus_resolution", l.locus_resolution.to_string());
    let t = &cfg.trace_cfg;
    kv("trace.min_steps", t.min_steps.to_string());
    kv("trace.tol_gap", format!("{:?}", t.tol_gap));
    kv("trace.guard_band", format!("{:?}", t.guard_band));
    kv("trace.max_lift_step", format!("{:?}", t.max_lift_step));
    kv("trace.tol_theta", format!("{:?}", t.tol_theta));
    kv("trace.tol_grad", format!("{:?}", t.tol_grad));
    kv("trace.min_step", format!("{:?}", t.min_step));
    kv("trace.regime_ratio", format!("{:?}", t.regime_ratio));
    kv("output.json", cfg.outputs.json.to_string());
    kv("output.svg", cfg.outputs.svg.as_str().to_string());
    kv("seed", cfg.seed.to_string());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        let c = |re, im| C64::new(re, im);
        assert_eq!(parse_complex("1+0i").unwrap(), c(1.0, 0.0));
        assert_eq!(parse_complex("0.1-2.5i").unwrap(), c(0.1, -2.5));
        assert_eq!(parse_complex("-3").unwrap(), c(-3.0, 0.0));
        assert_eq!(parse_complex("2i").unwrap(), c(0.0, 2.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("1e-3+2E-4i").unwrap(), c(1e-3, 2e-4));
        assert_eq!(parse_complex(" 1 + 2i ").unwrap(), c(1.0, 2.0));
        for bad in ["", "i2", "1+", "abc", "1++2i", "nan"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
        let z = c(-0.0, -0.0);
        let back = parse_complex(&format_complex(z)).unwrap();
        assert!(back.re.is_sign_negative() && back.im.is_sign_negative());
    }

    #[test]
    fn trefoil_config() {
        let cfg = parse_config("n = 2\nh = 1+0i * w^3\nlambda = 0.1+0i\nmu = 0+0i\n").unwrap();
        assert_eq!(cfg.model, BranchedDiskModel::torus(2, 3).unwrap());
        assert_eq!(cfg.params, PerturbationParams::real(0.1, 0.0).unwrap());
        assert_eq!(cfg.solver, SolverConfig::for_model(&cfg.model));
    }

    #[test]
    fn rejections() {
        let v = parse_config("n = 2\nh = 1+0i * w^2\nlambda = 0.1+0i\nmu = 0+0i\n");
        assert!(matches!(v, Err(ConfigError::Validation(m)) if m.contains("valuation")));
        assert!(matches!(parse_config(""), Err(ConfigError::Validation(_))));
        let unknown = parse_config("n = 2\nfoo = 1\n");
        assert!(matches!(unknown, Err(ConfigError::Parse { line: 2, .. })));
        let bad = parse_config("n = 2\nlambda = 0.1+0j\n");
        assert!(matches!(bad, Err(ConfigError::Parse { line: 2, column: 10, .. })), "{bad:?}");
        assert!(parse_config("n = 2\nn = 3\n").is_err());
        assert!(parse_config("n = 2\nh = 1 * w^3 * w^2\nlambda = 1\nmu = 0\n").is_err());
        assert!(parse_config("n = 2\nlambda = 0\nmu = 0\n").is_err());
    }

    #[test]
    fn mixed_monomials_and_comments() {
        let text = "# comment\nn = 3\nh = 0.5-1i * w^2 * cw^2 # inline\nh = 2 * cw^5\nlambda = 1\nmu = 0.1i\ntrace.min_steps = 100\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.model.terms().len(), 2);
        assert_eq!(cfg.model.terms()[0], Monomial::new(C64::new(0.5, -1.0), 2, 2));
        assert_eq!(cfg.model.terms()[1], Monomial::new(C64::new(2.0, 0.0), 0, 5));
        assert_eq!(cfg.trace_cfg.min_steps, 100);
        assert_eq!(parse_config(&serialize_config(&cfg)).unwrap(), cfg);
    }
}
