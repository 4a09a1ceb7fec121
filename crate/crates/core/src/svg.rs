//! SVG views of a JSON run report.
//!
//! `disk` draws the base plane around the branch point: the crossing locus,
//! the projected double points, triple coincidences and the loop with
//! direction arrows. `braid` draws the traced word with strands running left
//! to right; in a positive crossing the strand moving down passes over.

use std::fmt::Write;

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    Disk,
    Braid,
}

impl std::str::FromStr for View {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "disk" => Ok(View::Disk),
            "braid" => Ok(View::Braid),
            _ => Err(format!("unknown view {s:?}; expected disk or braid")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvgError {
    #[error("report is missing {0}")]
    MissingData(&'static str),
}

const SIZE: f64 = 600.0;

pub fn render_svg(report: &Value, view: View) -> Result<String, SvgError> {
    match view {
        View::Disk => disk(report),
        View::Braid => braid(report),
    }
}

fn pair(v: &Value) -> Option<(f64, f64)> {
    Some((v.get(0)?.as_f64()?, v.get(1)?.as_f64()?))
}

fn header(w: f64, h: f64) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    )
}

struct Frame {
    scale: f64,
}

impl Frame {
    fn map(&self, p: (f64, f64)) -> (f64, f64) {
        (SIZE / 2.0 + self.scale * p.0, SIZE / 2.0 - self.scale * p.1)
    }

    fn polyline(&self, pts: impl Iterator<Item = (f64, f64)>) -> String {
        let mut s = String::new();
        for (i, p) in pts.enumerate() {
            let (x, y) = self.map(p);
            let _ = write!(s, "{}{x:.2},{y:.2}", if i == 0 { "M" } else { " L" });
        }
        s
    }
}

fn segment_samples(g: &Value) -> Option<Vec<(f64, f64)>> {
    if let Some(a) = g.get("arc") {
        let (cx, cy) = pair(&a["center"])?;
        let r = a["radius"].as_f64()?;
        let (start, sweep) = (a["start"].as_f64()?, a["sweep"].as_f64()?);
        let m = 96;
        Some(
            (0..=m)
                .map(|i| {
                    let t = start + sweep * i as f64 / m as f64;
                    (cx + r * t.cos(), cy + r * t.sin())
                })
                .collect(),
        )
    } else {
        let l = g.get("line")?;
        Some(vec![pair(&l["from"])?, pair(&l["to"])?])
    }
}

fn disk(report: &Value) -> Result<String, SvgError> {
    let lp = report
        .get("loop")
        .filter(|l| !l.is_null())
        .ok_or(SvgError::MissingData("loop"))?;
    let locus = report
        .get("locus")
        .filter(|l| !l.is_null())
        .ok_or(SvgError::MissingData("locus"))?;
    let rho = lp["rho"].as_f64().ok_or(SvgError::MissingData("loop.rho"))?;
    let dps: Vec<(f64, f64)> = report["double_points"]
        .as_array()
        .map(|a| a.iter().filter_map(|d| pair(&d["image"]["z1"])).collect())
        .unwrap_or_default();
    let triples: Vec<(f64, f64)> = report["genericity"]["triple_coincidences"]
        .as_array()
        .map(|a| a.iter().filter_map(|t| pair(&t["z"])).collect())
        .unwrap_or_default();
    let extent = dps
        .iter()
        .map(|p| p.0.hypot(p.1) * 1.2)
        .fold(rho * 1.5, f64::max);
    let f = Frame {
        scale: 0.45 * SIZE / extent,
    };

    let mut s = header(SIZE, SIZE);
    let _ = writeln!(
        s,
        "<defs><clipPath id=\"view\"><rect width=\"{SIZE}\" height=\"{SIZE}\"/></clipPath></defs>"
    );
    s.push_str("<g clip-path=\"url(#view)\" fill=\"none\">\n");
    let axis = |a: (f64, f64), b: (f64, f64)| f.polyline([a, b].into_iter());
    let _ = writeln!(
        s,
        "<path d=\"{} {}\" stroke=\"#ccc\" stroke-width=\"0.5\"/>",
        axis((-2.0 * extent, 0.0), (2.0 * extent, 0.0)),
        axis((0.0, -2.0 * extent), (0.0, 2.0 * extent))
    );
    for line in locus["polylines"].as_array().into_iter().flatten() {
        let pts: Vec<(f64, f64)> = line["points"]
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(pair)
            .collect();
        if pts.len() >= 2 {
            let _ = writeln!(
                s,
                "<path class=\"locus\" d=\"{}\" stroke=\"#1f77b4\" stroke-width=\"1\"/>",
                f.polyline(pts.into_iter())
            );
        }
    }
    for seg in lp["segments"].as_array().into_iter().flatten() {
        let pts = segment_samples(&seg["geometry"]).ok_or(SvgError::MissingData("loop.segments"))?;
        let class = match seg["kind"].as_str() {
            Some("detour_arc") => "detour",
            Some("base_arc") => "base",
            _ => "tube",
        };
        let _ = writeln!(
            s,
            "<path class=\"{class}\" d=\"{}\" stroke=\"black\" stroke-width=\"1.5\"/>",
            f.polyline(pts.iter().copied())
        );
        if class != "tube" {
            // arrowhead at the middle of the segment
            let i = pts.len() / 2;
            let (a, b) = (f.map(pts[i - 1]), f.map(pts[i]));
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let len = dx.hypot(dy).max(1e-12);
            let (ux, uy) = (dx / len * 7.0, dy / len * 7.0);
            let _ = writeln!(
                s,
                "<path class=\"arrow\" d=\"M{:.2},{:.2} L{:.2},{:.2} L{:.2},{:.2} Z\" fill=\"black\"/>",
                b.0 + ux,
                b.1 + uy,
                b.0 - uy * 0.5,
                b.1 + ux * 0.5,
                b.0 + uy * 0.5,
                b.1 - ux * 0.5
            );
        }
    }
    s.push_str("</g>\n");
    for &p in &dps {
        let (x, y) = f.map(p);
        let _ = writeln!(s, "<circle class=\"double-point\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"#d62728\"/>");
    }
    for &p in &triples {
        let (x, y) = f.map(p);
        let _ = writeln!(
            s,
            "<rect class=\"triple\" x=\"{:.2}\" y=\"{:.2}\" width=\"6\" height=\"6\" fill=\"#2ca02c\"/>",
            x - 3.0,
            y - 3.0
        );
    }
    let (ox, oy) = f.map((0.0, 0.0));
    let _ = writeln!(s, "<circle class=\"branch-point\" cx=\"{ox:.2}\" cy=\"{oy:.2}\" r=\"2.5\" fill=\"black\"/>");
    s.push_str("</svg>\n");
    Ok(s)
}

fn braid(report: &Value) -> Result<String, SvgError> {
    let b = report
        .get("braid")
        .filter(|b| !b.is_null())
        .ok_or(SvgError::MissingData("braid"))?;
    let n = b["strands"].as_u64().ok_or(SvgError::MissingData("braid.strands"))? as usize;
    let text = b["word"].as_str().ok_or(SvgError::MissingData("braid.word"))?;
    let word = crate::braid::BraidWord::parse(n, text).map_err(|_| SvgError::MissingData("a valid braid word"))?;
    let (dx, dy, margin) = (40.0, 40.0, 30.0);
    let width = 2.0 * margin + dx * (word.len().max(1)) as f64;
    let height = 2.0 * margin + dy * (n - 1) as f64;
    let y = |i: usize| margin + dy * i as f64;
    let mut s = header(width, height);
    s.push_str("<g fill=\"none\" stroke=\"black\" stroke-width=\"2\">\n");
    for (col, l) in word.letters().iter().enumerate() {
        let x0 = margin + dx * col as f64;
        let x1 = x0 + dx;
        let (top, bot) = (l.k - 1, l.k);
        for i in (0..n).filter(|&i| i != top && i != bot) {
            let _ = writeln!(s, "<path d=\"M{x0:.1},{:.1} H{x1:.1}\"/>", y(i));
        }
        let down = format!(
            "M{x0:.1},{:.1} C{:.1},{:.1} {:.1},{:.1} {x1:.1},{:.1}",
            y(top),
            x0 + dx / 2.0,
            y(top),
            x0 + dx / 2.0,
            y(bot),
            y(bot)
        );
        let up = format!(
            "M{x0:.1},{:.1} C{:.1},{:.1} {:.1},{:.1} {x1:.1},{:.1}",
            y(bot),
            x0 + dx / 2.0,
            y(bot),
            x0 + dx / 2.0,
            y(top),
            y(top)
        );
        let (over, under) = if l.exponent() > 0 { (down, up) } else { (up, down) };
        let sign = if l.exponent() > 0 { "positive" } else { "negative" };
        let _ = writeln!(
            s,
            "<g class=\"crossing {sign}\"><path d=\"{under}\"/><path d=\"{over}\" stroke=\"white\" stroke-width=\"8\"/><path d=\"{over}\"/></g>"
        );
    }
    if word.is_empty() {
        for i in 0..n {
            let _ = writeln!(s, "<path d=\"M{margin:.1},{:.1} H{:.1}\"/>", y(i), width - margin);
        }
    }
    s.push_str("</g>\n");
    for i in 0..n {
        let _ = writeln!(
            s,
            "<text x=\"6\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            y(i) + 4.0,
            i + 1
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
