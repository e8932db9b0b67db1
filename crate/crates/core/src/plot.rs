//! Static SVG plots of convergence curves and bound ratios.
//!
//! Hand-written SVG: two plot types with log-scaled value axes do not
//! justify a plotting dependency.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::experiment::{sibling, write_file, Curve, VerificationReport};

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Values at or below this are clamped before taking logs.
const FLOOR: f64 = 1e-300;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = if self.x1 > self.x0 { self.x1 - self.x0 } else { 1.0 };
        MARGIN + (x - self.x0) / span * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        let span = if self.y1 > self.y0 { self.y1 - self.y0 } else { 1.0 };
        H - MARGIN - (y - self.y0) / span * (H - 2.0 * MARGIN)
    }
}

fn header(out: &mut String, title: &str, frame: &Frame, xlabel: &str, ylabel: &str) {
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(out, r#"<polyline points="{l},{t} {l},{b} {r},{b}" fill="none" stroke="black"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 14.0, escape(xlabel));
    let _ = writeln!(out, r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#, H / 2.0, H / 2.0, escape(ylabel));
    for i in 0..=4 {
        let fx = frame.x0 + (frame.x1 - frame.x0) * i as f64 / 4.0;
        let fy = frame.y0 + (frame.y1 - frame.y0) * i as f64 / 4.0;
        let _ = writeln!(out, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, frame.px(fx), b + 16.0, trim(fx));
        let _ = writeln!(out, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, l - 6.0, frame.py(fy) + 4.0, trim(fy));
    }
}

fn trim(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn log10(v: f64) -> f64 {
    v.max(FLOOR).log10()
}

/// `log10(last_step)` (solid) and `log10(tail_bound)` (dashed) against `n`,
/// one colour per curve.
pub fn convergence_svg(curves: &[Curve]) -> String {
    let pts = curves.iter().flat_map(|c| c.points.iter());
    let (mut x1, mut y0, mut y1) = (1.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x1 = x1.max(p.n as f64);
        for v in [p.last_step, p.tail_bound] {
            if v > 0.0 && v.is_finite() {
                y0 = y0.min(log10(v));
                y1 = y1.max(log10(v));
            }
        }
    }
    if !y0.is_finite() {
        (y0, y1) = (-1.0, 0.0);
    }
    let frame = Frame {
        x0: 0.0,
        x1,
        y0: y0.floor(),
        y1: y1.ceil(),
    };
    let mut out = String::new();
    header(&mut out, "Hyers iteration", &frame, "n", "log10 step (solid), log10 tail bound (dashed)");
    for (i, c) in curves.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        for (dash, pick) in [("", 0usize), (r#" stroke-dasharray="4 3""#, 1)] {
            let points: Vec<String> = c
                .points
                .iter()
                .filter_map(|p| {
                    let v = if pick == 0 { p.last_step } else { p.tail_bound };
                    (v > 0.0 && v.is_finite()).then(|| format!("{:.1},{:.1}", frame.px(p.n as f64), frame.py(log10(v))))
                })
                .collect();
            let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{colour}"{dash}/>"#, points.join(" "));
        }
        let _ = writeln!(out, r#"<text x="{}" y="{}" fill="{colour}">{}</text>"#, W - MARGIN - 90.0, MARGIN + 14.0 * i as f64, escape(&c.label));
    }
    out.push_str("</svg>\n");
    out
}

/// Bound ratios in sample order with the PASS line at 1.
pub fn bound_ratio_svg(ratios: &[f64]) -> String {
    let finite = ratios.iter().copied().filter(|v| v.is_finite());
    let top = finite.fold(1.0f64, f64::max) * 1.05;
    let frame = Frame {
        x0: 0.0,
        x1: ratios.len().max(1) as f64,
        y0: 0.0,
        y1: top,
    };
    let mut out = String::new();
    header(&mut out, "Bound ratio per sample", &frame, "sample", "|f - L| / bound");
    let _ = writeln!(
        out,
        r##"<line x1="{}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#d62728" stroke-dasharray="4 3"/>"##,
        MARGIN,
        W - MARGIN,
        y = frame.py(1.0)
    );
    for (i, &v) in ratios.iter().enumerate() {
        let (y, colour) = if v.is_finite() { (v, "#1f77b4") } else { (top, "#d62728") };
        let _ = writeln!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="1.5" fill="{colour}"/>"#, frame.px(i as f64), frame.py(y));
    }
    out.push_str("</svg>\n");
    out
}

/// Writes `<stem>.convergence.svg` and, when the report has bound ratios,
/// `<stem>.bound_ratio.svg` next to `report_path`.
pub fn write_plots(rep: &VerificationReport, report_path: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if !rep.curves.is_empty() {
        let p = sibling(report_path, "convergence.svg");
        write_file(&p, &convergence_svg(&rep.curves))?;
        written.push(p);
    }
    if !rep.bound_ratios.is_empty() {
        let p = sibling(report_path, "bound_ratio.svg");
        let ratios: Vec<f64> = rep.bound_ratios.iter().map(|r| r.0).collect();
        write_file(&p, &bound_ratio_svg(&ratios))?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyers::CurvePoint;

    #[test]
    fn svg_is_well_formed_enough() {
        let c = Curve {
            label: "a<b".into(),
            converged: true,
            points: (1..=5)
                .map(|n| CurvePoint {
                    n,
                    last_step: 0.25f64.powi(n as i32),
                    tail_bound: if n == 5 { 0.0 } else { 0.3f64.powi(n as i32) },
                })
                .collect(),
        };
        let svg = convergence_svg(&[c]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg.matches("<polyline").count(), 3);
        let svg = bound_ratio_svg(&[0.2, 0.9, f64::INFINITY]);
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
