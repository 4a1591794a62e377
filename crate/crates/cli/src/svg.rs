//! Minimal self-contained SVG plots.

use std::fmt::Write;

use fracshape::geometry::Point;
use fracshape::symmetry::CapGrid;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    out
}

/// Affine map from data bounds to the plot area; `equal` keeps aspect ratio.
struct Frame {
    lo: Point,
    hi: Point,
    sx: f64,
    sy: f64,
}

impl Frame {
    fn new(mut lo: Point, mut hi: Point, equal: bool) -> Self {
        for k in 0..2 {
            if !(hi[k] > lo[k]) {
                lo[k] -= 0.5;
                hi[k] += 0.5;
            }
        }
        let (w, h) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
        let mut sx = w / (hi[0] - lo[0]);
        let mut sy = h / (hi[1] - lo[1]);
        if equal {
            let s = sx.min(sy);
            sx = s;
            sy = s;
        }
        Self { lo, hi, sx, sy }
    }

    fn map(&self, p: Point) -> (f64, f64) {
        (MARGIN + (p[0] - self.lo[0]) * self.sx, HEIGHT - MARGIN - (p[1] - self.lo[1]) * self.sy)
    }

    fn axes(&self, out: &mut String, xlabel: &str, ylabel: &str) {
        let (x0, y0) = self.map(self.lo);
        let (x1, y1) = self.map(self.hi);
        let _ = writeln!(out, r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
        for (v, x) in [(self.lo[0], x0), (self.hi[0], x1)] {
            let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{v:.4}</text>"#, y0 + 16.0);
        }
        for (v, y) in [(self.lo[1], y0), (self.hi[1], y1)] {
            let _ = writeln!(out, r#"<text x="{:.2}" y="{y:.2}" text-anchor="end">{v:.4}</text>"#, x0 - 4.0);
        }
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, 0.5 * (x0 + x1), y0 + 34.0, escape(xlabel));
        let _ = writeln!(
            out,
            r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
            0.5 * (y0 + y1),
            0.5 * (y0 + y1),
            escape(ylabel)
        );
    }
}

fn polyline(out: &mut String, frame: &Frame, pts: impl Iterator<Item = Point>, color: &str, closed: bool) {
    let coords: Vec<String> = pts
        .map(|p| {
            let (x, y) = frame.map(p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let tag = if closed { "polygon" } else { "polyline" };
    let _ = writeln!(out, r#"<{tag} points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, coords.join(" "));
}

fn legend(out: &mut String, labels: &[&str]) {
    for (k, label) in labels.iter().enumerate() {
        let y = MARGIN + 14.0 * k as f64;
        let color = PALETTE[k % PALETTE.len()];
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#, WIDTH - MARGIN - 90.0, WIDTH - MARGIN - 70.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, WIDTH - MARGIN - 66.0, y + 4.0, escape(label));
    }
}

fn bounds(points: impl Iterator<Item = Point>) -> (Point, Point) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for k in 0..2 {
            if p[k].is_finite() {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
    }
    if !lo[0].is_finite() {
        return ([0.0, 0.0], [1.0, 1.0]);
    }
    (lo, hi)
}

/// Line plot of one or more `(label, x, y)` series.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[(&str, &[f64], &[f64])]) -> String {
    let (lo, hi) = bounds(series.iter().flat_map(|(_, x, y)| x.iter().zip(y.iter()).map(|(a, b)| [*a, *b])));
    let frame = Frame::new(lo, hi, false);
    let mut out = header(title);
    frame.axes(&mut out, xlabel, ylabel);
    for (k, (_, x, y)) in series.iter().enumerate() {
        polyline(&mut out, &frame, x.iter().zip(y.iter()).map(|(a, b)| [*a, *b]), PALETTE[k % PALETTE.len()], false);
    }
    if series.len() > 1 {
        legend(&mut out, &series.iter().map(|s| s.0).collect::<Vec<_>>());
    }
    out.push_str("</svg>\n");
    out
}

/// Closed boundary curves drawn on equal axes.
pub fn shape_overlay(title: &str, curves: &[(String, Vec<Point>)]) -> String {
    let (lo, hi) = bounds(curves.iter().flat_map(|(_, c)| c.iter().copied()));
    let frame = Frame::new(lo, hi, true);
    let mut out = header(title);
    frame.axes(&mut out, "x1", "x2");
    for (k, (_, pts)) in curves.iter().enumerate() {
        polyline(&mut out, &frame, pts.iter().copied(), PALETTE[k % PALETTE.len()], true);
    }
    legend(&mut out, &curves.iter().map(|c| c.0.as_str()).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

/// Blue below zero, red above, white at zero; symmetric scale.
fn diverging(v: f64, scale: f64) -> String {
    let t = (v / scale).clamp(-1.0, 1.0);
    let fade = |a: f64| (255.0 * (1.0 - a.abs())).round() as u8;
    if t >= 0.0 {
        format!("#ff{:02x}{:02x}", fade(t), fade(t))
    } else {
        format!("#{:02x}{:02x}ff", fade(t), fade(t))
    }
}

/// Heat map of `w` on the reflected cap, in the `(e, e⊥)` frame.
pub fn heat_map(title: &str, cap: &CapGrid) -> String {
    let n = cap.n;
    let lo = cap.origin;
    let hi = [lo[0] + cap.spacing[0] * n as f64, lo[1] + cap.spacing[1] * n as f64];
    let frame = Frame::new(lo, hi, true);
    let scale = cap.values.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mut out = header(title);
    for j in 0..n {
        for i in 0..n {
            let v = cap.values[j * n + i];
            if !v.is_finite() {
                continue;
            }
            let a = [lo[0] + i as f64 * cap.spacing[0], lo[1] + (j + 1) as f64 * cap.spacing[1]];
            let (x, y) = frame.map(a);
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                cap.spacing[0] * frame.sx + 0.05,
                cap.spacing[1] * frame.sy + 0.05,
                diverging(v, scale)
            );
        }
    }
    frame.axes(&mut out, "x·e", "x·e⊥");
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">|w| ≤ {scale:.3e}</text>"#, WIDTH - MARGIN, HEIGHT - 8.0);
    out.push_str("</svg>\n");
    out
}
