//! Small deterministic SVG charts: axes, series, legend, error bars.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Style {
    Line { dashed: bool },
    Markers,
    Bars,
}

#[derive(Debug, Clone)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub x_err: Option<f64>,
    pub y_err: Option<f64>,
    /// Drawn as a star instead of a circle.
    pub star: bool,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y, x_err: None, y_err: None, star: false }
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub style: Style,
    /// Index into the palette; series sharing it share a colour.
    pub color: usize,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Chart { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), series: Vec::new() }
    }

    fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for p in &s.points {
                let (xe, ye) = (p.x_err.unwrap_or(0.0), p.y_err.unwrap_or(0.0));
                x0 = x0.min(p.x - xe);
                x1 = x1.max(p.x + xe);
                y0 = y0.min(p.y - ye);
                y1 = y1.max(p.y + ye);
                if s.style == Style::Bars {
                    y0 = y0.min(0.0);
                }
            }
        }
        (nice_range(x0, x1), nice_range(y0, y1))
    }

    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.bounds();
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;
        let mut o = String::new();
        let _ = writeln!(
            o,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(o, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(o, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="13">{}</text>"#, LEFT + pw / 2.0, esc(&self.title));
        let _ = writeln!(
            o,
            r#"<path d="M{LEFT:.1},{TOP:.1} V{:.1} H{:.1}" fill="none" stroke="black"/>"#,
            TOP + ph,
            LEFT + pw
        );
        for k in 0..=4 {
            let t = k as f64 / 4.0;
            let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
            let (px, py) = (sx(xv), sy(yv));
            let _ = writeln!(o, r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/>"#, TOP + ph, TOP + ph + 4.0);
            let _ = writeln!(o, r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, tick_label(xv));
            let _ = writeln!(o, r#"<line x1="{:.1}" y1="{py:.1}" x2="{LEFT:.1}" y2="{py:.1}" stroke="black"/>"#, LEFT - 4.0);
            let _ = writeln!(o, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, LEFT - 6.0, py + 4.0, tick_label(yv));
        }
        let _ = writeln!(o, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 12.0, esc(&self.x_label));
        let _ = writeln!(
            o,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            esc(&self.y_label)
        );

        for s in &self.series {
            let c = PALETTE[s.color % PALETTE.len()];
            let _ = writeln!(o, r#"<g stroke="{c}" fill="{c}">"#);
            match s.style {
                Style::Line { dashed } => {
                    let d: Vec<String> = s.points.iter().map(|p| format!("{:.1},{:.1}", sx(p.x), sy(p.y))).collect();
                    let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
                    let _ = writeln!(o, r#"<polyline points="{}" fill="none" stroke-width="1.5"{dash}/>"#, d.join(" "));
                }
                Style::Bars => {
                    let width = bar_width(&s.points) / (x1 - x0) * pw;
                    for p in &s.points {
                        let (top, base) = (sy(p.y.max(0.0)), sy(p.y.min(0.0)));
                        let _ = writeln!(
                            o,
                            r#"<rect x="{:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill-opacity="0.5"/>"#,
                            sx(p.x) - width / 2.0,
                            width,
                            base - top
                        );
                    }
                }
                Style::Markers => {}
            }
            for p in &s.points {
                let (px, py) = (sx(p.x), sy(p.y));
                if let Some(e) = p.y_err.filter(|&e| e > 0.0) {
                    let _ = writeln!(o, r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}"/>"#, sy(p.y - e), sy(p.y + e));
                }
                if let Some(e) = p.x_err.filter(|&e| e > 0.0) {
                    let _ = writeln!(o, r#"<line x1="{:.1}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}"/>"#, sx(p.x - e), sx(p.x + e));
                }
                if p.star {
                    let _ = writeln!(o, r#"<path d="{}" stroke="black"/>"#, star_path(px, py, 8.0));
                } else if s.style == Style::Markers {
                    let _ = writeln!(o, r#"<circle cx="{px:.1}" cy="{py:.1}" r="3"/>"#);
                }
            }
            let _ = writeln!(o, "</g>");
        }

        for (i, s) in self.series.iter().enumerate() {
            let c = PALETTE[s.color % PALETTE.len()];
            let y = TOP + 8.0 + 16.0 * i as f64;
            let x = W - RIGHT + 12.0;
            let sample = match s.style {
                Style::Line { dashed } => format!(
                    r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{c}" stroke-width="1.5"{}/>"#,
                    x + 20.0,
                    if dashed { r#" stroke-dasharray="6 4""# } else { "" }
                ),
                _ => format!(r#"<rect x="{x:.1}" y="{:.1}" width="20" height="8" fill="{c}"/>"#, y - 4.0),
            };
            let _ = writeln!(o, "{sample}");
            let _ = writeln!(o, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, x + 26.0, y + 4.0, esc(&s.name));
        }
        o.push_str("</svg>\n");
        o
    }
}

fn bar_width(points: &[Point]) -> f64 {
    let mut xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    xs.sort_by(f64::total_cmp);
    let gap = xs.windows(2).map(|w| w[1] - w[0]).filter(|&g| g > 0.0).fold(f64::INFINITY, f64::min);
    if gap.is_finite() { gap * 0.9 } else { 0.1 }
}

fn star_path(cx: f64, cy: f64, r: f64) -> String {
    let mut d = String::new();
    for k in 0..10 {
        let rad = if k % 2 == 0 { r } else { r * 0.45 };
        let ang = std::f64::consts::PI * (k as f64 / 5.0 - 0.5);
        let _ = write!(d, "{}{:.1},{:.1} ", if k == 0 { 'M' } else { 'L' }, cx + rad * ang.cos(), cy + rad * ang.sin());
    }
    d.push('Z');
    d
}

/// Equal-width histogram of `values` as bar points (bin centre, count).
pub fn histogram(values: &[f64], bins: usize) -> Vec<Point> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi - lo < 1e-12 { (lo - 0.05, hi + 0.05) } else { (lo, hi) };
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        counts[(((v - lo) / w) as usize).min(bins - 1)] += 1;
    }
    counts
        .iter()
        .enumerate()
        .map(|(i, &c)| Point::new(lo + w * (i as f64 + 0.5), c as f64))
        .collect()
}
