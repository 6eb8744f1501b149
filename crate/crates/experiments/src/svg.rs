//! Minimal standalone SVG line, marker and histogram charts.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{config_err, Result};

pub const RED: &str = "#d62728";
const PALETTE: [&str; 6] = ["#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Dashed,
    /// Circles at each point.
    Markers,
    /// Bars centred at each x, as wide as the spacing between centres.
    Bars,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    /// Palette colour by index when `None`.
    pub color: Option<String>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>, style: Style) -> Self {
        Self { name: name.into(), points, style, color: None }
    }

    pub fn red(mut self) -> Self {
        self.color = Some(RED.to_string());
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl Figure {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), series: Vec::new() }
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn bar_halfwidth(points: &[(f64, f64)]) -> f64 {
    let w = points.windows(2).map(|p| (p[1].0 - p[0].0).abs()).filter(|w| *w > 0.0).fold(f64::INFINITY, f64::min);
    if w.is_finite() {
        0.5 * w
    } else {
        0.5
    }
}

fn data_range(fig: &Figure) -> ((f64, f64), (f64, f64)) {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in &fig.series {
        let hw = if s.style == Style::Bars { bar_halfwidth(&s.points) } else { 0.0 };
        for &(x, y) in &s.points {
            x0 = x0.min(x - hw);
            x1 = x1.max(x + hw);
            y0 = y0.min(y);
            y1 = y1.max(y);
            if s.style == Style::Bars {
                y0 = y0.min(0.0);
            }
        }
    }
    let fix = |lo: f64, hi: f64| {
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo <= 0.0 {
            (lo - 0.5, hi + 0.5)
        } else {
            let pad = 0.04 * (hi - lo);
            (lo - pad, hi + pad)
        }
    };
    (fix(x0, x1), fix(y0, y1))
}

/// Roughly five round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Renders `fig` as an SVG document. No timestamps or random ids are embedded.
pub fn render_svg_string(fig: &Figure) -> Result<String> {
    if let Some(s) = fig.series.iter().find(|s| s.points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite())) {
        return Err(config_err("series", format!("`{}` contains non-finite data", s.name)));
    }
    let ((x0, x1), (y0, y1)) = data_range(fig);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut o = String::new();
    let _ = writeln!(o, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(o, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(o, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(&fig.title));

    let _ = writeln!(o, r#"<g class="axes" stroke="black" stroke-width="1">"#);
    let _ = writeln!(o, r#"<line x1="{LEFT}" y1="{}" x2="{}" y2="{}"/>"#, TOP + ph, LEFT + pw, TOP + ph);
    let _ = writeln!(o, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}"/>"#, TOP + ph);
    for t in ticks(x0, x1) {
        let _ = writeln!(o, r#"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}"/>"#, sx(t), TOP + ph, TOP + ph + 5.0);
    }
    for t in ticks(y0, y1) {
        let _ = writeln!(o, r#"<line x1="{}" y1="{1:.2}" x2="{2}" y2="{1:.2}"/>"#, LEFT - 5.0, sy(t), LEFT);
    }
    let _ = writeln!(o, "</g>");
    let _ = writeln!(o, r#"<g class="tick-labels" fill="black">"#);
    for t in ticks(x0, x1) {
        let _ = writeln!(o, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, sx(t), TOP + ph + 18.0, label(t));
    }
    for t in ticks(y0, y1) {
        let _ = writeln!(o, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, sy(t) + 4.0, label(t));
    }
    let _ = writeln!(o, "</g>");
    let _ = writeln!(o, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 10.0, escape(&fig.x_label));
    let _ = writeln!(
        o,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(&fig.y_label)
    );

    for (i, s) in fig.series.iter().enumerate() {
        let color = s.color.clone().unwrap_or_else(|| PALETTE[i % PALETTE.len()].to_string());
        match s.style {
            Style::Line | Style::Dashed => {
                let pts: Vec<String> = s.points.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
                let dash = if s.style == Style::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
                let _ = writeln!(o, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#, pts.join(" "));
            }
            Style::Markers => {
                let _ = writeln!(o, r#"<g class="markers" fill="{color}">"#);
                for (x, y) in &s.points {
                    let _ = writeln!(o, r#"<circle cx="{:.2}" cy="{:.2}" r="3"/>"#, sx(*x), sy(*y));
                }
                let _ = writeln!(o, "</g>");
            }
            Style::Bars => {
                let hw = bar_halfwidth(&s.points);
                let _ = writeln!(o, r#"<g class="bars" fill="{color}" fill-opacity="0.55" stroke="white" stroke-width="0.5">"#);
                for (x, y) in &s.points {
                    let (top, bottom) = (sy(y.max(0.0)), sy(y.min(0.0)));
                    let _ = writeln!(
                        o,
                        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                        sx(x - hw),
                        top,
                        sx(x + hw) - sx(x - hw),
                        bottom - top
                    );
                }
                let _ = writeln!(o, "</g>");
            }
        }
    }

    if !fig.series.is_empty() {
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(o, r#"<g class="legend">"#);
        for (i, s) in fig.series.iter().enumerate() {
            let color = s.color.clone().unwrap_or_else(|| PALETTE[i % PALETTE.len()].to_string());
            let y = TOP + 10.0 + 20.0 * i as f64;
            match s.style {
                Style::Markers => {
                    let _ = writeln!(o, r#"<circle cx="{}" cy="{y}" r="3" fill="{color}"/>"#, lx + 10.0);
                }
                Style::Bars => {
                    let _ = writeln!(o, r#"<rect x="{lx}" y="{}" width="20" height="10" fill="{color}" fill-opacity="0.55"/>"#, y - 5.0);
                }
                _ => {
                    let _ = writeln!(o, r#"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="1.5"/>"#, lx + 20.0);
                }
            }
            let _ = writeln!(o, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, y + 4.0, escape(&s.name));
        }
        let _ = writeln!(o, "</g>");
    }
    o.push_str("</svg>\n");
    Ok(o)
}

pub fn render_svg(fig: &Figure, path: &Path) -> Result<()> {
    std::fs::write(path, render_svg_string(fig)?)?;
    Ok(())
}
