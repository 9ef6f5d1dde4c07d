//! Minimal standalone SVG line and scatter plots.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mark {
    Line,
    DashedLine,
    Points,
}

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub mark: Mark,
}

#[derive(Clone, Debug)]
pub struct PlotStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: f64,
    pub height: f64,
    pub log_y: bool,
    /// Vertical dashed marker, e.g. the train/test boundary.
    pub marker_x: Option<f64>,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self {
            title: String::new(),
            x_label: "t".into(),
            y_label: String::new(),
            width: 800.0,
            height: 450.0,
            log_y: false,
            marker_x: None,
        }
    }
}

pub const PALETTE: [&str; 6] = [
    "#222222", "#e07b00", "#1f77b4", "#2ca02c", "#9467bd", "#d62728",
];

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Tick positions with a 1/2/5 step covering `[lo, hi]`.
pub fn linear_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

/// Powers of ten spanning `[lo, hi]` (both positive).
pub fn decade_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.log10().floor() as i32, hi.log10().ceil() as i32);
    (a..=b).map(|k| 10f64.powi(k)).collect()
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    w: f64,
    h: f64,
    log_y: bool,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x0) / (self.x1 - self.x0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        let (y, y0, y1) = if self.log_y {
            (y.log10(), self.y0.log10(), self.y1.log10())
        } else {
            (y, self.y0, self.y1)
        };
        MARGIN_TOP + (1.0 - (y - y0) / (y1 - y0)) * self.h
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Renders the plot as an SVG document.
pub fn render_svg(series: &[Series], style: &PlotStyle) -> CliResult<String> {
    let usable = |p: &(f64, f64)| p.0.is_finite() && p.1.is_finite() && (!style.log_y || p.1 > 0.0);
    let points: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(usable)
        .collect();
    if points.is_empty() {
        return Err(CliError::CheckFailed("plot has no drawable points".into()));
    }
    let fold = |f: fn(f64, f64) -> f64, init: f64, pick: fn(&(f64, f64)) -> f64| {
        points.iter().map(pick).fold(init, f)
    };
    let (mut x0, mut x1) = (
        fold(f64::min, f64::INFINITY, |p| p.0),
        fold(f64::max, f64::NEG_INFINITY, |p| p.0),
    );
    if let Some(m) = style.marker_x {
        x0 = x0.min(m);
        x1 = x1.max(m);
    }
    let (ymin, ymax) = (
        fold(f64::min, f64::INFINITY, |p| p.1),
        fold(f64::max, f64::NEG_INFINITY, |p| p.1),
    );
    let (x0, x1) = if x1 > x0 {
        (x0, x1)
    } else {
        (x0 - 0.5, x1 + 0.5)
    };
    let (y0, y1) = if style.log_y {
        let ticks = decade_ticks(ymin, ymax);
        let (lo, hi) = (ticks[0], ticks[ticks.len() - 1]);
        if hi > lo {
            (lo, hi)
        } else {
            (lo, 10.0 * lo)
        }
    } else {
        padded(ymin, ymax)
    };
    let frame = Frame {
        x0,
        x1,
        y0,
        y1,
        w: style.width - MARGIN_LEFT - MARGIN_RIGHT,
        h: style.height - MARGIN_TOP - MARGIN_BOTTOM,
        log_y: style.log_y,
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = style.width,
        h = style.height
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if !style.title.is_empty() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            MARGIN_LEFT + frame.w / 2.0,
            escape(&style.title)
        );
    }

    // axes and ticks
    let (left, right) = (MARGIN_LEFT, MARGIN_LEFT + frame.w);
    let (top, bottom) = (MARGIN_TOP, MARGIN_TOP + frame.h);
    let _ = writeln!(
        out,
        r##"<g class="axes" stroke="#000" fill="none"><line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}"/><line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}"/></g>"##
    );
    let _ = writeln!(out, r#"<g class="x-ticks">"#);
    for t in linear_ticks(x0, x1, 8) {
        let x = frame.px(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{bottom}" x2="{x:.2}" y2="{:.2}" stroke="#000"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            bottom + 5.0,
            bottom + 18.0,
            tick_label(t)
        );
    }
    let _ = writeln!(out, "</g>");
    let y_ticks = if style.log_y {
        decade_ticks(y0, y1)
    } else {
        linear_ticks(y0, y1, 6)
    };
    let _ = writeln!(out, r#"<g class="y-ticks">"#);
    for t in y_ticks {
        let y = frame.py(t);
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{left}" y2="{y:.2}" stroke="#000"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            left - 5.0,
            left - 8.0,
            y + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + frame.w / 2.0,
        style.height - 15.0,
        escape(&style.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        MARGIN_TOP + frame.h / 2.0,
        MARGIN_TOP + frame.h / 2.0,
        escape(&style.y_label)
    );

    if let Some(m) = style.marker_x {
        let x = frame.px(m);
        let _ = writeln!(
            out,
            r##"<line class="boundary" data-x="{m}" x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{bottom}" stroke="#999" stroke-dasharray="6 4"/>"##
        );
    }

    for s in series {
        let pts: Vec<(f64, f64)> = s.points.iter().copied().filter(usable).collect();
        let _ = writeln!(
            out,
            r#"<g class="series" data-label="{}">"#,
            escape(&s.label)
        );
        match s.mark {
            Mark::Line | Mark::DashedLine => {
                let path: Vec<String> = pts
                    .iter()
                    .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
                    .collect();
                let dash = if s.mark == Mark::DashedLine {
                    r#" stroke-dasharray="4 3""#
                } else {
                    ""
                };
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
                    s.color,
                    path.join(" ")
                );
            }
            Mark::Points => {
                for &(x, y) in &pts {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                        frame.px(x),
                        frame.py(y),
                        s.color
                    );
                }
            }
        }
        let _ = writeln!(out, "</g>");
    }

    let _ = writeln!(out, r#"<g class="legend">"#);
    for (i, s) in series.iter().enumerate() {
        let y = MARGIN_TOP + 10.0 + 20.0 * i as f64;
        let x = right + 15.0;
        let swatch = match s.mark {
            Mark::Points => format!(
                r#"<circle cx="{:.2}" cy="{y:.2}" r="4" fill="{}"/>"#,
                x + 10.0,
                s.color
            ),
            _ => format!(
                r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2"/>"#,
                x + 20.0,
                s.color
            ),
        };
        let _ = writeln!(
            out,
            r#"{swatch}<text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 26.0,
            y + 4.0,
            escape(&s.label)
        );
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_svg_plot(series: &[Series], style: &PlotStyle, path: &Path) -> CliResult<()> {
    let doc = render_svg(series, style)?;
    std::fs::write(path, doc).map_err(|e| CliError::io(path, e))
}
