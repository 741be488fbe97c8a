//! Static SVG figures: stacked panels sharing the time axis.
//!
//! Output is a pure function of the [`PlotSpec`]; coordinates are printed
//! with fixed precision so identical input gives identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineStyle {
    Solid,
    Dashed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub style: LineStyle,
    /// Any SVG color, e.g. `#1f77b4`.
    pub color: String,
}

impl PlotSeries {
    pub fn new(label: &str, times: Vec<f64>, values: Vec<f64>, style: LineStyle, color: &str) -> Self {
        Self { label: label.into(), times, values, style, color: color.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Panel {
    pub title: String,
    pub series: Vec<PlotSeries>,
    /// Vertical lines at detection times.
    pub markers: Vec<f64>,
    /// Dotted vertical lines at reference times (e.g. the true changes).
    pub references: Vec<f64>,
    /// Optional horizontal reference levels (e.g. `0`).
    pub hlines: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub panels: Vec<Panel>,
    pub width: u32,
    /// Height of each panel in pixels.
    pub panel_height: u32,
}

impl PlotSpec {
    pub fn new(title: &str, panels: Vec<Panel>) -> Self {
        Self { title: title.into(), panels, width: 900, panel_height: 280 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("plot: {m}")));
        if self.panels.is_empty() || self.panels.iter().all(|p| p.series.is_empty()) {
            return bad("at least one series is required");
        }
        for s in self.panels.iter().flat_map(|p| &p.series) {
            if s.times.len() != s.values.len() {
                return bad(&format!("series `{}` has mismatched lengths", s.label));
            }
        }
        if self.width < 200 || self.panel_height < 100 {
            return bad("figure is too small");
        }
        Ok(())
    }
}

const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 36.0;
const HEADER: f64 = 30.0;

/// Ticks at 1, 2 or 5 times a power of ten, about `target` of them.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return vec![lo];
    }
    let raw = span / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{:.6}", if v.abs() < 1e-12 { 0.0 } else { v });
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn finite_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.filter(|v| v.is_finite()).fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

fn padded((lo, hi): (f64, f64)) -> (f64, f64) {
    if hi - lo < 1e-12 {
        let pad = if lo.abs() > 0.0 { lo.abs() * 0.1 } else { 1.0 };
        (lo - pad, hi + pad)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Renders the figure as an SVG document.
pub fn render_svg(spec: &PlotSpec) -> Result<String> {
    spec.validate()?;
    let all = spec.panels.iter().flat_map(|p| &p.series);
    let (t_lo, t_hi) = padded(
        finite_range(all.flat_map(|s| s.times.iter().copied()))
            .ok_or_else(|| Error::Config("plot: series have no finite times".into()))?,
    );
    let w = spec.width as f64;
    let ph = spec.panel_height as f64;
    let height = HEADER + ph * spec.panels.len() as f64;
    let plot_w = w - MARGIN_L - MARGIN_R;
    let x_of = |t: f64| MARGIN_L + (t - t_lo) / (t_hi - t_lo) * plot_w;
    let t_ticks = nice_ticks(t_lo, t_hi, 8);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="11">"#,
        spec.width, height, spec.width, height
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        w / 2.0,
        escape(&spec.title)
    );

    for (pi, panel) in spec.panels.iter().enumerate() {
        let top = HEADER + pi as f64 * ph + MARGIN_T;
        let bottom = HEADER + (pi + 1) as f64 * ph - MARGIN_B;
        let range = finite_range(
            panel.series.iter().flat_map(|s| s.values.iter().copied()).chain(panel.hlines.iter().copied()),
        )
        .unwrap_or((-1.0, 1.0));
        let (y_lo, y_hi) = padded(range);
        let y_of = |v: f64| bottom - (v - y_lo) / (y_hi - y_lo) * (bottom - top);

        let _ = writeln!(out, r#"<g class="panel" id="panel{pi}">"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
            MARGIN_L + plot_w / 2.0,
            top - 8.0,
            escape(&panel.title)
        );
        let _ = writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
            MARGIN_L,
            top,
            plot_w,
            bottom - top
        );
        for t in &t_ticks {
            let x = x_of(*t);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                bottom + 4.0,
                bottom + 16.0,
                tick_label(*t)
            );
        }
        for v in nice_ticks(y_lo, y_hi, 5) {
            let y = y_of(v);
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_L:.2}" y2="{y:.2}" stroke="#444"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                MARGIN_L - 4.0,
                MARGIN_L - 6.0,
                y + 4.0,
                tick_label(v)
            );
        }
        if pi + 1 == spec.panels.len() {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">time (s)</text>"#,
                MARGIN_L + plot_w / 2.0,
                bottom + 30.0
            );
        }
        for v in &panel.hlines {
            let y = y_of(*v);
            let _ = writeln!(
                out,
                r##"<line x1="{MARGIN_L:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#999" stroke-width="0.8"/>"##,
                MARGIN_L + plot_w
            );
        }
        for t in &panel.references {
            let x = x_of(*t);
            let _ = writeln!(
                out,
                r##"<line class="reference" x1="{x:.2}" y1="{top:.2}" x2="{x:.2}" y2="{bottom:.2}" stroke="#2ca02c" stroke-dasharray="2,3"/>"##
            );
        }
        for s in &panel.series {
            let mut pts = String::new();
            for (t, v) in s.times.iter().zip(&s.values) {
                if t.is_finite() && v.is_finite() {
                    let _ = write!(pts, "{:.2},{:.2} ", x_of(*t), y_of(*v));
                }
            }
            let dash = match s.style {
                LineStyle::Solid => "",
                LineStyle::Dashed => r#" stroke-dasharray="6,4""#,
            };
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="1"{dash} points="{}"><title>{}</title></polyline>"#,
                escape(&s.color),
                pts.trim_end(),
                escape(&s.label)
            );
        }
        for t in &panel.markers {
            let x = x_of(*t);
            let _ = writeln!(
                out,
                r##"<line class="detection" x1="{x:.2}" y1="{top:.2}" x2="{x:.2}" y2="{bottom:.2}" stroke="#d62728" stroke-width="1.5"/>"##
            );
        }
        // legend, top right
        for (i, s) in panel.series.iter().enumerate() {
            let y = top + 14.0 + 14.0 * i as f64;
            let x = MARGIN_L + plot_w - 150.0;
            let dash = if s.style == LineStyle::Dashed { r#" stroke-dasharray="6,4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}"{dash}/><text x="{:.2}" y="{y:.2}">{}</text>"#,
                y - 4.0,
                x + 24.0,
                y - 4.0,
                escape(&s.color),
                x + 30.0,
                escape(&s.label)
            );
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_plot(spec: &PlotSpec, path: &Path) -> Result<()> {
    let svg = render_svg(spec)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, svg)?;
    Ok(())
}

/// Inputs of the standard two-panel figure.
#[derive(Debug, Clone, Default)]
pub struct FigureData<'a> {
    pub title: &'a str,
    pub times: &'a [f64],
    pub signal: &'a [f64],
    pub clean: Option<&'a [f64]>,
    /// `(time, d)` decision trace.
    pub decision: Option<(&'a [f64], &'a [f64])>,
    pub detections: &'a [f64],
    pub truth: &'a [f64],
}

/// Signal panel (noise-free dashed, noisy solid) over a decision panel, with
/// detections marked in both.
pub fn figure(data: &FigureData<'_>) -> PlotSpec {
    let mut top = Panel {
        title: "signal".into(),
        markers: data.detections.to_vec(),
        references: data.truth.to_vec(),
        ..Panel::default()
    };
    top.series.push(PlotSeries::new(
        "signal",
        data.times.to_vec(),
        data.signal.to_vec(),
        LineStyle::Solid,
        "#1f77b4",
    ));
    if let Some(clean) = data.clean {
        top.series.push(PlotSeries::new(
            "noise-free",
            data.times.to_vec(),
            clean.to_vec(),
            LineStyle::Dashed,
            "#000000",
        ));
    }
    let mut panels = vec![top];
    if let Some((t, d)) = data.decision {
        panels.push(Panel {
            title: "decision value".into(),
            series: vec![PlotSeries::new("d", t.to_vec(), d.to_vec(), LineStyle::Solid, "#ff7f0e")],
            markers: data.detections.to_vec(),
            references: data.truth.to_vec(),
            hlines: vec![0.0],
        });
    }
    PlotSpec::new(data.title, panels)
}
