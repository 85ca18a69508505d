use std::fmt::Write as _;
use std::path::Path;

use crate::algorithms::Trace;
use crate::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const FLOOR: f64 = 1e-16;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub struct PlotSeries<'a> {
    pub label: String,
    pub trace: &'a Trace,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlotSummary {
    pub polylines: usize,
    pub skipped: Vec<String>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// `(total_r, log10 f_gap)` points; gaps at or below zero are clamped to 1e-16.
fn points(trace: &Trace) -> Vec<(f64, f64)> {
    trace
        .rows
        .iter()
        .filter(|r| !r.f_gap.is_nan() && r.total_r.is_finite())
        .map(|r| (r.total_r, r.f_gap.max(FLOOR).log10()))
        .filter(|(_, y)| y.is_finite())
        .collect()
}

/// SVG 1.1 document plotting `f_gap` (log scale) against r-weighted
/// coordinates, one polyline per usable series.
pub fn render_svg(series: &[PlotSeries<'_>]) -> (String, PlotSummary) {
    let mut skipped = Vec::new();
    let mut usable = Vec::new();
    for s in series {
        let pts = points(s.trace);
        if pts.is_empty() {
            log::warn!("skipping trace '{}': no finite f_gap values", s.label);
            skipped.push(s.label.clone());
        } else {
            usable.push((s.label.as_str(), pts));
        }
    }
    let all = usable.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let (y0, y1) = (y0.floor(), if y1.ceil() > y0.floor() { y1.ceil() } else { y0.floor() + 1.0 });
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n");
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(svg, "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for e in (y0 as i64)..=(y1 as i64) {
        let y = sy(e as f64);
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">1e{e}</text>",
            MARGIN - 4.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">coordinates (r-weighted), max {x1}</text>",
        WIDTH / 2.0,
        HEIGHT - 20.0
    );
    for (j, (label, pts)) in usable.iter().enumerate() {
        let color = COLORS[j % COLORS.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            coords.join(" ")
        );
        let ly = MARGIN + 14.0 * (j as f64 + 1.0);
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{ly:.2}\" font-size=\"11\" fill=\"{color}\">{}</text>",
            WIDTH - MARGIN - 150.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    (svg, PlotSummary { polylines: usable.len(), skipped })
}

/// Writes [`render_svg`] output to `path`.
pub fn emit_plot(series: &[PlotSeries<'_>], path: &Path) -> Result<PlotSummary> {
    if series.is_empty() {
        return Err(Error::invalid("nothing to plot"));
    }
    let (svg, summary) = render_svg(series);
    super::write_atomic(path, svg.as_bytes())?;
    Ok(summary)
}
