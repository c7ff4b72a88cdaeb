//! Hand-rolled SVG rendering of a record trace with beat markers.
//!
//! The document is a fixed-size canvas containing axis lines with labeled
//! ticks, a single `<polyline>` for the signal, and one `<circle>` marker per
//! beat. All coordinates are formatted with fixed precision so identical
//! inputs yield byte-identical files.

use std::fmt::Write as _;

/// Canvas and margin geometry, in SVG user units (pixels).
const WIDTH: f64 = 1000.0;
const HEIGHT: f64 = 360.0;
const MARGIN_LEFT: f64 = 56.0;
const MARGIN_RIGHT: f64 = 12.0;
const MARGIN_TOP: f64 = 14.0;
const MARGIN_BOTTOM: f64 = 44.0;
const MARKER_RADIUS: f64 = 3.0;

/// Upper bounds on tick counts; the 1-2-5 ladder picks the finest step that
/// stays within them.
const MAX_X_TICKS: usize = 12;
const MAX_Y_TICKS: usize = 8;

/// One beat marker: time and amplitude in data coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marker {
    pub t_s: f64,
    pub mv: f64,
}

/// Smallest step from the 1-2-5 ladder such that `span / step <= max_ticks`.
fn nice_step(span: f64, max_ticks: usize) -> f64 {
    let mut step = 10f64.powf((span / max_ticks as f64).log10().floor());
    for mult in [1.0, 2.0, 5.0, 10.0] {
        if span / (step * mult) <= max_ticks as f64 {
            step *= mult;
            break;
        }
    }
    step
}

/// Tick positions covering `[lo, hi]` at multiples of `step`.
fn ticks(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

/// Format a tick label without trailing float noise.
fn tick_label(v: f64) -> String {
    // Round to the shortest representation that survives the plot scale.
    let r = (v * 1e6).round() / 1e6;
    format!("{r}")
}

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

/// Render the record trace at sampling rate `fs` with one circle per marker.
/// `title` is drawn above the plot area.
pub fn render_plot(samples: &[f64], fs: f64, markers: &[Marker], title: &str) -> String {
    let n = samples.len();
    let t_max = if n > 1 { (n - 1) as f64 / fs } else { 1.0 };
    let (mut y_min, mut y_max) = samples
        .iter()
        .chain(markers.iter().map(|m| &m.mv))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !y_min.is_finite() || !y_max.is_finite() {
        (y_min, y_max) = (-1.0, 1.0);
    }
    if y_max - y_min < 1e-9 {
        y_min -= 0.5;
        y_max += 0.5;
    }
    // Headroom so the trace does not touch the frame.
    let pad = 0.05 * (y_max - y_min);
    let (y_lo, y_hi) = (y_min - pad, y_max + pad);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_px = |t: f64| MARGIN_LEFT + (t / t_max).clamp(0.0, 1.0) * plot_w;
    let y_px = |v: f64| MARGIN_TOP + (1.0 - (v - y_lo) / (y_hi - y_lo)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        svg,
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>"
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">{}</text>",
        fmt2(MARGIN_LEFT),
        fmt2(MARGIN_TOP - 3.0),
        escape_text(title)
    );

    // Axes.
    let x0 = fmt2(MARGIN_LEFT);
    let x1 = fmt2(WIDTH - MARGIN_RIGHT);
    let y0 = fmt2(MARGIN_TOP);
    let y1 = fmt2(HEIGHT - MARGIN_BOTTOM);
    let _ = writeln!(
        svg,
        "  <line x1=\"{x0}\" y1=\"{y1}\" x2=\"{x1}\" y2=\"{y1}\" stroke=\"#000000\" stroke-width=\"1\"/>"
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"#000000\" stroke-width=\"1\"/>"
    );

    // X ticks (seconds).
    for t in ticks(0.0, t_max, nice_step(t_max, MAX_X_TICKS)) {
        let x = fmt2(x_px(t));
        let yb = HEIGHT - MARGIN_BOTTOM;
        let _ = writeln!(
            svg,
            "  <line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"#000000\" stroke-width=\"1\"/>",
            fmt2(yb),
            fmt2(yb + 5.0)
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{x}\" y=\"{}\" font-family=\"monospace\" font-size=\"10\" \
             text-anchor=\"middle\">{}</text>",
            fmt2(yb + 17.0),
            tick_label(t)
        );
    }
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" \
         text-anchor=\"middle\">time (s)</text>",
        fmt2(MARGIN_LEFT + plot_w / 2.0),
        fmt2(HEIGHT - 8.0)
    );

    // Y ticks (millivolts).
    for v in ticks(y_lo, y_hi, nice_step(y_hi - y_lo, MAX_Y_TICKS)) {
        let y = fmt2(y_px(v));
        let _ = writeln!(
            svg,
            "  <line x1=\"{}\" y1=\"{y}\" x2=\"{x0}\" y2=\"{y}\" stroke=\"#000000\" stroke-width=\"1\"/>",
            fmt2(MARGIN_LEFT - 5.0)
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"{y}\" font-family=\"monospace\" font-size=\"10\" \
             text-anchor=\"end\" dominant-baseline=\"middle\">{}</text>",
            fmt2(MARGIN_LEFT - 8.0),
            tick_label(v)
        );
    }
    let _ = writeln!(
        svg,
        "  <text x=\"12\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" \
         text-anchor=\"middle\" transform=\"rotate(-90 12 {})\">mV</text>",
        fmt2(MARGIN_TOP + plot_h / 2.0),
        fmt2(MARGIN_TOP + plot_h / 2.0)
    );

    // Signal trace.
    let mut points = String::new();
    for (i, &v) in samples.iter().enumerate() {
        if i > 0 {
            points.push(' ');
        }
        let _ = write!(points, "{},{}", fmt2(x_px(i as f64 / fs)), fmt2(y_px(v)));
    }
    let _ = writeln!(
        svg,
        "  <polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"{points}\"/>"
    );

    // Beat markers.
    for m in markers {
        let _ = writeln!(
            svg,
            "  <circle cx=\"{}\" cy=\"{}\" r=\"{MARKER_RADIUS}\" fill=\"none\" \
             stroke=\"#d62728\" stroke-width=\"1.5\"/>",
            fmt2(x_px(m.t_s)),
            fmt2(y_px(m.mv))
        );
    }

    svg.push_str("</svg>\n");
    svg
}

/// Escape the XML special characters that can appear in record ids.
fn escape_text(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
