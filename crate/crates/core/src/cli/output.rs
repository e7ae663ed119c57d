use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrators::Trace;

pub const TRACE_HEADER: &str = "iter,t,f,grad_norm,grad_evals,elapsed_ns,tau";

/// Per-run JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scheme: String,
    /// Absent for methods without a rate parameter.
    pub sigma: Option<f64>,
    pub tau: f64,
    pub iters: usize,
    pub grad_evals: usize,
    pub wall_ns: u64,
    /// `null` when the run ended on a non-finite value.
    pub final_f: Option<f64>,
    pub stop_reason: String,
}

impl Summary {
    pub fn from_trace(scheme: &str, sigma: Option<f64>, tau: f64, trace: &Trace) -> Self {
        let f = trace.final_f();
        Self {
            scheme: scheme.to_string(),
            sigma,
            tau,
            iters: trace.iterations(),
            grad_evals: trace.grad_evals(),
            wall_ns: trace.wall_ns(),
            final_f: f.is_finite().then_some(f),
            stop_reason: trace.stop_reason.as_str().to_string(),
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Writes one row per accepted step under [`TRACE_HEADER`].
pub fn write_trace_csv(path: &Path, trace: &Trace) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in &trace.records {
        w.serialize(r).map_err(csv_error)?;
    }
    if trace.records.is_empty() {
        w.write_record(TRACE_HEADER.split(',')).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rows_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Named `(iteration, f)` series for [`log_chart_svg`].
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn from_trace(label: impl Into<String>, trace: &Trace) -> Self {
        let mut points = vec![(0.0, trace.initial_f)];
        points.extend(trace.records.iter().map(|r| (r.iter as f64, r.f)));
        Self { label: label.into(), points }
    }
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 460.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 52.0;
const MAX_POINTS: usize = 2000;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Line chart of `log10 f` against iteration. Points with `f <= 0` or
/// non-finite `f` are dropped.
pub fn log_chart_svg(title: &str, series: &[Series]) -> String {
    let cleaned: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            let pts: Vec<(f64, f64)> =
                s.points.iter().filter(|(_, f)| *f > 0.0 && f.is_finite()).map(|&(x, f)| (x, f.log10())).collect();
            let stride = pts.len().div_ceil(MAX_POINTS).max(1);
            let mut thinned: Vec<(f64, f64)> = pts.iter().step_by(stride).copied().collect();
            if let Some(last) = pts.last() {
                if thinned.last() != Some(last) {
                    thinned.push(*last);
                }
            }
            thinned
        })
        .collect();
    let all = cleaned.iter().flatten();
    let (mut x_max, mut y_min, mut y_max) = (1.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if !y_min.is_finite() {
        (y_min, y_max) = (-1.0, 1.0);
    }
    let (y_lo, y_hi) = (y_min.floor(), y_max.ceil().max(y_min.floor() + 1.0));
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + x / x_max * plot_w;
    let sy = |y: f64| MARGIN_T + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, MARGIN_L + plot_w / 2.0, escape(title));
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    let decades = (y_hi - y_lo) as usize;
    let y_step = decades.div_ceil(8).max(1);
    for k in (0..=decades).step_by(y_step) {
        let y = y_lo + k as f64;
        let py = sy(y);
        let _ = writeln!(svg, r##"<line x1="{MARGIN_L}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#dddddd"/>"##, MARGIN_L + plot_w);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"#, MARGIN_L - 6.0, py + 4.0, y as i64);
    }
    for k in 0..=5 {
        let x = x_max * k as f64 / 5.0;
        let px = sx(x);
        let _ = writeln!(svg, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, MARGIN_T + plot_h + 18.0, x.round() as i64);
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">iteration</text>"#,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">f (log scale)</text>"#,
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0
    );

    for (i, (s, pts)) in series.iter().zip(&cleaned).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
        } else if let Some(&(x, y)) = pts.first() {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(x), sy(y));
        }
        let ly = MARGIN_T + 14.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_R + 14.0;
        let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 22.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 28.0, ly + 4.0, escape(&s.label));
    }
    svg.push_str("</svg>\n");
    svg
}
