//! Two-metric scatter plots of aggregated results, as SVG plus the CSV of
//! the plotted points.

use std::fmt::Write as _;

use srbench_core::MetricStatus;

use crate::error::{Error, Result};

use super::report::{format_metric, to_csv, Report};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scatter {
    pub svg: String,
    pub csv: String,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 90.0;

fn axis_label(id: &str) -> String {
    match id {
        "psnr" => "PSNR (dB)".into(),
        "ssim" => "SSIM".into(),
        "niqe" => "NIQE".into(),
        "runtime" => "Runtime (s)".into(),
        other => other.into(),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Point {
    model: String,
    x: f64,
    y: f64,
    x_text: String,
    y_text: String,
}

/// Plots metric `y` against metric `x` for every aggregated row whose model
/// is not in `exclude`. Rows where either value is not a finite number are
/// left out and named in the legend, as are excluded models. The CSV holds
/// exactly the coordinate strings written into the SVG.
pub fn emit_scatter(report: &Report, x: &str, y: &str, exclude: &[String]) -> Result<Scatter> {
    for id in [x, y] {
        if !report.rows.iter().any(|r| r.metric(id).is_some()) {
            return Err(Error::InvalidArgument(format!(
                "metric `{id}` does not appear in these records"
            )));
        }
    }
    let mut points = Vec::new();
    let mut unplottable = Vec::new();
    for row in &report.rows {
        if exclude.contains(&row.model) {
            continue;
        }
        match (row.metric(x), row.metric(y)) {
            (Some(mx), Some(my))
                if mx.status == MetricStatus::Ok && my.status == MetricStatus::Ok =>
            {
                let (x_text, y_text) = (format_metric(mx), format_metric(my));
                points.push(Point {
                    model: row.model.clone(),
                    // Plot the rounded values so the picture matches the CSV.
                    x: x_text.parse().expect("formatted number"),
                    y: y_text.parse().expect("formatted number"),
                    x_text,
                    y_text,
                });
            }
            _ => unplottable.push(row.model.clone()),
        }
    }

    let csv = to_csv(
        &["model", x, y],
        points
            .iter()
            .map(|p| vec![p.model.as_str(), &p.x_text, &p.y_text]),
    );

    let range = |vals: Vec<f64>| {
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        }
    };
    let (x0, x1) = range(points.iter().map(|p| p.x).collect());
    let (y0, y1) = range(points.iter().map(|p| p.y).collect());
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |v: f64| LEFT + (v - x0) / (x1 - x0) * plot_w;
    let py = |v: f64| TOP + plot_h - (v - y0) / (y1 - y0) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.3}</text>"#,
            px(xv),
            TOP + plot_h + 16.0,
            xv
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
            LEFT - 6.0,
            py(yv) + 4.0,
            yv
        );
    }
    let _ = writeln!(
        svg,
        r#"<text class="x-label" x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        TOP + plot_h + 36.0,
        escape(&axis_label(x))
    );
    let _ = writeln!(
        svg,
        r#"<text class="y-label" x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(&axis_label(y))
    );
    for p in &points {
        let model = escape(&p.model);
        let (cx, cy) = (px(p.x), py(p.y));
        let _ = writeln!(
            svg,
            r#"<circle class="point" cx="{cx:.2}" cy="{cy:.2}" r="4" fill="steelblue" data-model="{model}" data-x="{}" data-y="{}"/>"#,
            p.x_text, p.y_text
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{model}</text>"#,
            cx + 6.0,
            cy - 6.0
        );
    }
    let mut legend = Vec::new();
    if !exclude.is_empty() {
        legend.push(format!("excluded: {}", exclude.join(", ")));
    }
    if !report.failed.is_empty() {
        let names: Vec<&str> = report.failed.iter().map(|f| f.model.as_str()).collect();
        legend.push(format!("failed: {}", names.join(", ")));
    }
    if !unplottable.is_empty() {
        legend.push(format!("no finite value: {}", unplottable.join(", ")));
    }
    for (i, line) in legend.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text class="legend" x="{LEFT}" y="{:.1}">{}</text>"#,
            TOP + plot_h + 56.0 + 14.0 * i as f64,
            escape(line)
        );
    }
    svg.push_str("</svg>\n");
    Ok(Scatter { svg, csv })
}
