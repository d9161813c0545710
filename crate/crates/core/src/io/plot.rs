//! Minimal SVG 1.1 charts: learning curves with fits, connected speed-up
//! ratio, and metric stability over stop budgets.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::curve::LearningCurve;
use crate::error::{Error, Result};
use crate::fitting::FitSummary;
use crate::metrics::{ConnectedRatioSeries, StabilitySeries};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub const LEARNING_CURVES_FILE: &str = "learning_curves.svg";
pub const CONNECTED_RATIO_FILE: &str = "connected_speed_up.svg";
pub const STABILITY_FILE: &str = "stability.svg";

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Plot area with linear data-to-pixel mapping.
pub(crate) struct Canvas {
    body: String,
    x_range: (f64, f64),
    y_range: (f64, f64),
    legend_rows: usize,
}

impl Canvas {
    fn new(
        title: &str,
        x_label: &str,
        y_label: &str,
        x_range: (f64, f64),
        y_range: (f64, f64),
    ) -> Self {
        let widen = |(lo, hi): (f64, f64)| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, lo + 0.5)
            }
        };
        let mut c = Canvas {
            body: String::new(),
            x_range: widen(x_range),
            y_range: widen(y_range),
            legend_rows: 0,
        };
        c.axes(title, x_label, y_label);
        c
    }

    pub(crate) fn px(&self, x: f64) -> f64 {
        let (lo, hi) = self.x_range;
        MARGIN_LEFT + (x - lo) / (hi - lo) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    pub(crate) fn py(&self, y: f64) -> f64 {
        let (lo, hi) = self.y_range;
        HEIGHT - MARGIN_BOTTOM - (y - lo) / (hi - lo) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }

    fn axes(&mut self, title: &str, x_label: &str, y_label: &str) {
        let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
        let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
        let _ = writeln!(
            self.body,
            r##"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444444"/>"##,
            x1 - x0,
            y0 - y1
        );
        for i in 0..=5 {
            let t = i as f64 / 5.0;
            let xv = self.x_range.0 + t * (self.x_range.1 - self.x_range.0);
            let yv = self.y_range.0 + t * (self.y_range.1 - self.y_range.0);
            let (px, py) = (self.px(xv), self.py(yv));
            let _ = writeln!(
                self.body,
                r##"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}" stroke="#444444"/><text x="{px:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"##,
                y0 + 5.0,
                y0 + 18.0,
                tick_label(xv)
            );
            let _ = writeln!(
                self.body,
                r##"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="#444444"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"##,
                x0 - 5.0,
                x0 - 8.0,
                py + 4.0,
                tick_label(yv)
            );
        }
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="24" font-size="15" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            escape(title)
        );
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 15.0,
            escape(x_label)
        );
        let _ = writeln!(
            self.body,
            r#"<text x="18" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(y_label)
        );
    }

    fn path_points(&self, points: &[(f64, f64)]) -> String {
        points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn polyline(&mut self, points: &[(f64, f64)], color: &str, dashed: bool, class: &str) {
        if points.is_empty() {
            return;
        }
        let dash = if dashed {
            r#" stroke-dasharray="6,4""#
        } else {
            ""
        };
        let _ = writeln!(
            self.body,
            r#"<polyline class="{class}" points="{}" fill="none" stroke="{color}" stroke-width="1.8"{dash}/>"#,
            self.path_points(points)
        );
    }

    fn band(&mut self, upper: &[(f64, f64)], lower: &[(f64, f64)], color: &str) {
        let mut pts: Vec<(f64, f64)> = upper.to_vec();
        pts.extend(lower.iter().rev());
        let _ = writeln!(
            self.body,
            r#"<polygon class="sd-band" points="{}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#,
            self.path_points(&pts)
        );
    }

    fn markers(&mut self, points: &[(f64, f64)], color: &str) {
        for &(x, y) in points {
            let _ = writeln!(
                self.body,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}"/>"#,
                self.px(x),
                self.py(y)
            );
        }
    }

    /// Dashed horizontal line across the plot area, tagged with its value.
    fn hline(&mut self, y: f64, color: &str, class: &str) {
        let py = self.py(y);
        let _ = writeln!(
            self.body,
            r#"<line class="{class}" data-value="{y}" x1="{:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="{color}" stroke-width="1.5" stroke-dasharray="6,4"/>"#,
            MARGIN_LEFT,
            WIDTH - MARGIN_RIGHT
        );
    }

    fn legend(&mut self, label: &str, color: &str, dashed: bool) {
        let x = WIDTH - MARGIN_RIGHT + 12.0;
        let y = MARGIN_TOP + 10.0 + 18.0 * self.legend_rows as f64;
        let dash = if dashed {
            r#" stroke-dasharray="6,4""#
        } else {
            ""
        };
        let _ = writeln!(
            self.body,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            x + 22.0,
            x + 28.0,
            y + 4.0,
            escape(label)
        );
        self.legend_rows += 1;
    }

    fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

fn tick_label(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.round() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// Seed mean with a ±sd band, per-seed scatter and the selected fitted curve.
pub fn learning_curves_svg(
    curves: &BTreeMap<String, LearningCurve>,
    fits: Option<&FitSummary>,
) -> String {
    let x_max = curves.values().map(|c| c.x_max()).fold(0.0, f64::max);
    let mut canvas = Canvas::new(
        "Learning curves (scatter, mean ± sd, fitted)",
        "added training samples",
        "performance",
        (0.0, x_max),
        (0.0, 1.0),
    );
    for (i, (id, curve)) in curves.iter().enumerate() {
        let c = color(i);
        let upper: Vec<(f64, f64)> = curve
            .x_grid()
            .iter()
            .zip(curve.mean().iter().zip(curve.sd()))
            .map(|(&x, (m, s))| (x, (m + s).min(1.0)))
            .collect();
        let lower: Vec<(f64, f64)> = curve
            .x_grid()
            .iter()
            .zip(curve.mean().iter().zip(curve.sd()))
            .map(|(&x, (m, s))| (x, (m - s).max(0.0)))
            .collect();
        canvas.band(&upper, &lower, c);
        let scatter: Vec<(f64, f64)> = curve.scatter().collect();
        canvas.markers(&scatter, c);
        let mean: Vec<(f64, f64)> = curve
            .x_grid()
            .iter()
            .copied()
            .zip(curve.mean().iter().copied())
            .collect();
        canvas.polyline(&mean, c, false, "mean");
        canvas.legend(id, c, false);
        if let Some(model) = fits.and_then(|f| f.model(id, f.selected_family)) {
            let fitted: Vec<(f64, f64)> = (0..=200)
                .map(|k| {
                    let x = x_max * k as f64 / 200.0;
                    (x, model.evaluate(x).clamp(0.0, 1.0))
                })
                .collect();
            canvas.polyline(&fitted, c, true, "fit");
            canvas.legend(
                &format!("{id} fit ({}, b={:.1})", model.family, model.b),
                c,
                true,
            );
        }
    }
    canvas.finish()
}

/// Connected ratio per performance level with the fitted speed-up factor as a dashed line.
pub fn connected_ratio_svg(
    series: &BTreeMap<String, ConnectedRatioSeries>,
    speed_up: &BTreeMap<String, f64>,
) -> String {
    let (mut p_lo, mut p_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y_max: f64 = 1.2;
    for s in series.values() {
        p_lo = p_lo.min(s.region.0);
        p_hi = p_hi.max(s.region.1);
        y_max = s.ratios.iter().copied().fold(y_max, f64::max);
    }
    for &s in speed_up.values() {
        y_max = y_max.max(s);
    }
    if !p_lo.is_finite() {
        (p_lo, p_hi) = (0.0, 1.0);
    }
    let mut canvas = Canvas::new(
        "Speed-up factor (connected)",
        "performance",
        "x_qm(p) / x_rand(p)",
        (p_lo, p_hi),
        (0.0, y_max * 1.05),
    );
    for (i, (id, s)) in series.iter().enumerate() {
        let c = color(i + 1);
        let pts: Vec<(f64, f64)> = s
            .performance_levels
            .iter()
            .copied()
            .zip(s.ratios.iter().copied())
            .collect();
        canvas.polyline(&pts, c, false, "connected-ratio");
        canvas.legend(&format!("{id} connected"), c, false);
        if let Some(&sf) = speed_up.get(id) {
            canvas.hline(sf, c, "fitted-s");
            canvas.legend(&format!("{id} S = {sf:.3}"), c, true);
        }
    }
    canvas.finish()
}

/// Each metric series divided by its own mean, so scales are comparable.
pub fn stability_svg(stability: &[StabilitySeries]) -> String {
    let mut x_max: f64 = 0.0;
    let mut y_max: f64 = 1.5;
    let mut relative = Vec::new();
    for s in stability {
        let present = s.present();
        let mean = present.iter().sum::<f64>() / present.len().max(1) as f64;
        let pts: Vec<(f64, f64)> = s
            .stop_budgets
            .iter()
            .zip(&s.values)
            .filter_map(|(&x, v)| v.map(|v| (x, if mean != 0.0 { v / mean } else { v })))
            .collect();
        for &(x, y) in &pts {
            x_max = x_max.max(x);
            y_max = y_max.max(y);
        }
        relative.push((format!("{} {}", s.qm_id, s.metric_name), pts));
    }
    let mut canvas = Canvas::new(
        "Performance metric stability",
        "stop budget (added samples)",
        "value / series mean",
        (0.0, x_max),
        (0.0, y_max * 1.05),
    );
    for (i, (label, pts)) in relative.iter().enumerate() {
        let c = color(i);
        canvas.polyline(pts, c, false, "stability");
        canvas.markers(pts, c);
        canvas.legend(label, c, false);
    }
    canvas.finish()
}

fn write(path: PathBuf, text: String) -> Result<PathBuf> {
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes the three charts into `out_dir`; the stability chart is skipped
/// when there are no series. Returns the written paths.
pub fn render_plots(
    curves: &BTreeMap<String, LearningCurve>,
    fits: Option<&FitSummary>,
    ratio_series: &BTreeMap<String, ConnectedRatioSeries>,
    speed_up: &BTreeMap<String, f64>,
    stability: &[StabilitySeries],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = vec![
        write(
            out_dir.join(LEARNING_CURVES_FILE),
            learning_curves_svg(curves, fits),
        )?,
        write(
            out_dir.join(CONNECTED_RATIO_FILE),
            connected_ratio_svg(ratio_series, speed_up),
        )?,
    ];
    if stability.iter().all(|s| s.present().is_empty()) {
        log::info!("no stability series to plot; skipping {STABILITY_FILE}");
    } else {
        written.push(write(
            out_dir.join(STABILITY_FILE),
            stability_svg(stability),
        )?);
    }
    Ok(written)
}
