//! Run artifacts: metrics and timing CSV logs, evaluation reports and SVG
//! learning curves.

use std::fmt::Write as _;
use std::fs::File;
use std::path::Path;

use dapg_core::dapg::IterationMetrics;

use crate::error::CliResult;

pub const METRICS_HEADER: [&str; 7] = [
    "k",
    "mean_return",
    "success_rate",
    "demo_weight",
    "quadratic_form",
    "cg_residual",
    "wall_clock_s",
];

pub const TIMING_HEADER: [&str; 8] = [
    "k",
    "collect_s",
    "encode_s",
    "learn_s",
    "cg_iterations",
    "step_rejected",
    "vf_mse",
    "bc_loss",
];

/// Appends one row per iteration to `metrics.csv` and `timing.csv`, flushing
/// after every row so an aborted run leaves complete logs behind.
pub struct MetricsLog {
    metrics: csv::Writer<File>,
    timing: csv::Writer<File>,
}

impl MetricsLog {
    pub fn create(dir: &Path) -> CliResult<Self> {
        let mut metrics = csv::Writer::from_path(dir.join("metrics.csv"))?;
        let mut timing = csv::Writer::from_path(dir.join("timing.csv"))?;
        metrics.write_record(METRICS_HEADER)?;
        timing.write_record(TIMING_HEADER)?;
        metrics.flush()?;
        timing.flush()?;
        Ok(MetricsLog { metrics, timing })
    }

    pub fn append(&mut self, m: &IterationMetrics) -> CliResult<()> {
        self.metrics.write_record([
            m.k.to_string(),
            m.mean_return.to_string(),
            m.success_rate.to_string(),
            m.demo_weight.to_string(),
            m.quadratic_form.to_string(),
            m.cg_residual.to_string(),
            format!("{:.3}", m.wall_clock_s),
        ])?;
        self.timing.write_record([
            m.k.to_string(),
            format!("{:.4}", m.collect_s),
            format!("{:.4}", m.encode_s),
            format!("{:.4}", m.learn_s),
            m.cg_iterations.to_string(),
            m.step_rejected.to_string(),
            m.vf_mse.to_string(),
            m.bc_loss.map_or(String::new(), |v| v.to_string()),
        ])?;
        self.metrics.flush()?;
        self.timing.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeReport {
    pub mode: String,
    pub rollouts: usize,
    pub success_rate: f64,
    pub mean_return: f64,
}

pub fn write_eval_report(path: &Path, rows: &[ModeReport]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["mode", "rollouts", "success_rate", "mean_return", "success_drop"])?;
    let clean = rows.iter().find(|r| r.mode == "none").map(|r| r.success_rate);
    for r in rows {
        w.write_record([
            r.mode.clone(),
            r.rollouts.to_string(),
            r.success_rate.to_string(),
            r.mean_return.to_string(),
            clean.map_or(String::new(), |c| (c - r.success_rate).to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Step between axis ticks giving roughly `target` intervals over `span`.
fn tick_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

/// Line chart of success rate against iterations.
pub fn learning_curve_svg(points: &[(f64, f64)], title: &str) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (64.0, 24.0, 40.0, 56.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let x_max = points.iter().map(|p| p.0).fold(1.0, f64::max);
    let sx = |x: f64| left + pw * x / x_max;
    let sy = |y: f64| top + ph * (1.0 - y.clamp(0.0, 1.0));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        left + pw / 2.0,
        escape(title)
    );
    for i in 0..=4 {
        let y = i as f64 / 4.0;
        let py = sy(y);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{py}" x2="{}" y2="{py}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{}</text>"##,
            left + pw,
            left - 6.0,
            py + 4.0,
            y * 100.0
        );
    }
    let step = tick_step(x_max, 5.0);
    let mut x = 0.0;
    while x <= x_max + 1e-9 {
        let px = sx(x);
        let _ = writeln!(
            s,
            r##"<line x1="{px}" y1="{}" x2="{px}" y2="{}" stroke="#444"/><text x="{px}" y="{}" text-anchor="middle">{x}</text>"##,
            top + ph,
            top + ph + 5.0,
            top + ph + 20.0
        );
        x += step;
    }
    let _ = writeln!(
        s,
        r##"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">Iterations</text>"#,
        left + pw / 2.0,
        h - 14.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">Success rate (%)</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    if !points.is_empty() {
        let coords: Vec<String> = points.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
        let _ = writeln!(
            s,
            r##"<polyline fill="none" stroke="#1f77b4" stroke-width="2" points="{}"/>"##,
            coords.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_steps_are_round() {
        assert_eq!(tick_step(100.0, 5.0), 20.0);
        assert_eq!(tick_step(7.0, 5.0), 2.0);
        assert_eq!(tick_step(1.0, 5.0), 0.2);
    }

    #[test]
    fn svg_contains_one_vertex_per_point() {
        let pts: Vec<_> = (0..10).map(|k| (k as f64, k as f64 / 10.0)).collect();
        let svg = learning_curve_svg(&pts, "a < b");
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        assert_eq!(line.matches(',').count(), 10);
        assert!(svg.contains("a &lt; b"));
        assert!(!learning_curve_svg(&[], "empty").contains("<polyline"));
    }
}
