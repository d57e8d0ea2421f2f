//! Self-contained SVG plots of experiment records.
//!
//! Data points are drawn as `<circle class="data-point">` and reference curves
//! as `<polyline class="reference">`, so tests can count them structurally.

use std::fmt::Write as _;
use std::path::Path;

use coalcircle::formulas::{expected_block_count, pair_meeting_cdf};
use coalcircle::harness::ExperimentRecord;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    /// Log-log axes with a slope-1/2 guide line.
    Loglog,
    /// Empirical CDF with the pair-meeting series overlaid.
    Cdf,
    /// Mean block counts with the expected block count overlaid.
    Trace,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

pub fn emit_plot(record: &ExperimentRecord, kind: PlotKind, path: &Path) -> Result<(), CliError> {
    let series = record
        .series
        .first()
        .ok_or_else(|| CliError::Invalid(format!("record `{}` has no series to plot", record.name)))?;
    let svg = render_svg(&series.points, kind, &record.name)?;
    std::fs::write(path, svg).map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.05 * (hi - lo);
        Self {
            lo: lo - pad,
            hi: hi + pad,
            log,
        }
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn label(&self, f: f64) -> String {
        let v = self.lo + f * (self.hi - self.lo);
        if self.log {
            format!("1e{v:.1}")
        } else {
            format!("{v:.3}")
        }
    }
}

fn reference(kind: PlotKind, points: &[(f64, f64)], x: &Axis) -> Result<Vec<(f64, f64)>, CliError> {
    let xs = |k: usize| -> Vec<f64> {
        (0..=k)
            .map(|i| {
                let f = i as f64 / k as f64;
                let v = x.lo + f * (x.hi - x.lo);
                if x.log {
                    10f64.powf(v)
                } else {
                    v
                }
            })
            .filter(|&v| v > 0.0)
            .collect()
    };
    let curve = |f: &dyn Fn(f64) -> coalcircle::Result<f64>| -> Result<Vec<(f64, f64)>, CliError> {
        xs(200).into_iter().map(|t| Ok((t, f(t)?))).collect()
    };
    match kind {
        PlotKind::Cdf => curve(&pair_meeting_cdf),
        PlotKind::Trace => curve(&expected_block_count),
        PlotKind::Loglog => {
            // through the log-space centroid, sloping the way the data does
            let n = points.len() as f64;
            let cx = points.iter().map(|p| p.0.log10()).sum::<f64>() / n;
            let cy = points.iter().map(|p| p.1.log10()).sum::<f64>() / n;
            let first = points.iter().min_by(|a, b| a.0.total_cmp(&b.0)).expect("non-empty");
            let last = points.iter().max_by(|a, b| a.0.total_cmp(&b.0)).expect("non-empty");
            let slope = if last.1 >= first.1 { 0.5 } else { -0.5 };
            Ok(xs(2)
                .into_iter()
                .map(|t| (t, 10f64.powf(cy + slope * (t.log10() - cx))))
                .collect())
        }
    }
}

pub fn render_svg(points: &[(f64, f64)], kind: PlotKind, title: &str) -> Result<String, CliError> {
    if points.is_empty() {
        return Err(CliError::Invalid("nothing to plot: the series is empty".into()));
    }
    let log = kind == PlotKind::Loglog;
    if points.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return Err(CliError::Invalid("plot data must be finite".into()));
    }
    if log && points.iter().any(|p| p.0 <= 0.0 || p.1 <= 0.0) {
        return Err(CliError::Invalid("log-log plots need positive data".into()));
    }
    let x = Axis::fit(points.iter().map(|p| p.0), log);
    let refs = reference(kind, points, &x)?;
    let y = Axis::fit(points.iter().chain(&refs).map(|p| p.1).filter(|&v| !log || v > 0.0), log);

    let px = |v: f64| MARGIN + x.frac(v) * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - y.frac(v) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<g class="axes" stroke="black" stroke-width="1">"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>"#);
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="ticks" font-family="sans-serif" font-size="10">"#);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let tx = x0 + f * (x1 - x0);
        let ty = y0 - f * (y0 - y1);
        let _ = writeln!(s, r#"<text x="{tx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, y0 + 16.0, x.label(f));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{ty:.1}" text-anchor="end">{}</text>"#, x0 - 6.0, y.label(f));
    }
    let _ = writeln!(s, "</g>");

    let line: Vec<String> = refs
        .iter()
        .filter(|p| !log || p.1 > 0.0)
        .map(|&(a, b)| format!("{:.2},{:.2}", px(a), py(b)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline class="reference" fill="none" stroke="firebrick" stroke-width="1.5" stroke-dasharray="6 3" points="{}"/>"#,
        line.join(" ")
    );
    let _ = writeln!(s, r#"<g class="data" fill="steelblue">"#);
    for &(a, b) in points {
        let _ = writeln!(s, r#"<circle class="data-point" cx="{:.2}" cy="{:.2}" r="3"/>"#, px(a), py(b));
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
