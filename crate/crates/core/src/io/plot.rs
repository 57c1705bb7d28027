//! Static SVG line plots of a run directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::FlowTrace;
use crate::error::{Error, Result};
use crate::flow::arclength;
use crate::grid::ProfileState;

use super::output::{read_report, read_snapshots, read_trace};

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// A line plot in data coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

impl Plot {
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let pts = self.series.iter().flat_map(|s| &s.points).filter(|p| p.0.is_finite() && p.1.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            return None;
        }
        let pad = |lo: f64, hi: f64| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        Some((x0, x1, y0, y1))
    }

    pub fn to_svg(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
        let _ = writeln!(
            out,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        if let Some((x0, x1, y0, y1)) = self.bounds() {
            let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
            let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph;
            for (v, anchor, x, y) in [
                (x0, "start", MARGIN, HEIGHT - MARGIN + 16.0),
                (x1, "end", WIDTH - MARGIN, HEIGHT - MARGIN + 16.0),
            ] {
                let _ = writeln!(out, r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-family="sans-serif" font-size="10">{v:.4}</text>"#);
            }
            for (v, y) in [(y0, HEIGHT - MARGIN), (y1, MARGIN + 10.0)] {
                let _ = writeln!(out, r#"<text x="{}" y="{y}" text-anchor="end" font-family="sans-serif" font-size="10">{v:.4}</text>"#, MARGIN - 4.0);
            }
            for (i, s) in self.series.iter().enumerate() {
                let pts: Vec<String> = s
                    .points
                    .iter()
                    .filter(|p| p.0.is_finite() && p.1.is_finite())
                    .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                    .collect();
                let color = COLORS[i % COLORS.len()];
                let _ = writeln!(
                    out,
                    r#"<polyline data-series="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    escape(&s.name),
                    pts.join(" ")
                );
                let _ = writeln!(
                    out,
                    r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
                    WIDTH - MARGIN + 4.0,
                    MARGIN + 14.0 * (i as f64 + 1.0),
                    escape(&s.name)
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="14" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 14 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// `H` and each `F_i` against arclength for the first and last snapshot.
pub fn profile_plot(snapshots: &[ProfileState]) -> Option<Plot> {
    let first = snapshots.first()?;
    let last = snapshots.last()?;
    let mut series = Vec::new();
    let mut add = |st: &ProfileState, tag: &str| {
        let (s, _) = arclength(st);
        series.push(Series { name: format!("H {tag}"), points: s.iter().copied().zip(st.h.iter().copied()).collect() });
        for (i, fi) in st.f.iter().enumerate() {
            series.push(Series {
                name: format!("F{} {tag}", i + 1),
                points: s.iter().copied().zip(fi.iter().copied()).collect(),
            });
        }
    };
    add(first, &format!("t={:.4}", first.t));
    if snapshots.len() > 1 {
        add(last, &format!("t={:.4}", last.t));
    }
    Some(Plot { title: "Profiles".into(), x_label: "s".into(), y_label: "H, F_i".into(), series })
}

/// `(T̂ − t)·κ` against `log10(T̂ − t)`.
pub fn typei_plot(trace: &FlowTrace, t_hat: f64) -> Option<Plot> {
    let points: Vec<(f64, f64)> = trace
        .rows
        .iter()
        .filter(|r| r.t < t_hat)
        .map(|r| ((t_hat - r.t).log10(), (t_hat - r.t) * r.kappa))
        .collect();
    (!points.is_empty()).then(|| Plot {
        title: format!("Blow-up rate, T = {t_hat:.6}"),
        x_label: "log10(T - t)".into(),
        y_label: "(T - t) kappa".into(),
        series: vec![Series { name: "tau_kappa".into(), points }],
    })
}

/// Endpoint values of each `f_i²` against `t`.
pub fn boundary_plot(trace: &FlowTrace) -> Option<Plot> {
    if trace.is_empty() {
        return None;
    }
    let mut series = Vec::new();
    for i in 1..=trace.factors {
        for side in ["left", "right"] {
            let name = format!("f{i}sq_{side}");
            let y = trace.series(&name)?;
            series.push(Series { name, points: trace.times().into_iter().zip(y).collect() });
        }
    }
    Some(Plot { title: "Endpoint values".into(), x_label: "t".into(), y_label: "f_i^2".into(), series })
}

/// Any trace column against `t`.
pub fn field_plot(trace: &FlowTrace, name: &str) -> Option<Plot> {
    if trace.is_empty() {
        return None;
    }
    let y = trace.series(name)?;
    Some(Plot {
        title: name.into(),
        x_label: "t".into(),
        y_label: name.into(),
        series: vec![Series { name: name.into(), points: trace.times().into_iter().zip(y).collect() }],
    })
}

/// Files written and plots skipped (with the reason).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlotOutcome {
    pub written: Vec<PathBuf>,
    pub skipped: Vec<String>,
}

fn emit(dir: &Path, file: &str, plot: Option<Plot>, why: &str, out: &mut PlotOutcome) -> Result<()> {
    match plot {
        Some(p) => {
            let path = dir.join(file);
            fs::write(&path, p.to_svg()).map_err(|e| Error::io(&path, e))?;
            out.written.push(path);
        }
        None => out.skipped.push(format!("{file}: {why}")),
    }
    Ok(())
}

/// Renders plots from the files in `dir`. With `field`, only that plot
/// (`profiles`, `typei`, `boundary` or a trace column) is drawn.
pub fn render_plots(dir: &Path, field: Option<&str>) -> Result<PlotOutcome> {
    let trace = read_trace(dir)?;
    let mut out = PlotOutcome::default();
    if trace.is_empty() {
        out.skipped.push("trace is empty; no plots written".into());
        return Ok(out);
    }
    let want = |name: &str| field.is_none_or(|f| f == name);
    if want("profiles") {
        let snaps = read_snapshots(dir)?;
        emit(dir, "profiles.svg", profile_plot(&snaps), "no snapshots", &mut out)?;
    }
    if want("typei") {
        let t_hat = read_report(dir).ok().and_then(|r| r.t_hat);
        let plot = t_hat.and_then(|t| typei_plot(&trace, t));
        emit(dir, "typei.svg", plot, "no singular time estimate", &mut out)?;
    }
    if want("boundary") {
        emit(dir, "boundary.svg", boundary_plot(&trace), "no endpoint series", &mut out)?;
    }
    if let Some(name) = field.filter(|f| !matches!(*f, "profiles" | "typei" | "boundary")) {
        let plot = field_plot(&trace, name);
        if plot.is_none() {
            return Err(Error::Config { path: "--field".into(), message: format!("unknown plot field `{name}`") });
        }
        emit(dir, &format!("{name}.svg"), plot, "", &mut out)?;
    }
    Ok(out)
}
