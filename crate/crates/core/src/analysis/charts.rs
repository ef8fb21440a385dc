//! Static SVG charts. Output is a pure function of the input data, so
//! identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::engine::EpisodeTrace;
use crate::error::{Error, Result};
use crate::fsum::fsum;

use super::metrics::VariantSummary;
use super::stats::{CorrelationResult, CORRELATION_VARIABLES};

const W: f64 = 680.0;
const H: f64 = 420.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 52.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    pub label: String,
    /// Pareto status, when the chart classifies points.
    pub dominant: Option<bool>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Axis {
    lo: f64,
    hi: f64,
    step: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = values
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
            (lo, hi) = (lo - pad, hi + pad);
        }
        let raw = (hi - lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
        Self { lo: (lo / step).floor() * step, hi: (hi / step).ceil() * step, step }
    }

    fn ticks(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step).round() as usize;
        (0..=n).map(|k| self.lo + k as f64 * self.step).collect()
    }

    fn label(&self, v: f64) -> String {
        let decimals = (-self.step.log10().floor()).max(0.0) as usize;
        let s = format!("{v:.decimals$}");
        if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
            s[1..].to_string()
        } else {
            s
        }
    }
}

struct Frame {
    x: Axis,
    y: Axis,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.lo) / (self.x.hi - self.x.lo) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.lo) / (self.y.hi - self.y.lo) * (H - TOP - BOTTOM)
    }

    fn open(&self, title: &str, x_label: &str, y_label: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#, (LEFT + W - RIGHT) / 2.0, esc(title));
        let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
        let _ = writeln!(s, r#"<g class="grid" stroke="rgb(229,229,229)">"#);
        for t in self.x.ticks() {
            let _ = writeln!(s, r#"<line x1="{0:.1}" y1="{y0:.1}" x2="{0:.1}" y2="{y1:.1}"/>"#, self.px(t));
        }
        for t in self.y.ticks() {
            let _ = writeln!(s, r#"<line x1="{x0:.1}" y1="{0:.1}" x2="{x1:.1}" y2="{0:.1}"/>"#, self.py(t));
        }
        s.push_str("</g>\n");
        let _ = writeln!(s, r#"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
        let _ = writeln!(s, r#"<g class="ticks">"#);
        for t in self.x.ticks() {
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, self.px(t), y0 + 16.0, self.x.label(t));
        }
        for t in self.y.ticks() {
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, x0 - 6.0, self.py(t) + 4.0, self.y.label(t));
        }
        s.push_str("</g>\n");
        let _ = writeln!(s, r#"<text class="x-label" x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 12.0, esc(x_label));
        let _ = writeln!(
            s,
            r#"<text class="y-label" x="16" y="{0:.1}" text-anchor="middle" transform="rotate(-90 16 {0:.1})">{1}</text>"#,
            (y0 + y1) / 2.0,
            esc(y_label)
        );
        s
    }
}

fn legend(s: &mut String, entries: &[(String, &str, bool)]) {
    let x = W - RIGHT + 14.0;
    let _ = writeln!(s, r#"<g class="legend">"#);
    for (k, (label, colour, hollow)) in entries.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * k as f64;
        let fill = if *hollow { "white" } else { colour };
        let _ = writeln!(s, r#"<rect x="{x:.1}" y="{:.1}" width="10" height="10" fill="{fill}" stroke="{colour}"/>"#, y - 9.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{y:.1}">{}</text>"#, x + 16.0, esc(label));
    }
    s.push_str("</g>\n");
}

/// One polyline per series with a legend.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let f = Frame { x: Axis::fit(all().map(|p| p.0)), y: Axis::fit(all().map(|p| p.1)) };
    let mut s = f.open(title, x_label, y_label);
    let mut entries = Vec::new();
    for (k, ser) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-label="{}" fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
            esc(&ser.label),
            pts.join(" ")
        );
        entries.push((ser.label.clone(), colour, false));
    }
    legend(&mut s, &entries);
    s.push_str("</svg>\n");
    s
}

/// Points with labels. Pareto-dominant points are filled, dominated points hollow.
pub fn scatter_chart(title: &str, x_label: &str, y_label: &str, points: &[ScatterPoint]) -> String {
    let f = Frame { x: Axis::fit(points.iter().map(|p| p.x)), y: Axis::fit(points.iter().map(|p| p.y)) };
    let mut s = f.open(title, x_label, y_label);
    let classified = points.iter().any(|p| p.dominant.is_some());
    for p in points {
        let (class, fill, colour) = match p.dominant {
            Some(true) => ("point dominant", PALETTE[0], PALETTE[0]),
            Some(false) => ("point dominated", "white", PALETTE[1]),
            None => ("point", PALETTE[0], PALETTE[0]),
        };
        let (cx, cy) = (f.px(p.x), f.py(p.y));
        let _ = writeln!(
            s,
            r#"<circle class="{class}" data-label="{}" cx="{cx:.2}" cy="{cy:.2}" r="4" fill="{fill}" stroke="{colour}" stroke-width="1.5"/>"#,
            esc(&p.label)
        );
        if classified {
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="10">{}</text>"#, cx + 6.0, cy - 6.0, esc(&p.label));
        }
    }
    if classified {
        legend(&mut s, &[("Pareto dominant".into(), PALETTE[0], false), ("dominated".into(), PALETTE[1], true)]);
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })
}

/// Mean over traces of a per-step statistic.
fn mean_series(traces: &[EpisodeTrace], dt_years: f64, stat: impl Fn(&crate::engine::StepRecord) -> f64) -> Vec<(f64, f64)> {
    let steps = traces.iter().map(|t| t.steps.len()).min().unwrap_or(0);
    (0..steps)
        .map(|k| {
            let v = fsum(traces.iter().map(|t| stat(&t.steps[k]))) / traces.len() as f64;
            (dt_years * (k + 1) as f64, v)
        })
        .collect()
}

fn region_mean(s: &crate::engine::StepRecord, f: impl Fn(&crate::engine::RegionRecord) -> f64) -> f64 {
    fsum(s.regions.iter().map(f)) / s.regions.len() as f64
}

/// Trajectory charts (temperature, mitigation rate, abatement cost) for each
/// variant plus the temperature/output scatter. Returns the written paths.
pub fn emit_compare_charts(
    groups: &[(String, Vec<EpisodeTrace>)],
    summaries: &[VariantSummary],
    dt_years: f64,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let groups: Vec<&(String, Vec<EpisodeTrace>)> = groups.iter().filter(|(_, t)| !t.is_empty()).collect();
    let series = |stat: &dyn Fn(&crate::engine::StepRecord) -> f64| -> Vec<Series> {
        groups
            .iter()
            .map(|(label, traces)| Series { label: label.clone(), points: mean_series(traces, dt_years, stat) })
            .collect()
    };
    let charts = [
        (
            "temperature.svg",
            line_chart("Atmospheric temperature", "years", "T_AT (degC)", &series(&|s| s.climate.t_at)),
        ),
        (
            "mitigation.svg",
            line_chart(
                "Average mitigation rate of all regions",
                "years",
                "mitigation rate",
                &series(&|s| region_mean(s, |r| r.mu())),
            ),
        ),
        (
            "abatement.svg",
            line_chart(
                "Average abatement cost of all regions",
                "years",
                "abatement cost (trillion USD/yr)",
                &series(&|s| region_mean(s, |r| r.abatement_cost)),
            ),
        ),
        (
            "pareto.svg",
            scatter_chart(
                "Temperature rise and gross output by protocol",
                "temperature rise (degC)",
                "gross output, summed (trillion USD)",
                &summaries
                    .iter()
                    .map(|v| ScatterPoint {
                        x: v.temperature_rise,
                        y: v.gross_output_total,
                        label: v.label.clone(),
                        dominant: Some(v.pareto_dominant),
                    })
                    .collect::<Vec<_>>(),
            ),
        ),
    ];
    let mut written = Vec::new();
    for (name, svg) in charts {
        let path = dir.join(name);
        write_file(&path, &svg)?;
        written.push(path);
    }
    Ok(written)
}

/// One scatter per correlated variable: the variable against each region's
/// total abatement cost.
pub fn emit_correlation_charts(traces: &[EpisodeTrace], results: &[Result<CorrelationResult>], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (k, name) in CORRELATION_VARIABLES.iter().enumerate() {
        let mut pts = Vec::new();
        for t in traces {
            let cost = t.per_region_total(|r| r.abatement_cost);
            let output = t.per_region_total(|r| r.gross_output);
            for (i, s) in t.initial_regions.iter().enumerate() {
                let x = [s.capital, s.tfp, s.carbon_intensity, output[i]][k];
                pts.push(ScatterPoint { x, y: cost[i], label: format!("{}:{i}", t.seed), dominant: None });
            }
        }
        let title = match results.get(k) {
            Some(Ok(r)) => format!("Abatement cost vs {name} (r = {:.3}, p = {:.4}, n = {})", r.r, r.p, r.n),
            Some(Err(e)) => format!("Abatement cost vs {name} ({e})"),
            None => format!("Abatement cost vs {name}"),
        };
        let svg = scatter_chart(&title, name, "total abatement cost (trillion USD)", &pts);
        let path = dir.join(format!("abatement_vs_{name}.svg"));
        write_file(&path, &svg)?;
        written.push(path);
    }
    Ok(written)
}
