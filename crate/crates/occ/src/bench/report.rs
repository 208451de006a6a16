use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BenchError, BenchRecord, Method, Result, ScalingFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostInfo {
    pub cpu: String,
    pub threads: usize,
}

impl HostInfo {
    pub fn detect() -> Self {
        let cpu = fs::read_to_string("/proc/cpuinfo")
            .ok()
            .and_then(|s| {
                s.lines()
                    .find(|l| l.starts_with("model name"))
                    .and_then(|l| l.split_once(':'))
                    .map(|(_, v)| v.trim().to_string())
            })
            .unwrap_or_else(|| std::env::consts::ARCH.to_string());
        let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
        Self { cpu, threads }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub records: Vec<BenchRecord>,
    pub fits: Vec<ScalingFit>,
    pub host: HostInfo,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    method: &'a str,
    n_points: usize,
    wall_time_ms: String,
    cost_matrix_ms: String,
    peak_extra_memory: String,
    repeats: usize,
    seed: u64,
    threads: usize,
    skipped: bool,
}

pub fn write_csv(records: &[BenchRecord], path: &Path) -> Result<()> {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(CsvRow {
            method: r.method.as_str(),
            n_points: r.n_points,
            wall_time_ms: opt(r.wall_time_ms),
            cost_matrix_ms: opt(r.cost_matrix_ms),
            peak_extra_memory: r
                .peak_extra_memory
                .map_or_else(|| "unavailable".into(), |b| b.to_string()),
            repeats: r.repeats,
            seed: r.seed,
            threads: r.threads,
            skipped: r.skipped,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `path` as JSON plus `.csv` and `.svg` siblings; returns all three
/// paths.
pub fn emit_report(report: &BenchReport, path: &Path) -> Result<[PathBuf; 3]> {
    if report.records.is_empty() {
        return Err(BenchError::InsufficientData("no records to report".into()));
    }
    let json = path.to_path_buf();
    let csv = path.with_extension("csv");
    let svg = path.with_extension("svg");
    fs::write(&json, serde_json::to_string_pretty(report)?)?;
    write_csv(&report.records, &csv)?;
    fs::write(&svg, render_svg(&report.records, &report.fits))?;
    Ok([json, csv, svg])
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;

fn color(m: Method) -> &'static str {
    match m {
        Method::Hungarian => "#c0392b",
        Method::Chamfer => "#2471a3",
    }
}

/// Self-contained log-log plot of wall time against size, one series per
/// method, with dashed fit lines when fits are given.
pub fn render_svg(records: &[BenchRecord], fits: &[ScalingFit]) -> String {
    let pts: Vec<(Method, f64, f64)> = records
        .iter()
        .filter(|r| !r.skipped)
        .filter_map(|r| {
            r.wall_time_ms
                .filter(|t| *t > 0.0)
                .map(|t| (r.method, (r.n_points as f64).log10(), t.log10()))
        })
        .collect();
    let bounds = |f: fn(&(Method, f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min).floor();
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max).ceil();
        if lo.is_finite() && hi > lo {
            (lo, hi)
        } else if lo.is_finite() {
            (lo, lo + 1.0)
        } else {
            (0.0, 1.0)
        }
    };
    let (x0, x1) = bounds(|p| p.1);
    let (y0, y1) = bounds(|p| p.2);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"#
    );
    for d in x0 as i32..=x1 as i32 {
        let x = sx(f64::from(d));
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{d}</text>"#,
            b + 18.0
        );
    }
    for d in y0 as i32..=y1 as i32 {
        let y = sy(f64::from(d));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{d}</text>"#,
            l - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">points</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.1}" text-anchor="middle" transform="rotate(-90 15 {:.1})">wall time (ms)</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    for (k, m) in [Method::Hungarian, Method::Chamfer].into_iter().enumerate() {
        let series: Vec<_> = pts.iter().filter(|p| p.0 == m).collect();
        if !series.is_empty() {
            let path: Vec<String> = series
                .iter()
                .map(|p| format!("{:.1},{:.1}", sx(p.1), sy(p.2)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" stroke="{}" fill="none"/>"#,
                path.join(" "),
                color(m)
            );
            for p in &series {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{}"/>"#,
                    sx(p.1),
                    sy(p.2),
                    color(m)
                );
            }
        }
        let mut label = m.as_str().to_string();
        if let Some(f) = fits.iter().find(|f| f.method == m) {
            // ln t = c + a ln n  =>  log10 t = c / ln 10 + a log10 n
            let at = |x: f64| f.log_coefficient / std::f64::consts::LN_10 + f.alpha * x;
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-dasharray="5,4"/>"#,
                sx(x0),
                sy(at(x0)),
                sx(x1),
                sy(at(x1)),
                color(m)
            );
            let _ = write!(label, " (alpha {:.2}, R2 {:.3})", f.alpha, f.r_squared);
        }
        let ly = MARGIN + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{ly:.1}" fill="{}">{label}</text>"#,
            MARGIN + 10.0,
            color(m)
        );
    }
    s.push_str("</svg>\n");
    s
}
