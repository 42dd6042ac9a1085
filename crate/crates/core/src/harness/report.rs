use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::rate::{RateReport, RateRow};
use crate::error::{Error, Result};

pub const ROWS_HEADER: &str = "epsilon,distance,l2_error,method";

pub fn rows_csv(rows: &[RateRow]) -> String {
    let mut out = String::from(ROWS_HEADER);
    out.push('\n');
    for r in rows {
        let l2 = r.l2_error.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", r.epsilon, r.distance, l2, r.method);
    }
    out
}

/// Parses a `rows.csv` written by [`emit_report`]; `meta` is not stored there.
pub fn read_rows_csv(text: &str) -> Result<Vec<RateRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(ROWS_HEADER) {
        return Err(Error::Format("unexpected rows header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::Format(format!("bad row: {line}")));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Format(format!("{s}: {e}")))
            };
            Ok(RateRow {
                epsilon: num(cols[0])?,
                distance: num(cols[1])?,
                l2_error: if cols[2].is_empty() {
                    None
                } else {
                    Some(num(cols[2])?)
                },
                method: cols[3].to_string(),
                meta: serde_json::Value::Null,
            })
        })
        .collect()
}

pub(crate) fn summary_json(report: &RateReport) -> serde_json::Value {
    serde_json::json!({
        "experiment": report.experiment,
        "slope": report.fit.map(|f| f.slope),
        "intercept": report.fit.map(|f| f.intercept),
        "r_squared": report.fit.map(|f| f.r_squared),
        "target": report.target,
        "tolerance": report.tolerance,
        "decreasing": report.decreasing,
        "flags": report.flags,
        "rows": report.rows,
        "pass": report.passed && !report.rows.is_empty(),
    })
}

/// Log-log plot: one marker per row, the fitted line and a guide of the target slope.
pub fn plot_svg(report: &RateReport) -> String {
    let (w, h, pad) = (480.0, 360.0, 48.0);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n",
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    let pts: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter(|r| r.distance > 0.0)
        .map(|r| (r.epsilon.ln(), r.distance.ln()))
        .collect();
    if !pts.is_empty() {
        let (mut x0, mut x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| {
            (a.0.min(p.0), a.1.max(p.0))
        });
        let (mut y0, mut y1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| {
            (a.0.min(p.1), a.1.max(p.1))
        });
        if x1 - x0 < 1e-9 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-9 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let (mx, my) = (0.1 * (x1 - x0), 0.1 * (y1 - y0));
        let (x0, x1, y0, y1) = (x0 - mx, x1 + mx, y0 - my, y1 + my);
        let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
        for (x, y) in &pts {
            let _ = writeln!(
                svg,
                "<circle class=\"marker\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#1f77b4\"/>",
                sx(*x),
                sy(*y)
            );
        }
        let (ax, bx) = (
            pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
            pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
        );
        let mut line = |class: &str, color: &str, slope: f64, intercept: f64| {
            let _ = writeln!(
                svg,
                "<line class=\"{class}\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\"/>",
                sx(ax),
                sy(slope * ax + intercept),
                sx(bx),
                sy(slope * bx + intercept)
            );
        };
        if let Some(f) = report.fit {
            line("fit", "#d62728", f.slope, f.intercept);
        }
        let (gx, gy) = pts[0];
        line("guide", "#2ca02c", report.target, gy - report.target * gx);
    }
    let _ = writeln!(
        svg,
        "<text x=\"{pad}\" y=\"{:.0}\" font-size=\"12\">log distance vs log epsilon ({})</text>\n</svg>",
        pad - 12.0,
        report.experiment
    );
    svg
}

/// Writes `rows.csv`, `summary.json` and `plot.svg` into `dir`.
pub fn emit_report(report: &RateReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let files = [
        (dir.join("rows.csv"), rows_csv(&report.rows)),
        (
            dir.join("summary.json"),
            serde_json::to_string_pretty(&summary_json(report))?,
        ),
        (dir.join("plot.svg"), plot_svg(report)),
    ];
    for (path, text) in &files {
        std::fs::write(path, text)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(k: usize) -> RateReport {
        let rows = (0..k)
            .map(|i| {
                let e = 0.2 / 2f64.powi(i as i32);
                RateRow {
                    epsilon: e,
                    distance: 0.3 * e.sqrt(),
                    l2_error: Some(e / 3.0),
                    method: "quantile1d".into(),
                    meta: serde_json::Value::Null,
                }
            })
            .collect();
        RateReport::assemble("rate1d", rows, 0.5, 0.05)
    }

    #[test]
    fn empty_report_files() {
        let dir = tempfile::tempdir().unwrap();
        emit_report(&report(0), dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("rows.csv")).unwrap();
        assert_eq!(csv, format!("{ROWS_HEADER}\n"));
        let summary: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("summary.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(summary["pass"], false);
    }

    #[test]
    fn plot_structure() {
        let svg = plot_svg(&report(5));
        assert_eq!(svg.matches("<circle").count(), 5);
        assert_eq!(svg.matches("<line").count(), 2);
    }

    #[test]
    fn csv_round_trip() {
        let r = report(5);
        let back = read_rows_csv(&rows_csv(&r.rows)).unwrap();
        assert_eq!(back, r.rows);
    }
}
