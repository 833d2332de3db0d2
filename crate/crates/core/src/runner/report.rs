use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{OptimizationTrace, RunConfig, Summary, TraceRecord};
use crate::error::{Error, Result};

/// One line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceLine {
    Header {
        config: RunConfig,
        optimum_value: f64,
    },
    Record(TraceRecord),
    Final {
        best_point: Option<Vec<f64>>,
        best_value: Option<f64>,
    },
}

/// Writes a trace as JSON lines: a header, one line per evaluation, and the
/// final best point.
pub fn write_trace<W: Write>(trace: &OptimizationTrace, mut out: W) -> Result<()> {
    let header = TraceLine::Header {
        config: trace.config.clone(),
        optimum_value: trace.optimum_value,
    };
    writeln!(out, "{}", serde_json::to_string(&header)?)?;
    for r in &trace.records {
        writeln!(out, "{}", serde_json::to_string(&TraceLine::Record(r.clone()))?)?;
    }
    let fin = TraceLine::Final {
        best_point: trace.best_point.clone(),
        best_value: trace.best_value,
    };
    writeln!(out, "{}", serde_json::to_string(&fin)?)?;
    Ok(())
}

pub fn read_trace<R: BufRead>(input: R) -> Result<OptimizationTrace> {
    let mut header = None;
    let mut records = Vec::new();
    let mut best = (None, None);
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TraceLine>(&line)? {
            TraceLine::Header { config, optimum_value } => header = Some((config, optimum_value)),
            TraceLine::Record(r) => records.push(r),
            TraceLine::Final { best_point, best_value } => best = (best_point, best_value),
        }
    }
    let (config, optimum_value) = header.ok_or_else(|| Error::Config("trace file has no header line".into()))?;
    Ok(OptimizationTrace {
        config,
        optimum_value,
        records,
        best_point: best.0,
        best_value: best.1,
    })
}

pub fn write_summary_csv<W: Write>(summary: &Summary, mut out: W) -> Result<()> {
    writeln!(out, "iteration,mean_best,se_best,mean_log_regret")?;
    for it in &summary.iterations {
        let regret = it.mean_log_regret.map(|v| v.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{}", it.iteration, it.mean_best, it.se_best, regret)?;
    }
    Ok(())
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Line plot of mean log regret (or mean best value when no optimum is
/// known) with a two-standard-error band for the raw values.
pub fn summary_svg(curves: &[(String, Summary)]) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let value = |it: &super::IterationSummary| it.mean_log_regret.unwrap_or(it.mean_best);
    let points: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|(_, s)| {
            s.iterations
                .iter()
                .map(|it| (it.iteration as f64, value(it)))
                .filter(|(_, v)| v.is_finite())
                .collect()
        })
        .collect();
    let all = points.iter().flatten();
    let (mut x_max, mut y_min, mut y_max) = (1.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if !y_min.is_finite() {
        (y_min, y_max) = (0.0, 1.0);
    }
    if y_max - y_min < 1e-12 {
        y_max = y_min + 1.0;
    }
    let sx = |x: f64| pad + x / x_max * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y_min) / (y_max - y_min) * (h - 2.0 * pad);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{pad},{pad} V{} H{}" fill="none" stroke="black"/>"#,
        h - pad,
        w - pad
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">iteration</text>"#, w / 2.0, h - 15.0);
    let _ = writeln!(svg, r#"<text x="{pad}" y="{}">{y_max:.3}</text>"#, pad - 8.0);
    let _ = writeln!(svg, r#"<text x="{pad}" y="{}">{y_min:.3}</text>"#, h - pad + 15.0);
    for (i, ((name, _), pts)) in curves.iter().zip(&points).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
        if !path.is_empty() {
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                path.join(" ")
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{name}</text>"#,
            w - pad - 120.0,
            pad + 16.0 * i as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::{aggregate_series, Method};

    fn sample_trace() -> OptimizationTrace {
        let config = RunConfig::new("branin_d10", Method::Sobol, 0, 2, 3);
        let rec = |i: usize, f: f64, best: Option<f64>| TraceRecord {
            iteration: i,
            embedded_point: None,
            ambient_point: vec![0.1; 10],
            objective: f,
            constraints: vec![],
            feasible: true,
            best_feasible_so_far: best,
            wall_time_ms: 0.5,
            projection: None,
        };
        OptimizationTrace {
            config,
            optimum_value: 0.397_887,
            records: vec![rec(0, 5.0, Some(5.0)), rec(1, 0.1 + 0.2, Some(0.1 + 0.2))],
            best_point: Some(vec![0.1; 10]),
            best_value: Some(0.1 + 0.2),
        }
    }

    #[test]
    fn trace_file_round_trip() {
        let t = sample_trace();
        let mut buf = Vec::new();
        write_trace(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().next().unwrap().contains(r#""type":"header""#));
        let back = read_trace(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn summary_csv_columns() {
        let s = aggregate_series(&[vec![2.0, 1.0], vec![4.0, 3.0]], Some(0.0)).unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("iteration,mean_best,se_best,mean_log_regret"));
        assert!(lines.next().unwrap().starts_with("0,3,1,"));
    }

    #[test]
    fn svg_is_well_formed() {
        let s = aggregate_series(&[vec![2.0, 1.0, 0.5]], Some(0.0)).unwrap();
        let svg = summary_svg(&[("alebo".into(), s)]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("polyline"));
    }
}
