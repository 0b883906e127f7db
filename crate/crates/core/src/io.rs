//! Trace CSV, SVG plots and atomic file writes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{FunnelError, Result};
use crate::integrator::{SimulationTrace, TraceStatus};

/// Writes `bytes` to a temporary sibling of `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| FunnelError::config(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

pub fn csv_header(m: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=m).map(|i| format!("y_{i}")));
    cols.extend((1..=m).map(|i| format!("yref_{i}")));
    cols.push("e_norm".into());
    cols.push("funnel_bound".into());
    cols.extend((1..=m).map(|i| format!("u_{i}")));
    cols.push("energy".into());
    cols.join(",")
}

// 17 significant digits: every f64 survives the round trip.
fn num(out: &mut String, v: f64) {
    let _ = write!(out, "{v:.16e}");
}

pub fn trace_to_csv(trace: &SimulationTrace) -> String {
    let mut out = String::with_capacity(trace.len() * (24 * (3 * trace.m + 4)) + 64);
    out.push_str(&csv_header(trace.m));
    out.push('\n');
    for k in 0..trace.len() {
        num(&mut out, trace.times[k]);
        for v in trace.outputs[k].iter().chain(&trace.references[k]) {
            out.push(',');
            num(&mut out, *v);
        }
        for v in [trace.error_norms[k], trace.funnel_bounds[k]].iter().chain(&trace.inputs[k]) {
            out.push(',');
            num(&mut out, *v);
        }
        out.push(',');
        num(&mut out, trace.energies[k]);
        out.push('\n');
    }
    let _ = writeln!(out, "# status={}", trace.status);
    out
}

pub fn write_trace_csv(trace: &SimulationTrace, path: &Path) -> Result<()> {
    write_atomic(path, trace_to_csv(trace).as_bytes())
}

fn parse_status(s: &str) -> Result<TraceStatus> {
    let bad = || FunnelError::config(format!("unrecognized status row '{s}'"));
    let time = |rest: &str| -> Result<f64> {
        rest.trim()
            .strip_prefix("t=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(bad)
    };
    if s == "completed" {
        Ok(TraceStatus::Completed)
    } else if let Some(rest) = s.strip_prefix("funnel_violation") {
        Ok(TraceStatus::FunnelViolation(time(rest)?))
    } else if let Some(rest) = s.strip_prefix("diverged") {
        Ok(TraceStatus::Diverged(time(rest)?))
    } else {
        Err(bad())
    }
}

pub fn trace_from_csv(text: &str) -> Result<SimulationTrace> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| FunnelError::config("empty trace file"))?;
    let ncols = header.split(',').count();
    if ncols < 7 || (ncols - 4) % 3 != 0 {
        return Err(FunnelError::config(format!("unexpected trace header '{header}'")));
    }
    let m = (ncols - 4) / 3;
    if header != csv_header(m) {
        return Err(FunnelError::config(format!("unexpected trace header '{header}'")));
    }
    let mut trace = SimulationTrace::new(m);
    let mut status = None;
    for (lineno, line) in lines.enumerate() {
        if let Some(s) = line.strip_prefix("# status=") {
            status = Some(parse_status(s.trim())?);
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| FunnelError::config(format!("line {}: {e}", lineno + 2)))?;
        if row.len() != ncols {
            return Err(FunnelError::config(format!(
                "line {}: expected {ncols} columns, found {}",
                lineno + 2,
                row.len()
            )));
        }
        trace.push(
            row[0],
            &row[1..1 + m],
            &row[1 + m..1 + 2 * m],
            row[1 + 2 * m],
            row[2 + 2 * m],
            &row[3 + 2 * m..3 + 3 * m],
            row[3 + 3 * m],
        );
    }
    trace.status = status.ok_or_else(|| FunnelError::config("trace file has no status row"))?;
    Ok(trace)
}

pub fn read_trace_csv(path: &Path) -> Result<SimulationTrace> {
    trace_from_csv(&fs::read_to_string(path)?)
}

/// Polylines are thinned to at most this many vertices.
pub const MAX_PLOT_POINTS: usize = 2000;

const WIDTH: f64 = 800.0;
const PANEL_HEIGHT: f64 = 220.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const GAP: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

struct Series<'a> {
    label: String,
    values: Vec<f64>,
    color: &'a str,
    dashed: bool,
}

fn sample_indices(n: usize) -> Vec<usize> {
    if n <= MAX_PLOT_POINTS {
        return (0..n).collect();
    }
    let stride = n.div_ceil(MAX_PLOT_POINTS);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    idx
}

fn panel(svg: &mut String, top: f64, title: &str, times: &[f64], series: &[Series], idx: &[usize]) {
    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (top + PANEL_HEIGHT, top);
    let (tmin, tmax) = (times[0], *times.last().unwrap());
    let finite = series.iter().flat_map(|s| idx.iter().map(|&k| s.values[k])).filter(|v| v.is_finite());
    let (mut vmin, mut vmax) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !vmin.is_finite() {
        (vmin, vmax) = (0.0, 0.0);
    }
    if vmax - vmin <= f64::EPSILON * vmax.abs().max(1.0) {
        vmin -= 1.0;
        vmax += 1.0;
    }
    let tspan = if tmax > tmin { tmax - tmin } else { 1.0 };
    let sx = |t: f64| x0 + (t - tmin) / tspan * (x1 - x0);
    let sy = |v: f64| y0 - (v - vmin) / (vmax - vmin) * (y0 - y1);

    let _ = writeln!(
        svg,
        r##"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        x1 - x0,
        y0 - y1
    );
    let _ = writeln!(svg, r#"<text x="{x0}" y="{}" font-size="14">{title}</text>"#, y1 - 8.0);
    for (v, y) in [(vmax, y1), (vmin, y0)] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{v:.3e}</text>"#,
            x0 - 6.0,
            y + 4.0
        );
    }
    for (t, x) in [(tmin, x0), (tmax, x1)] {
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{}" font-size="11" text-anchor="middle">{t:.3e}</text>"#,
            y0 + 14.0
        );
    }
    for (i, s) in series.iter().enumerate() {
        let mut pts = String::new();
        for &k in idx {
            let v = s.values[k];
            if v.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", sx(times[k]), sy(v));
            }
        }
        let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.2"{dash}/>"#,
            pts.trim_end(),
            s.color
        );
        let ly = y1 + 14.0 + 14.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" font-size="11" fill="{}" text-anchor="end">{}</text>"#,
            x1 - 6.0,
            s.color,
            s.label
        );
    }
}

/// Three stacked panels: error norm under the funnel boundary, outputs
/// against references, and inputs.
pub fn trace_to_svg(trace: &SimulationTrace) -> String {
    let height = MARGIN_TOP + 3.0 * PANEL_HEIGHT + 2.0 * GAP + 30.0;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if trace.is_empty() {
        let _ = writeln!(svg, "</svg>");
        return svg;
    }
    let idx = sample_indices(trace.len());
    let col = |rows: &[Vec<f64>], i: usize| rows.iter().map(|r| r[i]).collect::<Vec<_>>();

    let funnel = [
        Series {
            label: "1/phi(t)".into(),
            values: trace.funnel_bounds.clone(),
            color: "#444",
            dashed: true,
        },
        Series {
            label: "|e(t)|".into(),
            values: trace.error_norms.clone(),
            color: COLORS[0],
            dashed: false,
        },
    ];
    let mut tracking = Vec::new();
    let mut inputs = Vec::new();
    for i in 0..trace.m {
        let color = COLORS[i % COLORS.len()];
        tracking.push(Series {
            label: format!("y_{}", i + 1),
            values: col(&trace.outputs, i),
            color,
            dashed: false,
        });
        tracking.push(Series {
            label: format!("yref_{}", i + 1),
            values: col(&trace.references, i),
            color,
            dashed: true,
        });
        inputs.push(Series {
            label: format!("u_{}", i + 1),
            values: col(&trace.inputs, i),
            color,
            dashed: false,
        });
    }
    let step = PANEL_HEIGHT + GAP;
    panel(&mut svg, MARGIN_TOP, "tracking error and funnel boundary", &trace.times, &funnel, &idx);
    panel(&mut svg, MARGIN_TOP + step, "outputs and references", &trace.times, &tracking, &idx);
    panel(&mut svg, MARGIN_TOP + 2.0 * step, "inputs", &trace.times, &inputs, &idx);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">t   (status: {})</text>"#,
        WIDTH / 2.0,
        height - 8.0,
        trace.status
    );
    let _ = writeln!(svg, "</svg>");
    svg
}

pub fn emit_plot_svg(trace: &SimulationTrace, path: &Path) -> Result<()> {
    write_atomic(path, trace_to_svg(trace).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_trace(m: usize, n: usize) -> SimulationTrace {
        let mut t = SimulationTrace::new(m);
        for k in 0..n {
            t.push(k as f64, &vec![0.0; m], &vec![0.0; m], 0.0, 1.0, &vec![0.0; m], 0.0);
        }
        t
    }

    #[test]
    fn header_layout() {
        assert_eq!(csv_header(2), "t,y_1,y_2,yref_1,yref_2,e_norm,funnel_bound,u_1,u_2,energy");
    }

    #[test]
    fn single_row_zero_trace() {
        let csv = trace_to_csv(&zero_trace(1, 1));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[2], "# status=completed");
        assert!(lines[1].split(',').enumerate().all(|(i, v)| {
            let x: f64 = v.parse().unwrap();
            if i == 4 { x == 1.0 } else { x == 0.0 }
        }));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut t = SimulationTrace::new(2);
        let vals = [0.1, -1.0 / 3.0, 1e-300, 6.02e23, f64::MIN_POSITIVE, -0.0];
        for (k, v) in vals.iter().enumerate() {
            t.push(k as f64 * 0.1, &[*v, -v], &[v * 3.0, 1.0], v.abs(), 2.0, &[*v, 7.0], v * v);
        }
        t.status = TraceStatus::FunnelViolation(0.123456789);
        let back = trace_from_csv(&trace_to_csv(&t)).unwrap();
        assert_eq!(back, t);
        for (a, b) in back.outputs.iter().flatten().zip(t.outputs.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn svg_of_zero_trace_is_well_formed() {
        let svg = trace_to_svg(&zero_trace(2, 10));
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2 + 2 * 2 + 2);
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn long_traces_are_thinned() {
        let idx = sample_indices(10_001);
        assert!(idx.len() <= MAX_PLOT_POINTS + 1);
        assert_eq!(*idx.last().unwrap(), 10_000);
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
