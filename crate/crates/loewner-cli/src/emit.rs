//! Artifact emission: CSV with locale-independent 17-significant-digit
//! numbers, JSON report bundles, and static SVG hull plots.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use loewner::{HullTrace, TrajectoryStatus};

/// 17 significant digits, `.` separator, no locale dependence; parsing the
/// output and re-formatting reproduces the bytes exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn status_label(status: TrajectoryStatus) -> &'static str {
    match status {
        TrajectoryStatus::Completed => "completed",
        TrajectoryStatus::ExitedDomain(_) => "exited_domain",
        TrajectoryStatus::SingularityHit(_) => "singularity_hit",
        TrajectoryStatus::StepLimit => "step_limit",
    }
}

pub const TRAJECTORY_HEADER: &str = "t,z0_re,z0_im,w_re,w_im,status";

/// One emitted trajectory sample row.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub z0: Complex64,
    pub w: Complex64,
    pub status: String,
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(row.t),
            fmt_f64(row.z0.re),
            fmt_f64(row.z0.im),
            fmt_f64(row.w.re),
            fmt_f64(row.w.im),
            row.status
        );
    }
    out
}

/// Reads a trajectory CSV back into rows; used to certify the byte-identical
/// round trip.
pub fn parse_trajectory_csv(text: &str) -> Result<Vec<TrajectoryRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRAJECTORY_HEADER => {}
        other => return Err(format!("unexpected header: {other:?}")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 6 {
            return Err(format!("row {i}: expected 6 fields, got {}", parts.len()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("row {i}: {e}"));
        rows.push(TrajectoryRow {
            t: num(parts[0])?,
            z0: Complex64::new(num(parts[1])?, num(parts[2])?),
            w: Complex64::new(num(parts[3])?, num(parts[4])?),
            status: parts[5].to_string(),
        });
    }
    Ok(rows)
}

pub const HULL_HEADER: &str = "t,tip_re,tip_im,tip_refined_re,tip_refined_im,hcap";

pub fn hull_csv(trace: &HullTrace) -> String {
    let mut out = String::new();
    out.push_str(HULL_HEADER);
    out.push('\n');
    for i in 0..trace.times.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(trace.times[i]),
            fmt_f64(trace.tips[i].re),
            fmt_f64(trace.tips[i].im),
            fmt_f64(trace.tips_refined[i].re),
            fmt_f64(trace.tips_refined[i].im),
            fmt_f64(trace.capacities[i]),
        );
    }
    out
}

pub const DUALITY_HEADER: &str =
    "s,t,z_re,z_im,direct_re,direct_im,transformed_re,transformed_im,residual";

pub struct DualityRow {
    pub s: f64,
    pub t: f64,
    pub z: Complex64,
    pub direct: Complex64,
    pub transformed: Complex64,
}

pub fn duality_csv(rows: &[DualityRow]) -> String {
    let mut out = String::new();
    out.push_str(DUALITY_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(row.s),
            fmt_f64(row.t),
            fmt_f64(row.z.re),
            fmt_f64(row.z.im),
            fmt_f64(row.direct.re),
            fmt_f64(row.direct.im),
            fmt_f64(row.transformed.re),
            fmt_f64(row.transformed.im),
            fmt_f64((row.direct - row.transformed).norm()),
        );
    }
    out
}

/// Static SVG of the hull polyline (refined tips) over the real axis, with
/// the viewport scaled to the data extent.
pub fn hull_svg(trace: &HullTrace) -> String {
    let width = 800.0_f64;
    let height = 600.0_f64;
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut max_y = 0.0_f64;
    for tip in &trace.tips_refined {
        min_x = min_x.min(tip.re);
        max_x = max_x.max(tip.re);
        max_y = max_y.max(tip.im);
    }
    if !min_x.is_finite() {
        min_x = -1.0;
        max_x = 1.0;
        max_y = 1.0;
    }
    let span_x = (max_x - min_x).max(1e-6);
    let span_y = max_y.max(1e-6);
    let pad_x = 0.1 * span_x.max(span_y);
    let pad_y = 0.1 * span_y.max(span_x);
    let x0 = min_x - pad_x;
    let x1 = max_x + pad_x;
    let y1 = max_y + pad_y;
    let sx = width / (x1 - x0);
    let sy = height / y1;
    let scale = sx.min(sy);
    let map = |p: Complex64| -> (f64, f64) { ((p.re - x0) * scale, height - p.im * scale) };
    let mut points = String::new();
    for tip in &trace.tips_refined {
        let (x, y) = map(*tip);
        let _ = write!(points, "{x:.3},{y:.3} ");
    }
    let (ax0, ay) = map(Complex64::new(x0, 0.0));
    let (ax1, _) = map(Complex64::new(x1, 0.0));
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">\n",
            "<line x1=\"{ax0:.3}\" y1=\"{ay:.3}\" x2=\"{ax1:.3}\" y2=\"{ay:.3}\" ",
            "stroke=\"#888\" stroke-width=\"1\"/>\n",
            "<polyline points=\"{points}\" fill=\"none\" stroke=\"#1f77b4\" ",
            "stroke-width=\"2\"/>\n",
            "</svg>\n"
        ),
        w = width,
        h = height,
        ax0 = ax0,
        ay = ay,
        ax1 = ax1,
        points = points.trim_end(),
    )
}

pub fn write_text(path: &Path, contents: &str) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}
