//! CSV time series, SVG curve drawings and JSON verdict reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curve::ClosedCurve;
use crate::diagnostics::{DiagnosticsRecord, EllipseFit, Verdict};
use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;

pub const CSV_HEADER: &str =
    "t,L,E,phi_min,phi_max,mean_phi,H1,H2,H3,H4,energy_residual,h1_residual,area";

/// Flow failure as written into a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub kind: String,
    /// Start of the step that failed.
    pub t: f64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub verdicts: Vec<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<FailureReport>,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One CSV row. Floats use the shortest representation that round-trips.
fn csv_row(r: &DiagnosticsRecord) -> String {
    let cols = [
        r.t,
        r.perimeter,
        r.energy,
        r.phi_min,
        r.phi_max,
        r.mean_phi,
        r.h(1),
        r.h(2),
        r.h(3),
        r.h(4),
        r.energy_identity_residual,
        r.h1_identity_residual,
        r.area,
    ];
    cols.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")
}

pub fn csv_string(traj: &FlowTrajectory) -> String {
    let mut out = String::with_capacity(64 * (traj.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &traj.records {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

pub fn emit_csv(traj: &FlowTrajectory, path: &Path) -> Result<()> {
    write_file(path, &csv_string(traj))
}

/// Semi-axes and rotation (degrees) of `xᵀ Q x = 1`, if `Q` is positive definite.
fn ellipse_axes(q: [[f64; 2]; 2]) -> Option<(f64, f64, f64)> {
    let (a, b, c) = (q[0][0], q[0][1], q[1][1]);
    let mean = 0.5 * (a + c);
    let spread = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let (l1, l2) = (mean + spread, mean - spread);
    if !(l2 > 0.0) {
        return None;
    }
    // Eigenvector of the smaller eigenvalue carries the major axis.
    let angle = 0.5 * (2.0 * b).atan2(a - c) + std::f64::consts::FRAC_PI_2;
    Some((1.0 / l2.sqrt(), 1.0 / l1.sqrt(), angle.to_degrees()))
}

pub fn svg_string(curve: &ClosedCurve, fit: Option<&EllipseFit>) -> String {
    let extent = curve.max_radius().max(1e-12) * 1.1;
    let stroke = extent / 200.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="512" height="512">"#,
        -extent,
        -extent,
        2.0 * extent,
        2.0 * extent
    );
    // SVG's y axis points down.
    let _ = writeln!(s, r#"<g transform="scale(1,-1)">"#);
    let mut d = String::new();
    for (k, p) in curve.points().iter().enumerate() {
        let _ = write!(d, "{}{:?} {:?} ", if k == 0 { "M" } else { "L" }, p.x, p.y);
    }
    d.push('Z');
    let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="black" stroke-width="{stroke:?}"/>"#);
    if let Some((rx, ry, deg)) = fit.and_then(|f| ellipse_axes(f.q)) {
        let _ = writeln!(
            s,
            r#"<ellipse class="fit" cx="0" cy="0" rx="{rx:?}" ry="{ry:?}" transform="rotate({deg:?})" fill="none" stroke="red" stroke-dasharray="{:?}" stroke-width="{stroke:?}"/>"#,
            4.0 * stroke
        );
    }
    let _ = writeln!(
        s,
        r#"<circle class="origin" cx="0" cy="0" r="{:?}" fill="blue"/>"#,
        3.0 * stroke
    );
    s.push_str("</g>\n</svg>\n");
    s
}

pub fn emit_svg(curve: &ClosedCurve, fit: Option<&EllipseFit>, path: &Path) -> Result<()> {
    write_file(path, &svg_string(curve, fit))
}

pub fn report_string(report: &Report) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|source| Error::Json {
        context: format!("report for {}", report.scenario),
        source,
    })
}

pub fn emit_report(report: &Report, path: &Path) -> Result<()> {
    write_file(path, &(report_string(report)? + "\n"))
}
