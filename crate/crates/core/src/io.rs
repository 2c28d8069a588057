//! Plain-text writers for shots, events, classifications, search reports and meshes.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::{json, Value};

use crate::classify::{EventSummary, TypeLabel};
use crate::formulations::ValidationRecord;
use crate::geometry::{CurvatureSample, ProfileCurve, TriangleMesh};
use crate::integrate::{Sample, Trajectory};
use crate::search::{SearchResult, SweepRow};

/// 17 significant digits, enough to round-trip an f64.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub const TRAJECTORY_HEADER: &str = "s,x,r,theta,theta_dot";

pub fn write_trajectory_csv<W: Write>(mut w: W, samples: &[Sample]) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for p in samples {
        let st = &p.state;
        writeln!(
            w,
            "{},{},{},{},{}",
            num(st.s),
            num(st.x),
            num(st.r),
            num(st.theta),
            num(p.theta_dot)
        )?;
    }
    Ok(())
}

/// Trajectory columns followed by the curvature columns; `samples` and `curvatures` align.
pub fn write_profile_csv<W: Write>(mut w: W, curve: &ProfileCurve, curvatures: &[CurvatureSample]) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER},kappa_rot,kappa_prof,H,residual")?;
    for (p, c) in curve.points.iter().zip(curvatures) {
        let st = &p.state;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            num(st.s),
            num(st.x),
            num(st.r),
            num(st.theta),
            num(p.theta_dot),
            num(c.kappa_rot),
            num(c.kappa_prof),
            num(c.h),
            num(c.residual)
        )?;
    }
    Ok(())
}

pub fn events_json(traj: &Trajectory) -> Value {
    Value::Array(
        traj.events
            .iter()
            .map(|e| {
                json!({
                    "kind": e.kind.as_str(),
                    "s": e.s,
                    "x": e.state.x,
                    "r": e.state.r,
                    "theta": e.state.theta,
                })
            })
            .collect(),
    )
}

pub const CLASSIFICATION_HEADER: &str = "delta,label,s1,s2,s3,s4,b,margin";

fn classification_line(delta: f64, label: &str, s: Option<&EventSummary>, margin: f64) -> String {
    let inf = EventSummary::or_inf;
    let f = |v: Option<f64>| num(inf(v));
    match s {
        Some(s) => format!(
            "{},{label},{},{},{},{},{},{}",
            num(delta),
            f(s.s1),
            f(s.s2),
            f(s.s3),
            f(s.s4),
            f(s.b),
            num(margin)
        ),
        None => format!("{},{label},inf,inf,inf,inf,inf,{}", num(delta), num(margin)),
    }
}

pub fn write_classification_csv<W: Write>(mut w: W, labels: &[TypeLabel]) -> io::Result<()> {
    writeln!(w, "{CLASSIFICATION_HEADER}")?;
    for l in labels {
        writeln!(
            w,
            "{}",
            classification_line(l.summary.delta, l.label.as_str(), Some(&l.summary), l.margin)
        )?;
    }
    Ok(())
}

/// Sweep rows in the classification format; rows that failed carry the label `error`.
pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(w, "{CLASSIFICATION_HEADER}")?;
    for row in rows {
        let line = match &row.label {
            Some(l) => classification_line(row.delta, l.label.as_str(), Some(&l.summary), l.margin),
            None => classification_line(row.delta, "error", None, f64::INFINITY),
        };
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub target: &'static str,
    pub n: u32,
    pub lambda: f64,
    pub delta_star: f64,
    pub bracket: [f64; 2],
    pub iterations: usize,
    pub closure_error: Option<f64>,
}

impl From<&SearchResult> for SearchReport {
    fn from(r: &SearchResult) -> Self {
        Self {
            target: r.target.as_str(),
            n: r.params.n,
            lambda: r.params.lambda,
            delta_star: r.delta_star,
            bracket: [r.bracket.0, r.bracket.1],
            iterations: r.iterations,
            closure_error: r.closure_error,
        }
    }
}

pub fn validation_json(records: &[ValidationRecord]) -> Value {
    serde_json::to_value(records).unwrap_or(Value::Null)
}

/// ASCII OBJ with vertex normals, 1-based indices and 9 significant digits.
pub fn write_obj<W: Write>(mut w: W, mesh: &TriangleMesh) -> io::Result<()> {
    let g = |v: f64| format!("{v:.8e}");
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", g(v[0]), g(v[1]), g(v[2]))?;
    }
    for n in &mesh.normals {
        writeln!(w, "vn {} {} {}", g(n[0]), g(n[1]), g(n[2]))?;
    }
    for f in &mesh.faces {
        let (a, b, c) = (f[0] + 1, f[1] + 1, f[2] + 1);
        writeln!(w, "f {a}//{a} {b}//{b} {c}//{c}")?;
    }
    Ok(())
}
