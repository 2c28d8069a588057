//! First-crossing summaries of a shot and the type of its launch radius.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{integrate, EventKind, IntegratorControls, Scan, Termination, Trajectory};
use crate::params::Params;

/// Band on `|x(s1)| / max(1, r(s1))` inside which a type-1 shot is reported as closing.
pub const DEFAULT_CLOSURE_BAND: f64 = 1e-8;

/// Arc lengths of the first crossings along a shot. `None` means the crossing did not
/// happen before integration stopped (the unresolved surrogate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventSummary {
    /// theta reaches 0 or pi
    pub s1: Option<f64>,
    /// theta' vanishes
    pub s2: Option<f64>,
    /// theta reaches 0 or pi/2
    pub s3: Option<f64>,
    /// x returns to 0
    pub s4: Option<f64>,
    /// arc length where integration stopped
    pub s_end: f64,
    pub termination: Termination,
    /// `r(s1)`
    pub b: Option<f64>,
    pub x_at_s1: Option<f64>,
    pub theta_at_s1: Option<f64>,
    pub delta: f64,
}

impl EventSummary {
    /// `s_i` with unresolved crossings mapped to `+inf`.
    pub fn or_inf(v: Option<f64>) -> f64 {
        v.unwrap_or(f64::INFINITY)
    }

    /// Whether s1 was reached at theta = pi (as opposed to theta = 0).
    pub fn s1_at_pi(&self) -> Option<bool> {
        self.theta_at_s1.map(|t| (t - PI).abs() < (t).abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "type1_1")]
    Type1_1,
    #[serde(rename = "type1_2")]
    Type1_2,
    #[serde(rename = "type1_3")]
    Type1_3,
    #[serde(rename = "type2")]
    Type2,
    #[serde(rename = "type3_candidate")]
    Type3Candidate,
    #[serde(rename = "undetermined")]
    Undetermined,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Type1_1 => "type1_1",
            Label::Type1_2 => "type1_2",
            Label::Type1_3 => "type1_3",
            Label::Type2 => "type2",
            Label::Type3Candidate => "type3_candidate",
            Label::Undetermined => "undetermined",
        }
    }

    pub fn is_type1(&self) -> bool {
        matches!(self, Label::Type1_1 | Label::Type1_2 | Label::Type1_3)
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A type label with the ordering gap that supports it and the summary it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeLabel {
    pub label: Label,
    pub margin: f64,
    pub summary: EventSummary,
}

/// Extract s1..s4 from a shot launched below the cylinder radius.
pub fn summarize(traj: &Trajectory) -> Result<EventSummary> {
    let r_lambda = traj.params.cylinder_radius();
    if !(traj.delta > 0.0 && traj.delta < r_lambda) {
        return Err(Error::Domain(format!(
            "summaries need 0 < delta < R_lambda = {r_lambda}, got {}",
            traj.delta
        )));
    }
    Ok(summarize_unchecked(traj))
}

pub(crate) fn summarize_unchecked(traj: &Trajectory) -> EventSummary {
    let first = |kinds: &[EventKind]| {
        traj.events
            .iter()
            .filter(|e| kinds.contains(&e.kind) && e.s > 0.0)
            .map(|e| e.s)
            .reduce(f64::min)
    };
    let s1 = first(&[EventKind::ThetaZero, EventKind::ThetaPi]);
    let at_s1 = s1.and_then(|s| {
        traj.events
            .iter()
            .find(|e| e.s == s && matches!(e.kind, EventKind::ThetaZero | EventKind::ThetaPi))
    });
    EventSummary {
        s1,
        s2: first(&[EventKind::ThetaDotZero]),
        s3: first(&[EventKind::ThetaZero, EventKind::ThetaHalfPi]),
        s4: first(&[EventKind::XZero]),
        s_end: traj.last().state.s,
        termination: traj.termination,
        b: at_s1.map(|e| e.state.r),
        x_at_s1: at_s1.map(|e| e.state.x),
        theta_at_s1: at_s1.map(|e| e.state.theta),
        delta: traj.delta,
    }
}

/// Whether the whole stored shot stays in `0 < theta < pi/2` with `theta' > 0`.
fn monotone_quarter_turn(traj: &Trajectory) -> bool {
    traj.samples
        .iter()
        .skip(1)
        .all(|p| p.state.theta > 0.0 && p.state.theta < FRAC_PI_2 && p.theta_dot > 0.0)
}

/// Assign the type from a summary. `closure_band` is the relative `|x(s1)|` band reported as
/// type 1.2; zero disables it.
pub fn label_from_summary(
    summary: &EventSummary,
    traj: Option<&Trajectory>,
    event_tol: f64,
    closure_band: f64,
) -> (Label, f64) {
    use Label::*;
    if summary.termination.is_failure() {
        return (Undetermined, 0.0);
    }
    let inf = EventSummary::or_inf;
    if let (Some(s1), Some(at_pi)) = (summary.s1, summary.s1_at_pi()) {
        let s2 = inf(summary.s2);
        let s3 = inf(summary.s3);
        if (s2 - s1).abs() < event_tol {
            // theta' = 0 together with theta in {0, pi}: excluded for exact solutions
            return (Undetermined, (s2 - s1).abs());
        }
        if !at_pi {
            // theta came back to 0: only type 2 is consistent
            if s2 < s1 && s3 >= s1 {
                let margin = s1 - s2;
                return if margin < event_tol {
                    (Undetermined, margin)
                } else {
                    (Type2, margin)
                };
            }
            return (Undetermined, 0.0);
        }
        if !(s3 < s1) || s2 < s1 {
            return (Undetermined, 0.0);
        }
        let x1 = summary.x_at_s1.unwrap_or(f64::NAN);
        let b = summary.b.unwrap_or(1.0);
        if x1.abs() < closure_band * b.max(1.0) {
            return (Type1_2, x1.abs());
        }
        let (label, gap) = match summary.s4 {
            Some(s4) if s4 < s1 => (Type1_1, s1 - s4),
            _ => (Type1_3, x1.abs()),
        };
        let margin = gap.min(s1 - s3);
        if margin < event_tol {
            return (Undetermined, margin);
        }
        return (label, margin);
    }
    // s1 not reached
    if summary.termination == Termination::Escape
        && summary.s2.is_none()
        && summary.s3.is_none()
        && traj.is_none_or(monotone_quarter_turn)
    {
        return (Type3Candidate, summary.s_end);
    }
    (Undetermined, 0.0)
}

/// Classify a shot that has already been integrated.
pub fn classify_trajectory(traj: &Trajectory, event_tol: f64, closure_band: f64) -> Result<TypeLabel> {
    let summary = summarize(traj)?;
    let (label, margin) = label_from_summary(&summary, Some(traj), event_tol, closure_band);
    Ok(TypeLabel { label, margin, summary })
}

/// Integrate the shot at `delta` up to s1 and assign its type.
pub fn classify_delta(delta: f64, params: &Params, controls: &IntegratorControls) -> Result<TypeLabel> {
    classify_delta_with(delta, params, controls, DEFAULT_CLOSURE_BAND)
}

pub fn classify_delta_with(
    delta: f64,
    params: &Params,
    controls: &IntegratorControls,
    closure_band: f64,
) -> Result<TypeLabel> {
    let r_lambda = params.cylinder_radius();
    if !(delta > 0.0 && delta < r_lambda) {
        return Err(Error::Domain(format!(
            "classification needs 0 < delta < R_lambda = {r_lambda}, got {delta}"
        )));
    }
    let traj = integrate(delta, params, &controls.with_scan(Scan::S1))?;
    classify_trajectory(&traj, controls.event_tol, closure_band)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    /// `"R_-lambda"` for type-1 shots, `"R_lambda"` for type-2 shots.
    pub bound: &'static str,
    pub bound_value: f64,
    pub b: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RadiusCheck {
    NotApplicable,
    Checked(Vec<BoundCheck>),
}

/// Lower bounds on `b = r(s1)`: `b > R_{-lambda}` when s3 < s1, `b > R_lambda` when s2 < s1.
pub fn check_radius_bounds(summary: &EventSummary, params: &Params) -> RadiusCheck {
    let (Some(s1), Some(b)) = (summary.s1, summary.b) else {
        return RadiusCheck::NotApplicable;
    };
    let mut out = Vec::new();
    if EventSummary::or_inf(summary.s3) < s1 {
        let bound_value = params.mirrored_cylinder_radius();
        out.push(BoundCheck {
            bound: "R_-lambda",
            bound_value,
            b,
            satisfied: b > bound_value,
        });
    }
    if EventSummary::or_inf(summary.s2) < s1 {
        let bound_value = params.cylinder_radius();
        out.push(BoundCheck {
            bound: "R_lambda",
            bound_value,
            b,
            satisfied: b > bound_value,
        });
    }
    RadiusCheck::Checked(out)
}

/// One ordering property evaluated on a shot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub holds: bool,
    pub detail: String,
}

/// The ordering facts every shot below the cylinder radius must obey, evaluated on the
/// samples outside a guard band of `guard` around the crossings.
pub fn ordering_properties(traj: &Trajectory, summary: &EventSummary, guard: f64) -> Vec<PropertyCheck> {
    let inf = EventSummary::or_inf;
    let (s1, s2, s3, s4) = (inf(summary.s1), inf(summary.s2), inf(summary.s3), inf(summary.s4));
    let mut out = Vec::new();

    if let Some(at_pi) = summary.s1_at_pi() {
        let (holds, detail) = if at_pi {
            (s3 < s1, format!("theta(s1)=pi, s3={s3}, s1={s1}"))
        } else {
            (s2 < s1, format!("theta(s1)=0, s2={s2}, s1={s1}"))
        };
        out.push(PropertyCheck {
            name: "s1-endpoint-implies-order",
            holds,
            detail,
        });
    }
    if summary.s3.is_some() && summary.s4.is_some() {
        out.push(PropertyCheck {
            name: "s3-le-s4",
            holds: s3 <= s4,
            detail: format!("s3={s3}, s4={s4}"),
        });
    }
    if s3 < s1 {
        let bad = traj
            .samples
            .iter()
            .filter(|p| p.state.s > s3 + guard && p.state.s < s1 - guard)
            .find(|p| !(p.state.theta > FRAC_PI_2 && p.state.theta < PI));
        out.push(PropertyCheck {
            name: "type1-theta-in-upper-quadrant",
            holds: bad.is_none(),
            detail: bad.map_or_else(String::new, |p| format!("theta={} at s={}", p.state.theta, p.state.s)),
        });
        out.push(PropertyCheck {
            name: "type1-s1-le-s2",
            holds: s1 <= s2,
            detail: format!("s1={s1}, s2={s2}"),
        });
    }
    if s2 < s1 {
        let bad = traj
            .samples
            .iter()
            .filter(|p| p.state.s > s2 + guard && p.state.s < s1 - guard)
            .find(|p| !(p.theta_dot < 0.0));
        out.push(PropertyCheck {
            name: "type2-turning-back",
            holds: bad.is_none() && (s1 - s3).abs() <= guard.max(0.0) + f64::EPSILON * s1,
            detail: format!("s1={s1}, s3={s3}"),
        });
    }
    out
}
