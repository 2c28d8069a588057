//! Shooting trajectories: adaptive integration of the profile system from a horizontal
//! launch `(x, r, theta) = (0, delta, 0)` with event localization.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;
use crate::profile::{curvature_term, ProfileState};
use crate::rk::{dopri_step, error_norm, hermite, PiController, Vec3};

/// Radii below this are treated as having hit the axis.
pub const R_FLOOR: f64 = 1e-12;

/// Level crossings tracked along a shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    ThetaZero,
    ThetaHalfPi,
    ThetaPi,
    ThetaDotZero,
    XZero,
}

impl EventKind {
    pub const ALL: [EventKind; 5] = [
        EventKind::ThetaZero,
        EventKind::ThetaHalfPi,
        EventKind::ThetaPi,
        EventKind::ThetaDotZero,
        EventKind::XZero,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::ThetaZero => "theta-zero",
            EventKind::ThetaHalfPi => "theta-half-pi",
            EventKind::ThetaPi => "theta-pi",
            EventKind::ThetaDotZero => "theta-dot-zero",
            EventKind::XZero => "x-zero",
        }
    }

    /// Value of the event function; the event fires where it vanishes.
    #[inline]
    pub fn eval(&self, state: &ProfileState, theta_dot: f64) -> f64 {
        match self {
            EventKind::ThetaZero => state.theta,
            EventKind::ThetaHalfPi => state.theta - FRAC_PI_2,
            EventKind::ThetaPi => state.theta - PI,
            EventKind::ThetaDotZero => theta_dot,
            EventKind::XZero => state.x,
        }
    }
}

/// Which of the first-crossing quantities the caller wants resolved; integration stops at
/// the first event that settles it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scan {
    /// theta reaches 0 or pi
    #[default]
    S1,
    /// theta' vanishes
    S2,
    /// theta reaches 0 or pi/2
    S3,
    /// x returns to 0
    S4,
    /// never stop on an event
    Full,
}

impl Scan {
    pub fn stops_on(&self, kind: EventKind) -> bool {
        use EventKind::*;
        match self {
            Scan::S1 => matches!(kind, ThetaZero | ThetaPi),
            Scan::S2 => kind == ThetaDotZero,
            Scan::S3 => matches!(kind, ThetaZero | ThetaHalfPi),
            Scan::S4 => kind == XZero,
            Scan::Full => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    StepUnderflow,
    StepBudget,
    RadiusFloor,
}

/// Why integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Termination {
    EventStop { event: EventKind },
    ArcBudget,
    Escape,
    StepFailure { reason: FailureReason },
}

impl Termination {
    pub fn is_failure(&self) -> bool {
        matches!(self, Termination::StepFailure { .. })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::EventStop { .. } => "event-stop",
            Termination::ArcBudget => "arc-budget",
            Termination::Escape => "escape",
            Termination::StepFailure { .. } => "step-failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub kind: EventKind,
    pub s: f64,
    pub state: ProfileState,
    pub theta_dot: f64,
    /// +1 when the event function increases through zero, -1 otherwise.
    pub direction: i8,
}

/// A stored point with its turning rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub state: ProfileState,
    pub theta_dot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorControls {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub s_max: f64,
    /// Escape radius; `None` means `max(10, 4 R_|lambda|)`.
    pub r_max: Option<f64>,
    pub x_max: f64,
    pub event_tol: f64,
    pub max_steps: u64,
    /// Upper bound on the step size, which sets the sample density.
    pub max_step: f64,
    /// Relative distance from `R_lambda` inside which a launch is the exact cylinder.
    pub degeneracy_margin: f64,
    pub scan: Scan,
}

impl Default for IntegratorControls {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-12,
            s_max: 100.0,
            r_max: None,
            x_max: 50.0,
            event_tol: 1e-12,
            max_steps: 10_000_000,
            max_step: 1e-3,
            degeneracy_margin: 1e-12,
            scan: Scan::S1,
        }
    }
}

impl IntegratorControls {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("s_max", self.s_max),
            ("x_max", self.x_max),
            ("event_tol", self.event_tol),
            ("max_step", self.max_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} = {v} must be positive and finite")));
            }
        }
        if let Some(r) = self.r_max {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("r_max = {r} must be positive and finite")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        if !(self.degeneracy_margin >= 0.0) {
            return Err(Error::Config("degeneracy_margin must be non-negative".into()));
        }
        Ok(())
    }

    pub fn resolved_r_max(&self, params: &Params) -> f64 {
        self.r_max.unwrap_or_else(|| {
            let r_abs = crate::params::cylinder_radius(params.n, params.lambda.abs());
            10f64.max(4.0 * r_abs)
        })
    }

    /// Same controls with both step tolerances scaled by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol / factor,
            abs_tol: self.abs_tol / factor,
            ..*self
        }
    }

    pub fn with_scan(&self, scan: Scan) -> Self {
        Self { scan, ..*self }
    }
}

/// An integrated shot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<EventRecord>,
    pub termination: Termination,
    pub params: Params,
    pub delta: f64,
    /// Accepted integration steps.
    pub steps: u64,
}

impl Trajectory {
    /// Assemble a trajectory from already computed parts (fixtures, synthetic tests).
    pub fn from_parts(
        samples: Vec<Sample>,
        events: Vec<EventRecord>,
        termination: Termination,
        params: Params,
        delta: f64,
    ) -> Self {
        Self {
            samples,
            events,
            termination,
            params,
            delta,
            steps: 0,
        }
    }

    pub fn first_event(&self, kind: EventKind) -> Option<&EventRecord> {
        self.events.iter().find(|e| e.kind == kind)
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least the launch sample")
    }

    pub fn s_range(&self) -> (f64, f64) {
        (self.samples[0].state.s, self.last().state.s)
    }

    /// Cubic Hermite interpolation of the stored samples.
    pub fn state_at(&self, s: f64) -> Option<ProfileState> {
        let (lo, hi) = self.s_range();
        if !(s >= lo && s <= hi) {
            return None;
        }
        let idx = self.samples.partition_point(|p| p.state.s <= s);
        if idx == 0 {
            return Some(self.samples[0].state);
        }
        if idx >= self.samples.len() {
            return Some(self.last().state);
        }
        let a = &self.samples[idx - 1];
        let b = &self.samples[idx];
        let (s0, s1) = (a.state.s, b.state.s);
        let (sa, ca) = a.state.theta.sin_cos();
        let (sb, cb) = b.state.theta.sin_cos();
        Some(ProfileState {
            s,
            x: hermite(s0, s1, a.state.x, b.state.x, ca, cb, s),
            r: hermite(s0, s1, a.state.r, b.state.r, sa, sb, s),
            theta: hermite(s0, s1, a.state.theta, b.state.theta, a.theta_dot, b.theta_dot, s),
        })
    }
}

#[inline]
fn to_state(s: f64, y: &Vec3) -> ProfileState {
    ProfileState::new(s, y[0], y[1], y[2])
}

/// Integrate the shot launched horizontally at radius `delta`.
///
/// A launch within `degeneracy_margin` of `R_lambda` returns the exact cylinder.
pub fn integrate(delta: f64, params: &Params, controls: &IntegratorControls) -> Result<Trajectory> {
    controls.validate()?;
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("delta = {delta} must be positive and finite")));
    }
    let r_lambda = params.cylinder_radius();
    if (delta - r_lambda).abs() <= controls.degeneracy_margin * r_lambda {
        return Ok(cylinder_fixture(r_lambda, params, controls));
    }
    Ok(Shooter::new(params, controls).run(ProfileState::launch(delta), delta))
}

/// The constant solution `r = R_lambda`, `theta = 0`, sampled up to `s_max`.
pub fn cylinder_fixture(radius: f64, params: &Params, controls: &IntegratorControls) -> Trajectory {
    let count = (controls.s_max / controls.max_step).ceil().max(1.0) as usize;
    let samples = (0..=count)
        .map(|i| {
            let s = (i as f64 * controls.max_step).min(controls.s_max);
            let state = ProfileState::new(s, s, radius, 0.0);
            Sample {
                state,
                theta_dot: curvature_term(state.x, state.r, state.theta, params),
            }
        })
        .collect();
    Trajectory::from_parts(samples, Vec::new(), Termination::ArcBudget, *params, radius)
}

struct Shooter<'a> {
    params: &'a Params,
    controls: &'a IntegratorControls,
    r_max: f64,
}

impl<'a> Shooter<'a> {
    fn new(params: &'a Params, controls: &'a IntegratorControls) -> Self {
        Self {
            params,
            controls,
            r_max: controls.resolved_r_max(params),
        }
    }

    fn field(&self) -> impl FnMut(f64, &Vec3) -> Option<Vec3> + '_ {
        let params = self.params;
        move |_s, y| {
            if !(y[1] > R_FLOOR) || !y.iter().all(|v| v.is_finite()) {
                return None;
            }
            let (sin, cos) = y[2].sin_cos();
            Some([cos, sin, curvature_term(y[0], y[1], y[2], params)])
        }
    }

    fn run(&self, start: ProfileState, delta: f64) -> Trajectory {
        let c = self.controls;
        let mut f = self.field();
        let mut s = start.s;
        let mut y: Vec3 = [start.x, start.r, start.theta];
        let Some(mut k1) = f(s, &y) else {
            return Trajectory::from_parts(
                vec![],
                vec![],
                Termination::StepFailure {
                    reason: FailureReason::RadiusFloor,
                },
                *self.params,
                delta,
            );
        };
        let mut samples = vec![Sample {
            state: start,
            theta_dot: k1[2],
        }];
        let mut events: Vec<EventRecord> = Vec::new();
        let mut ctl = PiController::new();
        // initial step from the local turning rate
        let mut h = (0.01 / (1.0 + k1[2].abs())).min(c.max_step);
        let mut steps: u64 = 0;
        let s_end = start.s + c.s_max;

        let termination = loop {
            if steps >= c.max_steps {
                break Termination::StepFailure {
                    reason: FailureReason::StepBudget,
                };
            }
            let h_try = h.min(c.max_step).min(s_end - s);
            if h_try <= 1e-14 * s.abs().max(1.0) {
                break Termination::ArcBudget;
            }
            let trial = dopri_step(&mut f, s, &y, &k1, h_try);
            let (y_new, k_new, err) = match trial {
                Some(t) => {
                    let e = error_norm(&t.err, &y, &t.y, c.abs_tol, c.rel_tol);
                    (t.y, t.k_end, e)
                }
                None => (y, k1, f64::INFINITY),
            };
            if !(err <= 1.0) {
                h = h_try * ctl.reject(err);
                if h < 1e-13 * s.abs().max(1.0) {
                    let reason = if trial_hits_floor(&y, h_try) {
                        FailureReason::RadiusFloor
                    } else {
                        FailureReason::StepUnderflow
                    };
                    break Termination::StepFailure { reason };
                }
                continue;
            }
            steps += 1;
            let s_new = if h_try == s_end - s { s_end } else { s + h_try };

            // event crossings inside (s, s_new]
            let old = Sample {
                state: to_state(s, &y),
                theta_dot: k1[2],
            };
            let new = Sample {
                state: to_state(s_new, &y_new),
                theta_dot: k_new[2],
            };
            let mut found = Vec::new();
            for kind in EventKind::ALL {
                let g0 = kind.eval(&old.state, old.theta_dot);
                let g1 = kind.eval(&new.state, new.theta_dot);
                if g0 != 0.0 && (g1 == 0.0 || g0.signum() != g1.signum()) {
                    let rec = self.localize(&mut f, kind, s, &y, &k1, s_new - s, g0, g1);
                    found.push(rec);
                }
            }
            found.sort_by(|a, b| a.s.total_cmp(&b.s));
            let stop_at = found.iter().find(|e| c.scan.stops_on(e.kind)).map(|e| (e.s, *e));
            if let Some((s_stop, rec)) = stop_at {
                events.extend(found.into_iter().filter(|e| e.s <= s_stop));
                if rec.s > s {
                    samples.push(Sample {
                        state: rec.state,
                        theta_dot: rec.theta_dot,
                    });
                }
                break Termination::EventStop { event: rec.kind };
            }
            events.extend(found);
            samples.push(new);
            s = s_new;
            y = y_new;
            k1 = k_new;
            h = h_try * ctl.accept(err);

            if y[1] > self.r_max && y[0].abs() > c.x_max {
                break Termination::Escape;
            }
            if s >= s_end {
                break Termination::ArcBudget;
            }
        };

        Trajectory {
            samples,
            events,
            termination,
            params: *self.params,
            delta,
            steps,
        }
    }

    /// Bracketing Illinois iteration on the step-size of a fresh step from the left end.
    #[allow(clippy::too_many_arguments)]
    fn localize<F>(
        &self,
        f: &mut F,
        kind: EventKind,
        s0: f64,
        y0: &Vec3,
        k0: &Vec3,
        h: f64,
        g0: f64,
        g1: f64,
    ) -> EventRecord
    where
        F: FnMut(f64, &Vec3) -> Option<Vec3>,
    {
        let eval = |f: &mut F, sigma: f64| -> Option<(Vec3, Vec3, f64)> {
            let t = dopri_step(f, s0, y0, k0, sigma)?;
            let g = kind.eval(&to_state(s0 + sigma, &t.y), t.k_end[2]);
            Some((t.y, t.k_end, g))
        };
        let (mut a, mut fa) = (0.0, g0);
        let (mut b, mut fb) = (h, g1);
        let mut side = 0i8;
        let mut best: Option<(f64, Vec3, Vec3, f64)> = None;
        if g1 == 0.0 {
            if let Some((yb, kb, _)) = eval(f, h) {
                best = Some((h, yb, kb, 0.0));
            }
        } else {
            for _ in 0..200 {
                if (b - a).abs() <= self.controls.event_tol {
                    break;
                }
                let mut m = b - fb * (b - a) / (fb - fa);
                if !(m > a.min(b) && m < a.max(b)) {
                    m = 0.5 * (a + b);
                }
                let Some((ym, km, gm)) = eval(f, m) else {
                    break;
                };
                if best.as_ref().is_none_or(|bst| gm.abs() <= bst.3.abs()) {
                    best = Some((m, ym, km, gm));
                }
                if gm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if gm.signum() == fb.signum() {
                    b = m;
                    fb = gm;
                    if side == 1 {
                        fa *= 0.5;
                    }
                    side = 1;
                } else {
                    a = m;
                    fa = gm;
                    if side == -1 {
                        fb *= 0.5;
                    }
                    side = -1;
                }
            }
        }
        // take the bracket end on the far side so the event never precedes its crossing
        let sigma = match best {
            Some((m, _, _, _)) if (b - a).abs() > self.controls.event_tol => m,
            _ => b,
        };
        let (y_ev, k_ev) = match eval(f, sigma) {
            Some((yv, kv, _)) => (yv, kv),
            None => best.map(|(_, yv, kv, _)| (yv, kv)).unwrap_or((*y0, *k0)),
        };
        let state = to_state(s0 + sigma, &y_ev);
        EventRecord {
            kind,
            s: state.s,
            state,
            theta_dot: k_ev[2],
            direction: if g0 < 0.0 { 1 } else { -1 },
        }
    }
}

fn trial_hits_floor(y: &Vec3, h: f64) -> bool {
    y[1] - h <= R_FLOOR
}
