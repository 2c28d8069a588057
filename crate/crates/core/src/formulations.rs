//! Graph-form and rescaled versions of the profile equation.
//!
//! These are never used to build shots; they re-express integrated shots in other
//! coordinates so the arc-length integrator can be checked against them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{EventKind, Trajectory};
use crate::params::Params;
use crate::quadrature;
use crate::rk::solve_at;
use std::f64::consts::FRAC_PI_2;

/// A point of the profile written as `r = u(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphSampleU {
    pub x: f64,
    pub u: f64,
    pub u1: f64,
    pub u2: f64,
}

/// A point of the profile written as `x = f(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphSampleF {
    pub r: f64,
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    /// arc length of the underlying sample
    pub s: f64,
}

/// State of the small-launch rescaling `xi = x/delta`, `rho = r/delta - 1`, `alpha = theta`
/// in the parameter `t = s/delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaledState {
    pub t: f64,
    pub xi: f64,
    pub rho: f64,
    pub alpha: f64,
}

/// `u''` for a profile `r = u(x)`.
pub fn u_second(x: f64, u: f64, u1: f64, params: &Params) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::Domain(format!("graph height u = {u} must be positive")));
    }
    let w = 1.0 + u1 * u1;
    Ok(w * (x * u1 - u + params.n_minus_one() / u + params.lambda * w.sqrt()))
}

/// `f''` for a profile `x = f(r)`.
pub fn f_second(r: f64, f: f64, f1: f64, params: &Params) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius r = {r} must be positive")));
    }
    let w = 1.0 + f1 * f1;
    Ok(w * ((r - params.n_minus_one() / r) * f1 - f - params.lambda * w.sqrt()))
}

/// `f'''`, obtained by differentiating the `f''` equation in `r`.
pub fn f_third(r: f64, f1: f64, f2: f64, params: &Params) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius r = {r} must be positive")));
    }
    let c = params.n_minus_one();
    let w = 1.0 + f1 * f1;
    Ok(w * (2.0 * f1 * f2 * f2 / (w * w) + (r - c / r) * f2 + c / (r * r) * f1 - params.lambda * f1 * f2 / w.sqrt()))
}

/// Right-hand side of the rescaled system at launch radius `delta`.
pub fn rescaled_rhs(state: &RescaledState, delta: f64, params: &Params) -> Result<(f64, f64, f64)> {
    let one_rho = 1.0 + state.rho;
    if !(one_rho > 0.0) {
        return Err(Error::Domain(format!("1 + rho = {one_rho} must be positive")));
    }
    Ok(rescaled_field(state.xi, state.rho, state.alpha, delta, params))
}

#[inline]
fn rescaled_field(xi: f64, rho: f64, alpha: f64, delta: f64, params: &Params) -> (f64, f64, f64) {
    let (sin, cos) = alpha.sin_cos();
    let one_rho = 1.0 + rho;
    let dalpha =
        params.n_minus_one() / one_rho * cos + params.lambda * delta + delta * delta * (xi * sin - one_rho * cos);
    (cos, sin, dalpha)
}

/// Solve the rescaled system from `(0, 0, 0)` and report it at the increasing times `t_out`.
pub fn integrate_rescaled(delta: f64, params: &Params, t_out: &[f64], tol: f64) -> Result<Vec<RescaledState>> {
    if !(delta >= 0.0) {
        return Err(Error::Domain(format!("delta = {delta} must be non-negative")));
    }
    if t_out.windows(2).any(|w| w[1] < w[0]) || t_out.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::Domain("output times must be non-negative and increasing".into()));
    }
    let ys = solve_at(
        |_t, y| {
            if !(1.0 + y[1] > 0.0) {
                return None;
            }
            let (a, b, c) = rescaled_field(y[0], y[1], y[2], delta, params);
            Some([a, b, c])
        },
        0.0,
        [0.0, 0.0, 0.0],
        t_out,
        tol,
        tol,
        0.05,
    )
    .ok_or_else(|| Error::StepFailure("rescaled system left 1 + rho > 0".into()))?;
    Ok(t_out
        .iter()
        .zip(ys)
        .map(|(&t, y)| RescaledState {
            t,
            xi: y[0],
            rho: y[1],
            alpha: y[2],
        })
        .collect())
}

/// Integrand of `t(rho)` after the substitution `rho = w^2`, which removes the
/// `1/sqrt(rho)` endpoint singularity.
fn limit_integrand_w(w: f64, n: u32) -> f64 {
    let k = f64::from(n - 1);
    let w2 = w * w;
    if w2 == 0.0 {
        return 2.0 / (2.0 * k).sqrt();
    }
    let log1p = w2.ln_1p();
    let grow = (k * log1p).exp(); // (1 + rho)^(n-1)
    let denom = (2.0 * k * log1p).exp_m1().sqrt(); // sqrt((1 + rho)^(2(n-1)) - 1)
    2.0 * w * grow / denom
}

/// Arc parameter of the `delta = 0` limit profile as a function of `rho`:
/// `t = int_0^rho (1+p)^(n-1) / sqrt((1+p)^(2(n-1)) - 1) dp`.
pub fn limit_profile_t_of_rho(rho: f64, params: &Params) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("rho = {rho} must be positive and finite")));
    }
    let n = params.n;
    Ok(quadrature::integrate(
        |w| limit_integrand_w(w, n),
        0.0,
        rho.sqrt(),
        1e-14,
    ))
}

/// Inverse of [`limit_profile_t_of_rho`].
pub fn limit_profile_rho_of_t(t: f64, params: &Params) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t = {t} must be non-negative and finite")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    // t(rho) >= rho, and t(rho) <= rho + sqrt(2 rho) style growth: bracket then refine
    let mut hi = t.max(1e-300);
    while limit_profile_t_of_rho(hi, params)? < t {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    let k = f64::from(params.n - 1);
    let mut rho = 0.5 * hi;
    for _ in 0..200 {
        let g = limit_profile_t_of_rho(rho, params)? - t;
        if g > 0.0 {
            hi = rho;
        } else {
            lo = rho;
        }
        // Newton with dt/drho = (1+rho)^(n-1) / sqrt((1+rho)^(2(n-1)) - 1)
        let q = (1.0 + rho).powf(k);
        let slope = q / (q * q - 1.0).sqrt();
        let mut next = rho - g / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - rho).abs() <= 1e-15 * rho.max(1e-300) || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        rho = next;
    }
    Ok(rho)
}

/// Largest `|rho_delta(t) - rho_0(t)|` over `points` evenly spaced times in `[0, t_max]`.
pub fn rescaled_deviation(delta: f64, params: &Params, t_max: f64, points: usize) -> Result<f64> {
    let ts: Vec<f64> = (1..=points).map(|i| t_max * i as f64 / points as f64).collect();
    let shot = integrate_rescaled(delta, params, &ts, 1e-13)?;
    let limit = integrate_rescaled(0.0, params, &ts, 1e-13)?;
    Ok(shot
        .iter()
        .zip(&limit)
        .map(|(a, b)| (a.rho - b.rho).abs())
        .fold(0.0, f64::max))
}

/// Re-integrate the shot of `traj` with samples every `spacing` in arc length over its
/// stored range, landing exactly on each sample.
pub fn resample_uniform(traj: &Trajectory, spacing: f64, tol: f64) -> Result<Trajectory> {
    if !(spacing > 0.0) || !(tol > 0.0) {
        return Err(Error::Domain("spacing and tolerance must be positive".into()));
    }
    let (_, s_end) = traj.s_range();
    let count = (s_end / spacing).floor() as usize;
    let ts: Vec<f64> = (0..=count).map(|k| k as f64 * spacing).collect();
    let params = traj.params;
    let field = |y: &[f64; 3]| -> Option<[f64; 3]> {
        if !(y[1] > 0.0) {
            return None;
        }
        let (sin, cos) = y[2].sin_cos();
        Some([cos, sin, crate::profile::curvature_term(y[0], y[1], y[2], &params)])
    };
    let start = traj.samples[0].state;
    let ys = solve_at(
        |_s, y| field(y),
        0.0,
        [start.x, start.r, start.theta],
        &ts,
        tol,
        tol,
        spacing.min(0.05),
    )
    .ok_or_else(|| Error::StepFailure("re-integration left r > 0".into()))?;
    let samples = ts
        .iter()
        .zip(&ys)
        .map(|(&s, y)| crate::integrate::Sample {
            state: crate::profile::ProfileState::new(s, y[0], y[1], y[2]),
            theta_dot: crate::profile::curvature_term(y[0], y[1], y[2], &params),
        })
        .collect();
    Ok(Trajectory::from_parts(
        samples,
        traj.events.clone(),
        traj.termination,
        params,
        traj.delta,
    ))
}

/// Which graph a cross-validation arc was read as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphForm {
    /// `r = u(x)`
    OverX,
    /// `x = f(r)`
    OverR,
}

/// Defect of one graph equation along one arc of samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcDefect {
    pub form: GraphForm,
    pub s_start: f64,
    pub s_end: f64,
    pub points: usize,
    pub max_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub arcs: Vec<ArcDefect>,
    pub max_residual: f64,
    pub tol: f64,
    pub pass: bool,
}

/// One serialized validation record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub check: String,
    pub arc: [f64; 2],
    pub max_defect: f64,
    pub pass: bool,
}

impl CrossValidation {
    pub fn records(&self) -> Vec<ValidationRecord> {
        self.arcs
            .iter()
            .map(|a| ValidationRecord {
                check: match a.form {
                    GraphForm::OverX => "graph-over-x".into(),
                    GraphForm::OverR => "graph-over-r".into(),
                },
                arc: [a.s_start, a.s_end],
                max_defect: a.max_defect,
                pass: a.max_defect < self.tol,
            })
            .collect()
    }
}

/// Tangent-angle windows for the cross-validation arcs, inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphWindow {
    /// arcs read as `u(x)`
    pub over_x: (f64, f64),
    /// arcs read as `f(r)`
    pub over_r: (f64, f64),
}

impl Default for GraphWindow {
    fn default() -> Self {
        Self {
            over_x: (0.0, 1.4),
            over_r: (0.1, FRAC_PI_2),
        }
    }
}

impl GraphWindow {
    /// The same theta range for both graphs.
    pub fn both(lo: f64, hi: f64) -> Self {
        Self {
            over_x: (lo, hi),
            over_r: (lo, hi),
        }
    }
}

/// Three-point derivative weights on a non-uniform stencil `(s0, s1, s2)` at `s1`.
#[inline]
#[allow(clippy::type_complexity)]
fn stencil(h1: f64, h2: f64) -> ([f64; 3], [f64; 3]) {
    let d1 = [-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))];
    let d2 = [2.0 / (h1 * (h1 + h2)), -2.0 / (h1 * h2), 2.0 / (h2 * (h1 + h2))];
    (d1, d2)
}

/// Re-read the shot as `r = u(x)` and `x = f(r)` on every arc where the tangent angle lies
/// in the graph's window and report the largest defect of the graph equations, with all
/// derivatives taken by finite differences of the stored samples.
pub fn cross_validate(traj: &Trajectory, tol: f64) -> Result<CrossValidation> {
    cross_validate_in(traj, tol, GraphWindow::default())
}

pub fn cross_validate_in(traj: &Trajectory, tol: f64, window: GraphWindow) -> Result<CrossValidation> {
    let pts = &traj.samples;
    if pts.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "{} samples; finite differences need at least 5",
            pts.len()
        )));
    }
    let params = &traj.params;
    let mut arcs = Vec::new();
    for form in [GraphForm::OverX, GraphForm::OverR] {
        let (lo, hi) = match form {
            GraphForm::OverX => window.over_x,
            GraphForm::OverR => window.over_r,
        };
        let inside = |i: usize| (lo..=hi).contains(&pts[i].state.theta);
        let mut i = 0;
        while i < pts.len() {
            if !inside(i) {
                i += 1;
                continue;
            }
            let start = i;
            while i < pts.len() && inside(i) {
                i += 1;
            }
            let end = i; // exclusive
            if end - start < 3 {
                continue;
            }
            let mut worst: f64 = 0.0;
            for k in start + 1..end - 1 {
                let (a, b, c) = (&pts[k - 1].state, &pts[k].state, &pts[k + 1].state);
                let (d1, d2) = stencil(b.s - a.s, c.s - b.s);
                // the weights sum to zero; differencing against the centre keeps constants exact
                let (xa, xc, ra, rc) = (a.x - b.x, c.x - b.x, a.r - b.r, c.r - b.r);
                let xd = d1[0] * xa + d1[2] * xc;
                let rd = d1[0] * ra + d1[2] * rc;
                let xdd = d2[0] * xa + d2[2] * xc;
                let rdd = d2[0] * ra + d2[2] * rc;
                // the graph equations hold for the orientation in which the graph variable
                // increases; the other orientation sees the opposite normal and lambda
                let defect = match form {
                    GraphForm::OverX => {
                        let u1 = rd / xd;
                        let u2 = (xd * rdd - rd * xdd) / (xd * xd * xd);
                        let p = if xd > 0.0 { *params } else { params.flipped() };
                        (u2 - u_second(b.x, b.r, u1, &p)?) / (1.0 + u1 * u1)
                    }
                    GraphForm::OverR => {
                        let f1 = xd / rd;
                        let f2 = (rd * xdd - xd * rdd) / (rd * rd * rd);
                        let p = if rd > 0.0 { *params } else { params.flipped() };
                        (f2 - f_second(b.r, b.x, f1, &p)?) / (1.0 + f1 * f1)
                    }
                };
                worst = worst.max(defect.abs());
            }
            arcs.push(ArcDefect {
                form,
                s_start: pts[start].state.s,
                s_end: pts[end - 1].state.s,
                points: end - start,
                max_defect: worst,
            });
        }
    }
    if arcs.is_empty() {
        return Err(Error::InsufficientData(
            "no arc with at least three samples inside the graph window".into(),
        ));
    }
    let max_residual = arcs.iter().map(|a| a.max_defect).fold(0.0, f64::max);
    Ok(CrossValidation {
        arcs,
        max_residual,
        tol,
        pass: max_residual < tol,
    })
}

/// The part of a shot before s1 read as `x = f(r)`, with derivatives taken from the state
/// (`f' = cot theta`, `f'' = -theta' / sin^3 theta`) and `f'''` from its equation.
pub fn f_graph(traj: &Trajectory, min_sin: f64) -> Result<Vec<GraphSampleF>> {
    let s1 = traj
        .events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::ThetaZero | EventKind::ThetaPi) && e.s > 0.0)
        .map(|e| e.s)
        .fold(f64::INFINITY, f64::min);
    traj.samples
        .iter()
        .filter(|p| p.state.s > 0.0 && p.state.s < s1)
        .filter(|p| p.state.theta.sin() >= min_sin)
        .map(|p| {
            let (sin, cos) = p.state.theta.sin_cos();
            let f1 = cos / sin;
            let f2 = -p.theta_dot / (sin * sin * sin);
            Ok(GraphSampleF {
                r: p.state.r,
                f: p.state.x,
                f1,
                f2,
                f3: f_third(p.state.r, f1, f2, &traj.params)?,
                s: p.state.s,
            })
        })
        .collect()
}

/// `|f''|` below which a sample counts as an inflection for the `f' f''' > 0` check.
pub const INFLECTION_F2: f64 = 1e-8;

/// Sampled versions of the sign lemmas for graphs `x = f(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    /// samples inspected
    pub samples: usize,
    /// `f' f''` negative after it was already positive (in increasing `r`)
    pub propagation_violations: usize,
    /// sign changes of `f''` along the arc
    pub inflections: usize,
    /// inflection points checked for `f' f''' > 0`
    pub inflections_checked: usize,
    pub inflection_sign_violations: usize,
}

impl LemmaReport {
    pub fn holds(&self) -> bool {
        self.propagation_violations == 0 && self.inflections <= 1 && self.inflection_sign_violations == 0
    }
}

/// Check along the f-graph of a shot:
/// * once `f' f'' > 0` it stays positive for larger `r` (equivalently, negative values only
///   occur below any positive one);
/// * `f''` changes sign at most once;
/// * at each inflection `f' f''' > 0`.
///
/// Samples within `guard` (in arc length) of a zero of `f'` or `f''` are skipped.
pub fn check_graph_lemmas(traj: &Trajectory, guard: f64, min_sin: f64) -> Result<LemmaReport> {
    let graph = f_graph(traj, min_sin)?;
    let zeros: Vec<f64> = traj
        .events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::ThetaDotZero | EventKind::ThetaHalfPi))
        .map(|e| e.s)
        .collect();
    let near_zero = |s: f64| zeros.iter().any(|z| (s - z).abs() <= guard);

    let mut seen_positive = false;
    let mut propagation_violations = 0;
    let mut inflections = 0;
    let mut last_f2_sign = 0.0;
    for g in graph.iter().filter(|g| !near_zero(g.s)) {
        let p = g.f1 * g.f2;
        if p > 0.0 {
            seen_positive = true;
        } else if p < 0.0 && seen_positive {
            propagation_violations += 1;
        }
        if g.f2 != 0.0 {
            let sign = g.f2.signum();
            if last_f2_sign != 0.0 && sign != last_f2_sign {
                inflections += 1;
            }
            last_f2_sign = sign;
        }
    }

    // f'' = 0 exactly at the theta' = 0 crossings
    let s1 = graph.last().map_or(0.0, |g| g.s);
    let mut inflections_checked = 0;
    let mut inflection_sign_violations = 0;
    for e in traj
        .events
        .iter()
        .filter(|e| e.kind == EventKind::ThetaDotZero && e.s <= s1)
    {
        let (sin, cos) = e.state.theta.sin_cos();
        if sin < min_sin {
            continue;
        }
        let f1 = cos / sin;
        let f2 = -e.theta_dot / (sin * sin * sin);
        let f3 = f_third(e.state.r, f1, f2, &traj.params)?;
        inflections_checked += 1;
        if !(f1 * f3 > 0.0) {
            inflection_sign_violations += 1;
        }
    }
    // samples that sit on an inflection up to `INFLECTION_F2`
    for g in graph
        .iter()
        .filter(|g| g.f2.abs() < INFLECTION_F2 && g.f1.abs() > 10.0 * INFLECTION_F2 && !near_zero(g.s))
    {
        inflections_checked += 1;
        if !(g.f1 * g.f3 > 0.0) {
            inflection_sign_violations += 1;
        }
    }
    Ok(LemmaReport {
        samples: graph.len(),
        propagation_violations,
        inflections,
        inflections_checked,
        inflection_sign_violations,
    })
}
