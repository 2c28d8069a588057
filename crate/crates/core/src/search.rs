//! Bracketed bisection for the critical launch radii, sweeps over delta and scans over lambda.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{classify_delta_with, Label, TypeLabel};
use crate::error::{Error, Result};
use crate::integrate::{integrate, EventKind, IntegratorControls, Scan, Termination, Trajectory};
use crate::params::Params;

/// Closure error accepted for a converged torus shot.
pub const CLOSURE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Cylinder,
    TorusLower,
    TorusUpper,
}

impl Target {
    pub fn as_str(&self) -> &'static str {
        match self {
            Target::Cylinder => "cylinder",
            Target::TorusLower => "torus-lower",
            Target::TorusUpper => "torus-upper",
        }
    }

    fn holds(&self, label: Label) -> bool {
        match self {
            Target::Cylinder => label == Label::Type2,
            Target::TorusLower | Target::TorusUpper => label == Label::Type1_1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// number of log-spaced seeds in `(1e-3 R, (1 - 1e-3) R)`
    pub seeds: usize,
    /// how many times an undetermined label is retried with ten times tighter tolerances
    pub max_tightenings: u32,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            seeds: 64,
            max_tightenings: 3,
        }
    }
}

/// How well the shot at the cylinder parameter matches an escaping quarter turn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeSignature {
    pub termination: Termination,
    pub escaped: bool,
    /// `0 < theta < pi/2` at every stored sample after launch
    pub theta_in_quarter: bool,
    /// `theta' > 0` at every stored sample after launch
    pub theta_dot_positive: bool,
    /// largest radius reached while both conditions still held
    pub tracked_r: f64,
    pub r_end: f64,
    pub x_end: f64,
    pub s_end: f64,
}

impl EscapeSignature {
    pub fn of(traj: &Trajectory) -> Self {
        let mut theta_in_quarter = true;
        let mut theta_dot_positive = true;
        let mut tracked_r = traj.delta;
        for p in traj.samples.iter().skip(1) {
            theta_in_quarter &= p.state.theta > 0.0 && p.state.theta < FRAC_PI_2;
            theta_dot_positive &= p.theta_dot > 0.0;
            if !(theta_in_quarter && theta_dot_positive) {
                break;
            }
            tracked_r = tracked_r.max(p.state.r);
        }
        let last = traj.last().state;
        Self {
            termination: traj.termination,
            escaped: traj.termination == Termination::Escape,
            theta_in_quarter,
            theta_dot_positive,
            tracked_r,
            r_end: last.r,
            x_end: last.x,
            s_end: last.s,
        }
    }

    pub fn holds(&self) -> bool {
        self.escaped && self.theta_in_quarter && self.theta_dot_positive
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResult {
    pub target: Target,
    pub params: Params,
    pub delta_star: f64,
    pub bracket: (f64, f64),
    pub lo_label: TypeLabel,
    pub hi_label: TypeLabel,
    pub iterations: usize,
    /// every bracket visited, starting from the seed bracket
    pub history: Vec<(f64, f64)>,
    /// `max(|x(s1)|, |theta(s1) - pi| r(s1))` for torus targets
    pub closure_error: Option<f64>,
    pub signature: Option<EscapeSignature>,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

impl SearchResult {
    pub fn width(&self) -> f64 {
        self.bracket.1 - self.bracket.0
    }
}

/// `count` log-spaced launch radii in `(1e-3 R, (1 - 1e-3) R)`.
pub fn seed_deltas(params: &Params, count: usize) -> Vec<f64> {
    let r = params.cylinder_radius();
    let (a, b) = (1e-3 * r, (1.0 - 1e-3) * r);
    match count {
        0 => Vec::new(),
        1 => vec![(a * b).sqrt()],
        _ => (0..count)
            .map(|i| a * (b / a).powf(i as f64 / (count - 1) as f64))
            .collect(),
    }
}

/// Classify with up to `max_tightenings` retries at ten times tighter tolerances while the
/// label stays undetermined.
pub fn robust_label(
    delta: f64,
    params: &Params,
    controls: &IntegratorControls,
    max_tightenings: u32,
) -> Result<TypeLabel> {
    let mut c = *controls;
    let mut label = classify_delta_with(delta, params, &c, 0.0)?;
    for _ in 0..max_tightenings {
        if label.label != Label::Undetermined {
            break;
        }
        c = c.tightened(10.0);
        label = classify_delta_with(delta, params, &c, 0.0)?;
    }
    Ok(label)
}

fn seed_labels(params: &Params, controls: &IntegratorControls, opts: &SearchOptions) -> Result<Vec<(f64, TypeLabel)>> {
    seed_deltas(params, opts.seeds)
        .into_par_iter()
        .map(|d| robust_label(d, params, controls, opts.max_tightenings).map(|l| (d, l)))
        .collect()
}

fn describe(seeds: &[(f64, TypeLabel)]) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut prev = None;
    for (d, l) in seeds {
        if prev != Some(l.label) {
            parts.push(format!("{}@{d:.6}", l.label));
            prev = Some(l.label);
        }
    }
    if parts.is_empty() {
        "no seeds".into()
    } else {
        parts.join(" ")
    }
}

/// Bisect between `lo` and `hi`, where `target.holds` differs at the two ends.
fn bisect(
    target: Target,
    params: &Params,
    controls: &IntegratorControls,
    opts: &SearchOptions,
    delta_tol: f64,
    lo: (f64, TypeLabel),
    hi: (f64, TypeLabel),
) -> Result<SearchResult> {
    let holds_lo = target.holds(lo.1.label);
    debug_assert_ne!(holds_lo, target.holds(hi.1.label));
    let (mut lo, mut hi) = (lo, hi);
    let mut history = vec![(lo.0, hi.0)];
    let mut iterations = 0;
    while hi.0 - lo.0 > delta_tol {
        let mid = 0.5 * (lo.0 + hi.0);
        if !(mid > lo.0 && mid < hi.0) {
            return Err(Error::PrecisionLimit {
                lo: lo.0,
                hi: hi.0,
                reason: "bracket reached floating-point resolution".into(),
            });
        }
        let mut label = robust_label(mid, params, controls, opts.max_tightenings)?;
        if target != Target::Cylinder {
            label = resolve_by_closure_sign(label);
        }
        if label.label == Label::Undetermined {
            return Err(Error::PrecisionLimit {
                lo: lo.0,
                hi: hi.0,
                reason: format!("label at delta = {mid:e} stayed undetermined after tightening"),
            });
        }
        if target.holds(label.label) == holds_lo {
            lo = (mid, label);
        } else {
            hi = (mid, label);
        }
        history.push((lo.0, hi.0));
        iterations += 1;
    }
    let delta_star = 0.5 * (lo.0 + hi.0);
    let traj = integrate(delta_star, params, &controls.with_scan(Scan::S1))?;
    let (closure_error, signature) = match target {
        Target::Cylinder => (None, Some(EscapeSignature::of(&traj))),
        _ => (Some(closure_error(&traj)), None),
    };
    Ok(SearchResult {
        target,
        params: *params,
        delta_star,
        bracket: (lo.0, hi.0),
        lo_label: lo.1,
        hi_label: hi.1,
        iterations,
        history,
        closure_error,
        signature,
        trajectory: Some(traj),
    })
}

/// Near a closing parameter the sub-type gap `|x(s1)|` falls below the event tolerance and
/// the label turns undetermined although the shot is an ordinary type-1 shot; the side of
/// the root is then read from the sign of `x(s1)`.
fn resolve_by_closure_sign(label: TypeLabel) -> TypeLabel {
    let s = &label.summary;
    if label.label != Label::Undetermined || s.termination.is_failure() || s.s1_at_pi() != Some(true) {
        return label;
    }
    let (Some(s1), Some(x1)) = (s.s1, s.x_at_s1) else {
        return label;
    };
    let ordered = s.s3.is_some_and(|s3| s3 < s1) && s.s2.is_none_or(|s2| s2 > s1);
    if !ordered || x1 == 0.0 {
        return label;
    }
    TypeLabel {
        label: if x1 < 0.0 { Label::Type1_1 } else { Label::Type1_3 },
        margin: x1.abs(),
        ..label
    }
}

/// `max(|x(s1)|, |theta(s1) - pi| r(s1))`, or `+inf` when the shot never reached theta = pi.
pub fn closure_error(traj: &Trajectory) -> f64 {
    traj.events
        .iter()
        .find(|e| e.kind == EventKind::ThetaPi && e.s > 0.0)
        .filter(|e| {
            !traj
                .events
                .iter()
                .any(|o| o.kind == EventKind::ThetaZero && o.s > 0.0 && o.s < e.s)
        })
        .map_or(f64::INFINITY, |e| {
            e.state.x.abs().max((e.state.theta - PI).abs() * e.state.r)
        })
}

fn check_tol(delta_tol: f64) -> Result<()> {
    if !(delta_tol > 0.0 && delta_tol.is_finite()) {
        return Err(Error::Config(format!("delta_tol = {delta_tol} must be positive")));
    }
    Ok(())
}

/// Locate the supremum of the initial run of type-2 launch radii.
pub fn find_cylinder_delta(params: &Params, delta_tol: f64, controls: &IntegratorControls) -> Result<SearchResult> {
    find_cylinder_delta_with(params, delta_tol, controls, &SearchOptions::default())
}

pub fn find_cylinder_delta_with(
    params: &Params,
    delta_tol: f64,
    controls: &IntegratorControls,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    if !(params.lambda < 0.0) {
        return Err(Error::Domain(format!(
            "the cylinder search shoots with lambda < 0, got {}",
            params.lambda
        )));
    }
    check_tol(delta_tol)?;
    controls.validate()?;
    let seeds = seed_labels(params, controls, opts)?;
    let target = Target::Cylinder;
    let start = seeds
        .iter()
        .position(|(_, l)| target.holds(l.label))
        .ok_or_else(|| Error::NoBracket(format!("no type-2 seed: {}", describe(&seeds))))?;
    let end = seeds[start..]
        .iter()
        .position(|(_, l)| !target.holds(l.label))
        .map(|k| start + k)
        .ok_or_else(|| {
            Error::NoBracket(format!(
                "every seed from the first type-2 one is type 2: {}",
                describe(&seeds)
            ))
        })?;
    let hi = seeds[end];
    if hi.1.label == Label::Undetermined {
        return Err(Error::PrecisionLimit {
            lo: seeds[end - 1].0,
            hi: hi.0,
            reason: "seed above the type-2 run stayed undetermined".into(),
        });
    }
    bisect(target, params, controls, opts, delta_tol, seeds[end - 1], hi)
}

/// Every change of the type-1.1 predicate between consecutive determined seeds, refined by
/// bisection. Additional transitions beyond the first pair are reported, not suppressed.
pub fn find_closure_transitions(
    params: &Params,
    delta_tol: f64,
    controls: &IntegratorControls,
    opts: &SearchOptions,
) -> Result<Vec<SearchResult>> {
    check_tol(delta_tol)?;
    controls.validate()?;
    let seeds = seed_labels(params, controls, opts)?;
    let determined: Vec<_> = seeds
        .iter()
        .copied()
        .filter(|(_, l)| l.label != Label::Undetermined)
        .collect();
    determined
        .windows(2)
        .filter_map(|w| {
            let (a, b) = (
                Target::TorusLower.holds(w[0].1.label),
                Target::TorusLower.holds(w[1].1.label),
            );
            match (a, b) {
                (false, true) => Some((Target::TorusLower, w[0], w[1])),
                (true, false) => Some((Target::TorusUpper, w[0], w[1])),
                _ => None,
            }
        })
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(target, lo, hi)| bisect(target, params, controls, opts, delta_tol, lo, hi))
        .collect()
}

/// Locate the two edges of the first run of type-1.1 launch radii; both shots must close.
///
/// At `lambda = 0` the type-1.1 run starts at the smallest seed, so only the upper edge
/// exists; it is returned for both targets.
pub fn find_torus_deltas(
    params: &Params,
    delta_tol: f64,
    controls: &IntegratorControls,
) -> Result<(SearchResult, SearchResult)> {
    find_torus_deltas_with(params, delta_tol, controls, &SearchOptions::default())
}

pub fn find_torus_deltas_with(
    params: &Params,
    delta_tol: f64,
    controls: &IntegratorControls,
    opts: &SearchOptions,
) -> Result<(SearchResult, SearchResult)> {
    if params.lambda > 0.0 {
        return Err(Error::Domain(format!(
            "the torus search shoots with lambda <= 0, got {}",
            params.lambda
        )));
    }
    check_tol(delta_tol)?;
    controls.validate()?;
    let seeds = seed_labels(params, controls, opts)?;
    let is11 = |l: &TypeLabel| l.label == Label::Type1_1;
    let first = seeds
        .iter()
        .position(|(_, l)| is11(l))
        .ok_or_else(|| Error::NoBracket(format!("no type-1.1 seed: {}", describe(&seeds))))?;
    let last = seeds[first..]
        .iter()
        .position(|(_, l)| !is11(l))
        .map(|k| first + k)
        .ok_or_else(|| Error::NoBracket(format!("type-1.1 run reaches the last seed: {}", describe(&seeds))))?;
    let determined = |i: usize| -> Result<()> {
        if seeds[i].1.label == Label::Undetermined {
            return Err(Error::PrecisionLimit {
                lo: seeds[i.saturating_sub(1)].0,
                hi: seeds[(i + 1).min(seeds.len() - 1)].0,
                reason: format!("seed at delta = {:e} stayed undetermined", seeds[i].0),
            });
        }
        Ok(())
    };
    determined(last)?;
    let upper = bisect(
        Target::TorusUpper,
        params,
        controls,
        opts,
        delta_tol,
        seeds[last - 1],
        seeds[last],
    )?;
    let lower = if first == 0 {
        if params.lambda != 0.0 {
            return Err(Error::NoBracket(format!(
                "type-1.1 run starts at the smallest seed: {}",
                describe(&seeds)
            )));
        }
        SearchResult {
            target: Target::TorusLower,
            ..upper.clone()
        }
    } else {
        determined(first - 1)?;
        let lower = bisect(
            Target::TorusLower,
            params,
            controls,
            opts,
            delta_tol,
            seeds[first - 1],
            seeds[first],
        )?;
        if lower.lo_label.label == Label::Type2 {
            // the closing parameter sits in a type-1.3 band between the two labels
            return Err(Error::PrecisionLimit {
                lo: lower.bracket.0,
                hi: lower.bracket.1,
                reason: "type 1.1 meets type 2 at this resolution; the closing band is narrower than the bracket"
                    .into(),
            });
        }
        lower
    };
    for r in [&lower, &upper] {
        let err = r.closure_error.unwrap_or(f64::INFINITY);
        if !(err < CLOSURE_TOL) {
            let at_s1 = r.trajectory.as_ref().and_then(|t| {
                t.events
                    .iter()
                    .find(|e| matches!(e.kind, EventKind::ThetaZero | EventKind::ThetaPi) && e.s > 0.0)
            });
            return Err(Error::NotClosable {
                x_at_s1: at_s1.map_or(f64::NAN, |e| e.state.x),
                theta_gap: at_s1.map_or(f64::INFINITY, |e| (e.state.theta - PI).abs()),
            });
        }
    }
    if params.lambda != 0.0 && upper.delta_star - lower.delta_star < 10.0 * delta_tol {
        return Err(Error::DistinctRoots {
            lower: lower.delta_star,
            upper: upper.delta_star,
        });
    }
    Ok((lower, upper))
}

/// One classified launch radius of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub label: Option<TypeLabel>,
    pub error: Option<String>,
}

/// Classify every delta; errors are kept per row. Rows come back sorted by delta.
pub fn sweep(params: &Params, deltas: &[f64], controls: &IntegratorControls) -> Vec<SweepRow> {
    let mut rows: Vec<SweepRow> = deltas
        .par_iter()
        .map(
            |&delta| match classify_delta_with(delta, params, controls, crate::classify::DEFAULT_CLOSURE_BAND) {
                Ok(l) => SweepRow {
                    delta,
                    label: Some(l),
                    error: None,
                },
                Err(e) => SweepRow {
                    delta,
                    label: None,
                    error: Some(e.to_string()),
                },
            },
        )
        .collect();
    rows.sort_by(|a, b| a.delta.total_cmp(&b.delta));
    rows
}

/// Consecutive rows whose labels differ, as `(delta_below, delta_above, below, above)`.
pub fn label_transitions(rows: &[SweepRow]) -> Vec<(f64, f64, Label, Label)> {
    let labeled: Vec<(f64, Label)> = rows
        .iter()
        .filter_map(|r| r.label.map(|l| (r.delta, l.label)))
        .collect();
    labeled
        .windows(2)
        .filter(|w| w[0].1 != w[1].1)
        .map(|w| (w[0].0, w[1].0, w[0].1, w[1].1))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub lambda: f64,
    pub cylinder_found: bool,
    pub tori_found: bool,
    pub cylinder_delta: Option<f64>,
    pub torus_deltas: Option<(f64, f64)>,
    pub cylinder_error: Option<String>,
    pub torus_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdScan {
    pub n: u32,
    pub rows: Vec<ThresholdRow>,
    /// numerical estimate: largest `|lambda|` on the grid below which every cell found the cylinder
    pub c1_estimate: Option<f64>,
    /// numerical estimate: same for the pair of tori
    pub c2_estimate: Option<f64>,
}

/// Coarse bracket width used by the lambda scan.
pub const SCAN_TOL: f64 = 1e-8;

/// Run both searches at coarse tolerance for every lambda on the grid.
pub fn lambda_threshold_scan(n: u32, lambda_grid: &[f64], controls: &IntegratorControls) -> Result<ThresholdScan> {
    Params::new(n, 0.0)?;
    let rows: Vec<ThresholdRow> = lambda_grid
        .par_iter()
        .map(|&lambda| {
            let params = match Params::new(n, lambda) {
                Ok(p) => p,
                Err(e) => {
                    return ThresholdRow {
                        lambda,
                        cylinder_found: false,
                        tori_found: false,
                        cylinder_delta: None,
                        torus_deltas: None,
                        cylinder_error: Some(e.to_string()),
                        torus_error: Some(e.to_string()),
                    }
                }
            };
            let cyl = find_cylinder_delta(&params, SCAN_TOL, controls);
            let tor = find_torus_deltas(&params, SCAN_TOL, controls);
            ThresholdRow {
                lambda,
                cylinder_found: cyl.is_ok(),
                tori_found: tor.is_ok(),
                cylinder_delta: cyl.as_ref().ok().map(|r| r.delta_star),
                torus_deltas: tor.as_ref().ok().map(|(a, b)| (a.delta_star, b.delta_star)),
                cylinder_error: cyl.err().map(|e| e.to_string()),
                torus_error: tor.err().map(|e| e.to_string()),
            }
        })
        .collect();
    let estimate = |found: fn(&ThresholdRow) -> bool| {
        let mut by_size: Vec<&ThresholdRow> = rows.iter().filter(|r| r.lambda < 0.0).collect();
        by_size.sort_by(|a, b| b.lambda.total_cmp(&a.lambda));
        by_size.iter().take_while(|r| found(r)).last().map(|r| r.lambda.abs())
    };
    Ok(ThresholdScan {
        n,
        c1_estimate: estimate(|r| r.cylinder_found),
        c2_estimate: estimate(|r| r.tori_found),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_log_spaced_inside_the_interval() {
        let p = Params::new(2, -0.24).unwrap();
        let s = seed_deltas(&p, 64);
        let r = p.cylinder_radius();
        assert_eq!(s.len(), 64);
        assert!((s[0] - 1e-3 * r).abs() < 1e-15);
        assert!((s[63] - (1.0 - 1e-3) * r).abs() < 1e-13);
        let ratio = s[1] / s[0];
        assert!(s.windows(2).all(|w| ((w[1] / w[0]) - ratio).abs() < 1e-12));
        assert!(seed_deltas(&p, 0).is_empty());
    }

    #[test]
    fn cylinder_search_needs_negative_lambda() {
        let c = IntegratorControls::default();
        for l in [0.0, 0.3] {
            let p = Params::new(2, l).unwrap();
            assert!(matches!(find_cylinder_delta(&p, 1e-6, &c), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn bad_tolerance_is_a_config_error() {
        let p = Params::new(2, -0.24).unwrap();
        let c = IntegratorControls::default();
        assert!(matches!(find_cylinder_delta(&p, 0.0, &c), Err(Error::Config(_))));
        assert!(matches!(find_torus_deltas(&p, -1.0, &c), Err(Error::Config(_))));
    }

    #[test]
    fn empty_inputs() {
        let p = Params::new(2, 0.0).unwrap();
        assert!(sweep(&p, &[], &IntegratorControls::default()).is_empty());
        let scan = lambda_threshold_scan(2, &[], &IntegratorControls::default()).unwrap();
        assert!(scan.rows.is_empty());
        assert_eq!(scan.c1_estimate, None);
    }

    #[test]
    fn sweep_keeps_errors_per_row_and_sorts() {
        let p = Params::new(2, 0.0).unwrap();
        let rows = sweep(&p, &[0.5, -1.0, 0.2, 1.5], &IntegratorControls::default());
        let ds: Vec<f64> = rows.iter().map(|r| r.delta).collect();
        assert_eq!(ds, vec![-1.0, 0.2, 0.5, 1.5]);
        assert!(rows[0].error.is_some() && rows[3].error.is_some());
        assert!(rows[1].label.unwrap().label.is_type1());
        assert!(rows[2].label.unwrap().label.is_type1());
    }
}
