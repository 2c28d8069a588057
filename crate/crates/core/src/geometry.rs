//! Closed and complete profile curves, their curvatures, and surfaces of revolution.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{EventKind, Sample, Trajectory};
use crate::params::Params;
use crate::profile::ProfileState;

/// Default bound on the closure error of a reflected curve.
pub const CLOSURE_TOL: f64 = 1e-6;

/// Curvatures smaller than this in magnitude count as zero for sign checks.
pub const ZERO_CURVATURE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub points: Vec<Sample>,
    pub closed: bool,
    /// distance by which the closing construction misses; zero for open curves
    pub closure_error: f64,
    pub source_delta: f64,
    pub params: Params,
}

fn sample(s: f64, x: f64, r: f64, theta: f64, theta_dot: f64) -> Sample {
    Sample {
        state: ProfileState::new(s, x, r, theta),
        theta_dot,
    }
}

/// Samples of the shot up to its first theta in {0, pi} crossing, ending exactly there.
fn samples_to_s1(traj: &Trajectory) -> Option<(Vec<Sample>, Sample)> {
    let event = traj
        .events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::ThetaZero | EventKind::ThetaPi) && e.s > 0.0)
        .min_by(|a, b| a.s.total_cmp(&b.s))?;
    let end = Sample {
        state: event.state,
        theta_dot: event.theta_dot,
    };
    let mut pts: Vec<Sample> = traj.samples.iter().copied().filter(|p| p.state.s < event.s).collect();
    pts.push(end);
    Some((pts, end))
}

/// Close a type-1.2 shot by reflecting it across the r-axis.
pub fn reflect_close(traj: &Trajectory) -> Result<ProfileCurve> {
    reflect_close_with(traj, CLOSURE_TOL, 1e-11)
}

/// As [`reflect_close`] with explicit closure tolerance and simplicity exclusion band.
pub fn reflect_close_with(traj: &Trajectory, tol: f64, band: f64) -> Result<ProfileCurve> {
    let Some((half, end)) = samples_to_s1(traj) else {
        let last = traj.last().state;
        return Err(Error::NotClosable {
            x_at_s1: last.x,
            theta_gap: f64::INFINITY,
        });
    };
    let (s1, x1, b) = (end.state.s, end.state.x, end.state.r);
    let theta_gap = (end.state.theta - PI).abs();
    let closure_error = x1.abs().max(theta_gap * b);
    if !(closure_error <= tol) {
        return Err(Error::NotClosable { x_at_s1: x1, theta_gap });
    }
    let mut points = half.clone();
    points.extend(half.iter().rev().skip(1).map(|p| {
        sample(
            2.0 * s1 - p.state.s,
            -p.state.x,
            p.state.r,
            TAU - p.state.theta,
            p.theta_dot,
        )
    }));
    let curve = ProfileCurve {
        points,
        closed: true,
        closure_error,
        source_delta: traj.delta,
        params: traj.params,
    };
    if let Some((i, j)) = first_self_intersection(&curve.points, true, band) {
        return Err(Error::Domain(format!(
            "closed curve self-intersects between segments {i} and {j}"
        )));
    }
    Ok(curve)
}

/// The shot as an open curve, cut at its first theta in {0, pi} crossing if it has one.
pub fn open_curve(traj: &Trajectory) -> ProfileCurve {
    let points = samples_to_s1(traj).map_or_else(|| traj.samples.clone(), |(p, _)| p);
    ProfileCurve {
        points,
        closed: false,
        closure_error: 0.0,
        source_delta: traj.delta,
        params: traj.params,
    }
}

/// Extend an escaping shot to a complete curve with the even symmetry
/// `(s, x, r, theta) -> (-s, -x, r, -theta)`.
pub fn complete_curve(traj: &Trajectory) -> ProfileCurve {
    let mut points: Vec<Sample> = traj
        .samples
        .iter()
        .rev()
        .filter(|p| p.state.s > 0.0)
        .map(|p| sample(-p.state.s, -p.state.x, p.state.r, -p.state.theta, p.theta_dot))
        .collect();
    points.extend(traj.samples.iter().copied());
    ProfileCurve {
        points,
        closed: false,
        closure_error: 0.0,
        source_delta: traj.delta,
        params: traj.params,
    }
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn segments_cross(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    let on = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| {
        c.0 >= a.0.min(b.0) && c.0 <= a.0.max(b.0) && c.1 >= a.1.min(b.1) && c.1 <= a.1.max(b.1)
    };
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on(q1, q2, p1))
        || (d2 == 0.0 && on(q1, q2, p2))
        || (d3 == 0.0 && on(p1, p2, q1))
        || (d4 == 0.0 && on(p1, p2, q2))
}

/// First pair of non-adjacent polyline segments that meet, by a sweep over x.
///
/// For closed curves the last point duplicates the first and the wrap-around segments are
/// adjacent. Contacts within `band` of an endpoint shared by the two segments are ignored.
pub fn first_self_intersection(points: &[Sample], closed: bool, band: f64) -> Option<(usize, usize)> {
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.state.x, p.state.r)).collect();
    let m = xy.len();
    if m < 4 {
        return None;
    }
    let nseg = m - 1;
    let adjacent = |i: usize, j: usize| {
        let (i, j) = (i.min(j), i.max(j));
        j == i + 1 || (closed && i == 0 && j == nseg - 1)
    };
    let near = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).hypot(a.1 - b.1) <= band;
    let mut order: Vec<usize> = (0..nseg).collect();
    let lo = |i: usize| xy[i].0.min(xy[i + 1].0);
    let hi = |i: usize| xy[i].0.max(xy[i + 1].0);
    order.sort_by(|&a, &b| lo(a).total_cmp(&lo(b)));
    let mut active: Vec<usize> = Vec::new();
    for &i in &order {
        active.retain(|&j| hi(j) >= lo(i));
        for &j in &active {
            if adjacent(i, j) {
                continue;
            }
            let (ymin_i, ymax_i) = (xy[i].1.min(xy[i + 1].1), xy[i].1.max(xy[i + 1].1));
            let (ymin_j, ymax_j) = (xy[j].1.min(xy[j + 1].1), xy[j].1.max(xy[j + 1].1));
            if ymax_i < ymin_j || ymax_j < ymin_i {
                continue;
            }
            if segments_cross(xy[i], xy[i + 1], xy[j], xy[j + 1]) {
                // touching at (nearly) the same point at both ends of a short gap is not a crossing
                let shared = [xy[i], xy[i + 1]]
                    .iter()
                    .any(|a| [xy[j], xy[j + 1]].iter().any(|b| near(*a, *b)));
                if !shared {
                    return Some((i.min(j), i.max(j)));
                }
            }
        }
        active.push(i);
    }
    None
}

/// Ranges and enclosed area of a curve, used to tell profile curves apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveStats {
    pub min_r: f64,
    pub max_r: f64,
    pub min_x: f64,
    pub max_x: f64,
    /// polyline length
    pub length: f64,
    /// shoelace area, meaningful for closed curves
    pub area: f64,
}

impl ProfileCurve {
    /// Every k-th point, with k chosen so at most `max_points` remain; both ends are kept.
    pub fn decimated(&self, max_points: usize) -> ProfileCurve {
        let m = self.points.len();
        if max_points < 2 || m <= max_points {
            return self.clone();
        }
        let stride = (m - 1).div_ceil(max_points - 1);
        let mut points: Vec<Sample> = self.points.iter().step_by(stride).copied().collect();
        if !(m - 1).is_multiple_of(stride) {
            points.push(self.points[m - 1]);
        }
        ProfileCurve { points, ..self.clone() }
    }

    pub fn stats(&self) -> CurveStats {
        let xy: Vec<(f64, f64)> = self.points.iter().map(|p| (p.state.x, p.state.r)).collect();
        let fold = |f: fn(&(f64, f64)) -> f64, init: f64, g: fn(f64, f64) -> f64| xy.iter().map(f).fold(init, g);
        let length = xy.windows(2).map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1)).sum();
        let area = 0.5
            * xy.windows(2)
                .map(|w| w[0].0 * w[1].1 - w[1].0 * w[0].1)
                .sum::<f64>()
                .abs();
        CurveStats {
            min_r: fold(|p| p.1, f64::INFINITY, f64::min),
            max_r: fold(|p| p.1, f64::NEG_INFINITY, f64::max),
            min_x: fold(|p| p.0, f64::INFINITY, f64::min),
            max_x: fold(|p| p.0, f64::NEG_INFINITY, f64::max),
            length,
            area,
        }
    }

    pub fn is_simple(&self, band: f64) -> bool {
        first_self_intersection(&self.points, self.closed, band).is_none()
    }
}

/// Sphere of radius `(-lambda + sqrt(lambda^2 + 4n))/2`, traversed from near `(a, 0)` to
/// near `(-a, 0)` through the upper half-plane, with `count` samples.
pub fn sphere_curve(params: &Params, count: usize) -> ProfileCurve {
    let a = params.sphere_radius();
    let eps = 1e-3;
    let points = (0..count)
        .map(|i| {
            let phi = eps + (PI - 2.0 * eps) * i as f64 / (count.max(2) - 1) as f64;
            sample(a * phi, a * phi.cos(), a * phi.sin(), phi + 0.5 * PI, 1.0 / a)
        })
        .collect();
    exact(points, params)
}

/// The cylinder `r = R_lambda` over `0 <= x <= length`.
pub fn cylinder_curve(params: &Params, length: f64, count: usize) -> ProfileCurve {
    let r = params.cylinder_radius();
    let points = (0..count)
        .map(|i| {
            let x = length * i as f64 / (count.max(2) - 1) as f64;
            sample(x, x, r, 0.0, 0.0)
        })
        .collect();
    exact(points, params)
}

/// The cylinder `r = R_{-lambda}` traversed in the negative x direction.
pub fn mirrored_cylinder_curve(params: &Params, length: f64, count: usize) -> ProfileCurve {
    let r = params.mirrored_cylinder_radius();
    let points = (0..count)
        .map(|i| {
            let s = length * i as f64 / (count.max(2) - 1) as f64;
            sample(s, -s, r, PI, 0.0)
        })
        .collect();
    exact(points, params)
}

/// The plane `x = -lambda` for `r` in `[r0, r1]`.
pub fn plane_curve(params: &Params, r0: f64, r1: f64, count: usize) -> ProfileCurve {
    let points = (0..count)
        .map(|i| {
            let s = (r1 - r0) * i as f64 / (count.max(2) - 1) as f64;
            sample(s, -params.lambda, r0 + s, 0.5 * PI, 0.0)
        })
        .collect();
    exact(points, params)
}

fn exact(points: Vec<Sample>, params: &Params) -> ProfileCurve {
    ProfileCurve {
        points,
        closed: false,
        closure_error: 0.0,
        source_delta: f64::NAN,
        params: *params,
    }
}

/// Principal and mean curvatures at one sample, with the outward normal
/// `nu = (-sin theta, cos theta cos phi, cos theta sin phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub s: f64,
    /// the (n-1)-fold rotational curvature `-cos(theta)/r`
    pub kappa_rot: f64,
    /// profile curvature `theta'`
    pub kappa_prof: f64,
    #[serde(rename = "H")]
    pub h: f64,
    /// `H + <X, nu> - lambda`
    pub residual: f64,
}

impl CurvatureSample {
    /// The same sample seen with the opposite normal (and hence opposite lambda).
    pub fn flipped(&self) -> Self {
        Self {
            s: self.s,
            kappa_rot: -self.kappa_rot,
            kappa_prof: -self.kappa_prof,
            h: -self.h,
            residual: -self.residual,
        }
    }
}

pub fn curvature_profile(curve: &ProfileCurve, params: &Params) -> Result<Vec<CurvatureSample>> {
    let k = params.n_minus_one();
    curve
        .points
        .iter()
        .map(|p| {
            let ProfileState { s, x, r, theta } = p.state;
            if !(r > 0.0) {
                return Err(Error::Domain(format!("radius r = {r} at s = {s} must be positive")));
            }
            let (sin, cos) = theta.sin_cos();
            let kappa_rot = -cos / r;
            let kappa_prof = p.theta_dot;
            let h = kappa_prof + k * kappa_rot;
            let support = -x * sin + r * cos;
            Ok(CurvatureSample {
                s,
                kappa_rot,
                kappa_prof,
                h,
                residual: h + support - params.lambda,
            })
        })
        .collect()
}

/// Flip every sample's normal.
pub fn flip(samples: &[CurvatureSample]) -> Vec<CurvatureSample> {
    samples.iter().map(CurvatureSample::flipped).collect()
}

/// Run-length encoded signs (-1, 0, 1) of each principal curvature along a curve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignPattern {
    pub kappa_rot: Vec<(i8, usize)>,
    pub kappa_prof: Vec<(i8, usize)>,
}

impl SignPattern {
    /// Number of strict sign changes (zeros skipped) of the profile curvature.
    pub fn profile_sign_changes(&self) -> usize {
        strict_changes(&self.kappa_prof)
    }

    pub fn rotational_sign_changes(&self) -> usize {
        strict_changes(&self.kappa_rot)
    }
}

fn strict_changes(runs: &[(i8, usize)]) -> usize {
    let signs: Vec<i8> = runs.iter().map(|r| r.0).filter(|s| *s != 0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convexity {
    pub is_convex: bool,
    pub sign_pattern: SignPattern,
}

fn weak_sign(v: f64) -> i8 {
    if v > ZERO_CURVATURE {
        1
    } else if v < -ZERO_CURVATURE {
        -1
    } else {
        0
    }
}

fn run_lengths(values: impl Iterator<Item = f64>) -> Vec<(i8, usize)> {
    let mut runs: Vec<(i8, usize)> = Vec::new();
    for v in values {
        let s = weak_sign(v);
        match runs.last_mut() {
            Some(last) if last.0 == s => last.1 += 1,
            _ => runs.push((s, 1)),
        }
    }
    runs
}

/// Convex when every principal curvature at every sample has one weak sign.
pub fn convexity_check(samples: &[CurvatureSample]) -> Convexity {
    let signs = samples
        .iter()
        .flat_map(|c| [weak_sign(c.kappa_rot), weak_sign(c.kappa_prof)]);
    let (mut pos, mut neg) = (false, false);
    for s in signs {
        pos |= s > 0;
        neg |= s < 0;
    }
    Convexity {
        is_convex: !(pos && neg),
        sign_pattern: SignPattern {
            kappa_rot: run_lengths(samples.iter().map(|c| c.kappa_rot)),
            kappa_prof: run_lengths(samples.iter().map(|c| c.kappa_prof)),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    pub normals: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
}

/// Rotate a profile curve of a surface in 3-space about the x-axis.
///
/// Faces are wound so their geometric normal agrees with the curve's normal. A closed curve
/// (last point repeating the first) gives a torus; an open one an open-ended tube.
pub fn revolve_mesh(curve: &ProfileCurve, segments: usize) -> Result<TriangleMesh> {
    if curve.params.n != 2 {
        return Err(Error::UnsupportedDimension(curve.params.n));
    }
    if segments < 3 {
        return Err(Error::Domain(format!("need at least 3 segments, got {segments}")));
    }
    let rings: &[Sample] = if curve.closed && curve.points.len() > 1 {
        &curve.points[..curve.points.len() - 1]
    } else {
        &curve.points
    };
    let m = rings.len();
    if m < 2 {
        return Err(Error::InsufficientData(format!("{m} profile points")));
    }
    if let Some(p) = rings.iter().find(|p| !(p.state.r > 0.0)) {
        return Err(Error::Domain(format!("radius r = {} must be positive", p.state.r)));
    }
    let angles: Vec<(f64, f64)> = (0..segments)
        .map(|j| (TAU * j as f64 / segments as f64).sin_cos())
        .collect();
    let mut vertices = Vec::with_capacity(m * segments);
    let mut normals = Vec::with_capacity(m * segments);
    for p in rings {
        let (st, ct) = p.state.theta.sin_cos();
        for &(sp, cp) in &angles {
            vertices.push([p.state.x, p.state.r * cp, p.state.r * sp]);
            normals.push([-st, ct * cp, ct * sp]);
        }
    }
    let v = |i: usize, j: usize| (i % m) * segments + (j % segments);
    let strips = if curve.closed { m } else { m - 1 };
    let mut faces = Vec::with_capacity(2 * strips * segments);
    for i in 0..strips {
        for j in 0..segments {
            faces.push([v(i, j), v(i, j + 1), v(i + 1, j)]);
            faces.push([v(i, j + 1), v(i + 1, j + 1), v(i + 1, j)]);
        }
    }
    Ok(TriangleMesh {
        vertices,
        normals,
        faces,
    })
}

impl TriangleMesh {
    fn directed_edges(&self) -> HashMap<(usize, usize), usize> {
        let mut edges = HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                *edges.entry((f[k], f[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        edges
    }

    pub fn edge_count(&self) -> usize {
        let mut undirected: Vec<(usize, usize)> = self
            .directed_edges()
            .keys()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect();
        undirected.sort_unstable();
        undirected.dedup();
        undirected.len()
    }

    /// `V - E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.faces.len() as i64
    }

    /// Every edge is used once in each direction: closed and consistently oriented.
    pub fn is_watertight(&self) -> bool {
        let edges = self.directed_edges();
        edges
            .iter()
            .all(|(&(a, b), &count)| count == 1 && edges.get(&(b, a)) == Some(&1))
    }
}
