//! Shooting-method construction of rotationally symmetric lambda-hypersurfaces.
//!
//! A hypersurface of revolution about the x-axis satisfies `H + <X, nu> = lambda` when
//! its profile curve solves a three-dimensional arc-length system. Launching that system
//! horizontally at radius `delta` and ordering the first crossings of a few level sets
//! sorts `delta` into types; the boundaries between types are the shots that close up
//! into embedded tori or escape to infinity as embedded cylinders.
//!
//! * [`integrate`] — adaptive Dormand–Prince shots with event localization.
//! * [`formulations`] — graph-form and rescaled equations used as independent checks.
//! * [`classify`] — first-crossing summaries and type labels.
//! * [`search`] — bisection for the cylinder and torus parameters, sweeps and scans.
//! * [`geometry`] — closed curves, curvatures, convexity, surface meshes.
//! * [`io`] — CSV / JSON / OBJ writers.

// `!(x > 0.0)` is used on purpose so that NaN fails domain checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod error;
pub mod formulations;
pub mod geometry;
pub mod integrate;
pub mod io;
pub mod params;
pub mod profile;
mod quadrature;
mod rk;
pub mod search;

pub use classify::{classify_delta, summarize, EventSummary, Label, TypeLabel};
pub use error::{Error, Result};
pub use formulations::{cross_validate, CrossValidation, ValidationRecord};
pub use geometry::{
    convexity_check, curvature_profile, reflect_close, revolve_mesh, Convexity, CurvatureSample, ProfileCurve,
    TriangleMesh,
};
pub use integrate::{integrate, EventKind, EventRecord, IntegratorControls, Sample, Scan, Termination, Trajectory};
pub use params::{cylinder_radius, Params};
pub use profile::{initial_theta_dot, rhs, theta_dot, Derivative, ProfileState};
pub use search::{
    find_cylinder_delta, find_torus_deltas, lambda_threshold_scan, sweep, SearchResult, SweepRow, Target,
};
