//! The arc-length profile system.
//!
//! A profile curve `(x(s), r(s))` with tangent angle `theta(s)` generates a
//! lambda-hypersurface by rotation about the x-axis exactly when
//!
//! ```text
//! x'     = cos(theta)
//! r'     = sin(theta)
//! theta' = ((n-1)/r - r) cos(theta) + x sin(theta) + lambda
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;

/// One point of a profile curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileState {
    pub s: f64,
    pub x: f64,
    pub r: f64,
    pub theta: f64,
}

impl ProfileState {
    pub fn new(s: f64, x: f64, r: f64, theta: f64) -> Self {
        Self { s, x, r, theta }
    }

    /// Launch point of a shot: `(0, delta)` moving in the +x direction.
    pub fn launch(delta: f64) -> Self {
        Self::new(0.0, 0.0, delta, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.s.is_finite() && self.x.is_finite() && self.r.is_finite() && self.theta.is_finite()
    }

    pub(crate) fn check(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::Domain(format!("non-finite state {self:?}")));
        }
        if self.r <= 0.0 {
            return Err(Error::Domain(format!("radius r = {} must be positive", self.r)));
        }
        Ok(())
    }
}

/// Derivative of `(x, r, theta)` with respect to arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub dx: f64,
    pub dr: f64,
    pub dtheta: f64,
}

#[inline]
pub(crate) fn curvature_term(x: f64, r: f64, theta: f64, params: &Params) -> f64 {
    let (sin, cos) = theta.sin_cos();
    (params.n_minus_one() / r - r) * cos + x * sin + params.lambda
}

/// Right-hand side of the profile system.
pub fn rhs(state: &ProfileState, params: &Params) -> Result<Derivative> {
    state.check()?;
    let (sin, cos) = state.theta.sin_cos();
    Ok(Derivative {
        dx: cos,
        dr: sin,
        dtheta: curvature_term(state.x, state.r, state.theta, params),
    })
}

/// Turning rate `theta'` at a state.
pub fn theta_dot(state: &ProfileState, params: &Params) -> Result<f64> {
    state.check()?;
    Ok(curvature_term(state.x, state.r, state.theta, params))
}

/// `theta'(0) = -(delta^2 - lambda delta - (n-1)) / delta` for a horizontal launch at
/// radius `delta`. Positive exactly when `delta < R_lambda`.
pub fn initial_theta_dot(delta: f64, params: &Params) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("delta = {delta} must be positive and finite")));
    }
    Ok(-(delta * delta - params.lambda * delta - params.n_minus_one()) / delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn p(n: u32, l: f64) -> Params {
        Params::new(n, l).unwrap()
    }

    #[test]
    fn cylinder_is_equilibrium() {
        let d = rhs(&ProfileState::new(0.0, 0.0, 1.0, 0.0), &p(2, 0.0)).unwrap();
        assert_eq!((d.dx, d.dr, d.dtheta), (1.0, 0.0, 0.0));
    }

    #[test]
    fn rhs_examples() {
        let d = rhs(&ProfileState::new(0.0, 0.0, 0.5, 0.0), &p(2, 0.0)).unwrap();
        assert_eq!(d.dx, 1.0);
        assert_eq!(d.dr, 0.0);
        assert!((d.dtheta - 1.5).abs() < 1e-15);

        let d = rhs(&ProfileState::new(0.0, 1.0, 2.0, FRAC_PI_2), &p(3, -0.24)).unwrap();
        assert!(d.dx.abs() < 1e-15);
        assert!((d.dr - 1.0).abs() < 1e-15);
        assert!((d.dtheta - 0.76).abs() < 1e-15);
    }

    #[test]
    fn rhs_domain_errors() {
        let params = p(2, 0.0);
        assert!(rhs(&ProfileState::new(0.0, 0.0, 0.0, 0.0), &params).is_err());
        assert!(rhs(&ProfileState::new(0.0, 0.0, -1.0, 0.0), &params).is_err());
        assert!(rhs(&ProfileState::new(0.0, f64::NAN, 1.0, 0.0), &params).is_err());
        assert!(theta_dot(&ProfileState::new(f64::INFINITY, 0.0, 1.0, 0.0), &params).is_err());
    }

    #[test]
    fn theta_dot_examples() {
        assert_eq!(
            theta_dot(&ProfileState::new(0.0, 0.0, 1.0, 0.0), &p(2, 0.0)).unwrap(),
            0.0
        );
        let params = p(2, 0.4);
        let r = params.cylinder_radius();
        assert!((r - 1.219_803_9).abs() < 1e-7);
        assert!(theta_dot(&ProfileState::new(0.0, 0.0, r, 0.0), &params).unwrap().abs() < 1e-15);
        let v = theta_dot(&ProfileState::new(0.0, 2.0, 1.0, FRAC_PI_2), &p(2, 0.0)).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn initial_turning_rate() {
        assert_eq!(initial_theta_dot(1.0, &p(2, 0.0)).unwrap(), 0.0);
        assert!((initial_theta_dot(0.5, &p(2, 0.0)).unwrap() - 1.5).abs() < 1e-15);
        assert!(initial_theta_dot(0.0, &p(2, 0.0)).is_err());
        assert!(initial_theta_dot(-1.0, &p(2, 0.0)).is_err());
    }

    #[test]
    fn initial_turning_rate_vanishes_at_cylinder_radius() {
        // Oracle: bisection on the turning rate itself, independent of the closed form.
        let params = p(2, -0.24);
        let (mut lo, mut hi) = (0.1, 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if initial_theta_dot(mid, &params).unwrap() > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        assert!((root - params.cylinder_radius()).abs() < 1e-14);
        assert!((root - 0.887_174_3).abs() < 1e-7);
        assert!(initial_theta_dot(params.cylinder_radius(), &params).unwrap().abs() < 1e-14);
        // Sign rule: positive below R_lambda, negative above.
        assert!(initial_theta_dot(0.5, &params).unwrap() > 0.0);
        assert!(initial_theta_dot(1.2, &params).unwrap() < 0.0);
    }
}
