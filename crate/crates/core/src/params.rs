use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Problem instance: hypersurface dimension `n` and the constant `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: u32,
    pub lambda: f64,
}

impl Params {
    pub fn new(n: u32, lambda: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("dimension n = {n} must be at least 2")));
        }
        if !lambda.is_finite() {
            return Err(Error::Domain(format!("lambda = {lambda} is not finite")));
        }
        Ok(Self { n, lambda })
    }

    /// `n - 1` as a float, the multiplicity of the rotational curvature.
    #[inline]
    pub fn n_minus_one(&self) -> f64 {
        f64::from(self.n - 1)
    }

    /// Radius of the equilibrium cylinder of the profile system, `R_lambda`.
    pub fn cylinder_radius(&self) -> f64 {
        cylinder_radius(self.n, self.lambda)
    }

    /// `R_{-lambda}`, the radius bound for type-1 shots.
    pub fn mirrored_cylinder_radius(&self) -> f64 {
        cylinder_radius(self.n, -self.lambda)
    }

    /// Radius of the centred sphere solving the equation with the inward normal.
    pub fn sphere_radius(&self) -> f64 {
        let n = f64::from(self.n);
        let l = self.lambda;
        (-l + (l * l + 4.0 * n).sqrt()) / 2.0
    }

    /// Normal flip: the same hypersurface read with the opposite unit normal.
    pub fn flipped(&self) -> Self {
        Self {
            n: self.n,
            lambda: -self.lambda,
        }
    }
}

/// `R_lambda = (lambda + sqrt(lambda^2 + 4(n-1))) / 2`.
///
/// Evaluated in the cancellation-free form when `lambda < 0`.
pub fn cylinder_radius(n: u32, lambda: f64) -> f64 {
    let c = f64::from(n - 1);
    let disc = (lambda * lambda + 4.0 * c).sqrt();
    if lambda >= 0.0 {
        (lambda + disc) / 2.0
    } else {
        // product of the roots is -(n-1)
        2.0 * c / (disc - lambda)
    }
}
