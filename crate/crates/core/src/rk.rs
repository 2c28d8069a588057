//! Embedded Dormand–Prince 5(4) pair on three-component states.

pub(crate) type Vec3 = [f64; 3];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b5 - b4
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy(y: &Vec3, h: f64, terms: &[(f64, &Vec3)]) -> Vec3 {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..3 {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Result of one trial step.
pub(crate) struct Trial {
    pub y: Vec3,
    /// derivative at the new point (first stage of the next step)
    pub k_end: Vec3,
    /// embedded error estimate, component-wise
    pub err: Vec3,
}

/// One Dormand–Prince step of size `h` from `(t, y)` with `k1 = f(t, y)`.
///
/// Returns `None` as soon as the right-hand side rejects a stage.
pub(crate) fn dopri_step<F>(f: &mut F, t: f64, y: &Vec3, k1: &Vec3, h: f64) -> Option<Trial>
where
    F: FnMut(f64, &Vec3) -> Option<Vec3>,
{
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(
        t + C5 * h,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    )?;
    let k6 = f(
        t + h,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y_new = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(t + h, &y_new)?;
    let mut err = [0.0; 3];
    for i in 0..3 {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Some(Trial {
        y: y_new,
        k_end: k7,
        err,
    })
}

/// Mixed absolute/relative max-norm of an error estimate.
pub(crate) fn error_norm(err: &Vec3, y0: &Vec3, y1: &Vec3, abs_tol: f64, rel_tol: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        let scale = abs_tol + rel_tol * y0[i].abs().max(y1[i].abs());
        worst = worst.max(err[i].abs() / scale);
    }
    worst
}

/// Proportional-integral step-size controller.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PiController {
    prev_err: f64,
}

impl PiController {
    const SAFETY: f64 = 0.9;
    const ALPHA: f64 = 0.17;
    const BETA: f64 = 0.04;
    const MIN_FACTOR: f64 = 0.2;
    const MAX_FACTOR: f64 = 5.0;

    pub fn new() -> Self {
        Self { prev_err: 1e-4 }
    }

    /// Step factor after an accepted step with normalised error `err <= 1`.
    pub fn accept(&mut self, err: f64) -> f64 {
        let err = err.max(1e-10);
        let fac = Self::SAFETY * err.powf(-Self::ALPHA) * self.prev_err.powf(Self::BETA);
        self.prev_err = err;
        fac.clamp(Self::MIN_FACTOR, Self::MAX_FACTOR)
    }

    /// Step factor after a rejection.
    pub fn reject(&self, err: f64) -> f64 {
        if !err.is_finite() {
            return 0.25;
        }
        (Self::SAFETY * err.powf(-0.2)).clamp(Self::MIN_FACTOR, 0.9)
    }
}

/// Cubic Hermite interpolation of one component on `[t0, t1]`.
#[inline]
pub(crate) fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    if h == 0.0 {
        return y0;
    }
    let u = (t - t0) / h;
    let u2 = u * u;
    let u3 = u2 * u;
    let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    let h10 = u3 - 2.0 * u2 + u;
    let h01 = -2.0 * u3 + 3.0 * u2;
    let h11 = u3 - u2;
    h00 * y0 + h * h10 * d0 + h01 * y1 + h * h11 * d1
}

/// Integrate a smooth autonomous-or-not system and report the state at each requested
/// output time. Steps are clipped to land on the outputs exactly.
pub(crate) fn solve_at<F>(
    mut f: F,
    t0: f64,
    y0: Vec3,
    outputs: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_step: f64,
) -> Option<Vec<Vec3>>
where
    F: FnMut(f64, &Vec3) -> Option<Vec3>,
{
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    let mut h = max_step.min(1e-3);
    let mut ctl = PiController::new();
    let mut out = Vec::with_capacity(outputs.len());
    for &target in outputs {
        while t < target {
            let h_try = h.min(max_step).min(target - t);
            if h_try < 1e-14 * t.abs().max(1.0) {
                // already at the target up to rounding
                break;
            }
            let Some(trial) = dopri_step(&mut f, t, &y, &k1, h_try) else {
                h = h_try * 0.25;
                continue;
            };
            let err = error_norm(&trial.err, &y, &trial.y, abs_tol, rel_tol);
            if err <= 1.0 {
                let landed = h_try == target - t;
                t = if landed { target } else { t + h_try };
                y = trial.y;
                k1 = trial.k_end;
                let fac = ctl.accept(err);
                if !landed || fac < 1.0 {
                    h = h_try * fac;
                }
            } else {
                h = h_try * ctl.reject(err);
                if h < 1e-14 * t.abs().max(1.0) {
                    return None;
                }
            }
        }
        out.push(y);
    }
    Some(out)
}
