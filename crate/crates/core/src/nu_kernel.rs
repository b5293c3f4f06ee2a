//! The measure `nu_gamma`, the threshold kernel `psi`, the exceedance radius,
//! and closed-form band measures.
//!
//! For a piecewise-constant `u` the exceedance set restricted to a product
//! of two constant pieces is a band `{|y - x| < r}`, so its `nu_gamma`
//! measure has a closed form. This is what makes the step-function
//! evaluator exact.

use crate::model::FunctionalParams;

/// `lambda * delta^(1 + gamma/p)`.
#[inline]
pub fn threshold(params: &FunctionalParams, delta: f64) -> f64 {
    params.lambda() * delta.powf(params.threshold_exponent())
}

/// `1` if `big_delta > lambda * delta^(1+gamma/p)`, else `0`.
#[inline]
pub fn psi(params: &FunctionalParams, delta: f64, big_delta: f64) -> u8 {
    u8::from(big_delta > threshold(params, delta))
}

/// Separation below which a pair with oscillation `big_delta` is in the
/// exceedance set: `(big_delta / lambda)^(p / (p + gamma))`. Zero for
/// non-positive oscillations.
#[inline]
pub fn exceedance_radius(params: &FunctionalParams, big_delta: f64) -> f64 {
    if !(big_delta > 0.0) {
        return 0.0;
    }
    let (g, p) = (params.gamma(), params.p());
    (big_delta / params.lambda()).powf(p / (p + g))
}

/// The region `{(x, y) in x_interval * y_interval : |y - x| < radius}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandRegion {
    pub x_interval: (f64, f64),
    pub y_interval: (f64, f64),
    pub radius: f64,
}

impl BandRegion {
    pub fn new(x_interval: (f64, f64), y_interval: (f64, f64), radius: f64) -> Self {
        debug_assert!(x_interval.1 > x_interval.0 && y_interval.1 > y_interval.0);
        Self { x_interval, y_interval, radius }
    }
}

/// Exact `iint |y - x|^(gamma - 1) dx dy` over a band region.
///
/// In the separation variable `t = y - x` the overlap length of the two
/// intervals is a trapezoid, i.e. a signed sum of four ramps `(t - s)_+`,
/// and each ramp integrates in closed form against `t^(gamma - 1)`.
pub fn nu_band(gamma: f64, region: &BandRegion) -> f64 {
    debug_assert!(gamma > 0.0);
    if !(region.radius > 0.0) {
        return 0.0;
    }
    let forward = half_band(gamma, region.x_interval, region.y_interval, region.radius);
    let backward = half_band(gamma, region.y_interval, region.x_interval, region.radius);
    forward + backward
}

/// `int_0^r t^(gamma-1) |x ∩ (y - t)| dt`.
fn half_band(gamma: f64, x: (f64, f64), y: (f64, f64), r: f64) -> f64 {
    let s0 = y.0 - x.1;
    let s1 = y.0 - x.0;
    let s2 = y.1 - x.1;
    let s3 = y.1 - x.0;
    // The overlap vanishes beyond s3; clamping r keeps the ramp terms at the
    // scale of the region.
    let r = r.min(s3);
    if r <= 0.0 {
        return 0.0;
    }
    let total = ramp_moment(gamma, r, s0) - ramp_moment(gamma, r, s1) - ramp_moment(gamma, r, s2)
        + ramp_moment(gamma, r, s3);
    total.max(0.0)
}

/// `int_0^r t^(gamma-1) (t - s)_+ dt`.
fn ramp_moment(gamma: f64, r: f64, s: f64) -> f64 {
    if s >= r {
        return 0.0;
    }
    let g1 = gamma + 1.0;
    if s <= 0.0 {
        return r.powf(g1) / g1 - s * r.powf(gamma) / gamma;
    }
    // r^gamma - s^gamma through expm1 so the 1/gamma factor stays benign as gamma -> 0.
    let diff_pow = s.powf(gamma) * (gamma * (r / s).ln()).exp_m1();
    (r.powf(g1) - s.powf(g1)) / g1 - s * diff_pow / gamma
}
