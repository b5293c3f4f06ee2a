//! The functional in dimension `N >= 2` on boxes: a Monte Carlo estimator,
//! the average over line slices (in the plane), and the sphere constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functional_1d::{Estimate, Evaluator, QuadratureResolution};
use crate::model::{local_energy, Domain1D, FunctionalParams, Function1D};
use crate::numerics::{pairwise_sum, tanh_sinh};
use crate::nu_kernel::{exceedance_radius, threshold};

/// Convex sets whose indicator can be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexBody {
    Ball { centre: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum NdVariant {
    /// `slope * x[axis]`
    CoordinateRamp { axis: usize, slope: f64 },
    IndicatorConvex(ConvexBody),
    /// `f(x[axis])`
    TensorOf { profile: Function1D, axis: usize },
}

/// A function on the axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionND {
    lo: Vec<f64>,
    hi: Vec<f64>,
    variant: NdVariant,
}

impl FunctionND {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, variant: NdVariant) -> Result<Self> {
        let dim = lo.len();
        if dim < 2 || hi.len() != dim {
            return Err(Error::InvalidDomain(format!("box needs matching corners of dimension >= 2, got {} and {}", lo.len(), hi.len())));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && b > a)) {
            return Err(Error::InvalidDomain("box corners must be finite with lo < hi".into()));
        }
        match &variant {
            NdVariant::CoordinateRamp { axis, slope } => {
                if *axis >= dim || !slope.is_finite() {
                    return Err(Error::InvalidFunction(format!("ramp needs axis < {dim} and a finite slope")));
                }
            }
            NdVariant::IndicatorConvex(ConvexBody::Ball { centre, radius }) => {
                if centre.len() != dim || !(*radius > 0.0 && radius.is_finite()) || centre.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidFunction("ball needs a finite centre of the box dimension and a positive radius".into()));
                }
            }
            NdVariant::IndicatorConvex(ConvexBody::Box { lo: a, hi: b }) => {
                if a.len() != dim || b.len() != dim || a.iter().zip(b).any(|(x, y)| !(y > x)) {
                    return Err(Error::InvalidFunction("indicator box needs corners of the box dimension with lo < hi".into()));
                }
            }
            NdVariant::TensorOf { profile, axis } => {
                if *axis >= dim {
                    return Err(Error::InvalidFunction(format!("tensor axis must be < {dim}")));
                }
                profile.check_domain(&Domain1D::interval(lo[*axis], hi[*axis])?)?;
            }
        }
        Ok(Self { lo, hi, variant })
    }

    /// `slope * x[axis]` on the unit cube.
    pub fn coordinate_ramp(dim: usize, axis: usize, slope: f64) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![1.0; dim], NdVariant::CoordinateRamp { axis, slope })
    }

    /// Indicator of a ball inside the unit cube.
    pub fn ball_indicator(centre: Vec<f64>, radius: f64) -> Result<Self> {
        let dim = centre.len();
        Self::new(vec![0.0; dim], vec![1.0; dim], NdVariant::IndicatorConvex(ConvexBody::Ball { centre, radius }))
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }

    pub fn variant(&self) -> &NdVariant {
        &self.variant
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn diameter(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&v, (&a, &b))| a <= v && v <= b)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.variant {
            NdVariant::CoordinateRamp { axis, slope } => slope * x[*axis],
            NdVariant::IndicatorConvex(ConvexBody::Ball { centre, radius }) => {
                let d2: f64 = x.iter().zip(centre).map(|(a, c)| (a - c) * (a - c)).sum();
                f64::from(u8::from(d2 < radius * radius))
            }
            NdVariant::IndicatorConvex(ConvexBody::Box { lo, hi }) => {
                f64::from(u8::from(x.iter().zip(lo.iter().zip(hi)).all(|(&v, (&a, &b))| a <= v && v < b)))
            }
            NdVariant::TensorOf { profile, axis } => profile.eval_unchecked(x[*axis]),
        }
    }

    /// `sup u - inf u` over the box (an upper bound for the indicator).
    pub fn oscillation(&self) -> Result<f64> {
        Ok(match &self.variant {
            NdVariant::CoordinateRamp { axis, slope } => slope.abs() * (self.hi[*axis] - self.lo[*axis]),
            NdVariant::IndicatorConvex(_) => 1.0,
            NdVariant::TensorOf { profile, axis } => {
                let (a, b) = profile.range_on(&Domain1D::interval(self.lo[*axis], self.hi[*axis])?)?;
                b - a
            }
        })
    }

    /// The restriction of `u` to the line `offset * n + t * sigma`, where
    /// `sigma = (cos theta, sin theta)` and `n = (-sin theta, cos theta)`,
    /// together with the parameter interval inside the box. `None` when the
    /// line misses the box interior.
    pub fn slice_2d(&self, theta: f64, offset: f64) -> Result<Option<(Function1D, Domain1D)>> {
        if self.dim() != 2 {
            return Err(Error::UnsupportedVariant(format!("slices are implemented in dimension 2, got {}", self.dim())));
        }
        let sigma = [theta.cos(), theta.sin()];
        let base = [-theta.sin() * offset, theta.cos() * offset];
        let Some((t0, t1)) = line_box(&base, &sigma, &self.lo, &self.hi) else {
            return Ok(None);
        };
        let dom = Domain1D::interval(t0, t1)?;
        let f = match &self.variant {
            NdVariant::CoordinateRamp { axis, slope } => {
                let at = |t: f64| slope * (base[*axis] + t * sigma[*axis]);
                Function1D::piecewise_linear(vec![t0, t1], vec![at(t0), at(t1)])?
            }
            NdVariant::IndicatorConvex(body) => {
                let chord = match body {
                    ConvexBody::Ball { centre, radius } => line_ball(&base, &sigma, centre, *radius),
                    ConvexBody::Box { lo, hi } => line_box(&base, &sigma, lo, hi),
                };
                match chord {
                    Some((c0, c1)) if c1 > t0 && c0 < t1 => {
                        let mut bps = Vec::new();
                        let mut vals = Vec::new();
                        if c0 > t0 {
                            bps.push(c0);
                            vals.push(0.0);
                        }
                        vals.push(1.0);
                        if c1 < t1 {
                            bps.push(c1);
                            vals.push(0.0);
                        }
                        Function1D::step(bps, vals)?
                    }
                    _ => Function1D::step(vec![], vec![0.0])?,
                }
            }
            NdVariant::TensorOf { profile, axis } => {
                if sigma[*axis].abs() < 1e-15 {
                    Function1D::step(vec![], vec![profile.eval_unchecked(base[*axis])])?
                } else {
                    profile.compose_affine(sigma[*axis], base[*axis], t0, t1)?
                }
            }
        };
        Ok(Some((f, dom)))
    }
}

/// Parameter interval `{t : base + t dir in [lo, hi]}` with positive length.
fn line_box(base: &[f64], dir: &[f64], lo: &[f64], hi: &[f64]) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for d in 0..base.len() {
        if dir[d].abs() < 1e-300 {
            if base[d] <= lo[d] || base[d] >= hi[d] {
                return None;
            }
            continue;
        }
        let a = (lo[d] - base[d]) / dir[d];
        let b = (hi[d] - base[d]) / dir[d];
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    (t1 > t0).then_some((t0, t1))
}

fn line_ball(base: &[f64], dir: &[f64], centre: &[f64], radius: f64) -> Option<(f64, f64)> {
    // |base - centre + t dir|^2 = r^2 with |dir| = 1
    let w: Vec<f64> = base.iter().zip(centre).map(|(b, c)| b - c).collect();
    let bq: f64 = w.iter().zip(dir).map(|(a, d)| a * d).sum();
    let c: f64 = w.iter().map(|a| a * a).sum::<f64>() - radius * radius;
    let disc = bq * bq - c;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some((-bq - s, -bq + s))
}

/// `|S^n|`, the surface measure of the unit `n`-sphere in `R^(n+1)`.
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 1.0) * sphere_area(n - 2),
    }
}

/// `C_{N,p} = int_{S^(N-1)} |<v, x>|^p dH^(N-1)(x)` for any unit `v`.
pub fn c_np(dim: usize, p: f64) -> Result<f64> {
    if dim < 1 {
        return Err(Error::InvalidParams("dimension must be at least 1".into()));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParams(format!("p must be >= 1, got {p}")));
    }
    if dim == 1 {
        return Ok(2.0);
    }
    // Polar angle phi from v: 2 |S^(N-2)| int_0^(pi/2) cos^p sin^(N-2).
    let k = (dim - 2) as i32;
    let integral = tanh_sinh(|phi: f64| phi.cos().powf(p) * phi.sin().powi(k), 0.0, std::f64::consts::FRAC_PI_2, 1e-15, 14);
    Ok(2.0 * sphere_area(dim - 2) * integral)
}

/// `c_gamma = ln 2 / (2^(gamma+1) - 1)`.
pub fn c_gamma(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Precondition(format!("gamma must be positive, got {gamma}")));
    }
    Ok(std::f64::consts::LN_2 / ((gamma + 1.0) * std::f64::consts::LN_2).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Samples per independently seeded stream.
const SHARD: u64 = 1 << 16;

/// Monte Carlo estimate of `lambda^p nu_gamma(E)` on the box.
///
/// `x` is uniform in the box, the direction uniform on the sphere and the
/// separation `r` has density proportional to `r^(gamma-1)` on `(0, R)`,
/// which cancels the kernel. `R` is the smaller of the box diameter and the
/// exceedance radius of the global oscillation, past which no pair can lie
/// in `E`. Pairs leaving the box get weight zero.
///
/// Samples are split into fixed shards, shard `s` drawing from stream `s` of
/// a ChaCha generator seeded with `seed`; hit counts are integers, so the
/// result depends only on `(samples, seed)`.
pub fn f_mc(params: &FunctionalParams, f: &FunctionND, samples: u64, seed: u64) -> Result<MCEstimate> {
    if samples < 1000 {
        return Err(Error::Precondition(format!("Monte Carlo needs at least 1000 samples, got {samples}")));
    }
    let dim = f.dim();
    let osc = f.oscillation()?;
    let reach = f.diameter().min(exceedance_radius(params, osc));
    if reach == 0.0 {
        return Ok(MCEstimate { value: 0.0, std_error: 0.0, samples, seed });
    }
    let gamma = params.gamma();
    let shards = samples.div_ceil(SHARD);
    let hits: u64 = (0..shards)
        .into_par_iter()
        .map(|s| {
            let n = SHARD.min(samples - s * SHARD);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let mut x = vec![0.0; dim];
            let mut y = vec![0.0; dim];
            let mut dir = vec![0.0; dim];
            let mut count = 0u64;
            for _ in 0..n {
                for d in 0..dim {
                    x[d] = rng.random_range(f.lo[d]..f.hi[d]);
                }
                let mut norm2 = 0.0;
                for v in dir.iter_mut() {
                    *v = rng.sample::<f64, _>(StandardNormal);
                    norm2 += *v * *v;
                }
                let u: f64 = rng.random();
                let r = reach * (1.0 - u).powf(1.0 / gamma);
                let scale = r / norm2.sqrt();
                for d in 0..dim {
                    y[d] = x[d] + scale * dir[d];
                }
                if r > 0.0 && f.contains(&y) && (f.eval(&y) - f.eval(&x)).abs() > threshold(params, r) {
                    count += 1;
                }
            }
            count
        })
        .sum();
    let weight = f.volume() * sphere_area(dim - 1) * reach.powf(gamma) / gamma * params.lambda().powf(params.p());
    let phat = hits as f64 / samples as f64;
    Ok(MCEstimate {
        value: weight * phat,
        std_error: weight * (phat * (1.0 - phat) / samples as f64).sqrt(),
        samples,
        seed,
    })
}

/// Midpoint grid over directions `theta in [0, pi)` and offsets covering the
/// box projection; returns `sum w * g(theta, offset)` where `g` is applied
/// to each slice.
fn slice_sum(f: &FunctionND, directions: usize, offsets: usize, g: impl Fn(&Function1D, &Domain1D) -> Result<f64> + Sync) -> Result<f64> {
    use std::f64::consts::PI;
    let corners: Vec<[f64; 2]> = vec![[f.lo[0], f.lo[1]], [f.hi[0], f.lo[1]], [f.lo[0], f.hi[1]], [f.hi[0], f.hi[1]]];
    let rows: Vec<f64> = (0..directions)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let theta = PI * (i as f64 + 0.5) / directions as f64;
            let proj: Vec<f64> = corners.iter().map(|c| -theta.sin() * c[0] + theta.cos() * c[1]).collect();
            let lo = proj.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let h = (hi - lo) / offsets as f64;
            let mut terms = Vec::with_capacity(offsets);
            for j in 0..offsets {
                if let Some((s, dom)) = f.slice_2d(theta, lo + (j as f64 + 0.5) * h)? {
                    terms.push(g(&s, &dom)?);
                }
            }
            Ok(h * pairwise_sum(&terms))
        })
        .collect::<Result<_>>()?;
    Ok(PI / directions as f64 * pairwise_sum(&rows))
}

fn check_slice_grid(f: &FunctionND, directions: usize, offsets: usize) -> Result<()> {
    if f.dim() != 2 {
        return Err(Error::UnsupportedVariant(format!("slice averaging is implemented in dimension 2, got {}", f.dim())));
    }
    if directions < 8 || offsets < 2 {
        return Err(Error::Precondition(format!("slice grid needs >= 8 directions and >= 2 offsets, got {directions} x {offsets}")));
    }
    Ok(())
}

/// `1/2 int_{S^1} int F(u_{y,sigma}, Omega_{y,sigma}) dy dsigma`, using the
/// antipodal symmetry to integrate over `[0, pi)` only. Slices are evaluated
/// with the best 1D evaluator (exact for ramps, indicators and step
/// profiles). The error is the difference to the half-resolution grid.
pub fn f_slice_average(
    params: &FunctionalParams,
    f: &FunctionND,
    directions: usize,
    offsets: usize,
    resolution: QuadratureResolution,
) -> Result<Estimate> {
    check_slice_grid(f, directions, offsets)?;
    let p1 = params.with_dim(1)?;
    let eval = |s: &Function1D, dom: &Domain1D| -> Result<f64> {
        Ok(Evaluator::best_for(s, dom, resolution).evaluate(&p1, s, dom)?.value)
    };
    let fine = slice_sum(f, directions, offsets, eval)?;
    let coarse = slice_sum(f, (directions / 2).max(1), (offsets / 2).max(1), eval)?;
    Ok(Estimate { value: fine, error: (fine - coarse).abs() })
}

/// `int_{S^1} int F_p(u_{y,sigma}) dy dsigma`, which equals
/// `C_{2,p} F_p(u)` for Sobolev `u`.
pub fn slice_energy_average(f: &FunctionND, p: f64, directions: usize, offsets: usize) -> Result<Estimate> {
    check_slice_grid(f, directions, offsets)?;
    let energy = |s: &Function1D, dom: &Domain1D| local_energy(s, dom, p);
    let fine = 2.0 * slice_sum(f, directions, offsets, energy)?;
    let coarse = 2.0 * slice_sum(f, directions / 2, offsets / 2, energy)?;
    Ok(Estimate { value: fine, error: (fine - coarse).abs() })
}
