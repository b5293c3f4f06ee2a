//! Parameter and function representations shared by every evaluator, plus the
//! one-dimensional local energy `F_p` and its ingredients.
//!
//! Every [`Function1D`] is piecewise linear (step functions being the
//! zero-slope case), which is what lets the evaluators in
//! [`crate::functional_1d`] split their integration ranges at the
//! function's breakpoints.

use crate::error::{Error, Result};

/// The triple `(gamma, p, lambda)` together with the ambient dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalParams {
    gamma: f64,
    p: f64,
    lambda: f64,
    dim: usize,
}

impl FunctionalParams {
    pub fn new(gamma: f64, p: f64, lambda: f64, dim: usize) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParams(format!("gamma must be > 0, got {gamma}")));
        }
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidParams(format!("p must be >= 1, got {p}")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParams(format!("lambda must be > 0, got {lambda}")));
        }
        if dim == 0 {
            return Err(Error::InvalidParams("dim must be >= 1".into()));
        }
        Ok(Self { gamma, p, lambda, dim })
    }

    /// Shorthand for `dim = 1`.
    pub fn one_dim(gamma: f64, p: f64, lambda: f64) -> Result<Self> {
        Self::new(gamma, p, lambda, 1)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The exponent `1 + gamma/p` of the threshold `lambda * delta^(1+gamma/p)`.
    pub fn threshold_exponent(&self) -> f64 {
        1.0 + self.gamma / self.p
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.gamma, self.p, lambda, self.dim)
    }

    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        Self::new(self.gamma, self.p, self.lambda, dim)
    }
}

/// A finite union of pairwise disjoint open intervals, sorted left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain1D {
    intervals: Vec<(f64, f64)>,
}

impl Domain1D {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidDomain("at least one interval is required".into()));
        }
        for &(a, b) in &intervals {
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::InvalidDomain(format!("endpoints must be finite: ({a}, {b})")));
            }
            if b <= a {
                return Err(Error::InvalidDomain(format!("empty interval ({a}, {b})")));
            }
        }
        for w in intervals.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::InvalidDomain(format!(
                    "intervals must be sorted and disjoint: ({}, {}) then ({}, {})",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(Self { intervals })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![(a, b)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// Smallest interval containing the whole domain.
    pub fn hull(&self) -> (f64, f64) {
        (self.intervals[0].0, self.intervals[self.intervals.len() - 1].1)
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a < x && x < b)
    }
}

/// Right-continuous step function on the real line.
///
/// `values[i]` is taken on `[breakpoints[i-1], breakpoints[i])`, with the
/// first and last pieces extending to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidFunction(format!(
                "step function needs {} values for {} breakpoints, got {}",
                breakpoints.len() + 1,
                breakpoints.len(),
                values.len()
            )));
        }
        check_strictly_increasing(&breakpoints, "breakpoints")?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction("step values must be finite".into()));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.values[self.breakpoints.partition_point(|&b| b <= x)]
    }

    /// The constant pieces `(start, end, value)` covering `(lo, hi)`, in order.
    pub fn pieces_on(&self, lo: f64, hi: f64) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        let mut start = lo;
        let first = self.breakpoints.partition_point(|&b| b <= lo);
        let mut idx = first;
        while idx < self.breakpoints.len() && self.breakpoints[idx] < hi {
            let bp = self.breakpoints[idx];
            if bp > start {
                out.push((start, bp, self.values[idx]));
            }
            start = bp;
            idx += 1;
        }
        out.push((start, hi, self.values[idx]));
        out
    }

    /// Jumps `(position, signed size)` located strictly inside `(lo, hi)`.
    pub fn jumps_in(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.breakpoints
            .iter()
            .enumerate()
            .filter(move |(_, &b)| lo < b && b < hi)
            .map(move |(i, &b)| (b, self.values[i + 1] - self.values[i]))
    }
}

/// Continuous piecewise-linear interpolant of `(knots, values)`, defined on
/// `[knots[0], knots[n-1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::InvalidFunction(
                "piecewise-linear function needs >= 2 knots and one value per knot".into(),
            ));
        }
        check_strictly_increasing(&knots, "knots")?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction("knot values must be finite".into()));
        }
        Ok(Self { knots, values })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        let seg = self.knots.partition_point(|&k| k <= x).clamp(1, n - 1) - 1;
        let (x0, x1) = (self.knots[seg], self.knots[seg + 1]);
        let (y0, y1) = (self.values[seg], self.values[seg + 1]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    fn slope(&self, seg: usize) -> f64 {
        (self.values[seg + 1] - self.values[seg]) / (self.knots[seg + 1] - self.knots[seg])
    }

    /// `(overlap length, slope)` for every segment meeting `(lo, hi)`.
    fn segments_on(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.knots.len() - 1).filter_map(move |s| {
            let len = self.knots[s + 1].min(hi) - self.knots[s].max(lo);
            (len > 0.0).then(|| (len, self.slope(s)))
        })
    }
}

/// `n` samples on `[lo, hi]`, one per uniform cell, extended as the
/// piecewise-constant function of the cell each point falls in.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSamples {
    lo: f64,
    hi: f64,
    samples: Vec<f64>,
    edges: Vec<f64>,
}

impl GridSamples {
    pub fn new(lo: f64, hi: f64, samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidFunction("grid samples need n >= 2".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidFunction(format!("bad grid interval [{lo}, {hi}]")));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction("grid samples must be finite".into()));
        }
        let n = samples.len();
        let h = (hi - lo) / n as f64;
        let edges = (1..n).map(|i| lo + i as f64 * h).collect();
        Ok(Self { lo, hi, samples, edges })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn cell_width(&self) -> f64 {
        (self.hi - self.lo) / self.samples.len() as f64
    }

    /// Cell centres, i.e. the abscissae the samples are attached to.
    pub fn centres(&self) -> Vec<f64> {
        let h = self.cell_width();
        (0..self.samples.len()).map(|i| self.lo + (i as f64 + 0.5) * h).collect()
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.samples[self.edges.partition_point(|&e| e <= x)]
    }

    pub fn to_step(&self) -> StepFunction {
        StepFunction { breakpoints: self.edges.clone(), values: self.samples.clone() }
    }
}

/// Named analytic profiles.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `u(x) = slope * x`.
    LinearRamp { slope: f64 },
    /// Middle-thirds staircase at a finite level: `2^level` jumps of size
    /// `2^-level`, placed at the midpoints of the level's remaining intervals.
    CantorApproximant { level: u32 },
    /// Indicator of `[lo, hi)`.
    Indicator { lo: f64, hi: f64 },
}

/// Tagged representation of a measurable one-dimensional function.
#[derive(Debug, Clone, PartialEq)]
pub enum Function1D {
    Step(StepFunction),
    PiecewiseLinear(PiecewiseLinear),
    GridSamples(GridSamples),
    Analytic(Profile),
}

/// The three parts of the total variation of a BV function.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BVDecomposition {
    pub absolutely_continuous: f64,
    pub jump: f64,
    pub cantor: f64,
}

impl BVDecomposition {
    pub fn total(&self) -> f64 {
        self.absolutely_continuous + self.jump + self.cantor
    }
}

const MAX_CANTOR_LEVEL: u32 = 24;

impl Function1D {
    pub fn step(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        StepFunction::new(breakpoints, values).map(Self::Step)
    }

    pub fn piecewise_linear(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        PiecewiseLinear::new(knots, values).map(Self::PiecewiseLinear)
    }

    pub fn grid_samples(lo: f64, hi: f64, samples: Vec<f64>) -> Result<Self> {
        GridSamples::new(lo, hi, samples).map(Self::GridSamples)
    }

    pub fn linear_ramp(slope: f64) -> Result<Self> {
        if !slope.is_finite() {
            return Err(Error::InvalidFunction("ramp slope must be finite".into()));
        }
        Ok(Self::Analytic(Profile::LinearRamp { slope }))
    }

    pub fn cantor(level: u32) -> Result<Self> {
        if level > MAX_CANTOR_LEVEL {
            return Err(Error::InvalidFunction(format!(
                "cantor level {level} exceeds the supported maximum {MAX_CANTOR_LEVEL}"
            )));
        }
        Ok(Self::Analytic(Profile::CantorApproximant { level }))
    }

    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidFunction(format!("bad indicator interval [{lo}, {hi})")));
        }
        Ok(Self::Analytic(Profile::Indicator { lo, hi }))
    }

    /// Unit step `0 -> 1` at `at`.
    pub fn unit_step(at: f64) -> Result<Self> {
        Self::step(vec![at], vec![0.0, 1.0])
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Self::Step(_) => "step",
            Self::PiecewiseLinear(_) => "piecewise_linear",
            Self::GridSamples(_) => "grid_samples",
            Self::Analytic(Profile::LinearRamp { .. }) => "linear_ramp",
            Self::Analytic(Profile::CantorApproximant { .. }) => "cantor",
            Self::Analytic(Profile::Indicator { .. }) => "indicator",
        }
    }

    /// Closed interval on which the function is defined.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::PiecewiseLinear(pl) => (pl.knots[0], pl.knots[pl.knots.len() - 1]),
            Self::GridSamples(g) => (g.lo, g.hi),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        if !(x >= lo && x <= hi) {
            return Err(Error::OutsideDomain { x, lo, hi });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Point evaluation without the domain check. Callers guarantee that `x`
    /// lies in [`Function1D::support`].
    #[inline]
    pub fn eval_unchecked(&self, x: f64) -> f64 {
        match self {
            Self::Step(s) => s.eval(x),
            Self::PiecewiseLinear(pl) => pl.eval(x),
            Self::GridSamples(g) => g.eval(x),
            Self::Analytic(Profile::LinearRamp { slope }) => slope * x,
            Self::Analytic(Profile::CantorApproximant { level }) => cantor_eval(*level, x),
            Self::Analytic(Profile::Indicator { lo, hi }) => {
                if *lo <= x && x < *hi {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Checks that every interval of `dom` lies inside the support.
    pub fn check_domain(&self, dom: &Domain1D) -> Result<()> {
        let (lo, hi) = self.support();
        let (a, b) = dom.hull();
        if a < lo {
            return Err(Error::OutsideDomain { x: a, lo, hi });
        }
        if b > hi {
            return Err(Error::OutsideDomain { x: b, lo, hi });
        }
        Ok(())
    }

    /// The step-function form of the piecewise-constant variants
    /// (step, Cantor approximant, indicator, grid samples).
    pub fn as_step(&self) -> Option<StepFunction> {
        match self {
            Self::Step(s) => Some(s.clone()),
            Self::GridSamples(g) => Some(g.to_step()),
            Self::Analytic(Profile::CantorApproximant { level }) => Some(cantor_step(*level)),
            Self::Analytic(Profile::Indicator { lo, hi }) => {
                Some(StepFunction { breakpoints: vec![*lo, *hi], values: vec![0.0, 1.0, 0.0] })
            }
            _ => None,
        }
    }

    pub fn is_piecewise_constant(&self) -> bool {
        self.as_step().is_some()
    }

    /// Points strictly inside `(lo, hi)` where the function jumps or has a kink.
    pub fn breakpoints_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let inside = |b: &f64| lo < *b && *b < hi;
        match self {
            Self::PiecewiseLinear(pl) => pl.knots.iter().copied().filter(inside).collect(),
            Self::Analytic(Profile::LinearRamp { .. }) => Vec::new(),
            _ => {
                let s = self.as_step().expect("piecewise-constant variant");
                s.breakpoints.iter().copied().filter(inside).collect()
            }
        }
    }

    /// Slope of the function if it is affine on the hull of `dom`.
    pub fn affine_slope_on(&self, dom: &Domain1D) -> Option<f64> {
        let (a, b) = dom.hull();
        match self {
            Self::Analytic(Profile::LinearRamp { slope }) => Some(*slope),
            Self::PiecewiseLinear(pl) => {
                let mut slopes = pl.segments_on(a, b).map(|(_, s)| s);
                let first = slopes.next()?;
                slopes.all(|s| s == first).then_some(first)
            }
            _ => {
                let s = self.as_step()?;
                (s.pieces_on(a, b).len() == 1).then_some(0.0)
            }
        }
    }

    /// `(min, max)` of the function over `dom`, ignoring values taken only on
    /// null sets.
    pub fn range_on(&self, dom: &Domain1D) -> Result<(f64, f64)> {
        self.check_domain(dom)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut push = |v: f64| {
            lo = lo.min(v);
            hi = hi.max(v);
        };
        for &(a, b) in dom.intervals() {
            match self {
                Self::Analytic(Profile::LinearRamp { slope }) => {
                    push(slope * a);
                    push(slope * b);
                }
                Self::PiecewiseLinear(pl) => {
                    push(pl.eval(a));
                    push(pl.eval(b));
                    for k in self.breakpoints_in(a, b) {
                        push(pl.eval(k));
                    }
                }
                _ => {
                    let s = self.as_step().expect("piecewise-constant variant");
                    for (_, _, v) in s.pieces_on(a, b) {
                        push(v);
                    }
                }
            }
        }
        Ok((lo, hi))
    }

    /// Lebesgue measure of `{x in (lo, hi) : u(x) != value}`.
    pub fn mismatch_measure(&self, lo: f64, hi: f64, value: f64) -> Result<f64> {
        let dom = Domain1D::interval(lo, hi)?;
        self.check_domain(&dom)?;
        Ok(match self {
            Self::Analytic(Profile::LinearRamp { slope }) => {
                if *slope == 0.0 && value == 0.0 {
                    0.0
                } else {
                    hi - lo
                }
            }
            Self::PiecewiseLinear(pl) => (0..pl.knots.len() - 1)
                .filter_map(|s| {
                    let len = pl.knots[s + 1].min(hi) - pl.knots[s].max(lo);
                    let flat_match = pl.values[s] == value && pl.values[s + 1] == value;
                    (len > 0.0 && !flat_match).then_some(len)
                })
                .sum(),
            _ => {
                let s = self.as_step().expect("piecewise-constant variant");
                s.pieces_on(lo, hi)
                    .into_iter()
                    .filter(|&(_, _, v)| v != value)
                    .map(|(a, b, _)| b - a)
                    .sum()
            }
        })
    }

    /// The function `t -> u(shift + scale * t)` restricted to `t in [t0, t1]`.
    pub fn compose_affine(&self, scale: f64, shift: f64, t0: f64, t1: f64) -> Result<Function1D> {
        if !(scale.is_finite() && scale != 0.0) {
            return Err(Error::InvalidFunction("affine reparametrisation needs a nonzero scale".into()));
        }
        if !(t1 > t0) {
            return Err(Error::InvalidFunction(format!("empty parameter range [{t0}, {t1}]")));
        }
        let to_t = |x: f64| (x - shift) / scale;
        match self {
            Self::Analytic(Profile::LinearRamp { slope }) => Function1D::piecewise_linear(
                vec![t0, t1],
                vec![slope * (shift + scale * t0), slope * (shift + scale * t1)],
            ),
            Self::PiecewiseLinear(pl) => {
                let mut pts: Vec<(f64, f64)> =
                    pl.knots.iter().zip(&pl.values).map(|(&k, &v)| (to_t(k), v)).collect();
                if scale < 0.0 {
                    pts.reverse();
                }
                let (knots, values) = pts.into_iter().unzip();
                Function1D::piecewise_linear(knots, values)
            }
            _ => {
                let s = self.as_step().expect("piecewise-constant variant");
                let mut bps: Vec<f64> = s.breakpoints.iter().map(|&b| to_t(b)).collect();
                let mut vals = s.values.clone();
                if scale < 0.0 {
                    bps.reverse();
                    vals.reverse();
                }
                // Drop breakpoints that collapse under rounding.
                let mut out_b = Vec::with_capacity(bps.len());
                let mut out_v = vec![vals[0]];
                for (i, b) in bps.into_iter().enumerate() {
                    if out_b.last().is_some_and(|&l| b <= l) {
                        *out_v.last_mut().unwrap() = vals[i + 1];
                        continue;
                    }
                    out_b.push(b);
                    out_v.push(vals[i + 1]);
                }
                Function1D::step(out_b, out_v)
            }
        }
    }
}

fn check_strictly_increasing(xs: &[f64], what: &str) -> Result<()> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidFunction(format!("{what} must be finite")));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidFunction(format!("{what} must be strictly increasing")));
    }
    Ok(())
}

fn cantor_jump_positions(level: u32) -> Vec<f64> {
    let n = 1usize << level;
    let width = 3f64.powi(-(level as i32));
    (0..n)
        .map(|j| {
            let mut left = 0.0;
            let mut scale = 1.0 / 3.0;
            for bit in (0..level).rev() {
                if (j >> bit) & 1 == 1 {
                    left += 2.0 * scale;
                }
                scale /= 3.0;
            }
            left + 0.5 * width
        })
        .collect()
}

fn cantor_step(level: u32) -> StepFunction {
    let breakpoints = cantor_jump_positions(level);
    let n = breakpoints.len();
    let values = (0..=n).map(|j| j as f64 / n as f64).collect();
    StepFunction { breakpoints, values }
}

fn cantor_eval(level: u32, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    // Walk the ternary expansion: a digit 1 means x sits in a removed gap.
    let mut acc = 0.0;
    let mut step = 0.5;
    let mut y = x;
    for _ in 0..level {
        y *= 3.0;
        let digit = y.floor();
        y -= digit;
        if digit >= 2.0 {
            acc += step;
        } else if digit >= 1.0 {
            return acc + step;
        }
        step *= 0.5;
    }
    // Inside a remaining interval at the final level: the jump sits at its midpoint.
    if y >= 0.5 {
        acc + 2.0 * step
    } else {
        acc
    }
}

/// The local energy `F_p(u, dom)`: `int |u'|^p` for Sobolev functions, the
/// total variation when `p = 1`, and `+inf` for jumps when `p > 1`. Grid
/// samples with `p > 1` use the discrete energy `sum |du/dx|^p dx`.
pub fn local_energy(f: &Function1D, dom: &Domain1D, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParams(format!("p must be >= 1, got {p}")));
    }
    f.check_domain(dom)?;
    let mut total = 0.0;
    for &(a, b) in dom.intervals() {
        total += match f {
            Function1D::Analytic(Profile::LinearRamp { slope }) => slope.abs().powf(p) * (b - a),
            Function1D::PiecewiseLinear(pl) => {
                pl.segments_on(a, b).map(|(len, s)| s.abs().powf(p) * len).sum()
            }
            Function1D::GridSamples(g) => {
                let h = g.cell_width();
                let s = g.to_step();
                s.jumps_in(a, b).map(|(_, j)| j.abs().powf(p) / h.powf(p - 1.0)).sum()
            }
            _ => {
                let s = f.as_step().expect("piecewise-constant variant");
                let jumps: f64 = s.jumps_in(a, b).map(|(_, j)| j.abs()).sum();
                if p == 1.0 {
                    jumps
                } else if jumps > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
        };
    }
    Ok(total)
}

/// Splits the total variation of `f` on `dom` into absolutely continuous,
/// jump and Cantor parts. The finite-level Cantor approximant reports its
/// variation as Cantor part.
pub fn bv_decompose(f: &Function1D, dom: &Domain1D) -> Result<BVDecomposition> {
    if matches!(f, Function1D::GridSamples(_)) {
        return Err(Error::UnsupportedVariant(
            "grid samples have no canonical BV decomposition".into(),
        ));
    }
    let tv = local_energy(f, dom, 1.0)?;
    let mut d = BVDecomposition::default();
    match f {
        Function1D::Analytic(Profile::LinearRamp { .. }) | Function1D::PiecewiseLinear(_) => {
            d.absolutely_continuous = tv
        }
        Function1D::Analytic(Profile::CantorApproximant { .. }) => d.cantor = tv,
        _ => d.jump = tv,
    }
    Ok(d)
}

/// `sum_i |u_{i+1} - u_i|^p / (x_{i+1} - x_i)^(p-1)` over a sorted point list.
pub fn fp_from_points(points: &[(f64, f64)], p: f64) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Precondition("at least two points are required".into()));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParams(format!("p must be >= 1, got {p}")));
    }
    let mut sum = 0.0;
    for w in points.windows(2) {
        let dx = w[1].0 - w[0].0;
        if !(dx > 0.0) {
            return Err(Error::Precondition(format!(
                "abscissae must be strictly increasing: {} then {}",
                w[0].0, w[1].0
            )));
        }
        sum += (w[1].1 - w[0].1).abs().powf(p) / dx.powf(p - 1.0);
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Domain1D {
        Domain1D::interval(0.0, 1.0).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(FunctionalParams::one_dim(1.0, 1.0, 1.0).is_ok());
        assert!(FunctionalParams::one_dim(0.0, 1.0, 1.0).is_err());
        assert!(FunctionalParams::one_dim(1.0, 0.5, 1.0).is_err());
        assert!(FunctionalParams::one_dim(1.0, 1.0, 0.0).is_err());
        assert!(FunctionalParams::new(1.0, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn domain_validation() {
        assert!(Domain1D::new(vec![(0.0, 1.0), (2.0, 3.0)]).is_ok());
        assert!(Domain1D::new(vec![(0.0, 1.0), (0.5, 3.0)]).is_err());
        assert!(Domain1D::new(vec![(1.0, 1.0)]).is_err());
        assert!(Domain1D::new(vec![]).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let ramp = Function1D::linear_ramp(1.0).unwrap();
        assert_eq!(ramp.evaluate(0.3).unwrap(), 0.3);
        let step = Function1D::unit_step(0.5).unwrap();
        assert_eq!(step.evaluate(0.25).unwrap(), 0.0);
        assert_eq!(step.evaluate(0.5).unwrap(), 1.0, "right-continuous");
        let c1 = Function1D::cantor(1).unwrap();
        assert_eq!(c1.evaluate(0.5).unwrap(), 0.5);
    }

    #[test]
    fn evaluate_outside_support() {
        let pl = Function1D::piecewise_linear(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap();
        assert_eq!(pl.evaluate(0.5).unwrap(), 1.0);
        assert!(matches!(pl.evaluate(1.5), Err(Error::OutsideDomain { .. })));
        let g = Function1D::grid_samples(0.0, 1.0, vec![1.0, 2.0]).unwrap();
        assert!(g.evaluate(-0.1).is_err());
        assert_eq!(g.evaluate(0.2).unwrap(), 1.0);
        assert_eq!(g.evaluate(0.5).unwrap(), 2.0);
    }

    #[test]
    fn cantor_eval_matches_step_form() {
        for level in 0..7 {
            let f = Function1D::cantor(level).unwrap();
            let s = f.as_step().unwrap();
            for i in 0..=2000 {
                let x = -0.1 + 1.2 * i as f64 / 2000.0;
                assert_eq!(f.eval_unchecked(x), s.eval(x), "level {level}, x {x}");
            }
        }
    }

    #[test]
    fn invalid_constructions() {
        assert!(Function1D::step(vec![0.5, 0.5], vec![0.0, 1.0, 2.0]).is_err());
        assert!(Function1D::step(vec![0.5], vec![0.0]).is_err());
        assert!(Function1D::piecewise_linear(vec![0.0], vec![0.0]).is_err());
        assert!(Function1D::grid_samples(0.0, 1.0, vec![1.0]).is_err());
        assert!(Function1D::indicator(1.0, 0.0).is_err());
    }

    #[test]
    fn local_energy_examples() {
        let ramp = Function1D::linear_ramp(1.0).unwrap();
        assert_eq!(local_energy(&ramp, &unit(), 2.0).unwrap(), 1.0);
        let step = Function1D::unit_step(0.5).unwrap();
        assert_eq!(local_energy(&step, &unit(), 1.0).unwrap(), 1.0);
        assert_eq!(local_energy(&step, &unit(), 2.0).unwrap(), f64::INFINITY);
        // A jump outside the domain does not count.
        let d = Domain1D::interval(0.6, 1.0).unwrap();
        assert_eq!(local_energy(&step, &d, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn local_energy_grid_is_discrete_dirichlet() {
        let g = Function1D::grid_samples(0.0, 1.0, vec![0.0, 0.25, 0.5, 0.75]).unwrap();
        // three increments of 0.25 over spacing 0.25: 3 * 0.25^2 / 0.25
        let e = local_energy(&g, &unit(), 2.0).unwrap();
        assert!((e - 0.75).abs() < 1e-15);
        assert!((local_energy(&g, &unit(), 1.0).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn bv_decompose_examples() {
        let ramp = Function1D::linear_ramp(2.0).unwrap();
        let d = bv_decompose(&ramp, &unit()).unwrap();
        assert_eq!(d, BVDecomposition { absolutely_continuous: 2.0, jump: 0.0, cantor: 0.0 });
        let step = Function1D::step(vec![0.3, 0.6], vec![0.0, 1.0, 3.0]).unwrap();
        let d = bv_decompose(&step, &unit()).unwrap();
        assert_eq!(d, BVDecomposition { absolutely_continuous: 0.0, jump: 3.0, cantor: 0.0 });
        let c = Function1D::cantor(3).unwrap();
        let d = bv_decompose(&c, &unit()).unwrap();
        assert!((d.cantor - 1.0).abs() < 1e-15 && d.jump == 0.0 && d.absolutely_continuous == 0.0);
        let g = Function1D::grid_samples(0.0, 1.0, vec![0.0, 1.0]).unwrap();
        assert!(matches!(bv_decompose(&g, &unit()), Err(Error::UnsupportedVariant(_))));
    }

    #[test]
    fn fp_from_points_examples() {
        let pts: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64 / 10.0, i as f64 / 10.0)).collect();
        assert!((fp_from_points(&pts, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(fp_from_points(&[(0.0, 0.0), (1.0, 5.0)], 1.0).unwrap(), 5.0);
        assert_eq!(fp_from_points(&[(0.0, 0.0), (2.0, 2.0)], 3.0).unwrap(), 2.0);
        assert!(fp_from_points(&[(0.0, 0.0), (0.0, 1.0)], 1.0).is_err());
        assert!(fp_from_points(&[(0.0, 0.0)], 1.0).is_err());
    }

    #[test]
    fn step_energy_equals_jump_part() {
        let step = Function1D::step(vec![0.1, 0.4, 0.8], vec![1.0, -1.0, 0.5, 0.25]).unwrap();
        let e = local_energy(&step, &unit(), 1.0).unwrap();
        assert_eq!(e, bv_decompose(&step, &unit()).unwrap().jump);
    }

    #[test]
    fn pieces_cover_interval() {
        let s = StepFunction::new(vec![0.2, 0.5], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.pieces_on(0.0, 1.0), vec![(0.0, 0.2, 1.0), (0.2, 0.5, 2.0), (0.5, 1.0, 3.0)]);
        assert_eq!(s.pieces_on(0.3, 0.4), vec![(0.3, 0.4, 2.0)]);
        assert_eq!(s.pieces_on(0.2, 0.4), vec![(0.2, 0.4, 2.0)]);
    }

    #[test]
    fn compose_affine_of_step_reverses() {
        let s = Function1D::step(vec![1.0], vec![0.0, 1.0]).unwrap();
        let r = s.compose_affine(-1.0, 0.0, -2.0, 0.0).unwrap();
        assert_eq!(r.evaluate(-1.5).unwrap(), 1.0);
        assert_eq!(r.evaluate(-0.5).unwrap(), 0.0);
    }

    #[test]
    fn mismatch_measure_for_variants() {
        let s = Function1D::unit_step(1.5).unwrap();
        assert_eq!(s.mismatch_measure(0.0, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(s.mismatch_measure(1.0, 2.0, 0.0).unwrap(), 0.5);
        let pl = Function1D::piecewise_linear(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(pl.mismatch_measure(0.0, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(pl.mismatch_measure(0.5, 1.5, 0.0).unwrap(), 0.5);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn fp_of_ramp_is_partition_independent(
                mut xs in proptest::collection::vec(0.0f64..1.0, 0..20),
                slope in -3.0f64..3.0,
                p in 1.0f64..4.0,
            ) {
                xs.push(0.0);
                xs.push(1.0);
                xs.sort_by(f64::total_cmp);
                xs.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
                let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, slope * x)).collect();
                let v = fp_from_points(&pts, p).unwrap();
                let exact = slope.abs().powf(p);
                prop_assert!((v - exact).abs() <= 1e-9 * exact.max(1.0));
            }

            #[test]
            fn fp_subpartition_bounded(
                mut pts in proptest::collection::vec((0.0f64..1.0, -1.0f64..1.0), 3..15),
                p in 1.0f64..3.0,
                drop in 1usize..13,
            ) {
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-6);
                prop_assume!(pts.len() >= 3);
                let k = 1 + drop % (pts.len() - 2);
                let full = fp_from_points(&pts, p).unwrap();
                let mut sub = pts.clone();
                sub.remove(k);
                let merged = fp_from_points(&sub, p).unwrap();
                let omitted = fp_from_points(&pts[k - 1..=k + 1], p).unwrap();
                let bridged = fp_from_points(&[pts[k - 1], pts[k + 1]], p).unwrap();
                // Removing a point replaces two segments with their chord.
                let tol = 1e-12 * full.max(1.0);
                prop_assert!(merged <= full - omitted + bridged + tol);
                prop_assert!(bridged <= omitted + tol);
            }

            #[test]
            fn evaluate_is_deterministic(x in -2.0f64..2.0, level in 0u32..8) {
                let f = Function1D::cantor(level).unwrap();
                prop_assert_eq!(f.evaluate(x).unwrap(), f.evaluate(x).unwrap());
            }
        }
    }
}
