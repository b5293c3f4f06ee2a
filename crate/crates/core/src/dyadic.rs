//! The dyadic functional `DF`, the representation of `F` as an average of
//! dyadic functionals, and the visible/important interval classifier.
//!
//! Dyadic points are handled through integer indices: the point `j / 2^m`
//! of a depth-`m` sample is stored at `values[j - first]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functional_1d::{require_1d, Estimate};
use crate::model::{Domain1D, FunctionalParams, Function1D};
use crate::numerics::pairwise_sum;
use crate::nu_kernel::threshold;

/// Deepest supported sample. Indices `j` up to `|x| 2^m` stay exact in f64.
pub const MAX_DEPTH: u32 = 40;

/// `DF`'s sum over `k` is cut at the sample depth; the tail is bounded by
/// `(b - a) 2^(-m gamma) / (2^gamma - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfValue {
    pub value: f64,
    pub tail_bound: f64,
}

/// Values of `v` at every point `j / 2^depth` strictly inside `(a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicSample {
    interval: (f64, f64),
    depth: u32,
    first: i64,
    values: Vec<f64>,
}

fn dyadic_scale(k: u32) -> f64 {
    2f64.powi(k as i32)
}

/// Indices `j` with `a < j / 2^m < b`.
fn interior_points(a: f64, b: f64, m: u32) -> (i64, i64) {
    let s = dyadic_scale(m);
    ((a * s).floor() as i64 + 1, (b * s).ceil() as i64 - 1)
}

impl DyadicSample {
    /// `values[0]` belongs to the first dyadic point of depth `depth` in `(a, b)`.
    pub fn new(interval: (f64, f64), depth: u32, values: Vec<f64>) -> Result<Self> {
        let (a, b) = interval;
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidDomain(format!("dyadic sample needs a < b, got ({a}, {b})")));
        }
        if depth > MAX_DEPTH {
            return Err(Error::InvalidParams(format!("depth {depth} exceeds {MAX_DEPTH}")));
        }
        let (first, last) = interior_points(a, b, depth);
        let expected = (last - first + 1).max(0) as usize;
        if values.len() != expected {
            return Err(Error::InvalidFunction(format!(
                "dyadic sample on ({a}, {b}) at depth {depth} needs {expected} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction("dyadic sample values must be finite".into()));
        }
        Ok(Self { interval, depth, first, values })
    }

    /// Samples `g(q)` at every depth-`depth` point `q` of `(a, b)`.
    pub fn from_fn(interval: (f64, f64), depth: u32, g: impl Fn(f64) -> f64) -> Result<Self> {
        let (a, b) = interval;
        if !(b > a) || depth > MAX_DEPTH {
            return Self::new(interval, depth, Vec::new());
        }
        let (first, last) = interior_points(a, b, depth);
        let h = 1.0 / dyadic_scale(depth);
        let values = (first..=last).map(|j| g(j as f64 * h)).collect();
        Self::new(interval, depth, values)
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Index range `(first, last)` of the stored depth-`m` points.
    pub fn index_range(&self) -> (i64, i64) {
        (self.first, self.first + self.values.len() as i64 - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `v(i / 2^k)` for `k <= depth`, if the point is stored.
    pub fn at(&self, i: i64, k: u32) -> Option<f64> {
        if k > self.depth {
            return None;
        }
        let j = i.checked_mul(1i64 << (self.depth - k))?;
        let off = j.checked_sub(self.first)?;
        usize::try_from(off).ok().and_then(|o| self.values.get(o)).copied()
    }

    fn at_unchecked(&self, i: i64, k: u32) -> f64 {
        self.values[((i << (self.depth - k)) - self.first) as usize]
    }

    pub fn range(&self) -> Option<(f64, f64)> {
        if self.values.is_empty() {
            return None;
        }
        Some(self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))))
    }
}

/// The rescaled window `((a - x) / delta, (b - x) / delta)` seen from `x` at
/// scale `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceWindow {
    pub x: f64,
    pub delta: f64,
    pub a_xd: f64,
    pub b_xd: f64,
}

impl SliceWindow {
    pub fn new(x: f64, delta: f64, interval: (f64, f64)) -> Result<Self> {
        if !(0.5..=1.0).contains(&delta) {
            return Err(Error::Precondition(format!("window scale must lie in [1/2, 1], got {delta}")));
        }
        let (a, b) = interval;
        if !(b > a) {
            return Err(Error::InvalidDomain(format!("window needs a < b, got ({a}, {b})")));
        }
        Ok(Self { x, delta, a_xd: (a - x) / delta, b_xd: (b - x) / delta })
    }

    /// `v_{x,delta}(q) = u(x + q delta)` on the window at the given depth.
    pub fn sample(&self, f: &Function1D, depth: u32) -> Result<DyadicSample> {
        DyadicSample::from_fn((self.a_xd, self.b_xd), depth, |q| f.eval_unchecked(self.x + q * self.delta))
    }
}

/// Integers `i` with the closed interval `[i / 2^k, (i + 1) / 2^k]` inside
/// the open interval `(a, b)`. May be empty.
pub fn dyadic_index_set(interval: (f64, f64), k: u32) -> std::ops::RangeInclusive<i64> {
    let (a, b) = interval;
    let s = dyadic_scale(k);
    let lo = (a * s).floor() as i64 + 1;
    let hi = (b * s).ceil() as i64 - 2;
    lo..=hi
}

/// Upper bound on the part of `DF` at depths beyond `m`.
pub fn df_tail_bound(gamma: f64, length: f64, m: u32) -> f64 {
    length * 2f64.powf(-(m as f64) * gamma) / pow2_minus_one(gamma)
}

/// `2^g - 1` without cancellation for small `g`.
fn pow2_minus_one(g: f64) -> f64 {
    (g * std::f64::consts::LN_2).exp_m1()
}

/// The dyadic functional of `v` at scale `delta`, summed over depths
/// `0..=v.depth()`, with the tail bound for the remaining depths.
pub fn df(params: &FunctionalParams, delta: f64, v: &DyadicSample) -> Result<DfValue> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Precondition(format!("delta must be positive, got {delta}")));
    }
    let m = v.depth;
    let mut terms = Vec::with_capacity(m as usize + 1);
    for k in 0..=m {
        let t = threshold(params, delta / dyadic_scale(k));
        let mut count = 0u64;
        for i in dyadic_index_set(v.interval, k) {
            if (v.at_unchecked(i + 1, k) - v.at_unchecked(i, k)).abs() > t {
                count += 1;
            }
        }
        terms.push(count as f64 * 2f64.powf(-(k as f64) * (params.gamma() + 1.0)));
    }
    let (a, b) = v.interval;
    Ok(DfValue { value: pairwise_sum(&terms), tail_bound: df_tail_bound(params.gamma(), b - a, m) })
}

/// Visible intervals `V_k` (depths `0..=m`) and important intervals `I_k`
/// (depths `0..m`; depth-`h` importance inspects halves at `h + 1`), all
/// inside `[alpha, beta]`. Entries are absolute indices `i` of
/// `[i / 2^k, (i + 1) / 2^k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalClassification {
    pub alpha: i64,
    pub beta: i64,
    pub visible: Vec<Vec<i64>>,
    pub important: Vec<Vec<i64>>,
    pub max_depth: u32,
    /// Depth-`m` intervals in `[alpha, beta]` not inside any important interval.
    pub remainder: Vec<i64>,
}

fn check_window(v: &DyadicSample, alpha: i64, beta: i64) -> Result<()> {
    let (a, b) = v.interval;
    if !(a < alpha as f64 && alpha < beta && (beta as f64) < b) {
        return Err(Error::Precondition(format!("need a < alpha < beta < b, got a={a}, alpha={alpha}, beta={beta}, b={b}")));
    }
    Ok(())
}

fn pinned_values(v: &DyadicSample, alpha: i64, beta: i64) -> Result<(f64, f64)> {
    check_window(v, alpha, beta)?;
    let a = v.at(alpha, 0).ok_or_else(|| Error::Precondition(format!("v({alpha}) is not sampled")))?;
    let b = v.at(beta, 0).ok_or_else(|| Error::Precondition(format!("v({beta}) is not sampled")))?;
    Ok((a, b))
}

fn oscillation_threshold(params: &FunctionalParams) -> f64 {
    2f64.powf(params.threshold_exponent())
}

/// Runs the recursive visible/important classification on `[alpha, beta]`.
pub fn classify(params: &FunctionalParams, delta: f64, v: &DyadicSample, alpha: i64, beta: i64) -> Result<IntervalClassification> {
    if !(0.5..=1.0).contains(&delta) {
        return Err(Error::Precondition(format!("delta must lie in [1/2, 1], got {delta}")));
    }
    pinned_values(v, alpha, beta)?;
    let (lo, hi) = v.range().expect("window check guarantees samples");
    let need = oscillation_threshold(params) * (hi - lo);
    if params.lambda() < need {
        return Err(Error::Hypothesis(format!(
            "lambda = {} is below 2^(1+gamma/p) (B - A) = {need}",
            params.lambda()
        )));
    }
    let m = v.depth;
    let is_visible = |i: i64, k: u32| -> bool {
        (v.at_unchecked(i + 1, k) - v.at_unchecked(i, k)).abs() > threshold(params, delta / dyadic_scale(k))
    };
    let mut visible = Vec::with_capacity(m as usize + 1);
    let mut important = Vec::with_capacity(m as usize);
    // covered[l] is set when the l-th interval of the current depth lies in
    // an important interval of smaller depth.
    let mut covered = vec![false; (beta - alpha) as usize];
    for k in 0..=m {
        let base = alpha << k;
        let vis: Vec<bool> = (0..covered.len()).map(|l| is_visible(base + l as i64, k)).collect();
        visible.push(vis.iter().enumerate().filter(|&(_, &x)| x).map(|(l, _)| base + l as i64).collect());
        if k == m {
            let remainder = covered.iter().enumerate().filter(|&(_, &c)| !c).map(|(l, _)| base + l as i64).collect();
            return Ok(IntervalClassification { alpha, beta, visible, important, max_depth: m, remainder });
        }
        let mut imp = Vec::new();
        let mut next = vec![false; 2 * covered.len()];
        for l in 0..covered.len() {
            let i = base + l as i64;
            let here = !vis[l] && !covered[l] && (is_visible(2 * i, k + 1) || is_visible(2 * i + 1, k + 1));
            if here {
                imp.push(i);
            }
            let c = covered[l] || here;
            next[2 * l] = c;
            next[2 * l + 1] = c;
        }
        important.push(imp);
        covered = next;
    }
    unreachable!("loop returns at depth m")
}

/// Right-hand side of the oscillation estimate:
/// `(B - A)^p / ((2^(gamma+1) - 1) lambda^p delta^(p+gamma) (beta - alpha)^(p-1))`.
pub fn oscillation_lower_bound(params: &FunctionalParams, delta: f64, big_a: f64, big_b: f64, alpha: i64, beta: i64) -> Result<f64> {
    if !(big_b >= big_a) {
        return Err(Error::Precondition(format!("need B >= A, got A={big_a}, B={big_b}")));
    }
    if beta <= alpha {
        return Err(Error::Precondition(format!("need beta > alpha, got alpha={alpha}, beta={beta}")));
    }
    if !(0.5..=1.0).contains(&delta) {
        return Err(Error::Precondition(format!("delta must lie in [1/2, 1], got {delta}")));
    }
    let need = oscillation_threshold(params) * (big_b - big_a);
    if params.lambda() < need {
        return Err(Error::Hypothesis(format!("lambda = {} is below 2^(1+gamma/p) (B - A) = {need}", params.lambda())));
    }
    let (g, p) = (params.gamma(), params.p());
    let c = 1.0 / pow2_minus_one(g + 1.0);
    Ok(c * (big_b - big_a).powf(p) / (params.lambda().powf(p) * delta.powf(p + g) * ((beta - alpha) as f64).powf(p - 1.0)))
}

/// Outcome of [`check_properties`]; each field is `None` when the property
/// holds, otherwise a description of the first failure.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropertyReport {
    pub disjoint_important: Option<String>,
    pub no_visible_at_depth_zero: Option<String>,
    pub visible_in_important: Option<String>,
    pub important_has_visible_descendants: Option<String>,
}

impl PropertyReport {
    pub fn all_hold(&self) -> bool {
        self.disjoint_important.is_none()
            && self.no_visible_at_depth_zero.is_none()
            && self.visible_in_important.is_none()
            && self.important_has_visible_descendants.is_none()
    }
}

/// Dyadic interval `[i / 2^k, (i + 1) / 2^k]` as an integer span at depth `m`.
fn span(i: i64, k: u32, m: u32) -> (i64, i64) {
    let s = 1i64 << (m - k);
    (i * s, (i + 1) * s)
}

/// Scans a classification for the four structural properties. Visible
/// intervals are checked up to the full depth `m`.
pub fn check_properties(c: &IntervalClassification) -> PropertyReport {
    let m = c.max_depth;
    let mut report = PropertyReport::default();
    let mut spans: Vec<(i64, i64, u32, i64)> = c
        .important
        .iter()
        .enumerate()
        .flat_map(|(k, is)| is.iter().map(move |&i| (i, k as u32)))
        .map(|(i, k)| {
            let (lo, hi) = span(i, k, m);
            (lo, hi, k, i)
        })
        .collect();
    spans.sort_unstable();
    for w in spans.windows(2) {
        if w[1].0 < w[0].1 {
            report.disjoint_important =
                Some(format!("important intervals ({}, depth {}) and ({}, depth {}) overlap", w[0].3, w[0].2, w[1].3, w[1].2));
            break;
        }
    }
    if let Some(&i) = c.visible.first().and_then(|v| v.first()) {
        report.no_visible_at_depth_zero = Some(format!("depth-0 interval {i} is visible"));
    }
    let owner = |lo: i64, hi: i64| -> Vec<(i64, i64, u32, i64)> {
        let idx = spans.partition_point(|s| s.1 <= lo);
        spans[idx..].iter().take_while(|s| s.0 < hi).filter(|s| s.0 <= lo && hi <= s.1).copied().collect()
    };
    'outer: for (k, vs) in c.visible.iter().enumerate() {
        for &i in vs {
            let (lo, hi) = span(i, k as u32, m);
            let owners: Vec<_> = owner(lo, hi).into_iter().filter(|s| s.2 < k as u32).collect();
            if owners.len() != 1 {
                report.visible_in_important =
                    Some(format!("visible interval {i} at depth {k} lies in {} important intervals", owners.len()));
                break 'outer;
            }
        }
    }
    'outer2: for &(lo, hi, k, i) in &spans {
        for h in k + 1..=m {
            let vs = &c.visible[h as usize];
            let s = 1i64 << (m - h);
            let first = vs.partition_point(|&j| j * s < lo);
            if !vs.get(first).is_some_and(|&j| (j + 1) * s <= hi) {
                report.important_has_visible_descendants =
                    Some(format!("important interval {i} at depth {k} has no visible interval at depth {h}"));
                break 'outer2;
            }
        }
    }
    report
}

/// Both sides of the chain estimate at finite depth:
/// `(B - A)^p <= lambda^p delta^(p+gamma) (beta - alpha)^(p-1)
///   [sum_{k<m} |I_k| / 2^(k(gamma+1)) + |R_m| / 2^(m(gamma+1))]`,
/// where `R_m` are the depth-`m` intervals left uncovered by important ones.
pub fn holder_chain_sides(params: &FunctionalParams, delta: f64, v: &DyadicSample, c: &IntervalClassification) -> Result<(f64, f64)> {
    let (va, vb) = pinned_values(v, c.alpha, c.beta)?;
    let (g, p) = (params.gamma(), params.p());
    let lhs = (vb - va).abs().powf(p);
    let mut terms: Vec<f64> = c
        .important
        .iter()
        .enumerate()
        .map(|(k, is)| is.len() as f64 * 2f64.powf(-(k as f64) * (g + 1.0)))
        .collect();
    terms.push(c.remainder.len() as f64 * 2f64.powf(-(c.max_depth as f64) * (g + 1.0)));
    let rhs = params.lambda().powf(p) * delta.powf(p + g) * ((c.beta - c.alpha) as f64).powf(p - 1.0) * pairwise_sum(&terms);
    Ok((lhs, rhs))
}

/// Grid for [`representation_integral`]: uniform midpoint cells on
/// `delta in [1/2, 1]` and on `x in (0, delta)`, and the dyadic depth of
/// every sampled `v_{x,delta}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepresentationResolution {
    pub depth: u32,
    pub delta_nodes: usize,
    pub x_nodes: usize,
}

impl Default for RepresentationResolution {
    fn default() -> Self {
        Self { depth: 12, delta_nodes: 16, x_nodes: 16 }
    }
}

fn representation_once(params: &FunctionalParams, f: &Function1D, interval: (f64, f64), res: &RepresentationResolution) -> Result<f64> {
    let g = params.gamma();
    let nd = res.delta_nodes;
    let cells: Vec<(usize, usize)> = (0..nd).flat_map(|i| (0..res.x_nodes).map(move |j| (i, j))).collect();
    let values: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| -> Result<f64> {
            let d0 = 0.5 + 0.5 * i as f64 / nd as f64;
            let d1 = 0.5 + 0.5 * (i + 1) as f64 / nd as f64;
            let delta = 0.5 * (d0 + d1);
            let w_delta = (d1.powf(g) - d0.powf(g)) / g;
            let hx = delta / res.x_nodes as f64;
            let x = (j as f64 + 0.5) * hx;
            let window = SliceWindow::new(x, delta, interval)?;
            let v = window.sample(f, res.depth)?;
            Ok(w_delta * hx * df(params, delta, &v)?.value)
        })
        .collect::<Result<_>>()?;
    Ok(2.0 * params.lambda().powf(params.p()) * pairwise_sum(&values))
}

/// Numerical value of
/// `2 lambda^p int_{1/2}^1 delta^(gamma-1) int_0^delta DF(delta, v_{x,delta}, (a_{x,delta}, b_{x,delta})) dx ddelta`.
///
/// The error combines the difference to a half-resolution run with the
/// integrated tail bound of the depth truncation.
pub fn representation_integral(
    params: &FunctionalParams,
    f: &Function1D,
    dom: &Domain1D,
    res: &RepresentationResolution,
) -> Result<Estimate> {
    require_1d(params)?;
    f.check_domain(dom)?;
    let &[interval] = dom.intervals() else {
        return Err(Error::Precondition("representation needs a single interval".into()));
    };
    let (a, b) = interval;
    if b - a < 1.0 {
        return Err(Error::Precondition(format!("representation needs b - a >= 1, got {}", b - a)));
    }
    if res.delta_nodes < 2 || res.x_nodes < 2 || res.depth > MAX_DEPTH - 2 {
        return Err(Error::Precondition(format!("unusable representation resolution {res:?}")));
    }
    let (lo, hi) = f.range_on(dom)?;
    if params.lambda() < hi - lo {
        return Err(Error::Hypothesis(format!("lambda = {} is below B - A = {}", params.lambda(), hi - lo)));
    }
    let fine = representation_once(params, f, interval, res)?;
    let half = RepresentationResolution { delta_nodes: res.delta_nodes / 2, x_nodes: res.x_nodes / 2, ..*res };
    let coarse = representation_once(params, f, interval, &half)?;
    let g = params.gamma();
    // int_{1/2}^1 delta^(gamma-1) * delta * tail((b-a)/delta) ddelta
    let tail = 2.0 * params.lambda().powf(params.p()) * df_tail_bound(g, b - a, res.depth) * (1.0 - 2f64.powf(-g)) / g;
    Ok(Estimate { value: fine, error: (fine - coarse).abs() + tail })
}

/// One randomized instance for the oscillation-bound and classifier checks.
#[derive(Debug, Clone)]
pub struct WalkInstance {
    pub params: FunctionalParams,
    pub delta: f64,
    pub sample: DyadicSample,
    pub alpha: i64,
    pub beta: i64,
    pub big_a: f64,
    pub big_b: f64,
}

/// Smallest representable `lambda >= factor * 2^(1+gamma/p) (B - A)` for
/// which no depth-0 difference of size `B - A` is visible at `delta = 1/2`
/// through rounding.
pub fn hypothesis_lambda(gamma: f64, p: f64, factor: f64, spread: f64) -> f64 {
    let e = 1.0 + gamma / p;
    let mut lambda = factor * 2f64.powf(e) * spread;
    while lambda * 0.5f64.powf(e) < factor * spread || lambda < 2f64.powf(e) * spread {
        lambda = lambda.next_up();
    }
    lambda
}

/// Random walks on a depth-`m` grid, pinned to `A` at `alpha` and `B` at
/// `beta` by subtracting a linear bridge, then clamped to `[A, B]`.
pub fn walk_corpus(seed: u64, count: usize) -> Vec<WalkInstance> {
    const GAMMAS: [f64; 3] = [0.5, 1.0, 2.0];
    const PS: [f64; 2] = [1.0, 2.0];
    const FACTORS: [f64; 3] = [1.0, 2.0, 4.0];
    const DELTAS: [f64; 3] = [0.5, 0.75, 1.0];
    (0..count)
        .map(|n| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(n as u64);
            let gamma = GAMMAS[n % 3];
            let p = PS[(n / 3) % 2];
            let factor = FACTORS[(n / 6) % 3];
            let delta = DELTAS[(n / 18) % 3];
            let depth = rng.random_range(8..=10);
            let alpha = rng.random_range(-1..=1i64);
            let beta = alpha + rng.random_range(1..=3i64);
            let a = alpha as f64 - rng.random_range(0.05..1.0);
            let b = beta as f64 + rng.random_range(0.05..1.0);
            let big_a = rng.random_range(-1.0..1.0);
            let big_b = big_a + rng.random_range(0.1..2.0);
            let roughness = rng.random_range(0.0..3.0) * (big_b - big_a);
            let (first, last) = interior_points(a, b, depth);
            let n_pts = (last - first + 1) as usize;
            let step = roughness / ((n_pts as f64).sqrt());
            let mut walk = Vec::with_capacity(n_pts);
            let mut acc = 0.0;
            for _ in 0..n_pts {
                acc += step * rng.random_range(-1.0..1.0);
                walk.push(acc);
            }
            let s = dyadic_scale(depth);
            let ja = (alpha as f64 * s) as i64 - first;
            let jb = (beta as f64 * s) as i64 - first;
            let (wa, wb) = (walk[ja as usize], walk[jb as usize]);
            let values: Vec<f64> = walk
                .iter()
                .enumerate()
                .map(|(j, &w)| {
                    let t = (j as i64 - ja) as f64 / (jb - ja) as f64;
                    let bridge = w - wa - t * (wb - wa);
                    let v = if j as i64 == ja {
                        big_a
                    } else if j as i64 == jb {
                        big_b
                    } else {
                        big_a + t * (big_b - big_a) + bridge
                    };
                    v.clamp(big_a, big_b)
                })
                .collect();
            let sample = DyadicSample::new((a, b), depth, values).expect("corpus sample is consistent");
            let lambda = hypothesis_lambda(gamma, p, factor, big_b - big_a);
            let params = FunctionalParams::one_dim(gamma, p, lambda).expect("corpus parameters are valid");
            WalkInstance { params, delta, sample, alpha, beta, big_a, big_b }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional_1d::{f_exact_affine, f_exact_step};

    fn params(g: f64, p: f64, l: f64) -> FunctionalParams {
        FunctionalParams::one_dim(g, p, l).unwrap()
    }

    #[test]
    fn index_set_examples() {
        assert!(dyadic_index_set((0.0, 1.0), 0).is_empty());
        assert_eq!(dyadic_index_set((-1.0, 2.0), 0).collect::<Vec<_>>(), vec![0]);
        assert_eq!(dyadic_index_set((0.0, 1.0), 2).collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn sample_bookkeeping() {
        let s = DyadicSample::from_fn((0.0, 1.0), 3, |q| q).unwrap();
        assert_eq!(s.index_range(), (1, 7));
        assert_eq!(s.at(1, 1), Some(0.5));
        assert_eq!(s.at(0, 0), None);
        assert!(DyadicSample::new((0.0, 1.0), 3, vec![0.0; 6]).is_err());
    }

    #[test]
    fn df_examples() {
        let id = DyadicSample::from_fn((0.0, 1.0), 12, |q| q).unwrap();
        let d = df(&params(1.0, 1.0, 2.0), 1.0, &id).unwrap();
        assert!((d.value - 1.0 / 3.0).abs() <= d.tail_bound && d.tail_bound <= 2f64.powi(-12) + 1e-18, "{d:?}");

        let step = DyadicSample::from_fn((-1.0, 2.0), 12, |q| if q >= 0.5 { 1.0 } else { 0.0 }).unwrap();
        let d = df(&params(1.0, 1.0, 4.0), 0.5, &step).unwrap();
        assert!((d.value - 1.0 / 3.0).abs() <= d.tail_bound, "{d:?}");

        let c = DyadicSample::from_fn((-1.0, 2.0), 8, |_| 0.3).unwrap();
        assert_eq!(df(&params(1.0, 1.0, 4.0), 0.5, &c).unwrap().value, 0.0);
    }

    #[test]
    fn classify_examples() {
        let pr = params(1.0, 1.0, 4.0);
        let step = DyadicSample::from_fn((-1.0, 2.0), 10, |q| if q >= 0.5 { 1.0 } else { 0.0 }).unwrap();
        let c = classify(&pr, 0.5, &step, 0, 1).unwrap();
        assert_eq!(c.important[0], vec![0]);
        assert!(c.important[1..].iter().all(Vec::is_empty));
        assert!(c.visible[0].is_empty());
        for k in 1..=10usize {
            assert_eq!(c.visible[k].len(), 1, "depth {k}");
            let (lo, hi) = span(c.visible[k][0], k as u32, 10);
            assert!(lo >= 0 && hi <= 1 << 10);
        }
        assert!(check_properties(&c).all_hold());

        let flat = DyadicSample::from_fn((-1.0, 2.0), 6, |_| 1.0).unwrap();
        let c = classify(&pr, 0.5, &flat, 0, 1).unwrap();
        assert!(c.visible.iter().chain(&c.important).all(Vec::is_empty));

        let id = DyadicSample::from_fn((-1.0, 3.0), 8, |q| q).unwrap();
        // The identity on (-1, 3) has range 4, so lambda must be at least 16.
        assert!(matches!(classify(&pr, 0.5, &id, 0, 2), Err(Error::Hypothesis(_))));
        let c = classify(&params(1.0, 1.0, 16.0), 0.5, &id, 0, 2).unwrap();
        assert!(c.visible[0].is_empty());
        assert!(check_properties(&c).all_hold());
    }

    #[test]
    fn oscillation_bound_examples() {
        let v = oscillation_lower_bound(&params(1.0, 1.0, 4.0), 0.5, 0.0, 1.0, 0, 1).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(oscillation_lower_bound(&params(1.0, 1.0, 4.0), 0.5, 1.0, 1.0, 0, 1).unwrap(), 0.0);
        let v = oscillation_lower_bound(&params(1.0, 2.0, 8.0), 1.0, 0.0, 1.0, 0, 2).unwrap();
        assert!((v - (1.0 / 3.0) * (1.0 / 64.0) * 0.5).abs() < 1e-16);
        assert!(matches!(oscillation_lower_bound(&params(1.0, 1.0, 1.0), 0.5, 0.0, 1.0, 0, 1), Err(Error::Hypothesis(_))));
        assert!(oscillation_lower_bound(&params(1.0, 1.0, 4.0), 0.5, 0.0, 1.0, 1, 1).is_err());
    }

    #[test]
    fn corpus_is_valid_and_reproducible() {
        let a = walk_corpus(1, 40);
        let b = walk_corpus(1, 40);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.sample, y.sample);
            assert_eq!(x.sample.at(x.alpha, 0), Some(x.big_a));
            assert_eq!(x.sample.at(x.beta, 0), Some(x.big_b));
            let (lo, hi) = x.sample.range().unwrap();
            assert!(lo >= x.big_a && hi <= x.big_b);
        }
    }

    #[test]
    fn bound_and_chain_on_small_corpus() {
        for w in walk_corpus(99, 60) {
            let c = classify(&w.params, w.delta, &w.sample, w.alpha, w.beta).unwrap();
            assert!(check_properties(&c).all_hold(), "{:?}", check_properties(&c));
            let (lhs, rhs) = holder_chain_sides(&w.params, w.delta, &w.sample, &c).unwrap();
            assert!(lhs <= rhs * (1.0 + 1e-12), "{lhs} > {rhs}");
            let d = df(&w.params, w.delta, &w.sample).unwrap();
            let bound = oscillation_lower_bound(&w.params, w.delta, w.big_a, w.big_b, w.alpha, w.beta).unwrap();
            assert!(d.value + d.tail_bound >= bound, "{d:?} < {bound}");
        }
    }

    #[test]
    fn representation_matches_step_value() {
        let pr = params(1.0, 1.0, 16.0);
        let f = Function1D::unit_step(1.0).unwrap();
        let dom = Domain1D::interval(0.0, 2.0).unwrap();
        let r = representation_integral(&pr, &f, &dom, &RepresentationResolution::default()).unwrap();
        let exact = f_exact_step(&pr, &f, &dom).unwrap();
        assert!((r.value - exact).abs() < 0.02, "{r:?} vs {exact}");

        let c = Function1D::step(vec![], vec![0.5]).unwrap();
        assert_eq!(representation_integral(&pr, &c, &dom, &RepresentationResolution::default()).unwrap().value, 0.0);
    }

    #[test]
    fn representation_rejects_small_lambda_and_short_interval() {
        let f = Function1D::step(vec![1.0], vec![0.0, 3.0]).unwrap();
        let dom = Domain1D::interval(0.0, 2.0).unwrap();
        assert!(matches!(
            representation_integral(&params(1.0, 1.0, 2.0), &f, &dom, &RepresentationResolution::default()),
            Err(Error::Hypothesis(_))
        ));
        let short = Domain1D::interval(0.5, 1.2).unwrap();
        assert!(representation_integral(&params(1.0, 1.0, 5.0), &f, &short, &RepresentationResolution::default()).is_err());
    }

    #[test]
    fn representation_corpus() {
        let dom = Domain1D::interval(0.0, 2.0).unwrap();
        let steps = [
            Function1D::step(vec![0.4, 1.3], vec![0.0, 1.0, 0.2]).unwrap(),
            Function1D::step(vec![0.7], vec![1.0, -0.5]).unwrap(),
            Function1D::indicator(0.5, 1.25).unwrap(),
            Function1D::step(vec![0.3, 0.9, 1.6], vec![0.0, 0.5, 1.0, 0.6]).unwrap(),
            Function1D::step(vec![1.1], vec![2.0, 0.0]).unwrap(),
        ];
        for (n, f) in steps.iter().enumerate() {
            let (g, p) = [(1.0, 1.0), (0.5, 1.0), (2.0, 2.0), (1.0, 2.0), (2.0, 1.0)][n];
            let pr = params(g, p, 8.0);
            let r = representation_integral(&pr, f, &dom, &RepresentationResolution { depth: 12, delta_nodes: 32, x_nodes: 32 }).unwrap();
            let exact = f_exact_step(&pr, f, &dom).unwrap();
            assert!((r.value - exact).abs() <= 0.03 * exact + r.error, "case {n}: {r:?} vs {exact}");
        }
        let affine = [
            (Function1D::linear_ramp(1.0).unwrap(), 1.0, 1.0, 4.0),
            (Function1D::linear_ramp(0.5).unwrap(), 2.0, 1.0, 2.0),
            (Function1D::piecewise_linear(vec![0.0, 2.0], vec![1.0, -1.0]).unwrap(), 1.0, 2.0, 4.0),
        ];
        for (n, (f, g, p, l)) in affine.iter().enumerate() {
            let pr = params(*g, *p, *l);
            let r = representation_integral(&pr, f, &dom, &RepresentationResolution { depth: 14, delta_nodes: 16, x_nodes: 8 }).unwrap();
            let exact = f_exact_affine(&pr, f, &dom).unwrap();
            assert!((r.value - exact).abs() <= 0.03 * exact + r.error, "affine {n}: {r:?} vs {exact}");
        }
    }
}
