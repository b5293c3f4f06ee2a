//! One-dimensional evaluators for `F_{gamma,p,lambda}(u, Omega)`.
//!
//! * [`f_exact_step`] is exact (up to rounding) for piecewise-constant
//!   functions: the exceedance set is a union of bands between pieces.
//! * [`f_exact_affine`] is exact for functions affine on the domain hull.
//! * [`f_quadrature`] integrates the `(x, delta)` form of the functional for
//!   any variant, with a two-resolution error estimate.
//! * [`f_bruteforce`] is a tensor-grid Riemann sum used as an independent
//!   oracle in tests.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Domain1D, FunctionalParams, Function1D};
use crate::numerics::pairwise_sum;
use crate::nu_kernel::{exceedance_radius, nu_band, threshold, BandRegion};

/// A value with an (absolute) error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }
}

pub(crate) fn require_1d(params: &FunctionalParams) -> Result<()> {
    if params.dim() != 1 {
        return Err(Error::Precondition(format!(
            "one-dimensional evaluator called with dim = {}",
            params.dim()
        )));
    }
    Ok(())
}

/// Exact value for piecewise-constant `f` (step, indicator, Cantor
/// approximant, grid samples).
///
/// Pairs of points in different components of `dom` are included, since the
/// exceedance set lives in `Omega x Omega`.
pub fn f_exact_step(params: &FunctionalParams, f: &Function1D, dom: &Domain1D) -> Result<f64> {
    require_1d(params)?;
    f.check_domain(dom)?;
    let step = f.as_step().ok_or_else(|| {
        Error::UnsupportedVariant(format!("exact step evaluation needs a piecewise-constant function, got {}", f.variant_name()))
    })?;
    let pieces: Vec<(f64, f64, f64)> =
        dom.intervals().iter().flat_map(|&(a, b)| step.pieces_on(a, b)).collect();
    let (vmin, vmax) = pieces
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.2), hi.max(p.2)));
    let reach = exceedance_radius(params, vmax - vmin);
    if reach == 0.0 {
        return Ok(0.0);
    }
    let gamma = params.gamma();
    let mut terms = Vec::new();
    for (i, &(a_i, b_i, c_i)) in pieces.iter().enumerate() {
        for &(a_j, b_j, c_j) in &pieces[i + 1..] {
            if a_j - b_i >= reach {
                break;
            }
            let r = exceedance_radius(params, (c_i - c_j).abs());
            if r > a_j - b_i {
                terms.push(nu_band(gamma, &BandRegion::new((a_i, b_i), (a_j, b_j), r)));
            }
        }
    }
    Ok(2.0 * params.lambda().powf(params.p()) * pairwise_sum(&terms))
}

/// Exact value for `f` affine with slope `s` on the hull of `dom`: the
/// exceedance set is the band `|y - x| < (|s| / lambda)^(p / gamma)`.
pub fn f_exact_affine(params: &FunctionalParams, f: &Function1D, dom: &Domain1D) -> Result<f64> {
    require_1d(params)?;
    f.check_domain(dom)?;
    let slope = f.affine_slope_on(dom).ok_or_else(|| {
        Error::UnsupportedVariant(format!("{} is not affine on the domain", f.variant_name()))
    })?;
    if slope == 0.0 {
        return Ok(0.0);
    }
    let rho = (slope.abs() / params.lambda()).powf(params.p() / params.gamma());
    let ivs = dom.intervals();
    let mut terms = Vec::new();
    for (i, &ii) in ivs.iter().enumerate() {
        terms.push(nu_band(params.gamma(), &BandRegion::new(ii, ii, rho)));
        for &jj in &ivs[i + 1..] {
            terms.push(2.0 * nu_band(params.gamma(), &BandRegion::new(ii, jj, rho)));
        }
    }
    Ok(params.lambda().powf(params.p()) * pairwise_sum(&terms))
}

/// Grid controls for [`f_quadrature`].
///
/// The `delta` axis is cut into octaves `[2^-(j+1), 2^-j] * top`, each split
/// geometrically into `nodes_per_octave` cells, plus one bottom cell
/// `[0, top * 2^-octaves]`. `top` is the power of two at or above the cap.
/// The weight `delta^(gamma-1)` is integrated exactly over each cell, and
/// cells are split where the integrand is known to jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResolution {
    pub nodes_per_octave: usize,
    pub octaves: usize,
    /// Upper bound for `delta`. `None` uses the exceedance radius of the
    /// function's oscillation (beyond which the integrand vanishes).
    pub delta_cap: Option<f64>,
}

impl Default for QuadratureResolution {
    fn default() -> Self {
        Self { nodes_per_octave: 32, octaves: 40, delta_cap: None }
    }
}

impl QuadratureResolution {
    pub fn fine() -> Self {
        Self { nodes_per_octave: 128, ..Self::default() }
    }

    fn delta_node_count(&self) -> usize {
        self.nodes_per_octave * self.octaves + 1
    }

    fn refined(&self) -> Self {
        Self { nodes_per_octave: 2 * self.nodes_per_octave, ..*self }
    }
}

/// `int_a^b delta^(gamma-1) d delta`.
fn power_weight(gamma: f64, a: f64, b: f64) -> f64 {
    if a == 0.0 {
        b.powf(gamma) / gamma
    } else {
        a.powf(gamma) * (gamma * (b / a).ln()).exp_m1() / gamma
    }
}

/// `delta` nodes with their exact `int delta^(gamma-1)` cell weights,
/// ordered bottom to top. Cells containing a point of `splits` are cut there,
/// the bottom cell included.
fn delta_nodes(gamma: f64, top: f64, octaves: usize, per_octave: usize, splits: &[f64]) -> Vec<(f64, f64)> {
    let mut edges = Vec::with_capacity(octaves * per_octave + 2);
    edges.push(0.0);
    let ratio_step = std::f64::consts::LN_2 / per_octave as f64;
    for o in (0..octaves).rev() {
        let base = top * 2f64.powi(-(o as i32) - 1);
        for j in 0..per_octave {
            edges.push(base * (ratio_step * j as f64).exp());
        }
    }
    edges.push(top);
    // Splits below the floor still cut the bottom cell, so thin exceedance
    // bands near the diagonal are not lost.
    edges.extend(splits.iter().copied().filter(|&d| d > 0.0 && d < top));
    edges.sort_unstable_by(f64::total_cmp);
    edges.dedup();
    edges
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let mid = if a == 0.0 { 0.5 * b } else { (a * b).sqrt() };
            (mid, power_weight(gamma, a, b))
        })
        .collect()
}

/// Pair budget for the jump search in [`delta_jumps`].
const MAX_JUMP_PAIRS: usize = 1 << 20;

/// `(start, end, slope, intercept)` of one affine piece of `u`.
type Piece = (f64, f64, f64, f64);

/// Maximal affine pieces of `u` on `[lo, hi]`.
fn affine_pieces(f: &Function1D, lo: f64, hi: f64) -> Vec<Piece> {
    let mut cuts = vec![lo];
    cuts.extend(f.breakpoints_in(lo, hi));
    cuts.push(hi);
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let q = 0.25 * (w[1] - w[0]);
            let (x0, x1) = (w[0] + q, w[1] - q);
            let (y0, y1) = (f.eval_unchecked(x0), f.eval_unchecked(x1));
            let slope = (y1 - y0) / (x1 - x0);
            (w[0], w[1], slope, 0.5 * (y0 + y1) - slope * 0.5 * (x0 + x1))
        })
        .collect()
}

/// Roots in `(lo, hi)` of `lambda t^e - alpha - beta t`, which is convex in
/// `t > 0` for `e > 1`.
fn convex_roots(lambda: f64, e: f64, alpha: f64, beta: f64, lo: f64, hi: f64, out: &mut Vec<f64>) {
    if !(hi > lo) {
        return;
    }
    let h = |t: f64| lambda * t.powf(e) - alpha - beta * t;
    let t_min = if beta > 0.0 { (beta / (lambda * e)).powf(1.0 / (e - 1.0)).clamp(lo, hi) } else { lo };
    let mut bisect = |mut a: f64, mut b: f64| {
        let (ha, hb) = (h(a), h(b));
        if ha == 0.0 || hb == 0.0 || (ha < 0.0) == (hb < 0.0) {
            return;
        }
        let rising = hb > 0.0;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if (h(m) > 0.0) == rising {
                b = m;
            } else {
                a = m;
            }
        }
        out.push(0.5 * (a + b));
    };
    bisect(lo, t_min);
    bisect(t_min, hi);
}

/// Values of `delta` in `(0, top)` where the shifted exceedance length jumps.
///
/// When `x` and `x + delta` lie on pieces with a common slope `s`, the
/// difference `C + s delta` does not depend on `x`, so the whole sub-piece
/// enters or leaves the exceedance set at once, at a root of
/// `lambda delta^(1+gamma/p) = |C + s delta|`.
fn delta_jumps(params: &FunctionalParams, pieces: &[Piece], top: f64) -> Vec<f64> {
    let e = params.threshold_exponent();
    let lambda = params.lambda();
    let mut out = Vec::new();
    let mut pairs = 0usize;
    for (i, &(s0, e0, si, ci)) in pieces.iter().enumerate() {
        for &(s1, e1, sj, cj) in &pieces[i..] {
            if s1 >= e0 + top {
                break;
            }
            pairs += 1;
            if pairs > MAX_JUMP_PAIRS {
                return Vec::new();
            }
            if (si - sj).abs() > 1e-12 * si.abs().max(sj.abs()).max(1e-300) && !(si == 0.0 && sj == 0.0) {
                continue;
            }
            let s = 0.5 * (si + sj);
            let c = cj - ci;
            // Admissible separations between the two pieces.
            let (dlo, dhi) = ((s1 - e0).max(0.0), (e1 - s0).min(top));
            if s == 0.0 {
                let r = exceedance_radius(params, c.abs());
                if r > dlo && r < dhi {
                    out.push(r);
                }
                continue;
            }
            // |C + s t| is affine on each side of t0 = -C / s.
            let t0 = -c / s;
            let sign_right = if s > 0.0 { 1.0 } else { -1.0 };
            if t0 > dlo {
                convex_roots(lambda, e, -sign_right * c, -sign_right * s, dlo, t0.min(dhi), &mut out);
            }
            convex_roots(lambda, e, sign_right * c, sign_right * s, t0.max(dlo), dhi, &mut out);
        }
    }
    out
}

/// `{x in dom : x + delta in dom}` as sorted intervals.
fn shifted_overlap(dom: &Domain1D, delta: f64) -> Vec<(f64, f64)> {
    let ivs = dom.intervals();
    let mut out = Vec::new();
    for &(a, b) in ivs {
        for &(c, d) in ivs {
            let lo = a.max(c - delta);
            let hi = b.min(d - delta);
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

/// `int psi(delta, |u(x+delta) - u(x)|) dx` over the admissible `x`.
///
/// Between the points where `x` or `x + delta` crosses a breakpoint of `u`
/// the difference is affine in `x` (every variant is piecewise affine). It
/// is formed from the piece coefficients rather than from samples, so it
/// stays exact when `delta` is below the spacing of floats near `x`.
fn shifted_exceedance_length(pieces: &[Piece], dom: &Domain1D, delta: f64, thresh: f64) -> f64 {
    let mut acc = 0.0;
    let mut cuts = Vec::new();
    let starts = |k: usize| pieces[k].0;
    let piece_at = |x: f64| pieces.partition_point(|q| q.0 <= x).saturating_sub(1);
    for (lo, hi) in shifted_overlap(dom, delta) {
        cuts.clear();
        cuts.push(lo);
        let first = pieces.partition_point(|q| q.0 <= lo);
        cuts.extend((first..pieces.len()).map(starts).take_while(|&b| b < hi));
        let first_shift = pieces.partition_point(|q| q.0 - delta <= lo);
        cuts.extend((first_shift..pieces.len()).map(|k| starts(k) - delta).take_while(|&b| b < hi));
        cuts.push(hi);
        cuts.sort_unstable_by(f64::total_cmp);
        cuts.dedup();
        for w in cuts.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            let m = 0.5 * (w[0] + w[1]);
            let (_, _, si, ci) = pieces[piece_at(m)];
            let (_, _, sj, cj) = pieces[piece_at(m + delta)];
            let slope = sj - si;
            let c = slope * m + (cj - ci) + sj * delta;
            acc += affine_exceedance(c, slope, w[0] - m, w[1] - m, thresh);
        }
    }
    acc
}

/// Length of `{t in (t0, t1) : |c + s t| > thresh}`.
fn affine_exceedance(c: f64, s: f64, t0: f64, t1: f64, thresh: f64) -> f64 {
    let len = t1 - t0;
    if s == 0.0 {
        return if c.abs() > thresh { len } else { 0.0 };
    }
    let (r0, r1) = ((-thresh - c) / s, (thresh - c) / s);
    let (r0, r1) = if r0 <= r1 { (r0, r1) } else { (r1, r0) };
    let inside = (r1.min(t1) - r0.max(t0)).max(0.0);
    (len - inside).max(0.0)
}

fn quadrature_once(
    params: &FunctionalParams,
    pieces: &[Piece],
    dom: &Domain1D,
    res: &QuadratureResolution,
    jumps: &[f64],
    top: f64,
) -> f64 {
    let nodes = delta_nodes(params.gamma(), top, res.octaves, res.nodes_per_octave, jumps);
    let contributions: Vec<f64> = nodes
        .par_iter()
        .map(|&(delta, w)| {
            let t = threshold(params, delta);
            w * shifted_exceedance_length(pieces, dom, delta, t)
        })
        .collect();
    2.0 * params.lambda().powf(params.p()) * pairwise_sum(&contributions)
}

/// Composite quadrature of
/// `2 lambda^p int delta^(gamma-1) int psi(delta, |u(x+delta)-u(x)|) dx ddelta`:
/// midpoint rule in `delta`, exact inner integral in `x`.
///
/// Runs at `res` and at doubled `delta` resolution; returns the finer value and the
/// absolute difference as error estimate.
pub fn f_quadrature(
    params: &FunctionalParams,
    f: &Function1D,
    dom: &Domain1D,
    res: &QuadratureResolution,
) -> Result<Estimate> {
    require_1d(params)?;
    f.check_domain(dom)?;
    if res.delta_node_count() < 4 {
        return Err(Error::Precondition(format!(
            "quadrature needs at least 4 delta nodes, resolution gives {}",
            res.delta_node_count()
        )));
    }
    if let Some(cap) = res.delta_cap {
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(Error::Precondition(format!("delta cap must be positive, got {cap}")));
        }
    }
    let (vmin, vmax) = f.range_on(dom)?;
    let osc = vmax - vmin;
    if osc == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    let (lo, hi) = dom.hull();
    let cap = res.delta_cap.unwrap_or_else(|| (hi - lo).min(exceedance_radius(params, osc)));
    if !(cap > 0.0) {
        return Ok(Estimate::exact(0.0));
    }
    let top = 2f64.powf(cap.log2().ceil());
    let pieces = affine_pieces(f, lo, hi);
    let jumps = delta_jumps(params, &pieces, top);
    let coarse = quadrature_once(params, &pieces, dom, res, &jumps, top);
    let fine = quadrature_once(params, &pieces, dom, &res.refined(), &jumps, top);
    Ok(Estimate { value: fine, error: (fine - coarse).abs() })
}

/// Geometric sub-grid in the pair separation used inside diagonal cells.
const DIAG_OCTAVES: usize = 48;
const DIAG_PER_OCTAVE: usize = 64;

/// Nodes `t` with weights `int t^(gamma-1) (h - t) dt` over cells of `[0, h]`.
fn diagonal_nodes(gamma: f64, h: f64) -> Vec<(f64, f64)> {
    let g1 = gamma + 1.0;
    let moment = |a: f64, b: f64| h * (b.powf(gamma) - a.powf(gamma)) / gamma - (b.powf(g1) - a.powf(g1)) / g1;
    let mut nodes = Vec::with_capacity(DIAG_OCTAVES * DIAG_PER_OCTAVE + 1);
    let bottom = h * 2f64.powi(-(DIAG_OCTAVES as i32));
    nodes.push((0.5 * bottom, moment(0.0, bottom)));
    for o in (0..DIAG_OCTAVES).rev() {
        let base = h * 2f64.powi(-(o as i32) - 1);
        for j in 0..DIAG_PER_OCTAVE {
            let a = base * 2f64.powf(j as f64 / DIAG_PER_OCTAVE as f64);
            let b = base * 2f64.powf((j + 1) as f64 / DIAG_PER_OCTAVE as f64);
            nodes.push(((a * b).sqrt(), moment(a, b)));
        }
    }
    nodes
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum PairSweep {
    UpperTriangle,
    Full,
}

fn bruteforce(params: &FunctionalParams, f: &Function1D, dom: &Domain1D, n: usize, sweep: PairSweep) -> Result<f64> {
    require_1d(params)?;
    f.check_domain(dom)?;
    if n < 16 {
        return Err(Error::Precondition(format!("brute force needs n >= 16, got {n}")));
    }
    let (lo, hi) = dom.hull();
    let h = (hi - lo) / n as f64;
    let xs: Vec<f64> = (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect();
    let inside: Vec<bool> = xs.iter().map(|&x| dom.contains(x)).collect();
    let us: Vec<f64> = xs.iter().map(|&x| if dom.contains(x) { f.eval_unchecked(x) } else { 0.0 }).collect();
    let gamma = params.gamma();
    let thresh: Vec<f64> = (0..n).map(|d| threshold(params, d as f64 * h)).collect();
    let weight: Vec<f64> = (0..n).map(|d| (d as f64 * h).powf(gamma - 1.0)).collect();

    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            if !inside[i] {
                return 0.0;
            }
            let mut row = 0.0;
            let js: Box<dyn Iterator<Item = usize>> = match sweep {
                PairSweep::UpperTriangle => Box::new(i + 1..n),
                PairSweep::Full => Box::new((0..i).chain(i + 1..n)),
            };
            for j in js {
                let d = i.abs_diff(j);
                if inside[j] && (us[j] - us[i]).abs() > thresh[d] {
                    row += weight[d];
                }
            }
            row
        })
        .collect();
    let off_diag = pairwise_sum(&rows) * h * h * if sweep == PairSweep::UpperTriangle { 2.0 } else { 1.0 };

    // Diagonal cells: |y - x|^(gamma-1) is singular there, so integrate the
    // separation on a geometric sub-grid with pairs centred on the cell.
    let diag_nodes = diagonal_nodes(gamma, h);
    let diag_rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            if !inside[i] {
                return 0.0;
            }
            let c = xs[i];
            let mut s = 0.0;
            for &(t, w) in &diag_nodes {
                let (x, y) = (c - 0.5 * t, c + 0.5 * t);
                if dom.contains(x) && dom.contains(y) && (f.eval_unchecked(y) - f.eval_unchecked(x)).abs() > threshold(params, t) {
                    s += w;
                }
            }
            2.0 * s
        })
        .collect();
    let diag = pairwise_sum(&diag_rows);
    Ok(params.lambda().powf(params.p()) * (off_diag + diag))
}

/// Tensor-grid Riemann sum of `lambda^p iint_E |y-x|^(gamma-1)` with `n`
/// midpoint nodes on the domain hull. Off-diagonal pairs are summed over the
/// upper triangle and doubled. Cost is `O(n^2)`.
///
/// Pairs in distinct cells are tested at the centre separation only, so for
/// sloped `u` the result is reliable once the exceedance radius
/// `(|u'| / lambda)^(p/gamma)` spans many cells; near one cell width it
/// undercounts.
pub fn f_bruteforce(params: &FunctionalParams, f: &Function1D, dom: &Domain1D, n: usize) -> Result<f64> {
    bruteforce(params, f, dom, n, PairSweep::UpperTriangle)
}

/// Same as [`f_bruteforce`] but visiting every ordered pair.
pub fn f_bruteforce_full(params: &FunctionalParams, f: &Function1D, dom: &Domain1D, n: usize) -> Result<f64> {
    bruteforce(params, f, dom, n, PairSweep::Full)
}

/// Which evaluator to use for a function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluator {
    ExactStep,
    ExactAffine,
    Quadrature(QuadratureResolution),
}

impl Evaluator {
    /// The most accurate evaluator available for `f` on `dom`.
    pub fn best_for(f: &Function1D, dom: &Domain1D, res: QuadratureResolution) -> Self {
        if f.is_piecewise_constant() {
            Evaluator::ExactStep
        } else if f.affine_slope_on(dom).is_some() {
            Evaluator::ExactAffine
        } else {
            Evaluator::Quadrature(res)
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Evaluator::ExactStep => "exact_step",
            Evaluator::ExactAffine => "exact_affine",
            Evaluator::Quadrature(_) => "quadrature",
        }
    }

    pub fn evaluate(&self, params: &FunctionalParams, f: &Function1D, dom: &Domain1D) -> Result<Estimate> {
        match self {
            Evaluator::ExactStep => f_exact_step(params, f, dom).map(Estimate::exact),
            Evaluator::ExactAffine => f_exact_affine(params, f, dom).map(Estimate::exact),
            Evaluator::Quadrature(res) => f_quadrature(params, f, dom, res),
        }
    }
}
