//! Derivative-free search over staircase profiles.
//!
//! The staircase parametrization is one choice among many: `n` free
//! plateaus between the fixed end values `A` and `B` give `n + 1` jumps,
//! placed through a softmax over `n + 2` gap weights, and `n` heights in
//! `(A, B)` through a logistic map.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Map};

use super::config::{ExperimentConfig, ExperimentKind};
use super::output::{num, Report, Row, Verdict};
use crate::error::{Error, Result};
use crate::functional_1d::f_exact_step;
use crate::model::{Function1D, FunctionalParams};
use crate::slicing_nd::c_gamma;

/// Outcome of [`nelder_mead`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    /// Best value found within each restart, in order.
    pub restart_bests: Vec<f64>,
    /// True when the search stopped because the budget ran out.
    pub budget_exhausted: bool,
}

struct Budgeted<'a, F> {
    f: &'a F,
    left: usize,
    used: usize,
    best: (f64, Vec<f64>),
}

impl<F: Fn(&[f64]) -> f64> Budgeted<'_, F> {
    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.left == 0 {
            return None;
        }
        self.left -= 1;
        self.used += 1;
        let v = (self.f)(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v < self.best.0 {
            self.best = (v, x.to_vec());
        }
        Some(v)
    }
}

/// Minimizes `f` over `R^dim` with the Nelder-Mead simplex method,
/// restarting from a fresh random simplex whenever the current one stalls,
/// for at most `max_restarts + 1` runs and `budget` evaluations.
///
/// Every decision depends only on earlier function values and the seeded
/// streams, so a larger budget extends the evaluation sequence of a smaller
/// one and the best value never increases.
pub fn nelder_mead(f: &impl Fn(&[f64]) -> f64, dim: usize, budget: usize, max_restarts: usize, seed: u64) -> SearchOutcome {
    let mut b = Budgeted { f, left: budget, used: 0, best: (f64::INFINITY, vec![0.0; dim]) };
    let mut restart_bests = Vec::new();
    let mut exhausted = false;
    'runs: for run in 0..=max_restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run as u64);
        let x0: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(dim + 1);
        for i in 0..=dim {
            let mut x = x0.clone();
            if i > 0 {
                x[i - 1] += 1.0;
            }
            let Some(v) = b.eval(&x) else {
                exhausted = true;
                break 'runs;
            };
            simplex.push((v, x));
        }
        let mut run_best = f64::INFINITY;
        let mut since_improvement = 0;
        loop {
            simplex.sort_by(|p, q| p.0.total_cmp(&q.0));
            if simplex[0].0 < run_best {
                run_best = simplex[0].0;
                since_improvement = 0;
            } else {
                since_improvement += 1;
            }
            let spread = simplex[dim].0 - simplex[0].0;
            let size = simplex[1..].iter().map(|(_, x)| dist(x, &simplex[0].1)).fold(0.0, f64::max);
            if (spread.abs() <= 1e-12 * (1.0 + simplex[0].0.abs()) && size < 1e-6) || size < 1e-10 || since_improvement > 40 * (dim + 1) {
                break;
            }
            let centroid: Vec<f64> = (0..dim).map(|j| simplex[..dim].iter().map(|(_, x)| x[j]).sum::<f64>() / dim as f64).collect();
            let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[dim].1).map(|(c, w)| c + t * (w - c)).collect() };
            let xr = along(-1.0);
            let Some(fr) = b.eval(&xr) else {
                exhausted = true;
                break;
            };
            if fr < simplex[0].0 {
                let xe = along(-2.0);
                let Some(fe) = b.eval(&xe) else {
                    exhausted = true;
                    break;
                };
                simplex[dim] = if fe < fr { (fe, xe) } else { (fr, xr) };
                continue;
            }
            if fr < simplex[dim - 1].0 {
                simplex[dim] = (fr, xr);
                continue;
            }
            let (xc, t) = if fr < simplex[dim].0 { (along(-0.5), fr) } else { (along(0.5), simplex[dim].0) };
            let Some(fc) = b.eval(&xc) else {
                exhausted = true;
                break;
            };
            if fc < t {
                simplex[dim] = (fc, xc);
                continue;
            }
            // Shrink towards the best vertex.
            let best = simplex[0].1.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let x: Vec<f64> = best.iter().zip(&vertex.1).map(|(b0, v)| b0 + 0.5 * (v - b0)).collect();
                let Some(v) = b.eval(&x) else {
                    exhausted = true;
                    break;
                };
                *vertex = (v, x);
            }
            if exhausted {
                break;
            }
        }
        restart_bests.push(run_best.min(simplex.iter().map(|s| s.0).fold(f64::INFINITY, f64::min)));
        if exhausted {
            break;
        }
    }
    SearchOutcome { best_x: b.best.1, best_value: b.best.0, evaluations: b.used, restart_bests, budget_exhausted: exhausted }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Staircase on `(a, b)` from the search coordinates; `n = 0` is the single
/// jump at the midpoint.
pub fn staircase(x: &[f64], n: usize, (a, b): (f64, f64), big_a: f64, big_b: f64) -> Result<Function1D> {
    if n == 0 {
        return Function1D::step(vec![0.5 * (a + b)], vec![big_a, big_b]);
    }
    if x.len() != 2 * n + 2 {
        return Err(Error::Precondition(format!("staircase with {n} plateaus needs {} coordinates", 2 * n + 2)));
    }
    let gaps = &x[..n + 2];
    let m = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = gaps.iter().map(|g| (g - m).exp()).collect();
    let total: f64 = w.iter().sum();
    let mut acc = 0.0;
    let mut bps = Vec::with_capacity(n + 1);
    for wi in &w[..n + 1] {
        acc += wi / total;
        bps.push(a + (b - a) * acc);
    }
    let mut values = vec![big_a];
    values.extend(x[n + 2..].iter().map(|z| big_a + (big_b - big_a) / (1.0 + (-z).exp())));
    values.push(big_b);
    Function1D::step(bps, values)
}

/// Restarts used by the family search.
pub const MAX_RESTARTS: usize = 8;

pub fn run_family_search(cfg: &ExperimentConfig) -> Result<Report> {
    let s = cfg.search.as_ref().ok_or_else(|| Error::Config("missing [search]".into()))?;
    let dom = cfg.domain_1d()?;
    let &[interval] = dom.intervals() else {
        return Err(Error::Config("family search needs a single interval".into()));
    };
    let params = cfg.params.at(s.lambda)?;
    let n = s.plateaus;
    let objective = |x: &[f64]| -> f64 {
        staircase(x, n, interval, s.big_a, s.big_b)
            .and_then(|f| f_exact_step(&params, &f, &dom))
            .unwrap_or(f64::INFINITY)
    };
    let outcome = if n == 0 {
        let v = objective(&[]);
        SearchOutcome { best_x: vec![], best_value: v, evaluations: 1, restart_bests: vec![v], budget_exhausted: false }
    } else {
        nelder_mead(&objective, 2 * n + 2, s.budget, MAX_RESTARTS, cfg.seed)
    };
    search_report(&params, interval, s.big_a, s.big_b, n, &outcome)
}

fn search_report(
    params: &FunctionalParams,
    interval: (f64, f64),
    big_a: f64,
    big_b: f64,
    n: usize,
    outcome: &SearchOutcome,
) -> Result<Report> {
    let (g, p) = (params.gamma(), params.p());
    let (a, b) = interval;
    let lower = 2.0 * c_gamma(g)? * (big_b - big_a).powf(p) / (b - a).powf(p - 1.0);
    let reference = if p == 1.0 { 2.0 / (g + 1.0) * (big_b - big_a) } else if big_b > big_a { f64::INFINITY } else { 0.0 };
    let best = staircase(&outcome.best_x, n, interval, big_a, big_b)?;
    let step = best.as_step().expect("staircases are steps");
    let rows = outcome
        .restart_bests
        .iter()
        .map(|&v| Row { lambda: params.lambda(), value: v, error: 0.0, reference: Some(reference), bound: Some(lower), pass: Verdict::Skipped })
        .collect();
    let mut s = Map::new();
    s.insert("parametrization".into(), json!("staircase: softmax jump gaps, logistic plateau heights"));
    s.insert("plateaus".into(), json!(n));
    s.insert("best_value".into(), num(outcome.best_value));
    s.insert("best_breakpoints".into(), json!(step.breakpoints()));
    s.insert("best_values".into(), json!(step.values()));
    s.insert("evaluations".into(), json!(outcome.evaluations));
    s.insert("budget_exhausted".into(), json!(outcome.budget_exhausted));
    s.insert("bracket_lower".into(), num(lower));
    s.insert("bracket_upper_pointwise_reference".into(), num(reference));
    s.insert("note".into(), json!("no optimality claim"));
    Ok(Report { kind: ExperimentKind::FamilySearch.name().into(), rows, summary: s })
}
