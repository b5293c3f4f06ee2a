//! The built-in property corpus behind the `verify` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::dyadic::{check_properties, classify, df, holder_chain_sides, oscillation_lower_bound, walk_corpus};
use crate::error::Result;
use crate::functional_1d::{f_bruteforce, f_exact_step, f_quadrature, QuadratureResolution};
use crate::model::{Domain1D, FunctionalParams, Function1D};
use crate::slicing_nd::{c_gamma, c_np};

/// Counts from the oscillation-bound, classifier and chain checks.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkCheckReport {
    pub count: usize,
    pub bound_failures: usize,
    pub chain_failures: usize,
    pub property_failures: usize,
    pub errors: usize,
    /// Smallest `(df + tail) - bound` observed.
    pub min_bound_margin: f64,
    pub first_failure: Option<String>,
}

impl WalkCheckReport {
    pub fn all_pass(&self) -> bool {
        self.bound_failures == 0 && self.chain_failures == 0 && self.property_failures == 0 && self.errors == 0
    }

    pub fn to_json(&self) -> Value {
        json!({
            "count": self.count,
            "bound_failures": self.bound_failures,
            "chain_failures": self.chain_failures,
            "property_failures": self.property_failures,
            "errors": self.errors,
            "min_bound_margin": super::output::num(self.min_bound_margin),
            "first_failure": self.first_failure,
        })
    }
}

struct WalkOutcome {
    bound_ok: bool,
    chain_ok: bool,
    props_ok: bool,
    margin: f64,
    failure: Option<String>,
}

fn check_walk(n: usize, w: &crate::dyadic::WalkInstance) -> Result<WalkOutcome> {
    let c = classify(&w.params, w.delta, &w.sample, w.alpha, w.beta)?;
    let props = check_properties(&c);
    let (lhs, rhs) = holder_chain_sides(&w.params, w.delta, &w.sample, &c)?;
    let d = df(&w.params, w.delta, &w.sample)?;
    let bound = oscillation_lower_bound(&w.params, w.delta, w.big_a, w.big_b, w.alpha, w.beta)?;
    let margin = d.value + d.tail_bound - bound;
    let chain_ok = lhs <= rhs * (1.0 + 1e-12);
    let failure = if margin < 0.0 {
        Some(format!("walk {n}: df {} + tail {} < bound {bound}", d.value, d.tail_bound))
    } else if !chain_ok {
        Some(format!("walk {n}: chain {lhs} > {rhs}"))
    } else if !props.all_hold() {
        Some(format!("walk {n}: {props:?}"))
    } else {
        None
    };
    Ok(WalkOutcome { bound_ok: margin >= 0.0, chain_ok, props_ok: props.all_hold(), margin, failure })
}

/// Runs the classifier, chain and oscillation-bound checks on `count`
/// randomized pinned walks.
pub fn walk_checks(seed: u64, count: usize) -> WalkCheckReport {
    let corpus = walk_corpus(seed, count);
    let outcomes: Vec<Result<WalkOutcome>> = corpus.par_iter().enumerate().map(|(n, w)| check_walk(n, w)).collect();
    let mut r = WalkCheckReport {
        count,
        bound_failures: 0,
        chain_failures: 0,
        property_failures: 0,
        errors: 0,
        min_bound_margin: f64::INFINITY,
        first_failure: None,
    };
    for (n, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(o) => {
                r.bound_failures += usize::from(!o.bound_ok);
                r.chain_failures += usize::from(!o.chain_ok);
                r.property_failures += usize::from(!o.props_ok);
                r.min_bound_margin = r.min_bound_margin.min(o.margin);
                if r.first_failure.is_none() {
                    r.first_failure = o.failure;
                }
            }
            Err(e) => {
                r.errors += 1;
                if r.first_failure.is_none() {
                    r.first_failure = Some(format!("walk {n}: {e}"));
                }
            }
        }
    }
    r
}

/// A random step function on `(0, 1)` with 1 to 5 jumps at least `1/50`
/// apart and values in `[-1, 1]`.
pub fn random_step(rng: &mut ChaCha8Rng) -> Function1D {
    loop {
        let k = rng.random_range(1..=5);
        let mut bps: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..0.95)).collect();
        bps.sort_by(f64::total_cmp);
        if bps.windows(2).any(|w| w[1] - w[0] < 0.02) {
            continue;
        }
        let values = (0..=k).map(|_| rng.random_range(-1.0..1.0)).collect();
        return Function1D::step(bps, values).expect("valid random step");
    }
}

/// One instance of the three-evaluator comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleCase {
    pub gamma: f64,
    pub p: f64,
    pub lambda: f64,
    pub exact: f64,
    pub quadrature: f64,
    pub bruteforce: f64,
}

impl TriangleCase {
    pub fn max_relative_gap(&self) -> f64 {
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
        rel(self.exact, self.quadrature).max(rel(self.exact, self.bruteforce)).max(rel(self.quadrature, self.bruteforce))
    }
}

/// Exact, quadrature and brute-force values on `count` random steps with
/// `gamma in {1/2, 1, 2}`, `p in {1, 2}` and `lambda` between 1 and 4 times
/// the threshold `2^(1+gamma/p) (B - A)`.
pub fn oracle_triangle(seed: u64, count: usize, brute_n: usize) -> Result<Vec<TriangleCase>> {
    const GAMMAS: [f64; 3] = [0.5, 1.0, 2.0];
    const PS: [f64; 2] = [1.0, 2.0];
    let dom = Domain1D::interval(0.0, 1.0)?;
    (0..count)
        .map(|n| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(n as u64);
            let f = random_step(&mut rng);
            let (gamma, p) = (GAMMAS[n % 3], PS[(n / 3) % 2]);
            let (lo, hi) = f.range_on(&dom)?;
            let lambda = 2f64.powf(1.0 + gamma / p) * (hi - lo) * rng.random_range(1.0..4.0);
            let params = FunctionalParams::one_dim(gamma, p, lambda)?;
            Ok(TriangleCase {
                gamma,
                p,
                lambda,
                exact: f_exact_step(&params, &f, &dom)?,
                quadrature: f_quadrature(&params, &f, &dom, &QuadratureResolution::default())?.value,
                bruteforce: f_bruteforce(&params, &f, &dom, brute_n)?,
            })
        })
        .collect()
}

/// One line of the `verify` output.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// The property corpus: walks, the evaluator triangle and the constants.
pub fn run_verify(seed: u64) -> Result<Vec<CheckLine>> {
    let mut lines = Vec::new();
    let w = walk_checks(seed, 1000);
    lines.push(CheckLine {
        name: "dyadic walks: oscillation bound, chain, classifier properties",
        passed: w.all_pass(),
        detail: format!(
            "{} walks, failures bound/chain/properties/errors = {}/{}/{}/{}, min margin {:.3e}",
            w.count, w.bound_failures, w.chain_failures, w.property_failures, w.errors, w.min_bound_margin
        ),
    });
    let tri = oracle_triangle(seed, 20, 2000)?;
    let worst = tri.iter().map(TriangleCase::max_relative_gap).fold(0.0, f64::max);
    lines.push(CheckLine {
        name: "evaluator triangle: exact / quadrature / brute force",
        passed: worst <= 0.02,
        detail: format!("{} step functions, worst relative gap {worst:.3e}", tri.len()),
    });
    let c1 = [1.0, 2.0, 3.0].iter().all(|&p| c_np(1, p).map(|c| c == 2.0).unwrap_or(false));
    let c21 = c_np(2, 1.0)?;
    let c22 = c_np(2, 2.0)?;
    let cg = c_gamma(1.0)?;
    let ok = c1 && (c21 - 4.0).abs() < 1e-8 && (c22 - std::f64::consts::PI).abs() < 1e-8 && (cg - 2f64.ln() / 3.0).abs() < 1e-14;
    lines.push(CheckLine {
        name: "constants",
        passed: ok,
        detail: format!("C_(2,1) = {c21}, C_(2,2) = {c22}, c_1 = {cg}"),
    });
    Ok(lines)
}
