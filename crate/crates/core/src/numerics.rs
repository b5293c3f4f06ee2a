//! Small numerical helpers: order-fixed summation and double-exponential
//! quadrature.

/// Pairwise summation over a fixed binary split of the slice.
///
/// The split depends only on the slice length, so the result is bit-stable
/// no matter how the summands were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Tanh-sinh quadrature of `f` over `[a, b]`.
///
/// Handles algebraic endpoint singularities such as `(b - x)^p` with
/// non-integer `p`. The step is halved until two successive estimates agree
/// to `tol` (relative) or `max_levels` is reached.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_levels: u32) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    let half = 0.5 * (b - a);
    // Node at t: x = tanh(pi/2 sinh t), weight pi/2 cosh t / cosh^2(pi/2 sinh t).
    let term = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let ch = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (ch * ch);
        // Distance to the nearer endpoint, computed without cancellation.
        let comp = 1.0 / (u.abs().exp() * ch);
        if comp == 0.0 || w == 0.0 {
            return 0.0;
        }
        let (xl, xr) = if u >= 0.0 { (b - half * comp, a + half * comp) } else { (a + half * comp, b - half * comp) };
        let mut s = 0.0;
        if xl > a && xl < b {
            s += f(xl);
        }
        if t != 0.0 && xr > a && xr < b {
            s += f(xr);
        }
        w * s
    };
    const T_MAX: f64 = 6.5;
    let mut h = 1.0;
    let mut sum = term(0.0);
    let mut k = 1;
    while (k as f64) * h <= T_MAX {
        sum += term(k as f64 * h);
        k += 1;
    }
    let mut estimate = half * h * sum;
    for _ in 0..max_levels {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= T_MAX {
            sum += term(k as f64 * h);
            k += 2;
        }
        let next = half * h * sum;
        let done = (next - estimate).abs() <= tol * next.abs().max(f64::MIN_POSITIVE);
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}
