//! Numerical integration for normalization checks of the reference laws.

use crate::math::{cosh, exp, sinh, PI};

/// Adaptive Simpson rule on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(&f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `∫_0^∞ f` by the exp-sinh rule `x = exp(π/2 · sinh u)`, halving the step
/// until two successive estimates agree to `tol`.
///
/// Suited to integrands that may be singular at 0 and decay at least
/// algebraically at infinity. Non-finite samples count as 0.
pub fn exp_sinh<F: Fn(f64) -> f64>(f: F, tol: f64) -> f64 {
    let half_pi = 0.5 * PI;
    let term = |u: f64| {
        let x = exp(half_pi * sinh(u));
        let w = half_pi * cosh(u) * x;
        let v = f(x) * w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    // |u| ≤ 4.5 covers x from ~1e-31 to ~1e31
    let u_max = 4.5;
    let mut h = 0.5;
    let mut n = (u_max / h) as i64;
    let mut sum = term(0.0);
    for k in 1..=n {
        let u = k as f64 * h;
        sum += term(u) + term(-u);
    }
    let mut estimate = sum * h;
    for _ in 0..12 {
        h *= 0.5;
        n *= 2;
        // new nodes are the odd multiples of the halved step
        let mut k = 1;
        while k <= n {
            let u = k as f64 * h;
            sum += term(u) + term(-u);
            k += 2;
        }
        let next = sum * h;
        if (next - estimate).abs() <= tol {
            return next;
        }
        estimate = next;
    }
    estimate
}
