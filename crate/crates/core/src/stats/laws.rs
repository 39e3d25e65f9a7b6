//! Closed-form reference laws.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{erfc, exp, sinh, sqrt, PI};

/// An analytic law usable as a goodness-of-fit oracle.
pub trait LawSpec {
    fn name(&self) -> &'static str;
    fn parameters(&self) -> Vec<(&'static str, f64)>;
    fn density(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> Option<f64>;
    fn laplace(&self, sigma: f64) -> Option<f64>;
}

/// `x / sinh x` with `x = m √(2σ)`: Laplace transform of the time an
/// excursion of height `m` takes to climb to its maximum (and, by symmetry,
/// to come back down).
pub fn excursion_laplace_exact(m: f64, sigma: f64) -> f64 {
    let x = m * sqrt(2.0 * sigma);
    if x < 1e-3 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + 7.0 * x2 * x2 / 360.0
    } else if x > 30.0 {
        2.0 * x * exp(-x) / (1.0 - exp(-2.0 * x))
    } else {
        x / sinh(x)
    }
}

/// Excursion ascent-time law of height `m`. It is the hitting time of `m` by
/// a three-dimensional Bessel process started at 0; density and CDF come
/// from the two theta-function expansions, switched at `πt/(2m²) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcursionLaw {
    pub m: f64,
}

const THETA_TERMS: usize = 8;

impl ExcursionLaw {
    pub fn new(m: f64) -> Self {
        ExcursionLaw { m }
    }

    pub fn mean(&self) -> f64 {
        self.m * self.m / 3.0
    }

    fn tau(&self, t: f64) -> f64 {
        PI * t / (2.0 * self.m * self.m)
    }
}

impl LawSpec for ExcursionLaw {
    fn name(&self) -> &'static str {
        "excursion-ascent"
    }

    fn parameters(&self) -> Vec<(&'static str, f64)> {
        vec![("m", self.m)]
    }

    fn density(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        let tau = self.tau(t);
        let dtau = PI / (2.0 * self.m * self.m);
        if tau < 1.0 {
            let mut acc = 0.0;
            for n in 0..THETA_TERMS {
                let c = PI * (n as f64 + 0.5) * (n as f64 + 0.5);
                acc += exp(-c / tau) * (c / (tau * tau) - 0.5 / tau);
            }
            2.0 * acc / sqrt(tau) * dtau
        } else {
            let mut acc = 0.0;
            for k in 1..=THETA_TERMS {
                let a = (k * k) as f64 * PI * tau;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                acc += sign * (k * k) as f64 * exp(-a);
            }
            2.0 * PI * acc * dtau
        }
    }

    fn cdf(&self, t: f64) -> Option<f64> {
        if !(t > 0.0) {
            return Some(0.0);
        }
        let tau = self.tau(t);
        let v = if tau < 1.0 {
            let mut acc = 0.0;
            for n in 0..THETA_TERMS {
                acc += exp(-PI * (n as f64 + 0.5) * (n as f64 + 0.5) / tau);
            }
            2.0 * acc / sqrt(tau)
        } else {
            let mut acc = 1.0;
            for k in 1..=THETA_TERMS {
                let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
                acc += 2.0 * sign * exp(-((k * k) as f64) * PI * tau);
            }
            acc
        };
        Some(v.clamp(0.0, 1.0))
    }

    fn laplace(&self, sigma: f64) -> Option<f64> {
        Some(excursion_laplace_exact(self.m, sigma))
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / core::f64::consts::SQRT_2)
}

/// Density of the one-boundary inverse time change `t(s)`:
/// `a t^{−3/2} e^{−a²/(2t)} / √(2π)` with `a = λps`.
pub fn levy_density(s: f64, t: f64, lambda: f64, p: f64) -> f64 {
    LevyLaw::new(s, lambda, p).density(t)
}

/// `P[t(s) ≤ t] = erfc(λps / √(2t))`.
pub fn levy_cdf(s: f64, t: f64, lambda: f64, p: f64) -> f64 {
    if !(t > 0.0) {
        return 0.0;
    }
    erfc(lambda * p * s / sqrt(2.0 * t))
}

/// Stable law of index 1/2 with scale `a = λps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyLaw {
    pub s: f64,
    pub lambda: f64,
    pub p: f64,
}

impl LevyLaw {
    pub fn new(s: f64, lambda: f64, p: f64) -> Self {
        LevyLaw { s, lambda, p }
    }

    pub fn scale(&self) -> f64 {
        self.lambda * self.p * self.s
    }

    /// Location of the density maximum, `(λps)² / 3`.
    pub fn mode(&self) -> f64 {
        let a = self.scale();
        a * a / 3.0
    }
}

impl LawSpec for LevyLaw {
    fn name(&self) -> &'static str {
        "levy-stable-half"
    }

    fn parameters(&self) -> Vec<(&'static str, f64)> {
        vec![("s", self.s), ("lambda", self.lambda), ("p", self.p)]
    }

    fn density(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        let a = self.scale();
        a / (t * sqrt(2.0 * PI * t)) * exp(-a * a / (2.0 * t))
    }

    fn cdf(&self, t: f64) -> Option<f64> {
        Some(levy_cdf(self.s, t, self.lambda, self.p))
    }

    fn laplace(&self, sigma: f64) -> Option<f64> {
        Some(exp(-self.scale() * sqrt(2.0 * sigma)))
    }
}

/// `exp(−2/(γλpq))`, the plateau law as given by the heuristic.
pub fn boundary_law_cdf(q: f64, gamma: f64, lambda: f64, p: f64) -> f64 {
    BoundaryLaw::new(gamma, lambda, p).cdf(q).unwrap_or(0.0)
}

/// Fréchet-type law `P[Q < q] = exp(−c/q)` of the distance to a boundary
/// during a plateau. [`BoundaryLaw::new`] uses `c = 2/(γλp)`;
/// [`BoundaryLaw::with_scale`] takes `c` directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryLaw {
    pub c: f64,
}

impl BoundaryLaw {
    pub fn new(gamma: f64, lambda: f64, p: f64) -> Self {
        BoundaryLaw {
            c: 2.0 / (gamma * lambda * p),
        }
    }

    pub fn with_scale(c: f64) -> Self {
        BoundaryLaw { c }
    }
}

impl LawSpec for BoundaryLaw {
    fn name(&self) -> &'static str {
        "boundary-plateau"
    }

    fn parameters(&self) -> Vec<(&'static str, f64)> {
        vec![("c", self.c)]
    }

    fn density(&self, q: f64) -> f64 {
        if !(q > 0.0) {
            return 0.0;
        }
        self.c / (q * q) * exp(-self.c / q)
    }

    fn cdf(&self, q: f64) -> Option<f64> {
        if !(q > 0.0) {
            return Some(0.0);
        }
        Some(exp(-self.c / q))
    }

    fn laplace(&self, _sigma: f64) -> Option<f64> {
        None
    }
}

/// Mean number of bottom-boundary spikes above `m` in a real-time window:
/// `2 window_s / (λ p m)`.
pub fn spike_count_mean(m: f64, lambda: f64, p: f64, window_s: f64) -> f64 {
    2.0 * window_s / (lambda * p * m)
}

/// Top-boundary analogue of [`spike_count_mean`], obtained by the mirror
/// substitution `p → 1 − p`, `m → 1 − m`. `m` is the level in `Q`, so a top
/// spike "exceeds" it by dipping below `m`.
pub fn spike_count_mean_top(m: f64, lambda: f64, p: f64, window_s: f64) -> f64 {
    spike_count_mean(1.0 - m, lambda, 1.0 - p, window_s)
}
