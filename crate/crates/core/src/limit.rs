//! The infinite-rate process in effective time.
//!
//! `Q_t = Q_0 + B_t + L_t − U_t` is a Brownian motion reflected at 0 and 1,
//! `L` and `U` are the pushing terms (local times) at the two boundaries and
//! the physical clock is `s(t) = L_t/(λp) + U_t/(λ(1−p))`.
//!
//! All recursions recompute the unreflected value from the cumulative
//! `b`, `l` and `u` rather than from the previous `q`, so the grid identity
//! `q = q0 + b + l − u` holds to a few ulps at every step instead of
//! accumulating rounding error.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::math::{ceil, exp, sqrt};
use crate::model::{ModelParams, SeedSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// `Q = 0`
    Lower,
    /// `Q = 1`
    Upper,
}

impl Boundary {
    pub fn level(self) -> f64 {
        match self {
            Boundary::Lower => 0.0,
            Boundary::Upper => 1.0,
        }
    }

    pub fn opposite(self) -> Boundary {
        match self {
            Boundary::Lower => Boundary::Upper,
            Boundary::Upper => Boundary::Lower,
        }
    }

    /// Distance of `q` from this boundary.
    pub fn distance(self, q: f64) -> f64 {
        match self {
            Boundary::Lower => q,
            Boundary::Upper => 1.0 - q,
        }
    }
}

/// Which boundaries reflect. `LowerOnly` is reflected Brownian motion on
/// `[0, ∞)`; its values are not confined to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundaries {
    #[default]
    Both,
    LowerOnly,
}

/// How the pushing term is computed on a step.
///
/// `Clamp` is the per-step recursion `Δl = max(0, −y)`, `Δu = max(0, y − 1)`
/// on the unreflected end value `y`. It misses boundary contacts that happen
/// between grid points, which biases local times low by `O(√dt)`.
///
/// `Bridge` draws the extremum of the Brownian bridge joining the two grid
/// values and pushes by its excursion beyond the boundary. For one boundary
/// this reproduces the continuous Skorokhod map exactly at grid times; with
/// two boundaries the only approximation is ignoring contacts with both
/// boundaries inside one step. It costs one extra exponential draw on steps
/// near a boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReflectionScheme {
    #[default]
    Clamp,
    Bridge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LimitOptions {
    pub boundaries: Boundaries,
    pub scheme: ReflectionScheme,
}

/// Skorokhod decomposition on `[0, ∞)`: `x = x0 + b + l`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkorokhodSolution {
    pub x: Vec<f64>,
    pub l: Vec<f64>,
}

/// Explicit solution `l = max(0, −min_{j≤k} b_j − x0)`, `x = x0 + b + l`.
pub fn skorokhod_map(b: &[f64], x0: f64) -> Result<SkorokhodSolution> {
    if !(x0 >= 0.0) {
        return Err(Error::NegativeStart(x0));
    }
    let first = *b.first().ok_or(Error::EmptyPath)?;
    if first != 0.0 {
        return Err(Error::NonZeroDrivingStart(first));
    }
    let mut running_min = 0.0f64;
    let mut x = Vec::with_capacity(b.len());
    let mut l = Vec::with_capacity(b.len());
    for &bk in b {
        running_min = running_min.min(bk);
        let lk = (-running_min - x0).max(0.0);
        l.push(lk);
        x.push(x0 + bk + lk);
    }
    Ok(SkorokhodSolution { x, l })
}

/// Two-sided decomposition `x = x0 + b + l − u` in the strip `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StripReflection {
    pub x: Vec<f64>,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
}

/// Per-step clamp recursion in the strip: with `y = x_k + Δb`,
/// `Δl = max(0, −y)`, `Δu = max(0, y − 1)`, `x_{k+1} = min(max(y, 0), 1)`.
pub fn reflect_strip(b: &[f64], x0: f64) -> Result<StripReflection> {
    if !(0.0..=1.0).contains(&x0) {
        return Err(Error::StartOutOfStrip(x0));
    }
    let first = *b.first().ok_or(Error::EmptyPath)?;
    if first != 0.0 {
        return Err(Error::NonZeroDrivingStart(first));
    }
    let mut out = StripReflection {
        x: Vec::with_capacity(b.len()),
        l: Vec::with_capacity(b.len()),
        u: Vec::with_capacity(b.len()),
    };
    let (mut l, mut u) = (0.0f64, 0.0f64);
    out.x.push(x0);
    out.l.push(l);
    out.u.push(u);
    for &bk in &b[1..] {
        let y = x0 + bk + l - u;
        l += (-y).max(0.0);
        u += (y - 1.0).max(0.0);
        out.x.push((x0 + bk + l - u).clamp(0.0, 1.0));
        out.l.push(l);
        out.u.push(u);
    }
    Ok(out)
}

/// Physical time `s = L/(λp) + U/(λ(1−p))`, pointwise.
pub fn physical_time(big_l: &[f64], big_u: &[f64], lambda: f64, p: f64) -> Vec<f64> {
    let (a, c) = (1.0 / (lambda * p), 1.0 / (lambda * (1.0 - p)));
    big_l.iter().zip(big_u).map(|(&l, &u)| l * a + u * c).collect()
}

/// Right-continuous inverse `t(s) = inf{t : s(t) > s_query}` of a
/// non-decreasing physical-time path sampled on `t_grid`.
pub fn inverse_time_change(t_grid: &[f64], s_of_t: &[f64], s_query: f64) -> Result<f64> {
    let last = *s_of_t.last().ok_or(Error::EmptyPath)?;
    // first index with s > s_query; s_of_t is sorted so this is a partition point
    let k = s_of_t.partition_point(|&s| s <= s_query);
    if k == s_of_t.len() {
        return Err(Error::HorizonExceeded { query: s_query, last });
    }
    Ok(t_grid[k])
}

/// Occupation estimate `ε⁻¹ Σ_{j<k} 1{dist(q_j, level) ≤ ε} dt` of the local
/// time at a boundary, as a cumulative path starting at 0.
///
/// At a reflecting boundary this one-sided window sees the process on one
/// side only, and the estimate converges to twice the pushing term `L`
/// (Tanaka's formula for a non-negative semimartingale). Use
/// [`mollified_local_time`] for an estimate on the scale of `L`.
pub fn local_time_mollifier(q: &[f64], dt: f64, level: Boundary, eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(Error::EpsNonPositive(eps));
    }
    let mut out = Vec::with_capacity(q.len());
    let mut acc = 0.0;
    let w = dt / eps;
    if q.is_empty() {
        return Ok(out);
    }
    out.push(0.0);
    for &qk in &q[..q.len() - 1] {
        let d = level.distance(qk);
        if (0.0..=eps).contains(&d) {
            acc += w;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Mollifier estimate of the pushing term at a reflecting boundary:
/// half of [`local_time_mollifier`].
pub fn mollified_local_time(q: &[f64], dt: f64, level: Boundary, eps: f64) -> Result<Vec<f64>> {
    let mut v = local_time_mollifier(q, dt, level, eps)?;
    v.iter_mut().for_each(|x| *x *= 0.5);
    Ok(v)
}

/// Reflected path on a uniform effective-time grid with its local times,
/// driving Brownian path and reconstructed physical time.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitTrajectory {
    pub dt: f64,
    pub lambda: f64,
    pub p: f64,
    pub options: LimitOptions,
    pub t_grid: Vec<f64>,
    pub q: Vec<f64>,
    pub big_l: Vec<f64>,
    pub big_u: Vec<f64>,
    pub b: Vec<f64>,
    pub s_of_t: Vec<f64>,
}

impl LimitTrajectory {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn q0(&self) -> f64 {
        self.q[0]
    }

    /// Largest `|q − (q0 + b + l − u)|` over the grid.
    pub fn skorokhod_residual(&self) -> f64 {
        let q0 = self.q0();
        self.q
            .iter()
            .zip(&self.b)
            .zip(self.big_l.iter().zip(&self.big_u))
            .map(|((&q, &b), (&l, &u))| (q - (q0 + b + l - u)).abs())
            .fold(0.0, f64::max)
    }

    pub fn inverse_time_change(&self, s_query: f64) -> Result<f64> {
        inverse_time_change(&self.t_grid, &self.s_of_t, s_query)
    }

    /// Grid index `k ≥ 1` has a contact with `boundary` when the pushing term
    /// grew on step `k − 1 → k`.
    pub fn contact(&self, k: usize, boundary: Boundary) -> bool {
        let v = match boundary {
            Boundary::Lower => &self.big_l,
            Boundary::Upper => &self.big_u,
        };
        k > 0 && v[k] > v[k - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitState {
    pub step: usize,
    pub t: f64,
    pub q: f64,
    pub b: f64,
    pub l: f64,
    pub u: f64,
}

/// `P(bridge reaches the boundary) < e^{-40}` beyond this value of
/// `2 d_start d_end / dt`; such steps skip the extremum draw.
const BRIDGE_SKIP: f64 = 40.0;

/// Streaming reflected Brownian motion; [`run_limit`] collects it into a
/// [`LimitTrajectory`].
#[derive(Debug, Clone)]
pub struct LimitStepper {
    dt: f64,
    sqrt_dt: f64,
    q0: f64,
    options: LimitOptions,
    rng: ChaCha8Rng,
    state: LimitState,
}

impl LimitStepper {
    pub fn new(params: &ModelParams, seed: SeedSpec, options: LimitOptions) -> Result<Self> {
        let params = params.validate()?;
        params.require_infinite_gamma()?;
        Ok(Self::from_parts(params.dt, params.q0, seed.rng(), options))
    }

    pub(crate) fn from_parts(dt: f64, q0: f64, rng: ChaCha8Rng, options: LimitOptions) -> Self {
        LimitStepper {
            dt,
            sqrt_dt: sqrt(dt),
            q0,
            options,
            rng,
            state: LimitState {
                step: 0,
                t: 0.0,
                q: q0,
                b: 0.0,
                l: 0.0,
                u: 0.0,
            },
        }
    }

    pub fn state(&self) -> LimitState {
        self.state
    }

    /// `|q − (q0 + b + l − u)|` at the current state.
    pub fn residual(&self) -> f64 {
        let s = &self.state;
        (s.q - (self.q0 + s.b + s.l - s.u)).abs()
    }

    fn lower_push(&mut self, x: f64, y: f64) -> f64 {
        match self.options.scheme {
            ReflectionScheme::Clamp => (-y).max(0.0),
            ReflectionScheme::Bridge => {
                if y > 0.0 && 2.0 * x * y > BRIDGE_SKIP * self.dt {
                    return 0.0;
                }
                let e: f64 = self.rng.sample(Exp1);
                let d = x - y;
                let min = 0.5 * (x + y - sqrt(d * d + 2.0 * e * self.dt));
                (-min).max(0.0)
            }
        }
    }

    fn upper_push(&mut self, x: f64, y: f64) -> f64 {
        match self.options.scheme {
            ReflectionScheme::Clamp => (y - 1.0).max(0.0),
            ReflectionScheme::Bridge => {
                if y < 1.0 && 2.0 * (1.0 - x) * (1.0 - y) > BRIDGE_SKIP * self.dt {
                    return 0.0;
                }
                let e: f64 = self.rng.sample(Exp1);
                let d = x - y;
                let max = 0.5 * (x + y + sqrt(d * d + 2.0 * e * self.dt));
                (max - 1.0).max(0.0)
            }
        }
    }

    pub fn step(&mut self) -> LimitState {
        let xi: f64 = self.rng.sample(StandardNormal);
        let LimitState {
            step, q: x, b, l, u, ..
        } = self.state;
        let b = b + self.sqrt_dt * xi;
        let y = self.q0 + b + l - u;
        let dl = self.lower_push(x, y);
        let du = match self.options.boundaries {
            Boundaries::Both => self.upper_push(x, y),
            Boundaries::LowerOnly => 0.0,
        };
        let (l, u) = (l + dl, u + du);
        let raw = self.q0 + b + l - u;
        let q = match self.options.boundaries {
            Boundaries::Both => raw.clamp(0.0, 1.0),
            Boundaries::LowerOnly => raw.max(0.0),
        };
        self.state = LimitState {
            step: step + 1,
            t: (step + 1) as f64 * self.dt,
            q,
            b,
            l,
            u,
        };
        self.state
    }
}

pub fn run_limit(params: &ModelParams, seed: SeedSpec, horizon_t: f64) -> Result<LimitTrajectory> {
    run_limit_with(params, seed, horizon_t, LimitOptions::default())
}

/// Reflected Brownian motion over `⌈horizon_t / dt⌉` steps of effective
/// time, started at `params.q0`.
pub fn run_limit_with(
    params: &ModelParams,
    seed: SeedSpec,
    horizon_t: f64,
    options: LimitOptions,
) -> Result<LimitTrajectory> {
    if !(horizon_t > 0.0) {
        return Err(Error::OutOfRange {
            field: "horizon",
            reason: "must be > 0",
        });
    }
    let mut stepper = LimitStepper::new(params, seed, options)?;
    let n = ceil(horizon_t / params.dt - 1e-9 * (horizon_t / params.dt).max(1.0)) as usize;
    let mut tr = LimitTrajectory {
        dt: params.dt,
        lambda: params.lambda,
        p: params.p,
        options,
        t_grid: Vec::with_capacity(n + 1),
        q: Vec::with_capacity(n + 1),
        big_l: Vec::with_capacity(n + 1),
        big_u: Vec::with_capacity(n + 1),
        b: Vec::with_capacity(n + 1),
        s_of_t: Vec::new(),
    };
    let mut push = |st: LimitState| {
        tr.t_grid.push(st.t);
        tr.q.push(st.q);
        tr.big_l.push(st.l);
        tr.big_u.push(st.u);
        tr.b.push(st.b);
    };
    push(stepper.state());
    for _ in 0..n {
        push(stepper.step());
    }
    tr.s_of_t = physical_time(&tr.big_l, &tr.big_u, params.lambda, params.p);
    Ok(tr)
}

/// Result of [`inverse_time_samples`].
#[derive(Debug, Clone, PartialEq)]
pub struct InverseTimeSample {
    /// `t(s)` for each requested level; `f64::INFINITY` once a level was
    /// not reached within the cap.
    pub times: Vec<f64>,
    /// Largest Skorokhod residual seen along the run.
    pub max_residual: f64,
    pub steps: usize,
}

/// Streams one limit run and records the right-continuous inverse
/// `t(s) = inf{t : s(t) > s}` at each of the ascending `s_levels`.
///
/// Each increment `t(s_k) − t(s_{k−1})` gets its own effective-time budget
/// `t_cap`; the run stops at the first level missed. Censoring of an
/// increment then depends only on the path after the previous level, which
/// keeps increments independent given that the earlier ones were observed.
pub fn inverse_time_samples(
    params: &ModelParams,
    seed: SeedSpec,
    options: LimitOptions,
    s_levels: &[f64],
    t_cap: f64,
) -> Result<InverseTimeSample> {
    if s_levels.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("s levels must be ascending"));
    }
    let mut stepper = LimitStepper::new(params, seed, options)?;
    let (a, c) = (
        1.0 / (params.lambda * params.p),
        1.0 / (params.lambda * (1.0 - params.p)),
    );
    let mut times = Vec::with_capacity(s_levels.len());
    let mut max_residual = 0.0f64;
    let mut st = stepper.state();
    let mut deadline = t_cap;
    while times.len() < s_levels.len() && st.t < deadline {
        st = stepper.step();
        max_residual = max_residual.max(stepper.residual());
        let s = st.l * a + st.u * c;
        while times.len() < s_levels.len() && s > s_levels[times.len()] {
            times.push(st.t);
            deadline = st.t + t_cap;
        }
    }
    times.resize(s_levels.len(), f64::INFINITY);
    Ok(InverseTimeSample {
        times,
        max_residual,
        steps: st.step,
    })
}

/// Closed form `E[e^{−σ t(s)}] = exp(−s λ p √(2σ))` of the one-boundary time
/// change.
pub fn stable_half_laplace(s: f64, sigma: f64, lambda: f64, p: f64) -> f64 {
    exp(-s * lambda * p * sqrt(2.0 * sigma))
}

#[allow(clippy::needless_range_loop)]
#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Gamma;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn limit_params(dt: f64) -> ModelParams {
        ModelParams {
            gamma: Gamma::Infinite,
            dt,
            ..ModelParams::default()
        }
    }

    #[test]
    fn skorokhod_linear_descent() {
        let b: Vec<f64> = (0..=10).map(|k| -(k as f64) * 0.1).collect();
        let sol = skorokhod_map(&b, 0.0).unwrap();
        for k in 0..=10 {
            assert_abs_diff_eq!(sol.l[k], k as f64 * 0.1, epsilon = 1e-15);
            assert_abs_diff_eq!(sol.x[k], 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn skorokhod_inactive_reflection() {
        let b = [0.0, -0.2, 0.1, -0.29, 0.5];
        let sol = skorokhod_map(&b, 0.3).unwrap();
        assert!(sol.l.iter().all(|&l| l == 0.0));
        for (x, bk) in sol.x.iter().zip(b) {
            assert_abs_diff_eq!(*x, 0.3 + bk, epsilon = 1e-15);
        }
    }

    #[test]
    fn skorokhod_errors() {
        assert_eq!(skorokhod_map(&[0.0, 1.0], -0.1), Err(Error::NegativeStart(-0.1)));
        assert_eq!(skorokhod_map(&[], 0.0), Err(Error::EmptyPath));
        assert_eq!(skorokhod_map(&[0.5], 0.0), Err(Error::NonZeroDrivingStart(0.5)));
    }

    #[test]
    fn strip_hand_trace() {
        let r = reflect_strip(&[0.0, 0.2, -0.1], 0.9).unwrap();
        assert_abs_diff_eq!(r.x[0], 0.9);
        assert_abs_diff_eq!(r.x[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.x[2], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(r.u[1], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(r.u[2] - r.u[1], 0.0);
        assert!(r.l.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn strip_trivial_paths() {
        let r = reflect_strip(&[0.0; 5], 0.4).unwrap();
        assert!(r.x.iter().all(|&x| x == 0.4));
        assert!(r.l.iter().chain(&r.u).all(|&v| v == 0.0));
        let b = [0.0, 0.1, -0.2, 0.3, 0.05];
        let r = reflect_strip(&b, 0.5).unwrap();
        assert!(r.l.iter().chain(&r.u).all(|&v| v == 0.0));
        for (x, bk) in r.x.iter().zip(b) {
            assert_abs_diff_eq!(*x, 0.5 + bk, epsilon = 1e-15);
        }
        assert_eq!(reflect_strip(&b, 1.2), Err(Error::StartOutOfStrip(1.2)));
    }

    #[test]
    fn physical_time_formula() {
        assert_eq!(physical_time(&[1.0], &[0.0], 1.0, 0.5), [2.0]);
        assert_eq!(physical_time(&[0.0], &[0.0], 1.0, 0.5), [0.0]);
        assert_abs_diff_eq!(
            physical_time(&[1.0], &[1.0], 2.0, 0.25)[0],
            2.0 + 2.0 / 3.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn inverse_is_right_continuous() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        let s = [0.0, 0.0, 0.0, 0.7, 1.5];
        assert_eq!(inverse_time_change(&t, &s, 0.5), Ok(3.0));
        assert_eq!(inverse_time_change(&t, &s, 0.0), Ok(3.0));
        assert_eq!(inverse_time_change(&t, &s, 0.7), Ok(4.0));
        assert!(matches!(
            inverse_time_change(&t, &s, 1.5),
            Err(Error::HorizonExceeded { .. })
        ));
        let s = [0.0, 0.1, 0.2];
        assert_eq!(inverse_time_change(&[0.0, 0.01, 0.02], &s, 0.0), Ok(0.01));
    }

    #[test]
    fn mollifier_trivial_cases() {
        let far = [0.5; 11];
        let est = local_time_mollifier(&far, 0.1, Boundary::Lower, 0.1).unwrap();
        assert!(est.iter().all(|&v| v == 0.0));
        let zero = [0.0; 101];
        let est = local_time_mollifier(&zero, 0.01, Boundary::Lower, 0.1).unwrap();
        assert_abs_diff_eq!(est[100], 10.0, epsilon = 1e-12);
        let top = [1.0; 101];
        let est = local_time_mollifier(&top, 0.01, Boundary::Upper, 0.1).unwrap();
        assert_abs_diff_eq!(est[100], 10.0, epsilon = 1e-12);
        assert_eq!(
            local_time_mollifier(&zero, 0.01, Boundary::Lower, 0.0),
            Err(Error::EpsNonPositive(0.0))
        );
    }

    #[test]
    fn limit_requires_infinite_gamma() {
        let p = ModelParams {
            gamma: Gamma::Finite(10.0),
            ..limit_params(1e-3)
        };
        assert!(matches!(
            run_limit(&p, SeedSpec::new(1, 0), 1.0),
            Err(Error::Inconsistent(_))
        ));
        assert!(run_limit(&limit_params(1e-3), SeedSpec::new(1, 0), 0.0).is_err());
    }

    #[test]
    fn limit_run_invariants_clamp() {
        let tr = run_limit(&limit_params(1e-4), SeedSpec::new(2, 0), 2.0).unwrap();
        assert_eq!(tr.len(), 20_001);
        assert!(tr.skorokhod_residual() <= 1e-12);
        assert!(tr.q.iter().all(|q| (0.0..=1.0).contains(q)));
        for w in tr
            .big_l
            .windows(2)
            .chain(tr.big_u.windows(2))
            .chain(tr.s_of_t.windows(2))
        {
            assert!(w[1] >= w[0]);
        }
        for k in 1..tr.len() {
            let y = tr.q[k - 1] + (tr.b[k] - tr.b[k - 1]);
            if tr.contact(k, Boundary::Lower) {
                assert!(y < 0.0 && tr.q[k] <= 1e-12);
            }
            if tr.contact(k, Boundary::Upper) {
                assert!(y > 1.0 && tr.q[k] >= 1.0 - 1e-12);
            }
            if !tr.contact(k, Boundary::Lower) && !tr.contact(k, Boundary::Upper) {
                assert_eq!(tr.s_of_t[k], tr.s_of_t[k - 1]);
            }
        }
        assert!(tr.big_l[tr.len() - 1] > 0.0 || tr.big_u[tr.len() - 1] > 0.0);
    }

    #[test]
    fn limit_run_invariants_bridge() {
        let opts = LimitOptions {
            scheme: ReflectionScheme::Bridge,
            ..Default::default()
        };
        let tr = run_limit_with(&limit_params(1e-4), SeedSpec::new(2, 0), 2.0, opts).unwrap();
        assert!(tr.skorokhod_residual() <= 1e-12);
        assert!(tr.q.iter().all(|q| (0.0..=1.0).contains(q)));
        // the bridge scheme sees at least the contacts the clamp sees
        let clamp = run_limit(&limit_params(1e-4), SeedSpec::new(2, 0), 2.0).unwrap();
        assert!(tr.big_l.last() >= Some(&0.0) && clamp.big_l.last() >= Some(&0.0));
    }

    #[test]
    fn lower_only_runs_leave_the_strip() {
        let opts = LimitOptions {
            boundaries: Boundaries::LowerOnly,
            scheme: ReflectionScheme::Bridge,
        };
        let p = ModelParams {
            q0: 0.0,
            ..limit_params(1e-3)
        };
        let tr = run_limit_with(&p, SeedSpec::new(4, 0), 20.0, opts).unwrap();
        assert!(tr.big_u.iter().all(|&u| u == 0.0));
        assert!(tr.q.iter().all(|&q| q >= 0.0));
        assert!(tr.skorokhod_residual() <= 1e-12);
    }

    #[test]
    fn streaming_inverse_matches_stored_path() {
        let opts = LimitOptions {
            boundaries: Boundaries::LowerOnly,
            scheme: ReflectionScheme::Bridge,
        };
        let p = ModelParams {
            q0: 0.0,
            ..limit_params(1e-3)
        };
        let seed = SeedSpec::new(9, 3);
        let tr = run_limit_with(&p, seed, 30.0, opts).unwrap();
        let sample = inverse_time_samples(&p, seed, opts, &[0.1, 0.2], 30.0).unwrap();
        for (level, t) in [0.1, 0.2].iter().zip(&sample.times) {
            match tr.inverse_time_change(*level) {
                Ok(expected) => assert_eq!(*t, expected),
                Err(_) => assert!(t.is_infinite()),
            }
        }
    }

    proptest! {
        #[test]
        fn strip_identity_and_bounds(steps in proptest::collection::vec(-0.3f64..0.3, 1..200), x0 in 0.0f64..=1.0) {
            let mut b = alloc::vec![0.0];
            for d in &steps {
                let last = *b.last().unwrap();
                b.push(last + d);
            }
            let r = reflect_strip(&b, x0).unwrap();
            for k in 0..b.len() {
                prop_assert!((0.0..=1.0).contains(&r.x[k]));
                prop_assert!((r.x[k] - (x0 + b[k] + r.l[k] - r.u[k])).abs() <= 1e-12);
                if k > 0 {
                    prop_assert!(r.l[k] >= r.l[k - 1] && r.u[k] >= r.u[k - 1]);
                    if r.l[k] > r.l[k - 1] { prop_assert!(r.x[k] <= 1e-12); }
                    if r.u[k] > r.u[k - 1] { prop_assert!(r.x[k] >= 1.0 - 1e-12); }
                }
            }
        }

        #[test]
        fn skorokhod_lemma_properties(steps in proptest::collection::vec(-1.0f64..1.0, 1..200), x0 in 0.0f64..2.0) {
            let mut b = alloc::vec![0.0];
            for d in &steps {
                let last = *b.last().unwrap();
                b.push(last + d);
            }
            let sol = skorokhod_map(&b, x0).unwrap();
            prop_assert_eq!(sol.x[0], x0);
            for k in 0..b.len() {
                prop_assert!(sol.x[k] >= -1e-12);
                prop_assert!((sol.x[k] - (x0 + b[k] + sol.l[k])).abs() <= 1e-12);
                if k > 0 {
                    prop_assert!(sol.l[k] >= sol.l[k - 1]);
                    if sol.l[k] > sol.l[k - 1] { prop_assert!(sol.x[k].abs() <= 1e-12); }
                }
            }
        }
    }
}
