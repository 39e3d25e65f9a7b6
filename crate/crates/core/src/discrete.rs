//! Iterated weak energy measurements of a qubit coupled to a thermal bath.
//!
//! Between two measurements the diagonal of the density matrix relaxes
//! exactly towards `p`; every `ds` a two-outcome measurement with Kraus
//! operators `diag(sqrt(1±ε), sqrt(1∓ε)) / sqrt(2)` is applied. Only the
//! ground-state population `Q` is tracked.

use alloc::vec::Vec;

use rand::Rng;

use crate::math::{ceil, exp};
use crate::model::{ModelParams, SeedSpec, Trajectory};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Plus,
    Minus,
}

/// One measurement of a discrete run. `q_post` is the state right after the
/// measurement and `dt_increment` the effective time elapsed since the
/// previous record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteStepRecord {
    pub step_index: usize,
    pub outcome: Outcome,
    pub q_post: f64,
    pub dt_increment: f64,
}

/// Normalization `c` of the discrete clock `t_n = Σ c (ΔQ)²`.
///
/// `TraceSquared` is `Tr[(Δρ)²] = 2 (ΔQ)²` for a diagonal qubit state.
/// `QuadraticVariation` drops the factor 2 and matches the continuous clock
/// `∫ (dQ)²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EffectiveTimeNorm {
    #[default]
    TraceSquared,
    QuadraticVariation,
}

impl EffectiveTimeNorm {
    pub fn constant(self) -> f64 {
        match self {
            EffectiveTimeNorm::TraceSquared => 2.0,
            EffectiveTimeNorm::QuadraticVariation => 1.0,
        }
    }

    pub fn from_constant(c: u8) -> Option<Self> {
        match c {
            2 => Some(EffectiveTimeNorm::TraceSquared),
            1 => Some(EffectiveTimeNorm::QuadraticVariation),
            _ => None,
        }
    }
}

/// Exact solution of `dQ/ds = λ (p − Q)` after a duration `ds`.
pub fn lindblad_relax(q: f64, lambda: f64, p: f64, ds: f64) -> f64 {
    (p + (q - p) * exp(-lambda * ds)).clamp(0.0, 1.0)
}

/// Probability of the `+` outcome, `Tr[B₊ ρ B₊†] = (1 + ε(2q − 1)) / 2`.
pub fn prob_plus(q: f64, epsilon: f64) -> f64 {
    0.5 * (1.0 + epsilon * (2.0 * q - 1.0))
}

/// Ground-state population after observing `outcome`.
pub fn posterior(q: f64, epsilon: f64, outcome: Outcome) -> f64 {
    let sign = match outcome {
        Outcome::Plus => 1.0,
        Outcome::Minus => -1.0,
    };
    let num = (1.0 + sign * epsilon) * q;
    let den = 1.0 + sign * epsilon * (2.0 * q - 1.0);
    (num / den).clamp(0.0, 1.0)
}

/// Applies one weak measurement, using the uniform draw `u ∈ [0, 1)` to pick
/// the outcome.
pub fn weak_measure(q: f64, epsilon: f64, u: f64) -> (Outcome, f64) {
    let outcome = if u < prob_plus(q, epsilon) {
        Outcome::Plus
    } else {
        Outcome::Minus
    };
    (outcome, posterior(q, epsilon, outcome))
}

/// Cumulative clock `t_n = Σ_{m ≤ n} c (q_m − q_{m−1})²` with `t_0 = 0`.
pub fn discrete_effective_time(q: &[f64], norm: EffectiveTimeNorm) -> Vec<f64> {
    let c = norm.constant();
    let mut out = Vec::with_capacity(q.len());
    if q.is_empty() {
        return out;
    }
    let mut t = 0.0;
    out.push(t);
    for w in q.windows(2) {
        let d = w[1] - w[0];
        t += c * d * d;
        out.push(t);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteRun {
    pub trajectory: Trajectory,
    pub steps: Vec<DiscreteStepRecord>,
}

pub fn run_discrete(params: &ModelParams, seed: SeedSpec, n_steps: usize) -> Result<DiscreteRun> {
    run_discrete_with(params, seed, n_steps, EffectiveTimeNorm::default())
}

/// Alternates exact relaxation over `ds` with one weak measurement, `n_steps`
/// times, starting from `params.q0`.
pub fn run_discrete_with(
    params: &ModelParams,
    seed: SeedSpec,
    n_steps: usize,
    norm: EffectiveTimeNorm,
) -> Result<DiscreteRun> {
    let params = params.validate()?;
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be at least 1"));
    }
    let mut rng = seed.rng();
    let c = norm.constant();
    let mut trajectory = Trajectory {
        s_grid: Vec::with_capacity(n_steps + 1),
        q: Vec::with_capacity(n_steps + 1),
        t_cum: Vec::with_capacity(n_steps + 1),
    };
    let mut steps = Vec::with_capacity(n_steps);

    let mut q = params.q0;
    let mut t = 0.0;
    trajectory.s_grid.push(0.0);
    trajectory.q.push(q);
    trajectory.t_cum.push(t);
    for k in 1..=n_steps {
        let relaxed = lindblad_relax(q, params.lambda, params.p, params.ds);
        let u: f64 = rng.random();
        let (outcome, q_post) = weak_measure(relaxed, params.epsilon, u);
        let d = q_post - q;
        let dt_increment = c * d * d;
        t += dt_increment;
        q = q_post;
        trajectory.s_grid.push(k as f64 * params.ds);
        trajectory.q.push(q);
        trajectory.t_cum.push(t);
        steps.push(DiscreteStepRecord {
            step_index: k,
            outcome,
            q_post,
            dt_increment,
        });
    }
    Ok(DiscreteRun { trajectory, steps })
}

/// Number of steps covering a real-time horizon.
pub fn steps_for_horizon(horizon_s: f64, ds: f64) -> usize {
    let x = horizon_s / ds;
    ceil(x - 1e-9 * x.max(1.0)) as usize
}
