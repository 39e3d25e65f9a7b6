//! Finite measurement rate: Euler–Maruyama for
//! `dQ = λ(p − Q) ds + √γ Q(1 − Q) dW` and the effective-time clock
//! `t(s) = γ ∫ Q²(1 − Q)² ds`.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::discrete::steps_for_horizon;
use crate::math::{floor, sqrt};
use crate::model::{ModelParams, SeedSpec, Trajectory};
use crate::{Error, Result};

/// Largest admissible `γ ds`. The boundary layer has width `γ^{-1/2}` and
/// must be resolved by the real-time step.
pub const MAX_GAMMA_DS: f64 = 0.1;

/// Validated view of [`ModelParams`] for the finite-rate engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeParams {
    lambda: f64,
    p: f64,
    gamma: f64,
    ds: f64,
    q0: f64,
    sqrt_gamma_ds: f64,
}

impl SdeParams {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let params = params.validate()?;
        let gamma = params.require_finite_gamma()?;
        if gamma * params.ds > MAX_GAMMA_DS {
            return Err(Error::StepTooCoarse { ds: params.ds, gamma });
        }
        Ok(SdeParams {
            lambda: params.lambda,
            p: params.p,
            gamma,
            ds: params.ds,
            q0: params.q0,
            sqrt_gamma_ds: sqrt(gamma * params.ds),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn ds(&self) -> f64 {
        self.ds
    }

    /// Unclamped Euler–Maruyama update.
    #[inline]
    pub fn raw_step(&self, q: f64, xi: f64) -> f64 {
        q + self.lambda * (self.p - q) * self.ds + self.sqrt_gamma_ds * q * (1.0 - q) * xi
    }

    /// Effective time accrued over one step started at `q`.
    #[inline]
    pub fn clock_increment(&self, q: f64) -> f64 {
        let v = q * (1.0 - q);
        self.gamma * v * v * self.ds
    }
}

/// One Euler–Maruyama step, clamped to `[0, 1]`.
pub fn em_step(q: f64, params: &SdeParams, xi: f64) -> f64 {
    params.raw_step(q, xi).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeState {
    pub step: usize,
    pub s: f64,
    pub q: f64,
    pub t: f64,
    /// Brownian increment `√ds ξ` that produced this state (0 at step 0).
    pub dw: f64,
    pub clamped: bool,
}

/// Streaming integrator; [`run_sde`] collects it into an [`SdePath`].
#[derive(Debug, Clone)]
pub struct SdeStepper {
    params: SdeParams,
    rng: ChaCha8Rng,
    state: SdeState,
    sqrt_ds: f64,
}

impl SdeStepper {
    pub fn new(params: &ModelParams, seed: SeedSpec) -> Result<Self> {
        let params = SdeParams::new(params)?;
        Ok(SdeStepper {
            rng: seed.rng(),
            sqrt_ds: sqrt(params.ds),
            state: SdeState {
                step: 0,
                s: 0.0,
                q: params.q0,
                t: 0.0,
                dw: 0.0,
                clamped: false,
            },
            params,
        })
    }

    pub fn params(&self) -> &SdeParams {
        &self.params
    }

    pub fn state(&self) -> SdeState {
        self.state
    }

    pub fn step(&mut self) -> SdeState {
        let xi: f64 = self.rng.sample(StandardNormal);
        let q = self.state.q;
        let raw = self.params.raw_step(q, xi);
        let next = raw.clamp(0.0, 1.0);
        let step = self.state.step + 1;
        self.state = SdeState {
            step,
            s: step as f64 * self.params.ds,
            q: next,
            t: self.state.t + self.params.clock_increment(q),
            dw: self.sqrt_ds * xi,
            clamped: next != raw,
        };
        self.state
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdePath {
    pub trajectory: Trajectory,
    pub gamma: f64,
    /// Brownian increments `ΔW_k = √ds ξ_k`, one per step.
    pub increments_w: Vec<f64>,
    pub clamped_steps: usize,
}

impl SdePath {
    /// Independent estimate of the clock, `Σ (Δq)²`.
    pub fn quadratic_variation_clock(&self) -> Vec<f64> {
        crate::discrete::discrete_effective_time(
            &self.trajectory.q,
            crate::discrete::EffectiveTimeNorm::QuadraticVariation,
        )
    }
}

/// Integrates over `⌈horizon_s / ds⌉` steps from `params.q0`.
pub fn run_sde(params: &ModelParams, seed: SeedSpec, horizon_s: f64) -> Result<SdePath> {
    if !(horizon_s > 0.0) {
        return Err(Error::OutOfRange {
            field: "horizon",
            reason: "must be > 0",
        });
    }
    let mut stepper = SdeStepper::new(params, seed)?;
    let n = steps_for_horizon(horizon_s, stepper.params.ds);
    let mut trajectory = Trajectory {
        s_grid: Vec::with_capacity(n + 1),
        q: Vec::with_capacity(n + 1),
        t_cum: Vec::with_capacity(n + 1),
    };
    let mut increments_w = Vec::with_capacity(n);
    let mut clamped_steps = 0;
    let first = stepper.state();
    trajectory.s_grid.push(first.s);
    trajectory.q.push(first.q);
    trajectory.t_cum.push(first.t);
    for _ in 0..n {
        let st = stepper.step();
        trajectory.s_grid.push(st.s);
        trajectory.q.push(st.q);
        trajectory.t_cum.push(st.t);
        increments_w.push(st.dw);
        clamped_steps += st.clamped as usize;
    }
    Ok(SdePath {
        trajectory,
        gamma: stepper.params.gamma,
        increments_w,
        clamped_steps,
    })
}

/// A path resampled on a uniform effective-time grid, with the companion
/// physical-time map `s(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveTimePath {
    pub dt: f64,
    pub t_grid: Vec<f64>,
    pub q: Vec<f64>,
    pub s_of_t: Vec<f64>,
}

/// Samples `(t_cum, q)` on the grid `j · dt_grid` by last observation:
/// grid point `t_j` takes the last sample with `t_cum ≤ t_j`.
pub fn reparametrize(path: &Trajectory, dt_grid: f64) -> Result<EffectiveTimePath> {
    if path.q.is_empty() {
        return Err(Error::EmptyPath);
    }
    if !(dt_grid > 0.0) {
        return Err(Error::OutOfRange {
            field: "dt",
            reason: "must be > 0",
        });
    }
    let t_end = *path.t_cum.last().unwrap_or(&0.0);
    if !(t_end > 0.0) {
        return Err(Error::DegenerateTime);
    }
    let n = floor(t_end / dt_grid) as usize + 1;
    let mut out = EffectiveTimePath {
        dt: dt_grid,
        t_grid: Vec::with_capacity(n),
        q: Vec::with_capacity(n),
        s_of_t: Vec::with_capacity(n),
    };
    let mut k = 0;
    for j in 0..n {
        let tj = j as f64 * dt_grid;
        while k + 1 < path.t_cum.len() && path.t_cum[k + 1] <= tj {
            k += 1;
        }
        out.t_grid.push(tj);
        out.q.push(path.q[k]);
        out.s_of_t.push(path.s_grid[k]);
    }
    Ok(out)
}

/// Non-overlapping increments `q[i + lag] − q[i]` over a uniform grid whose
/// start value lies in `[lo, hi]`.
pub fn bulk_increments(q: &[f64], lag: usize, lo: f64, hi: f64) -> Vec<f64> {
    bulk_increments_strided(q, lag, lag, lo, hi)
}

/// Like [`bulk_increments`] with start points every `stride` grid steps, so
/// increments overlap when `stride < lag`.
pub fn bulk_increments_strided(q: &[f64], lag: usize, stride: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if lag == 0 || stride == 0 {
        return out;
    }
    let mut i = 0;
    while i + lag < q.len() {
        if (lo..=hi).contains(&q[i]) {
            out.push(q[i + lag] - q[i]);
        }
        i += stride;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Gamma;
    use approx::assert_abs_diff_eq;

    fn params(gamma: f64) -> ModelParams {
        ModelParams {
            gamma: Gamma::Finite(gamma),
            ..ModelParams::default()
        }
    }

    fn sde(gamma: f64) -> SdeParams {
        SdeParams::new(&params(gamma)).unwrap()
    }

    #[test]
    fn pure_drift_when_noise_vanishes() {
        let mut p = sde(200.0);
        p.gamma = 0.0;
        p.sqrt_gamma_ds = 0.0;
        for q in [0.1, 0.5, 0.9] {
            assert_abs_diff_eq!(em_step(q, &p, 3.7), q + (0.5 - q) * 1e-5, epsilon = 1e-17);
        }
        // xi = 0 is the same check with the real coefficients
        assert_abs_diff_eq!(em_step(0.2, &sde(200.0), 0.0), 0.2 + 0.3e-5, epsilon = 1e-17);
    }

    #[test]
    fn noise_vanishes_at_the_boundary() {
        assert_abs_diff_eq!(em_step(0.0, &sde(200.0), 2.5), 5e-6, epsilon = 1e-18);
    }

    #[test]
    fn bulk_step_arithmetic() {
        // 0.5 + sqrt(200) * 0.25 * sqrt(1e-5)
        assert_abs_diff_eq!(em_step(0.5, &sde(200.0), 1.0), 0.511180339887499, epsilon = 1e-12);
    }

    #[test]
    fn guards() {
        assert!(matches!(
            SdeParams::new(&ModelParams {
                gamma: Gamma::Infinite,
                ..params(1.0)
            }),
            Err(Error::Inconsistent(_))
        ));
        assert!(matches!(
            SdeParams::new(&ModelParams {
                ds: 1e-3,
                ..params(200.0)
            }),
            Err(Error::StepTooCoarse { .. })
        ));
        assert!(run_sde(&params(200.0), SeedSpec::new(1, 0), 0.0).is_err());
    }

    #[test]
    fn path_invariants() {
        let path = run_sde(&params(200.0), SeedSpec::new(3, 1), 0.5).unwrap();
        path.trajectory.check_invariants().unwrap();
        assert_eq!(path.trajectory.len(), 50_001);
        assert_eq!(path.increments_w.len(), 50_000);
        assert!(path.clamped_steps < 50);
    }

    #[test]
    fn reparametrize_on_coincident_grid() {
        let traj = Trajectory {
            s_grid: alloc::vec![0.0, 1.0, 2.0],
            q: alloc::vec![0.2, 0.4, 0.6],
            t_cum: alloc::vec![0.0, 1.0, 2.0],
        };
        let r = reparametrize(&traj, 1.0).unwrap();
        assert_eq!(r.q, [0.2, 0.4, 0.6]);
        assert_eq!(r.t_grid, [0.0, 1.0, 2.0]);
        assert_eq!(r.s_of_t, [0.0, 1.0, 2.0]);
    }

    #[test]
    fn reparametrize_last_observation() {
        let traj = Trajectory {
            s_grid: alloc::vec![0.0, 1.0, 2.0, 3.0],
            q: alloc::vec![0.1, 0.2, 0.3, 0.4],
            t_cum: alloc::vec![0.0, 0.25, 0.25, 1.1],
        };
        let r = reparametrize(&traj, 0.5).unwrap();
        assert_eq!(r.q, [0.1, 0.3, 0.3]);
        assert_eq!(r.s_of_t, [0.0, 2.0, 2.0]);
    }

    #[test]
    fn reparametrize_errors() {
        assert_eq!(reparametrize(&Trajectory::default(), 1.0), Err(Error::EmptyPath));
        let flat = Trajectory {
            s_grid: alloc::vec![0.0, 1.0],
            q: alloc::vec![0.0, 0.0],
            t_cum: alloc::vec![0.0, 0.0],
        };
        assert_eq!(reparametrize(&flat, 1.0), Err(Error::DegenerateTime));
    }

    #[test]
    fn bulk_increment_selection() {
        let q = [0.1, 0.3, 0.5, 0.6, 0.9, 0.85, 0.4];
        assert_eq!(bulk_increments(&q, 2, 0.2, 0.8), alloc::vec![0.9 - 0.5]);
        assert!(bulk_increments(&q, 0, 0.0, 1.0).is_empty());
        assert_eq!(
            bulk_increments_strided(&q, 2, 1, 0.2, 0.8),
            alloc::vec![0.6 - 0.3, 0.9 - 0.5, 0.85 - 0.6]
        );
    }
}
