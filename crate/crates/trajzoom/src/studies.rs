//! Ensemble computations shared by the runner and the acceptance suite.
//!
//! Every function works trajectory by trajectory with streams keyed by
//! [`SeedSpec`], maps over trajectory indices on the current rayon pool and
//! reduces in index order, so the result does not depend on the number of
//! threads.

use rayon::prelude::*;

use trajzoom_core::limit::{
    inverse_time_samples, stable_half_laplace, Boundary, InverseTimeSample, LimitOptions, LimitState, LimitStepper,
    LimitTrajectory,
};
use trajzoom_core::sde::SdeStepper;
use trajzoom_core::stats::entropy::{linear_entropy_series, EntropyMode, LocalTimes};
use trajzoom_core::stats::excursions::ExcursionTracker;
use trajzoom_core::stats::laws::{excursion_laplace_exact, levy_cdf};
use trajzoom_core::stats::{
    correlation, empirical_laplace, ks_statistic_censored, laplace_factorization_check, mean_stderr, Excursion,
    ExcursionKind, FactorizationReport, KsResult, LaplaceEstimate, SpikeCensus,
};
use trajzoom_core::{ModelParams, Result, SeedSpec};

/// Offset of the trajectory index for the apex-refinement stream.
pub const APEX_STREAM_OFFSET: u64 = 1 << 40;

/// Stream used by the excursion tracker of trajectory `seed`.
pub fn apex_seed(seed: SeedSpec) -> SeedSpec {
    SeedSpec::new(seed.master_seed, seed.trajectory_index + APEX_STREAM_OFFSET)
}

/// `f(i)` for `i` in `0..n`, in index order.
pub fn par_map<T: Send>(n: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..n as u64).into_par_iter().map(f).collect()
}

/// Boundary touched on the step from `prev` to `cur` of a limit stepper.
pub fn step_contact(prev: &LimitState, cur: &LimitState) -> Option<Boundary> {
    if cur.q <= 0.0 || cur.l > prev.l {
        Some(Boundary::Lower)
    } else if cur.q >= 1.0 || cur.u > prev.u {
        Some(Boundary::Upper)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionRun {
    /// Spikes whose height lies in the band.
    pub selected: Vec<Excursion>,
    pub spikes: usize,
    pub jumps: usize,
    pub max_residual: f64,
}

/// Streams one limit run over `horizon` of effective time through an
/// excursion tracker with apex refinement.
pub fn excursion_run(
    params: &ModelParams,
    seed: SeedSpec,
    options: LimitOptions,
    horizon: f64,
    floor: f64,
    band: (f64, f64),
) -> Result<ExcursionRun> {
    let mut stepper = LimitStepper::new(params, seed, options)?;
    let mut tracker = ExcursionTracker::new(params.dt, floor)?.with_apex_refinement(apex_seed(seed).rng());
    let n = (horizon / params.dt).ceil() as usize;
    let mut out = ExcursionRun {
        selected: Vec::new(),
        spikes: 0,
        jumps: 0,
        max_residual: 0.0,
    };
    let mut prev = stepper.state();
    for _ in 0..n {
        let cur = stepper.step();
        out.max_residual = out.max_residual.max(stepper.residual());
        if let Some(e) = tracker.push(cur.t, cur.q, step_contact(&prev, &cur)) {
            match e.kind {
                ExcursionKind::Jump => out.jumps += 1,
                ExcursionKind::Spike => {
                    out.spikes += 1;
                    if (band.0..=band.1).contains(&e.max_height) {
                        out.selected.push(e);
                    }
                }
            }
        }
        prev = cur;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceRow {
    pub sigma: f64,
    pub ascent: LaplaceEstimate,
    pub descent: LaplaceEstimate,
    pub exact: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionSummary {
    /// Reference height; times are rescaled to it by `(m_ref / m)²`.
    pub m_ref: f64,
    pub ascent: Vec<f64>,
    pub descent: Vec<f64>,
    pub rows: Vec<LaplaceRow>,
    pub mean_ascent: (f64, f64),
    pub mean_descent: (f64, f64),
    pub correlation: f64,
    pub spikes: usize,
    pub jumps: usize,
    pub max_residual: f64,
}

impl ExcursionSummary {
    /// `√n · ρ`, approximately standard normal under independence.
    pub fn correlation_z(&self) -> f64 {
        self.correlation * (self.ascent.len() as f64).sqrt()
    }

    pub fn worst_z(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| [r.ascent.z_score(r.exact), r.descent.z_score(r.exact)])
            .fold(0.0, |a, z| a.max(z.abs()))
    }
}

/// Pools excursion runs and compares rescaled ascent and descent times with
/// the closed-form transform at height `m_ref`.
pub fn summarize_excursions(runs: &[ExcursionRun], m_ref: f64, sigmas: &[f64]) -> Result<ExcursionSummary> {
    let mut ascent = Vec::new();
    let mut descent = Vec::new();
    for e in runs.iter().flat_map(|r| &r.selected) {
        let k = (m_ref / e.max_height).powi(2);
        ascent.push(e.ascent_time * k);
        descent.push(e.descent_time * k);
    }
    let mut rows = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        rows.push(LaplaceRow {
            sigma,
            ascent: empirical_laplace(&ascent, sigma)?,
            descent: empirical_laplace(&descent, sigma)?,
            exact: excursion_laplace_exact(m_ref, sigma),
        });
    }
    Ok(ExcursionSummary {
        m_ref,
        mean_ascent: mean_stderr(&ascent),
        mean_descent: mean_stderr(&descent),
        correlation: correlation(&ascent, &descent),
        spikes: runs.iter().map(|r| r.spikes).sum(),
        jumps: runs.iter().map(|r| r.jumps).sum(),
        max_residual: runs.iter().map(|r| r.max_residual).fold(0.0, f64::max),
        ascent,
        descent,
        rows,
    })
}

/// Excursion ensemble of `n_traj` runs of length `horizon`.
#[allow(clippy::too_many_arguments)]
pub fn excursion_study(
    params: &ModelParams,
    master_seed: u64,
    n_traj: usize,
    options: LimitOptions,
    horizon: f64,
    floor: f64,
    band: (f64, f64),
    sigmas: &[f64],
) -> Result<ExcursionSummary> {
    let runs = par_map(n_traj, |i| {
        excursion_run(params, SeedSpec::new(master_seed, i), options, horizon, floor, band)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    summarize_excursions(&runs, 0.5 * (band.0 + band.1), sigmas)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyLevel {
    pub s: f64,
    pub laplace: Vec<(f64, LaplaceEstimate, f64)>,
    pub ks: KsResult,
    pub censored: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevySummary {
    pub samples: Vec<InverseTimeSample>,
    pub levels: Vec<LevyLevel>,
    /// Present with two or more levels and enough samples.
    pub factorization: Option<FactorizationReport>,
    pub max_residual: f64,
}

/// `σ` pairs of the factorization check.
pub const FACTORIZATION_SIGMAS: [(f64, f64); 4] = [(0.0, 0.0), (2.0, 2.0), (1.0, 2.0), (0.5, 4.0)];

/// One-boundary inverse time change at `s_levels` over `n` runs.
#[allow(clippy::too_many_arguments)]
pub fn levy_study(
    params: &ModelParams,
    master_seed: u64,
    n: usize,
    options: LimitOptions,
    s_levels: &[f64],
    t_cap: f64,
    sigmas: &[f64],
) -> Result<LevySummary> {
    let samples = par_map(n, |i| {
        inverse_time_samples(params, SeedSpec::new(master_seed, i), options, s_levels, t_cap)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (lambda, p) = (params.lambda, params.p);
    let mut levels = Vec::with_capacity(s_levels.len());
    for (k, &s) in s_levels.iter().enumerate() {
        let ts: Vec<f64> = samples.iter().map(|x| x.times[k]).collect();
        let mut laplace = Vec::with_capacity(sigmas.len());
        for &sigma in sigmas {
            laplace.push((
                sigma,
                empirical_laplace(&ts, sigma)?,
                stable_half_laplace(s, sigma, lambda, p),
            ));
        }
        levels.push(LevyLevel {
            s,
            laplace,
            ks: ks_statistic_censored(&ts, |t| levy_cdf(s, t, lambda, p), t_cap)?,
            censored: ts.iter().filter(|t| !t.is_finite()).count(),
        });
    }
    let factorization = if s_levels.len() >= 2 && n >= trajzoom_core::stats::laplace::MIN_FACTORIZATION_SAMPLES {
        let pairs: Vec<(f64, f64)> = samples
            .iter()
            .map(|x| {
                let d = x.times[1] - x.times[0];
                (x.times[0], if d.is_nan() { f64::INFINITY } else { d })
            })
            .collect();
        Some(laplace_factorization_check(
            &pairs,
            &FACTORIZATION_SIGMAS,
            s_levels[0],
            s_levels[1],
            lambda,
            p,
        )?)
    } else {
        None
    };
    Ok(LevySummary {
        max_residual: samples.iter().map(|x| x.max_residual).fold(0.0, f64::max),
        samples,
        levels,
        factorization,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpikeRun {
    pub census: SpikeCensus,
    pub clamped_steps: usize,
}

/// Finite-γ run over `horizon` of real time through a spike census.
pub fn spike_run(
    params: &ModelParams,
    seed: SeedSpec,
    horizon: f64,
    delta: f64,
    m: f64,
    window: f64,
    stride: usize,
) -> Result<SpikeRun> {
    let mut stepper = SdeStepper::new(params, seed)?;
    let mut census = SpikeCensus::new(params.ds, delta, m, window, stride)?;
    let n = trajzoom_core::discrete::steps_for_horizon(horizon, params.ds);
    let mut clamped_steps = 0;
    for _ in 0..n {
        let st = stepper.step();
        clamped_steps += st.clamped as usize;
        census.push(st.q);
    }
    Ok(SpikeRun { census, clamped_steps })
}

/// Running sums of a sample, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub n: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    pub fn stderr(&self) -> f64 {
        let n = self.n as f64;
        let var = (self.sum_sq - self.sum * self.sum / n) / (n - 1.0);
        (var.max(0.0) / n).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EntropyStats {
    /// `ΔS` on steps starting in the bulk band without boundary contact.
    pub bulk_delta_s: Moments,
    /// Full residual `ΔS − 2(1 − 2Q)ΔB + 2Δt − 2(ΔL + ΔU)` on every step.
    pub residual: Moments,
    pub dt: f64,
}

impl EntropyStats {
    pub fn of(path: &LimitTrajectory, bulk: (f64, f64)) -> Result<Self> {
        let series = linear_entropy_series(&path.q, EntropyMode::EffectiveTime, Some(LocalTimes::of(path)))?;
        let mut out = EntropyStats {
            dt: path.dt,
            ..Default::default()
        };
        for inc in series.increments.unwrap_or_default() {
            out.residual.push(inc.residual);
            if (bulk.0..=bulk.1).contains(&inc.q) && !inc.boundary_contact() {
                out.bulk_delta_s.push(inc.delta_s);
            }
        }
        Ok(out)
    }

    pub fn merge(&mut self, other: &EntropyStats) {
        self.bulk_delta_s.merge(&other.bulk_delta_s);
        self.residual.merge(&other.residual);
        self.dt = other.dt;
    }

    /// Relative deviation of the bulk mean of `ΔS` from `−2 dt`.
    pub fn bulk_relative_error(&self) -> f64 {
        (self.bulk_delta_s.mean() + 2.0 * self.dt) / (2.0 * self.dt)
    }

    pub fn residual_z(&self) -> f64 {
        self.residual.mean() / self.residual.stderr()
    }
}
