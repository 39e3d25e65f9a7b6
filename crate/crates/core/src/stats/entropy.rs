//! Linear entropy `S = 2Q(1 − Q)` along a path and its Itô decomposition in
//! effective time, `dS = 2(1 − 2Q) dB − 2 dt + 2 (dL + dU)`.

use alloc::vec::Vec;

use crate::{Error, Result};

pub fn linear_entropy(q: f64) -> f64 {
    2.0 * q * (1.0 - q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyMode {
    RealTime,
    EffectiveTime,
}

/// Driving path and pushing terms aligned with `q`, on a grid of step `dt`.
#[derive(Debug, Clone, Copy)]
pub struct LocalTimes<'a> {
    pub b: &'a [f64],
    pub big_l: &'a [f64],
    pub big_u: &'a [f64],
    pub dt: f64,
}

impl<'a> LocalTimes<'a> {
    pub fn of(path: &'a crate::limit::LimitTrajectory) -> Self {
        LocalTimes {
            b: &path.b,
            big_l: &path.big_l,
            big_u: &path.big_u,
            dt: path.dt,
        }
    }
}

/// Terms of one step of the decomposition. `residual` is
/// `ΔS − martingale − drift − boundary` and vanishes as `dt → 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyIncrement {
    pub q: f64,
    pub delta_s: f64,
    /// `2(1 − 2q) ΔB`
    pub martingale: f64,
    /// `−2 dt`
    pub drift: f64,
    /// `2(ΔL + ΔU)`
    pub boundary: f64,
    pub residual: f64,
}

impl EntropyIncrement {
    pub fn boundary_contact(&self) -> bool {
        self.boundary > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropySeries {
    pub s_l: Vec<f64>,
    /// One entry per step; only in effective-time mode.
    pub increments: Option<Vec<EntropyIncrement>>,
}

pub fn linear_entropy_series(
    q: &[f64],
    mode: EntropyMode,
    local_times: Option<LocalTimes<'_>>,
) -> Result<EntropySeries> {
    if q.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::OutOfRange {
            field: "q",
            reason: "must lie in [0, 1]",
        });
    }
    let s_l: Vec<f64> = q.iter().map(|&x| linear_entropy(x)).collect();
    let increments = match mode {
        EntropyMode::RealTime => None,
        EntropyMode::EffectiveTime => {
            let lt = local_times.ok_or(Error::MissingLocalTimes)?;
            let n = q.len();
            if lt.b.len() != n || lt.big_l.len() != n || lt.big_u.len() != n {
                return Err(Error::InvalidArgument("local times are not aligned with q"));
            }
            let mut inc = Vec::with_capacity(n.saturating_sub(1));
            for k in 1..n {
                let qk = q[k - 1];
                let delta_s = s_l[k] - s_l[k - 1];
                let martingale = 2.0 * (1.0 - 2.0 * qk) * (lt.b[k] - lt.b[k - 1]);
                let drift = -2.0 * lt.dt;
                let boundary = 2.0 * ((lt.big_l[k] - lt.big_l[k - 1]) + (lt.big_u[k] - lt.big_u[k - 1]));
                inc.push(EntropyIncrement {
                    q: qk,
                    delta_s,
                    martingale,
                    drift,
                    boundary,
                    residual: delta_s - martingale - drift - boundary,
                });
            }
            Some(inc)
        }
    };
    Ok(EntropySeries { s_l, increments })
}
