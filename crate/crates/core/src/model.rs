//! Shared domain types: physical parameters, seeds and sampled trajectories.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Measurement rate. The infinite-rate limit is a separate variant so that
/// engines dispatch on it instead of doing arithmetic with `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Finite(f64),
    Infinite,
}

impl Gamma {
    pub fn finite(self) -> Option<f64> {
        match self {
            Gamma::Finite(g) => Some(g),
            Gamma::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Gamma::Infinite)
    }
}

/// Physical constants and numerical steps of a run.
///
/// `q0` is the initial ground-state probability shared by all engines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Thermal relaxation rate.
    pub lambda: f64,
    /// Equilibrium ground-state population.
    pub p: f64,
    pub gamma: Gamma,
    /// Weak-measurement strength of the discrete chain.
    pub epsilon: f64,
    /// Real-time step.
    pub ds: f64,
    /// Effective-time step of the limit engine.
    pub dt: f64,
    pub q0: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            lambda: 1.0,
            p: 0.5,
            gamma: Gamma::Finite(200.0),
            epsilon: 0.3,
            ds: 1e-5,
            dt: 1e-4,
            q0: 0.5,
        }
    }
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            field,
            reason: "must be finite and > 0",
        })
    }
}

fn open_unit(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            field,
            reason: "must lie in the open interval (0, 1)",
        })
    }
}

impl ModelParams {
    /// Returns the parameters unchanged when every range constraint holds.
    pub fn validate(self) -> Result<Self> {
        positive("lambda", self.lambda)?;
        open_unit("p", self.p)?;
        if let Gamma::Finite(g) = self.gamma {
            positive("gamma", g)?;
        }
        open_unit("epsilon", self.epsilon)?;
        positive("ds", self.ds)?;
        positive("dt", self.dt)?;
        if !(0.0..=1.0).contains(&self.q0) {
            return Err(Error::OutOfRange {
                field: "q0",
                reason: "must lie in [0, 1]",
            });
        }
        Ok(self)
    }

    /// Finite measurement rate, or `Inconsistent` for the limit marker.
    pub fn require_finite_gamma(&self) -> Result<f64> {
        self.gamma.finite().ok_or(Error::Inconsistent(
            "this engine needs a finite gamma, got gamma=infinite",
        ))
    }

    pub fn require_infinite_gamma(&self) -> Result<()> {
        if self.gamma.is_infinite() {
            Ok(())
        } else {
            Err(Error::Inconsistent("the limit engine needs gamma=infinite"))
        }
    }
}

/// Free-function form of [`ModelParams::validate`].
pub fn validate(params: ModelParams) -> Result<ModelParams> {
    params.validate()
}

/// Identifies one random stream of an ensemble.
///
/// The stream is ChaCha8 keyed by `master_seed` with `trajectory_index` as
/// the stream id, so every index gets its own non-overlapping keystream and
/// scheduling order never matters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub trajectory_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, trajectory_index: u64) -> Self {
        SeedSpec {
            master_seed,
            trajectory_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.trajectory_index);
        rng
    }
}

/// A sampled path of `Q` on a uniform real-time grid with its cumulative
/// effective time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub s_grid: Vec<f64>,
    pub q: Vec<f64>,
    pub t_cum: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Checks the type invariants: aligned columns, `q` in `[0, 1]`,
    /// `t_cum` starting at 0 and non-decreasing, `s_grid` strictly
    /// increasing with uniform spacing (relative tolerance `1e-9`).
    pub fn check_invariants(&self) -> Result<()> {
        if self.q.is_empty() {
            return Err(Error::EmptyPath);
        }
        if self.s_grid.len() != self.q.len() || self.t_cum.len() != self.q.len() {
            return Err(Error::InvalidArgument("trajectory columns differ in length"));
        }
        if self.q.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::OutOfRange {
                field: "q",
                reason: "trajectory value outside [0, 1]",
            });
        }
        if self.t_cum[0] != 0.0 || self.t_cum.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("t_cum must start at 0 and be non-decreasing"));
        }
        if self.s_grid.len() > 1 {
            let h = self.s_grid[1] - self.s_grid[0];
            if !(h > 0.0) {
                return Err(Error::InvalidArgument("s_grid must be strictly increasing"));
            }
            let tol = 1e-9 * h.max(self.s_grid[self.s_grid.len() - 1].abs());
            for w in self.s_grid.windows(2) {
                if !(w[1] > w[0]) || ((w[1] - w[0]) - h).abs() > tol {
                    return Err(Error::InvalidArgument("s_grid spacing is not uniform"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn fig_params() -> ModelParams {
        ModelParams {
            lambda: 1.0,
            p: 0.5,
            gamma: Gamma::Finite(200.0),
            epsilon: 0.3,
            ds: 1e-5,
            dt: 1e-4,
            q0: 0.5,
        }
    }

    #[test]
    fn figure_parameters_are_accepted() {
        assert_eq!(validate(fig_params()), Ok(fig_params()));
    }

    #[test]
    fn p_on_the_boundary_is_rejected() {
        let err = validate(ModelParams { p: 0.0, ..fig_params() }).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { field: "p", .. }));
    }

    #[test]
    fn negative_lambda_is_rejected() {
        let err = validate(ModelParams {
            lambda: -1.0,
            ..fig_params()
        })
        .unwrap_err();
        assert!(matches!(err, Error::OutOfRange { field: "lambda", .. }));
    }

    #[test]
    fn gamma_marker_dispatch() {
        let limit = ModelParams {
            gamma: Gamma::Infinite,
            ..fig_params()
        };
        assert!(limit.validate().is_ok());
        assert!(matches!(limit.require_finite_gamma(), Err(Error::Inconsistent(_))));
        assert!(limit.require_infinite_gamma().is_ok());
        assert_eq!(fig_params().require_finite_gamma(), Ok(200.0));
        assert!(fig_params().require_infinite_gamma().is_err());
        let bad = ModelParams {
            gamma: Gamma::Finite(f64::INFINITY),
            ..fig_params()
        };
        assert!(matches!(bad.validate(), Err(Error::OutOfRange { field: "gamma", .. })));
    }

    #[test]
    fn seed_streams_are_reproducible_and_distinct() {
        let a: u64 = SeedSpec::new(7, 3).rng().random();
        let b: u64 = SeedSpec::new(7, 3).rng().random();
        let c: u64 = SeedSpec::new(7, 4).rng().random();
        let d: u64 = SeedSpec::new(8, 3).rng().random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    proptest! {
        #[test]
        fn validate_is_idempotent(
            lambda in -2.0f64..5.0,
            p in -0.5f64..1.5,
            eps in -0.5f64..1.5,
            ds in -1e-3f64..1e-3,
        ) {
            let params = ModelParams { lambda, p, epsilon: eps, ds, ..fig_params() };
            let once = validate(params);
            if let Ok(v) = once {
                prop_assert_eq!(validate(v), Ok(v));
            }
        }
    }
}
