//! Empirical Laplace transforms and the independent-increments check for the
//! inverse time change.

use alloc::vec::Vec;

use crate::math::{exp, sqrt};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub n: usize,
}

impl LaplaceEstimate {
    /// `(estimate − target) / stderr`; 0 when both sides agree exactly.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = self.estimate - target;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.stderr
        }
    }
}

fn laplace_weight(x: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        1.0
    } else {
        exp(-sigma * x)
    }
}

fn mean_and_stderr(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    // Welford
    let (mut n, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);
    for v in values {
        n += 1;
        let d = v - mean;
        mean += d / n as f64;
        m2 += d * (v - mean);
    }
    let se = if n > 1 {
        sqrt(m2 / (n - 1) as f64 / n as f64)
    } else {
        0.0
    };
    (mean, se, n)
}

/// Mean and standard error of `e^{−σ x}` over the samples. `+∞` samples
/// (censored runs) contribute 0 for `σ > 0`.
pub fn empirical_laplace(samples: &[f64], sigma: f64) -> Result<LaplaceEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(sigma >= 0.0) {
        return Err(Error::InvalidArgument("sigma must be >= 0"));
    }
    if samples.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::InvalidArgument("samples must be non-negative"));
    }
    let (estimate, stderr, n) = mean_and_stderr(samples.iter().map(|&x| laplace_weight(x, sigma)));
    Ok(LaplaceEstimate { estimate, stderr, n })
}

/// Minimum number of `(t(s₁), t(s₂) − t(s₁))` pairs for
/// [`laplace_factorization_check`].
pub const MIN_FACTORIZATION_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizationRow {
    pub sigma1: f64,
    pub sigma2: f64,
    pub joint: LaplaceEstimate,
    /// `e^{−s₁λp√(2σ₁)} · e^{−(s₂−s₁)λp√(2σ₂)}`
    pub target: f64,
    pub joint_z: f64,
    pub covariance: f64,
    pub covariance_stderr: f64,
    pub covariance_z: f64,
}

impl FactorizationRow {
    pub fn passed(&self, z_max: f64) -> bool {
        self.joint_z.abs() <= z_max && self.covariance_z.abs() <= z_max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationReport {
    pub rows: Vec<FactorizationRow>,
    pub passed: bool,
}

/// Compares the empirical joint transform `E[e^{−σ₁ t(s₁) − σ₂ Δt}]` with the
/// product of the one-boundary marginals and tests the covariance of the two
/// factors against 0, both at 3 standard errors.
///
/// `pairs` holds `(t(s₁), t(s₂) − t(s₁))`; `+∞` marks a censored value and
/// weighs 0 in the joint transform. The covariance uses only pairs with an
/// observed `t(s₁)`: conditioning on that event leaves the increment
/// independent of `t(s₁)`.
pub fn laplace_factorization_check(
    pairs: &[(f64, f64)],
    sigmas: &[(f64, f64)],
    s1: f64,
    s2: f64,
    lambda: f64,
    p: f64,
) -> Result<FactorizationReport> {
    if pairs.len() < MIN_FACTORIZATION_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_FACTORIZATION_SAMPLES,
            got: pairs.len(),
        });
    }
    if !(0.0 < s1 && s1 < s2) {
        return Err(Error::InvalidArgument("need 0 < s1 < s2"));
    }
    let mut rows = Vec::with_capacity(sigmas.len());
    for &(sigma1, sigma2) in sigmas {
        let xs: Vec<f64> = pairs.iter().map(|&(a, _)| laplace_weight(a, sigma1)).collect();
        let ys: Vec<f64> = pairs.iter().map(|&(_, b)| laplace_weight(b, sigma2)).collect();
        let (joint_mean, joint_se, count) = mean_and_stderr(xs.iter().zip(&ys).map(|(x, y)| x * y));
        let joint = LaplaceEstimate {
            estimate: joint_mean,
            stderr: joint_se,
            n: count,
        };
        let target = exp(-s1 * lambda * p * sqrt(2.0 * sigma1)) * exp(-(s2 - s1) * lambda * p * sqrt(2.0 * sigma2));
        let observed: Vec<(f64, f64)> = pairs
            .iter()
            .zip(xs.iter().zip(&ys))
            .filter(|((a, _), _)| a.is_finite())
            .map(|(_, (&x, &y))| (x, y))
            .collect();
        let m = observed.len() as f64;
        let mx = observed.iter().map(|p| p.0).sum::<f64>() / m;
        let my = observed.iter().map(|p| p.1).sum::<f64>() / m;
        let (cov, cov_se, _) = mean_and_stderr(observed.iter().map(|(x, y)| (x - mx) * (y - my)));
        let covariance_z = if cov == 0.0 { 0.0 } else { cov / cov_se };
        rows.push(FactorizationRow {
            sigma1,
            sigma2,
            joint,
            target,
            joint_z: joint.z_score(target),
            covariance: cov,
            covariance_stderr: cov_se,
            covariance_z,
        });
    }
    let passed = rows.iter().all(|r| r.passed(3.0));
    Ok(FactorizationReport { rows, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::Exp1;

    #[test]
    fn constant_samples() {
        let est = empirical_laplace(&[0.7; 10], 1.5).unwrap();
        assert_abs_diff_eq!(est.estimate, (-1.05f64).exp(), epsilon = 1e-15);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn sigma_zero_is_exactly_one() {
        let est = empirical_laplace(&[0.1, 3.0, f64::INFINITY], 0.0).unwrap();
        assert_eq!((est.estimate, est.stderr), (1.0, 0.0));
    }

    #[test]
    fn censored_samples_contribute_zero() {
        let est = empirical_laplace(&[0.0, f64::INFINITY], 1.0).unwrap();
        assert_abs_diff_eq!(est.estimate, 0.5);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(empirical_laplace(&[], 1.0), Err(Error::EmptySamples));
        assert!(empirical_laplace(&[-1.0], 1.0).is_err());
        assert!(empirical_laplace(&[1.0], -1.0).is_err());
    }

    #[test]
    fn exponential_calibration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let est = empirical_laplace(&xs, 1.0).unwrap();
        assert!(est.z_score(0.5).abs() <= 3.0, "{est:?}");
    }

    #[test]
    fn factorization_needs_samples() {
        let pairs = [(1.0, 1.0); 10];
        assert_eq!(
            laplace_factorization_check(&pairs, &[(0.0, 0.0)], 0.5, 1.0, 1.0, 0.5),
            Err(Error::InsufficientSamples {
                needed: 10_000,
                got: 10
            })
        );
    }

    #[test]
    fn factorization_trivial_sigmas() {
        let pairs: Vec<(f64, f64)> = (0..10_000).map(|k| (k as f64 * 1e-4, 1.0)).collect();
        let rep = laplace_factorization_check(&pairs, &[(0.0, 0.0)], 0.5, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(rep.rows[0].target, 1.0);
        assert_eq!(rep.rows[0].joint.estimate, 1.0);
        assert!(rep.passed);
    }

    #[test]
    fn factorization_target_value() {
        let pairs: Vec<(f64, f64)> = (0..10_000).map(|_| (0.0, 0.0)).collect();
        let rep = laplace_factorization_check(&pairs, &[(2.0, 2.0)], 0.5, 1.0, 1.0, 0.5).unwrap();
        assert_abs_diff_eq!(rep.rows[0].target, (-1.0f64).exp(), epsilon = 1e-15);
    }
}
