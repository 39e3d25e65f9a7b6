//! One-sample Kolmogorov–Smirnov test with the asymptotic p-value.

use alloc::vec::Vec;

use crate::math::{exp, sqrt, PI};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    /// `sup |F_n − F|`
    pub d: f64,
    pub p_value: f64,
    pub n: usize,
}

/// `P[K > x]` for the Kolmogorov distribution.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if !(x > 0.0) {
        return 1.0;
    }
    if x < 1.18 {
        // small-x form from the theta-function identity
        let y = PI * PI / (8.0 * x * x);
        let mut s = 0.0;
        for k in 1..=6 {
            let j = (2 * k - 1) as f64;
            s += exp(-j * j * y);
        }
        (1.0 - sqrt(2.0 * PI) / x * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = exp(-2.0 * kf * kf * x * x);
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// KS distance between the empirical CDF of `samples` and `cdf`.
///
/// `cdf` is only evaluated at sample points; infinite samples are allowed
/// as long as `cdf` maps them to 1 (or 0).
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("samples contain NaN"));
    }
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let nf = n as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < n {
        // ties form one jump of the empirical CDF
        let mut j = i;
        while j + 1 < n && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        let below = i as f64 / nf;
        let above = (j + 1) as f64 / nf;
        d = d.max((f - below).abs()).max((above - f).abs());
        i = j + 1;
    }
    Ok(KsResult {
        d,
        p_value: kolmogorov_survival(sqrt(nf) * d),
        n,
    })
}

/// KS distance restricted to `[−∞, upper]` for samples right-censored at
/// `upper`: values above it (including `+∞`) only count through the
/// empirical CDF level they leave at `upper`.
pub fn ks_statistic_censored<F: Fn(f64) -> f64>(samples: &[f64], cdf: F, upper: f64) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("samples contain NaN"));
    }
    let mut xs: Vec<f64> = samples.iter().copied().filter(|&x| x <= upper).collect();
    xs.sort_by(f64::total_cmp);
    let nf = samples.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        d = d.max((f - i as f64 / nf).abs()).max(((j + 1) as f64 / nf - f).abs());
        i = j + 1;
    }
    d = d.max((cdf(upper) - xs.len() as f64 / nf).abs());
    Ok(KsResult {
        d,
        p_value: kolmogorov_survival(sqrt(nf) * d),
        n: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }

    #[test]
    fn single_sample() {
        let r = ks_statistic(&[0.5], uniform).unwrap();
        assert_abs_diff_eq!(r.d, 0.5);
    }

    #[test]
    fn quantile_samples() {
        let n = 40;
        let xs: Vec<f64> = (1..=n).map(|k| (k as f64 - 0.5) / n as f64).collect();
        let r = ks_statistic(&xs, uniform).unwrap();
        assert_abs_diff_eq!(r.d, 0.5 / n as f64, epsilon = 1e-15);
    }

    #[test]
    fn empty_is_an_error() {
        assert_eq!(ks_statistic(&[], uniform), Err(Error::EmptySamples));
    }

    #[test]
    fn censoring_ignores_the_tail() {
        let xs = [0.25, 0.75, f64::INFINITY, 2.0];
        let r = ks_statistic_censored(&xs, |x| (x / 4.0).clamp(0.0, 1.0), 1.0).unwrap();
        // at x = 0.75 the empirical CDF is 0.5 against 0.1875
        assert_abs_diff_eq!(r.d, 0.3125, epsilon = 1e-15);
        let full = ks_statistic(&[0.1, 0.2], uniform).unwrap();
        let cens = ks_statistic_censored(&[0.1, 0.2], uniform, 1.0).unwrap();
        assert_abs_diff_eq!(full.d, cens.d);
    }

    #[test]
    fn survival_function_reference_points() {
        // standard table values of the Kolmogorov distribution
        assert_abs_diff_eq!(kolmogorov_survival(1.3581), 0.05, epsilon = 2e-4);
        assert_abs_diff_eq!(kolmogorov_survival(1.6276), 0.01, epsilon = 1e-4);
        assert_abs_diff_eq!(kolmogorov_survival(0.8276), 0.5, epsilon = 2e-3);
        // the two branches meet
        assert_abs_diff_eq!(
            kolmogorov_survival(1.18 - 1e-12),
            kolmogorov_survival(1.18),
            epsilon = 1e-10
        );
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn calibration_on_uniform_draws() {
        let mut rejections = 0;
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
            if ks_statistic(&xs, uniform).unwrap().p_value <= 0.01 {
                rejections += 1;
            }
        }
        // 1% nominal rate; 2 of 200 expected
        assert!(rejections <= 6, "{rejections} rejections");
    }
}
