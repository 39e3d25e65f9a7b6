//! Reference laws and the estimators used to compare simulations with them.

pub mod entropy;
pub mod excursions;
pub mod ks;
pub mod laplace;
pub mod laws;
pub mod spikes;

pub use entropy::{linear_entropy, linear_entropy_series, EntropyMode, EntropySeries, LocalTimes};
pub use excursions::{detect_excursions, Excursion, ExcursionKind, ExcursionTracker};
pub use ks::{kolmogorov_survival, ks_statistic, ks_statistic_censored, KsResult};
pub use laplace::{empirical_laplace, laplace_factorization_check, FactorizationReport, LaplaceEstimate};
pub use laws::{
    boundary_law_cdf, excursion_laplace_exact, levy_cdf, levy_density, normal_cdf, spike_count_mean,
    spike_count_mean_top, BoundaryLaw, ExcursionLaw, LawSpec, LevyLaw,
};
pub use spikes::SpikeCensus;

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, crate::math::sqrt(var / n))
}

/// Pearson correlation of two equally long samples.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len()) as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / crate::math::sqrt(sxx * syy)
}
