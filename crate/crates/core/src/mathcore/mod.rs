//! Shared numerics: special functions, PCA for plot export, the log-shift
//! transform, and log-sum-exp.

mod pca;
pub mod special;

pub use pca::{pca_project, PcaProjection};
pub use special::{
    digamma, ln_gamma, regularized_incomplete_gamma, regularized_upper_incomplete_gamma,
};

/// `ln Σ exp(vᵢ)` without overflow. Empty input gives −∞.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Shifted logarithm used for plots: `c = 1 − min` over every finite value
/// in every set, so the global minimum maps to `ln 1 = 0`.
///
/// Non-finite inputs pass through unchanged (an infinite goodness-of-fit
/// marks a support violation and has no position on a log axis).
pub fn log_shift(value_sets: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
    let min = value_sets
        .iter()
        .flatten()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min);
    let c = if min.is_finite() { 1.0 - min } else { 0.0 };
    let shifted = value_sets
        .iter()
        .map(|set| {
            set.iter()
                .map(|&v| if v.is_finite() { (v + c).ln() } else { v })
                .collect()
        })
        .collect();
    (shifted, c)
}
