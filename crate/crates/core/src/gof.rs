//! Goodness-of-fit statistics. Every statistic is oriented lower-is-better.

use std::fmt;

use crate::distributions::{Dataset, Params};
use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const MIN_ENERGY_REFERENCE: usize = 100;
pub const MAX_DEFAULT_ENERGY_REFERENCE: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GofStatistic {
    /// Two-sample energy statistic against a fresh reference sample of size
    /// `reference_size` (default `10·n` clamped to `[100, 5000]`).
    Energy {
        reference_size: Option<usize>,
    },
    KolmogorovSmirnov,
    NegLogLikelihood,
    Aic,
    Bic,
}

impl GofStatistic {
    pub fn energy() -> Self {
        GofStatistic::Energy {
            reference_size: None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GofStatistic::Energy { .. } => "energy",
            GofStatistic::KolmogorovSmirnov => "ks",
            GofStatistic::NegLogLikelihood => "nll",
            GofStatistic::Aic => "aic",
            GofStatistic::Bic => "bic",
        }
    }

    /// True when the value depends only on (data, params), not on a stream.
    pub fn is_deterministic(&self) -> bool {
        !matches!(self, GofStatistic::Energy { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GofStatistic::Energy {
                reference_size: Some(m),
            } if *m < MIN_ENERGY_REFERENCE => Err(Error::InvalidArgument(format!(
                "energy reference size must be ≥ {MIN_ENERGY_REFERENCE}, got {m}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn reference_size(&self, n: usize) -> usize {
        match self {
            GofStatistic::Energy {
                reference_size: Some(m),
            } => *m,
            _ => (10 * n).clamp(MIN_ENERGY_REFERENCE, MAX_DEFAULT_ENERGY_REFERENCE),
        }
    }
}

impl fmt::Display for GofStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GofStatistic::Energy {
                reference_size: Some(m),
            } => write!(f, "energy(m={m})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Σ_{i<j} (s_j − s_i) for ascending `s`.
fn within_sum_sorted(s: &[f64]) -> f64 {
    let len = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(j, &v)| v * (2.0 * j as f64 - len + 1.0))
        .sum()
}

/// Σ_i Σ_j |x_i − y_j| for ascending `x` and `y`, using prefix sums of `y`.
fn cross_sum_sorted(x: &[f64], y: &[f64]) -> f64 {
    let total_y: f64 = y.iter().sum();
    let mut below = 0usize;
    let mut below_sum = 0.0;
    let m = y.len() as f64;
    let mut acc = 0.0;
    for &xi in x {
        while below < y.len() && y[below] < xi {
            below_sum += y[below];
            below += 1;
        }
        let nb = below as f64;
        acc += xi * nb - below_sum + (total_y - below_sum) - xi * (m - nb);
    }
    acc
}

/// Two-sample energy statistic
/// `nm/(n+m) · [2/(nm) ΣΣ|xᵢ−yⱼ| − 1/n² ΣΣ|xᵢ−xⱼ| − 1/m² ΣΣ|yᵢ−yⱼ|]`.
///
/// Runs in O((n+m) log(n+m)) via sorting. Both samples must be nonempty.
pub fn energy_two_sample(x: &[f64], y: &[f64]) -> f64 {
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let m = ys.len() as f64;
    let cross = cross_sum_sorted(&xs, &ys);
    let wx = 2.0 * within_sum_sorted(&xs);
    let wy = 2.0 * within_sum_sorted(&ys);
    n * m / (n + m) * (2.0 * cross / (n * m) - wx / (n * n) - wy / (m * m))
}

/// Energy statistic between `data` and a reference sample of size `m`
/// drawn from `params` using `stream`.
pub fn energy_statistic(
    data: &Dataset,
    params: &Params,
    m: usize,
    stream: &mut RngStream,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if m < MIN_ENERGY_REFERENCE {
        return Err(Error::InvalidArgument(format!(
            "energy reference size must be ≥ {MIN_ENERGY_REFERENCE}"
        )));
    }
    let reference = params.sample(m, stream);
    Ok(energy_two_sample(data.values(), &reference))
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `values` and
/// `cdf`, evaluated exactly at the order statistics.
pub fn ks_statistic_with<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> f64 {
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

pub fn ks_statistic(data: &Dataset, params: &Params) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    Ok(ks_statistic_with(data.values(), |x| params.cdf(x)))
}

/// −Σ log f(xᵢ | θ); +∞ if any point lies outside the support.
pub fn neg_log_likelihood(data: &Dataset, params: &Params) -> f64 {
    -data
        .values()
        .iter()
        .map(|&x| params.log_density(x))
        .sum::<f64>()
}

/// AIC = 2k − 2 log L̂.
pub fn aic(k: usize, neg_loglik: f64) -> f64 {
    2.0 * k as f64 + 2.0 * neg_loglik
}

/// BIC = k log n − 2 log L̂.
pub fn bic(k: usize, n: usize, neg_loglik: f64) -> f64 {
    k as f64 * (n as f64).ln() + 2.0 * neg_loglik
}

pub fn evaluate(
    stat: &GofStatistic,
    data: &Dataset,
    params: &Params,
    stream: &mut RngStream,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let k = params.family().arity();
    Ok(match stat {
        GofStatistic::Energy { .. } => {
            energy_statistic(data, params, stat.reference_size(data.len()), stream)?
        }
        GofStatistic::KolmogorovSmirnov => ks_statistic(data, params)?,
        GofStatistic::NegLogLikelihood => neg_log_likelihood(data, params),
        GofStatistic::Aic => aic(k, neg_log_likelihood(data, params)),
        GofStatistic::Bic => bic(k, data.len(), neg_log_likelihood(data, params)),
    })
}
