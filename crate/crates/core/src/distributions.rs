//! Candidate model families: parameters, maximum-likelihood fitting,
//! densities, CDFs and simulation.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Cauchy, ChiSquared, Distribution, Exp, LogNormal, Normal};

use crate::error::{Error, Result};
use crate::mathcore::special::{
    digamma, ln_gamma, regularized_incomplete_gamma, std_normal_cdf, trigamma,
};
use crate::rng::RngStream;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Normal,
    Cauchy,
    Exponential,
    LogNormal,
    ChiSquared,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Normal,
        Family::Cauchy,
        Family::Exponential,
        Family::LogNormal,
        Family::ChiSquared,
    ];

    pub fn arity(self) -> usize {
        match self {
            Family::Exponential | Family::ChiSquared => 1,
            Family::Normal | Family::Cauchy | Family::LogNormal => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Cauchy => "cauchy",
            Family::Exponential => "exponential",
            Family::LogNormal => "lognormal",
            Family::ChiSquared => "chisquared",
        }
    }

    /// Families whose density vanishes off (0, ∞).
    pub fn positive_support(self) -> bool {
        matches!(
            self,
            Family::Exponential | Family::LogNormal | Family::ChiSquared
        )
    }

    pub fn fit(self, data: &Dataset) -> Result<Params> {
        fit(self, data)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_', ' '], "").as_str() {
            "normal" | "gaussian" | "norm" => Ok(Family::Normal),
            "cauchy" => Ok(Family::Cauchy),
            "exponential" | "exp" => Ok(Family::Exponential),
            "lognormal" | "lognorm" | "logn" => Ok(Family::LogNormal),
            "chisquared" | "chisq" | "chi2" | "chisquare" => Ok(Family::ChiSquared),
            _ => Err(Error::InvalidArgument(format!("unknown family `{s}`"))),
        }
    }
}

/// A family together with a valid parameter vector.
///
/// Layout per family: Normal (μ, σ), Cauchy (x₀, γ), Exponential (λ),
/// LogNormal (log-mean, log-sd), ChiSquared (k).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    family: Family,
    raw: [f64; 2],
}

impl Params {
    pub fn new(family: Family, values: &[f64]) -> Result<Self> {
        let invalid = |reason: &str| {
            Err(Error::InvalidParams {
                family,
                reason: reason.to_string(),
            })
        };
        if values.len() != family.arity() {
            return invalid(&format!(
                "expected {} values, got {}",
                family.arity(),
                values.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("values must be finite");
        }
        let positive_last = values[values.len() - 1] > 0.0;
        if !positive_last {
            let what = match family {
                Family::Normal | Family::LogNormal => "standard deviation must be > 0",
                Family::Cauchy => "scale must be > 0",
                Family::Exponential => "rate must be > 0",
                Family::ChiSquared => "degrees of freedom must be > 0",
            };
            return invalid(what);
        }
        let mut raw = [0.0; 2];
        raw[..values.len()].copy_from_slice(values);
        Ok(Self { family, raw })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn values(&self) -> &[f64] {
        &self.raw[..self.family.arity()]
    }

    pub fn log_density(&self, x: f64) -> f64 {
        log_density(self, x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        cdf(self, x)
    }

    /// Draws `n` deviates into a plain vector.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let [a, b] = self.raw;
        // Parameters were validated on construction, so the constructors
        // below cannot fail.
        match self.family {
            Family::Normal => Normal::new(a, b)
                .unwrap()
                .sample_iter(rng)
                .take(n)
                .collect(),
            Family::Cauchy => Cauchy::new(a, b)
                .unwrap()
                .sample_iter(rng)
                .take(n)
                .collect(),
            Family::Exponential => Exp::new(a).unwrap().sample_iter(rng).take(n).collect(),
            Family::LogNormal => LogNormal::new(a, b)
                .unwrap()
                .sample_iter(rng)
                .take(n)
                .collect(),
            Family::ChiSquared => ChiSquared::new(a)
                .unwrap()
                .sample_iter(rng)
                .take(n)
                .collect(),
        }
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.family)?;
        for (i, v) in self.values().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

/// Identifies the bootstrap a dataset descends from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lineage {
    pub replicate: usize,
    pub attempt: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Observed,
    Bootstrap {
        lineage: Option<Lineage>,
    },
    Simulated {
        family: Family,
        lineage: Option<Lineage>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    provenance: Provenance,
}

impl Dataset {
    /// Observed data; every value must be finite.
    pub fn observed(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteData);
        }
        Ok(Self {
            values,
            provenance: Provenance::Observed,
        })
    }

    pub(crate) fn from_parts(values: Vec<f64>, provenance: Provenance) -> Self {
        Self { values, provenance }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

pub fn simulate(params: &Params, n: usize, stream: &mut RngStream) -> Dataset {
    Dataset::from_parts(
        params.sample(n, stream),
        Provenance::Simulated {
            family: params.family,
            lineage: None,
        },
    )
}

pub fn log_density(params: &Params, x: f64) -> f64 {
    let [a, b] = params.raw;
    match params.family {
        Family::Normal => {
            let z = (x - a) / b;
            -LN_SQRT_2PI - b.ln() - 0.5 * z * z
        }
        Family::Cauchy => {
            let z = (x - a) / b;
            -(PI * b).ln() - (z * z).ln_1p()
        }
        Family::Exponential => {
            if x < 0.0 {
                f64::NEG_INFINITY
            } else {
                a.ln() - a * x
            }
        }
        Family::LogNormal => {
            if x <= 0.0 {
                return f64::NEG_INFINITY;
            }
            let lx = x.ln();
            let z = (lx - a) / b;
            -lx - b.ln() - LN_SQRT_2PI - 0.5 * z * z
        }
        Family::ChiSquared => {
            let half = 0.5 * a;
            if x < 0.0 {
                f64::NEG_INFINITY
            } else if x == 0.0 {
                match half.partial_cmp(&1.0) {
                    Some(std::cmp::Ordering::Less) => f64::INFINITY,
                    Some(std::cmp::Ordering::Equal) => -LN_2,
                    _ => f64::NEG_INFINITY,
                }
            } else {
                (half - 1.0) * x.ln() - 0.5 * x - half * LN_2 - ln_gamma(half)
            }
        }
    }
}

pub fn cdf(params: &Params, x: f64) -> f64 {
    let [a, b] = params.raw;
    if x.is_nan() {
        return f64::NAN;
    }
    match params.family {
        Family::Normal => std_normal_cdf((x - a) / b),
        Family::Cauchy => {
            if x == f64::INFINITY {
                1.0
            } else if x == f64::NEG_INFINITY {
                0.0
            } else {
                0.5 + ((x - a) / b).atan() / PI
            }
        }
        Family::Exponential => {
            if x <= 0.0 {
                0.0
            } else {
                -(-a * x).exp_m1()
            }
        }
        Family::LogNormal => {
            if x <= 0.0 {
                0.0
            } else {
                std_normal_cdf((x.ln() - a) / b)
            }
        }
        Family::ChiSquared => {
            if x <= 0.0 {
                0.0
            } else {
                regularized_incomplete_gamma(0.5 * a, 0.5 * x)
            }
        }
    }
}

/// Maximum-likelihood fit of `family` to `data`.
pub fn fit(family: Family, data: &Dataset) -> Result<Params> {
    let xs = data.values();
    if xs.is_empty() {
        return Err(Error::EmptyData);
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteData);
    }
    if family.positive_support() && xs.iter().any(|&v| v <= 0.0) {
        return Err(Error::NonPositiveData(family));
    }
    match family {
        Family::Normal => {
            let (mu, sd) = mean_and_mle_sd(xs.iter().copied());
            if !(sd > 0.0) {
                return Err(Error::DegenerateData(family));
            }
            Params::new(family, &[mu, sd])
        }
        Family::Exponential => {
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            Params::new(family, &[1.0 / mean])
        }
        Family::LogNormal => {
            let (mu, sd) = mean_and_mle_sd(xs.iter().map(|v| v.ln()));
            if !(sd > 0.0) {
                return Err(Error::DegenerateData(family));
            }
            Params::new(family, &[mu, sd])
        }
        Family::ChiSquared => fit_chi_squared(xs),
        Family::Cauchy => fit_cauchy(xs),
    }
}

fn mean_and_mle_sd(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (n, sum) = xs.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    let mean = sum / n as f64;
    let ss: f64 = xs.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / n as f64).sqrt())
}

/// Solves ψ(k/2) = mean(ln x) − ln 2 for k by Newton steps kept inside a
/// shrinking bracket, bisecting whenever Newton leaves it.
fn fit_chi_squared(xs: &[f64]) -> Result<Params> {
    const MAX_ITER: usize = 200;
    let target = xs.iter().map(|v| v.ln()).sum::<f64>() / xs.len() as f64 - LN_2;
    let not_converged = |iterations| Error::OptimizerDidNotConverge {
        family: Family::ChiSquared,
        iterations,
    };

    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    while digamma(lo) > target {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(not_converged(0));
        }
    }
    while digamma(hi) < target {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(not_converged(0));
        }
    }

    // ψ(a) ≈ ln(a − ½) for moderate a; ψ(a) ≈ −1/a near zero.
    let mut a = if target > -2.0 {
        target.exp() + 0.5
    } else {
        -1.0 / target
    };
    if !(a > lo && a < hi) {
        a = 0.5 * (lo + hi);
    }
    for it in 1..=MAX_ITER {
        let f = digamma(a) - target;
        if f == 0.0 {
            return Params::new(Family::ChiSquared, &[2.0 * a]);
        }
        if f < 0.0 {
            lo = a;
        } else {
            hi = a;
        }
        let mut next = a - f / trigamma(a);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - a).abs() <= 1e-15 * a || hi - lo <= 1e-15 * hi {
            return Params::new(Family::ChiSquared, &[2.0 * next]);
        }
        a = next;
        if it == MAX_ITER {
            break;
        }
    }
    Err(not_converged(MAX_ITER))
}

pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (h - lo as f64)
}

pub(crate) const CAUCHY_MAX_ITER: usize = 500;
const CAUCHY_TOL: f64 = 1e-8;

/// Cauchy MLE by Nelder–Mead on (location, log-scale), started at the
/// median and half the interquartile range. Coordinates are scaled by the
/// starting scale so the simplex-diameter tolerance is dimensionless.
fn fit_cauchy(xs: &[f64]) -> Result<Params> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = quantile_sorted(&sorted, 0.5);
    let mut g0 = 0.5 * (quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25));
    if !(g0 > 0.0) {
        g0 = 0.25 * (sorted[sorted.len() - 1] - sorted[0]);
        if !(g0 > 0.0) {
            return Err(Error::DegenerateData(Family::Cauchy));
        }
    }

    // Negative log-likelihood without the n·ln π constant.
    let nll = |u: [f64; 2]| -> f64 {
        let loc = median + g0 * u[0];
        let ln_scale = g0.ln() + u[1];
        let scale = ln_scale.exp();
        let s: f64 = xs
            .iter()
            .map(|&x| {
                let z = (x - loc) / scale;
                (z * z).ln_1p()
            })
            .sum();
        s + xs.len() as f64 * ln_scale
    };

    let not_converged = Error::OptimizerDidNotConverge {
        family: Family::Cauchy,
        iterations: CAUCHY_MAX_ITER,
    };
    let u = nelder_mead_2d(nll, [0.0, 0.0], [0.5, 0.5], CAUCHY_TOL, CAUCHY_MAX_ITER)
        .ok_or(not_converged.clone())?;
    let loc = median + g0 * u[0];
    let scale = g0 * u[1].exp();
    // A scale collapsing by ten orders of magnitude means the likelihood is
    // unbounded (more than half the points tied); the simplex only stopped
    // because z² overflowed.
    if !(u[1] > -10.0 * std::f64::consts::LN_10 && scale.is_finite() && loc.is_finite()) {
        return Err(not_converged);
    }
    Params::new(Family::Cauchy, &[loc, scale])
}

/// Minimizes `f` over R² with the standard Nelder–Mead moves (reflection 1,
/// expansion 2, contraction ½, shrink ½). Returns `None` if the simplex
/// diameter has not dropped below `tol` within `max_iter` iterations.
pub(crate) fn nelder_mead_2d<F>(
    f: F,
    start: [f64; 2],
    step: [f64; 2],
    tol: f64,
    max_iter: usize,
) -> Option<[f64; 2]>
where
    F: Fn([f64; 2]) -> f64,
{
    type P = [f64; 2];
    let lerp = |a: P, b: P, t: f64| -> P { [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])] };
    let dist = |a: P, b: P| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();

    let mut simplex: [(P, f64); 3] = [
        (start, f(start)),
        (
            [start[0] + step[0], start[1]],
            f([start[0] + step[0], start[1]]),
        ),
        (
            [start[0], start[1] + step[1]],
            f([start[0], start[1] + step[1]]),
        ),
    ];
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = dist(simplex[0].0, simplex[1].0)
            .max(dist(simplex[0].0, simplex[2].0))
            .max(dist(simplex[1].0, simplex[2].0));
        if diameter < tol {
            return Some(simplex[0].0);
        }
        let centroid = lerp(simplex[0].0, simplex[1].0, 0.5);
        let worst = simplex[2];

        let reflected = lerp(centroid, worst.0, -1.0);
        let fr = f(reflected);
        if fr < simplex[0].1 {
            let expanded = lerp(centroid, worst.0, -2.0);
            let fe = f(expanded);
            simplex[2] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
            continue;
        }
        if fr < simplex[1].1 {
            simplex[2] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < worst.1 {
            let c = lerp(centroid, reflected, 0.5);
            (c, f(c))
        } else {
            let c = lerp(centroid, worst.0, 0.5);
            (c, f(c))
        };
        if fc < worst.1.min(fr) {
            simplex[2] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0;
        for v in simplex.iter_mut().skip(1) {
            let p = lerp(best, v.0, 0.5);
            *v = (p, f(p));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn data(v: &[f64]) -> Dataset {
        Dataset::observed(v.to_vec()).unwrap()
    }

    #[test]
    fn closed_form_fits() {
        let p = fit(Family::Normal, &data(&[1.0, 2.0, 3.0])).unwrap();
        assert_abs_diff_eq!(p.values()[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.values()[1], (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);

        let p = fit(Family::Exponential, &data(&[2.0, 2.0, 2.0])).unwrap();
        assert_eq!(p.values(), &[0.5]);

        let xs = [0.5, 1.5, 4.0, 2.2];
        let p = fit(Family::LogNormal, &data(&xs)).unwrap();
        let logs: Vec<f64> = xs.iter().map(|v: &f64| v.ln()).collect();
        let mu = logs.iter().sum::<f64>() / 4.0;
        let sd = (logs.iter().map(|l| (l - mu).powi(2)).sum::<f64>() / 4.0).sqrt();
        assert_abs_diff_eq!(p.values()[0], mu, epsilon = 1e-12);
        assert_abs_diff_eq!(p.values()[1], sd, epsilon = 1e-12);
    }

    #[test]
    fn chi_squared_fit_solves_score_equation() {
        let xs = [0.3, 1.1, 2.5, 4.0, 0.9, 7.2];
        let p = fit(Family::ChiSquared, &data(&xs)).unwrap();
        let k = p.values()[0];
        let mean_log = xs.iter().map(|v: &f64| v.ln()).sum::<f64>() / xs.len() as f64;
        assert_abs_diff_eq!(digamma(k / 2.0) + LN_2, mean_log, epsilon = 1e-12);
    }

    #[test]
    fn fit_errors() {
        assert_eq!(fit(Family::Normal, &data(&[])), Err(Error::EmptyData));
        assert_eq!(
            fit(Family::Exponential, &data(&[1.0, -1.0])),
            Err(Error::NonPositiveData(Family::Exponential))
        );
        assert_eq!(
            fit(Family::LogNormal, &data(&[0.0, 1.0])),
            Err(Error::NonPositiveData(Family::LogNormal))
        );
        assert_eq!(
            fit(Family::Normal, &data(&[3.0, 3.0])),
            Err(Error::DegenerateData(Family::Normal))
        );
        assert_eq!(
            fit(Family::Cauchy, &data(&[3.0, 3.0])),
            Err(Error::DegenerateData(Family::Cauchy))
        );
        assert!(Dataset::observed(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn cauchy_fit_fails_when_most_points_tie() {
        // More than half the mass at one point: the likelihood is unbounded
        // as the scale shrinks, so the optimizer cannot converge.
        let mut xs = vec![2.0; 7];
        xs.extend([0.0, 5.0, -3.0]);
        assert!(matches!(
            fit(Family::Cauchy, &data(&xs)),
            Err(Error::OptimizerDidNotConverge { .. })
        ));
    }

    #[test]
    fn log_density_values() {
        let n01 = Params::new(Family::Normal, &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(
            n01.log_density(0.0),
            -0.918_938_533_204_672_8,
            epsilon = 1e-15
        );
        let c01 = Params::new(Family::Cauchy, &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(c01.log_density(0.0), -PI.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(c01.log_density(0.0), -1.144_730, epsilon = 1e-6);
        let e1 = Params::new(Family::Exponential, &[1.0]).unwrap();
        assert_eq!(e1.log_density(-1.0), f64::NEG_INFINITY);
        let ln = Params::new(Family::LogNormal, &[0.0, 1.0]).unwrap();
        assert_eq!(ln.log_density(0.0), f64::NEG_INFINITY);
        let chi2 = Params::new(Family::ChiSquared, &[2.0]).unwrap();
        assert_abs_diff_eq!(chi2.log_density(1.0), -LN_2 - 0.5, epsilon = 1e-14);
    }

    #[test]
    fn cdf_values() {
        let n01 = Params::new(Family::Normal, &[0.0, 1.0]).unwrap();
        assert_eq!(n01.cdf(0.0), 0.5);
        let e2 = Params::new(Family::Exponential, &[2.0]).unwrap();
        assert_abs_diff_eq!(e2.cdf(LN_2 / 2.0), 0.5, epsilon = 1e-15);
        let chi2 = Params::new(Family::ChiSquared, &[2.0]).unwrap();
        assert_abs_diff_eq!(chi2.cdf(2.0 * LN_2), 0.5, epsilon = 1e-12);
        for fam in Family::ALL {
            let p = Params::new(fam, &[1.5, 2.0][..fam.arity()]).unwrap();
            assert_eq!(p.cdf(f64::NEG_INFINITY), 0.0);
            assert_eq!(p.cdf(f64::INFINITY), 1.0);
        }
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(Family::Normal, &[0.0, 0.0]).is_err());
        assert!(Params::new(Family::Exponential, &[-1.0]).is_err());
        assert!(Params::new(Family::ChiSquared, &[1.0, 2.0]).is_err());
        assert!(Params::new(Family::Cauchy, &[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn family_names_round_trip() {
        for fam in Family::ALL {
            assert_eq!(fam.name().parse::<Family>().unwrap(), fam);
        }
        assert_eq!("exp".parse::<Family>().unwrap(), Family::Exponential);
        assert!("weibull".parse::<Family>().is_err());
    }

    #[test]
    fn simulate_contract() {
        let p = Params::new(Family::Cauchy, &[1.0, 5.0]).unwrap();
        let s = RngStream::new(3);
        assert!(simulate(&p, 0, &mut s.clone()).is_empty());
        let a = simulate(&p, 100, &mut s.clone());
        let b = simulate(&p, 100, &mut s.clone());
        assert_eq!(a, b);
        assert_eq!(
            a.provenance(),
            Provenance::Simulated {
                family: Family::Cauchy,
                lineage: None
            }
        );
    }
}
