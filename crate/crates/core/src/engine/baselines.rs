use super::Engine;
use crate::distributions::{fit, simulate, Dataset, Family, Params};
use crate::error::{Error, Result};
use crate::gof::neg_log_likelihood;
use crate::mathcore::regularized_upper_incomplete_gamma;
use crate::rng::{role, RngStream};

/// Monte Carlo calibration of λ = log L_A(θ_A|x) − log L_B(θ_B|x) with the
/// parameters held at their fits to the observed data.
#[derive(Debug, Clone, PartialEq)]
pub struct WilliamsResult {
    pub models: (Family, Family),
    pub params: (Params, Params),
    pub lambda_obs: f64,
    pub lambda_under_a: Vec<f64>,
    pub lambda_under_b: Vec<f64>,
}

pub fn williams_lambda(
    data: &Dataset,
    a: Family,
    b: Family,
    replicates: usize,
    seed: u64,
) -> Result<WilliamsResult> {
    Engine::default().williams_lambda(data, a, b, replicates, seed)
}

impl Engine {
    /// No bootstrap and no refitting: every simulated λ uses the original
    /// θ_A and θ_B. Values may be ±∞ when a simulation leaves a support.
    pub fn williams_lambda(
        &self,
        data: &Dataset,
        a: Family,
        b: Family,
        replicates: usize,
        seed: u64,
    ) -> Result<WilliamsResult> {
        if replicates == 0 {
            return Err(Error::InvalidArgument("R must be at least 1".into()));
        }
        let theta_a = fit(a, data)?;
        let theta_b = fit(b, data)?;
        let lambda =
            |x: &Dataset| neg_log_likelihood(x, &theta_b) - neg_log_likelihood(x, &theta_a);
        let root = RngStream::new(seed);
        let n = data.len();
        let pairs = self.execution().map(replicates, |r| {
            let xa = simulate(
                &theta_a,
                n,
                &mut root.derive(&[role::WILLIAMS, r as u64, 0]),
            );
            let xb = simulate(
                &theta_b,
                n,
                &mut root.derive(&[role::WILLIAMS, r as u64, 1]),
            );
            (lambda(&xa), lambda(&xb))
        });
        let (lambda_under_a, lambda_under_b) = pairs.into_iter().unzip();
        Ok(WilliamsResult {
            models: (a, b),
            params: (theta_a, theta_b),
            lambda_obs: lambda(data),
            lambda_under_a,
            lambda_under_b,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilksTest {
    pub statistic: f64,
    pub p_value: f64,
    pub df: usize,
}

/// Wilks' likelihood-ratio test for nested models: −2 log Λ against χ²_df.
pub fn wilks_lrt(nll_null: f64, nll_alt: f64, df: usize) -> Result<WilksTest> {
    if df == 0 {
        return Err(Error::InvalidArgument(
            "degrees of freedom must be ≥ 1".into(),
        ));
    }
    let raw = 2.0 * (nll_null - nll_alt);
    if nll_null < nll_alt - 1e-9 {
        return Err(Error::NegativeStatistic(raw));
    }
    let statistic = raw.max(0.0);
    let p_value = regularized_upper_incomplete_gamma(0.5 * df as f64, 0.5 * statistic);
    Ok(WilksTest {
        statistic,
        p_value,
        df,
    })
}
