//! Replication machinery: non-parametric bootstrap, pairwise and
//! multi-model parametric cross-fitting, and the Williams / Wilks baselines.
//!
//! Every replicate derives its random substreams from
//! `(master seed, role, replicate, attempt, model indices)`, so results are
//! bit-identical for any thread count or schedule.
//!
//! A simulated dataset that falls outside a candidate's support (for
//! example negative draws from a fitted normal scored against the
//! exponential family) cannot be fitted by that candidate. Such a cell is
//! recorded as `+∞` rather than rejected; the classifiers treat it as a
//! point mass away from the observed vector. All other fit failures reject
//! the replicate, which is redrawn up to a cap of `10·R` rejections.

mod baselines;
mod mmm;
mod pairwise;

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;

pub use baselines::{wilks_lrt, williams_lambda, WilksTest, WilliamsResult};
pub use mmm::{mmm_run, GofMatrix, MmmResult, ModelSpec};
pub use pairwise::{pbcm_decide, pbcm_pairwise, Choice, PairwiseDecision, PairwiseResult};

use crate::distributions::{fit, simulate, Dataset, Family, Lineage, Params, Provenance};
use crate::error::{Error, Result};
use crate::gof::{evaluate, GofStatistic};
use crate::par::Execution;
use crate::rng::{role, RngStream};

/// Rejections allowed per generator, as a multiple of R.
pub const REJECTION_CAP_FACTOR: usize = 10;

/// Size-n resample with replacement.
pub fn nonparametric_bootstrap(data: &Dataset, stream: &mut RngStream) -> Result<Dataset> {
    resample(data, stream, None)
}

fn resample(data: &Dataset, stream: &mut RngStream, lineage: Option<Lineage>) -> Result<Dataset> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let xs = data.values();
    let values = (0..xs.len())
        .map(|_| xs[stream.random_range(0..xs.len())])
        .collect();
    Ok(Dataset::from_parts(
        values,
        Provenance::Bootstrap { lineage },
    ))
}

/// Replicate-loop driver. The free functions in this module use
/// `Engine::default()`, which runs replicates in parallel when the
/// `parallel` feature is enabled.
#[derive(Debug, Clone, Copy, Default)]
pub struct Engine {
    execution: Execution,
}

impl Engine {
    pub fn new(execution: Execution) -> Self {
        Self { execution }
    }

    pub fn sequential() -> Self {
        Self::new(Execution::Sequential)
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }
}

/// Fit `family` to `data` and score the fit. A support violation yields
/// `Ok(+∞)`; any other failure is returned as an error.
fn score_cell(
    family: Family,
    data: &Dataset,
    stat: &GofStatistic,
    stream: &mut RngStream,
) -> Result<f64> {
    match fit(family, data) {
        Ok(params) => evaluate(stat, data, &params, stream),
        Err(Error::NonPositiveData(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Fits every model to the observed data and scores each fit.
fn observed_fits(
    data: &Dataset,
    models: &[Family],
    stat: &GofStatistic,
    root: &RngStream,
) -> Result<(Vec<Params>, Vec<f64>)> {
    let mut params = Vec::with_capacity(models.len());
    let mut gof = Vec::with_capacity(models.len());
    for (i, &family) in models.iter().enumerate() {
        let p = fit(family, data)?;
        gof.push(evaluate(
            stat,
            data,
            &p,
            &mut root.derive(&[role::OBSERVED, i as u64]),
        )?);
        params.push(p);
    }
    Ok((params, gof))
}

fn bootstrap_at(data: &Dataset, root: &RngStream, lineage: Lineage) -> Result<Dataset> {
    let mut s = root.derive(&[
        role::BOOTSTRAP,
        lineage.replicate as u64,
        lineage.attempt as u64,
    ]);
    resample(data, &mut s, Some(lineage))
}

/// One generator's contribution to a replicate: fit the generator to the
/// bootstrap, simulate, then fit-and-score every candidate on the simulation.
/// Returns the simulated dataset alongside its GOF row.
fn generator_row(
    boot: &Dataset,
    generator: usize,
    models: &[Family],
    stat: &GofStatistic,
    root: &RngStream,
    lineage: Lineage,
) -> Result<(Dataset, Vec<f64>)> {
    let (r, a) = (lineage.replicate as u64, lineage.attempt as u64);
    let theta = fit(models[generator], boot)?;
    let sim = simulate(
        &theta,
        boot.len(),
        &mut root.derive(&[role::SIMULATE, r, a, generator as u64]),
    )
    .with_provenance(Provenance::Simulated {
        family: models[generator],
        lineage: Some(lineage),
    });
    let row = models
        .iter()
        .enumerate()
        .map(|(i, &cand)| {
            score_cell(
                cand,
                &sim,
                stat,
                &mut root.derive(&[role::SCORE, r, a, generator as u64, i as u64]),
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((sim, row))
}

/// Calls `attempt_fn(0)`, `attempt_fn(1)`, … until one succeeds, counting
/// failures in `counter`. Errors out once the counter exceeds `cap`.
///
/// Bootstrap errors (empty data) are not retryable and propagate directly.
fn redraw<T>(
    counter: &AtomicUsize,
    cap: usize,
    generator: usize,
    mut attempt_fn: impl FnMut(usize) -> Result<T>,
) -> Result<T> {
    let mut attempt = 0;
    loop {
        match attempt_fn(attempt) {
            Ok(v) => return Ok(v),
            Err(Error::EmptyData) => return Err(Error::EmptyData),
            Err(_) => {
                let so_far = counter.fetch_add(1, Ordering::Relaxed) + 1;
                if so_far > cap {
                    return Err(Error::TooManyRejections {
                        generator,
                        rejections: so_far,
                        cap,
                    });
                }
                attempt += 1;
            }
        }
    }
}

fn check_common(data: &Dataset, replicates: usize, stat: &GofStatistic) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if replicates == 0 {
        return Err(Error::InvalidArgument("R must be at least 1".into()));
    }
    stat.validate()
}
