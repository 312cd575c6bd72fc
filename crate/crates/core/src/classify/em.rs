use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{
    check_classes, finite_part, sample_covariance, sample_mean, symmetrize, ClassifierModel,
    Densities, GaussianComponent,
};
use crate::error::{Error, Result};
use crate::mathcore::log_sum_exp;
use crate::par::Execution;
use crate::rng::{role, RngStream};

pub const DEFAULT_K_MAX: usize = 3;
pub const EM_RESTARTS: usize = 5;
pub const EM_MAX_ITER: usize = 500;
pub const EM_TOL: f64 = 1e-8;

/// A fitted Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub components: Vec<GaussianComponent>,
    pub log_likelihood: f64,
    /// Log-likelihood after each E-step of the winning restart.
    pub history: Vec<f64>,
    /// False if the winning restart hit [`EM_MAX_ITER`] before the gain
    /// dropped below [`EM_TOL`].
    pub converged: bool,
}

impl Mixture {
    /// Free parameters: `k−1 + k·M + k·M(M+1)/2`.
    pub fn parameter_count(&self) -> usize {
        let k = self.components.len();
        let m = self.components[0].mean.len();
        k - 1 + k * m + k * m * (m + 1) / 2
    }

    pub fn bic(&self, n: usize) -> f64 {
        self.parameter_count() as f64 * (n as f64).ln() - 2.0 * self.log_likelihood
    }
}

/// EM for a `k`-component full-covariance Gaussian mixture over the rows of
/// `points`. Each of [`EM_RESTARTS`] runs starts from k-means++ centres with
/// the pooled covariance; the run with the best final log-likelihood wins.
/// A restart is abandoned if a component's effective size falls below
/// `M + 1`; if every restart is abandoned the fit fails.
///
/// The M-step covariance is the responsibility-weighted `1/Σr` form, so for
/// `k = 1` the fit is the sample covariance scaled by `(R−1)/R`.
pub fn em_gaussian_mixture(points: &DMatrix<f64>, k: usize, seed: u64) -> Result<Mixture> {
    em_with_stream(points, k, &RngStream::new(seed).derive(&[role::CLASSIFIER]))
}

fn em_with_stream(points: &DMatrix<f64>, k: usize, stream: &RngStream) -> Result<Mixture> {
    let (r, m) = points.shape();
    if k == 0 {
        return Err(Error::InvalidArgument(
            "mixture needs at least one component".into(),
        ));
    }
    if r < k * (m + 1) || r < 2 {
        return Err(Error::InsufficientRows {
            needed: (k * (m + 1)).max(2),
            got: r,
        });
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteData);
    }
    // k = 1 is closed-form after one step; restarts cannot differ.
    let restarts = if k == 1 { 1 } else { EM_RESTARTS };
    let mut best: Option<Mixture> = None;
    for restart in 0..restarts {
        let mut rng = stream.derive(&[k as u64, restart as u64]);
        let Ok(fit) = em_once(points, k, &mut rng) else {
            continue;
        };
        if best
            .as_ref()
            .is_none_or(|b| fit.log_likelihood > b.log_likelihood)
        {
            best = Some(fit);
        }
    }
    best.ok_or(Error::EmDidNotConverge { k })
}

fn kmeans_pp(points: &DMatrix<f64>, k: usize, rng: &mut RngStream) -> Vec<DVector<f64>> {
    let r = points.nrows();
    let row = |i: usize| points.row(i).transpose();
    let mut centres = vec![row(rng.random_range(0..r))];
    let mut d2: Vec<f64> = (0..r)
        .map(|i| (row(i) - &centres[0]).norm_squared())
        .collect();
    while centres.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut idx = r - 1;
            for (i, d) in d2.iter().enumerate() {
                if u < *d {
                    idx = i;
                    break;
                }
                u -= d;
            }
            idx
        } else {
            rng.random_range(0..r)
        };
        let c = row(pick);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min((row(i) - &c).norm_squared());
        }
        centres.push(c);
    }
    centres
}

fn em_once(points: &DMatrix<f64>, k: usize, rng: &mut RngStream) -> Result<Mixture> {
    let (r, m) = points.shape();
    let global = sample_covariance(points)? * ((r - 1) as f64 / r as f64);
    let mut components = kmeans_pp(points, k, rng)
        .into_iter()
        .map(|c| GaussianComponent::new(1.0 / k as f64, c, &global))
        .collect::<Result<Vec<_>>>()?;

    let rows: Vec<DVector<f64>> = (0..r).map(|i| points.row(i).transpose()).collect();
    let mut history = Vec::new();
    let mut resp = DMatrix::<f64>::zeros(r, k);
    let mut converged = false;
    for _ in 0..EM_MAX_ITER {
        // E-step.
        let mut ll = 0.0;
        let mut terms = vec![0.0; k];
        for (i, x) in rows.iter().enumerate() {
            for (l, c) in components.iter().enumerate() {
                terms[l] = c.weight.ln() + c.log_density(x);
            }
            let lse = log_sum_exp(&terms);
            if !lse.is_finite() {
                return Err(Error::EmDidNotConverge { k });
            }
            ll += lse;
            for l in 0..k {
                resp[(i, l)] = (terms[l] - lse).exp();
            }
        }
        let gain = history.last().map(|prev| ll - prev);
        history.push(ll);
        if gain.is_some_and(|g| g < EM_TOL) {
            converged = true;
            break;
        }
        // M-step.
        let mut next = Vec::with_capacity(k);
        for l in 0..k {
            let col = resp.column(l);
            let nk: f64 = col.sum();
            // A component holding fewer than M + 1 points is collapsing onto
            // a likelihood singularity; abandon this restart.
            if !(nk >= (m + 1) as f64) {
                return Err(Error::EmDidNotConverge { k });
            }
            let mean = points.tr_mul(&col) / nk;
            let mut cov = DMatrix::zeros(m, m);
            for (i, x) in rows.iter().enumerate() {
                let d = x - &mean;
                cov.ger(col[i] / nk, &d, &d, 1.0);
            }
            symmetrize(&mut cov);
            next.push(GaussianComponent::new(
                (nk / r as f64).min(1.0),
                mean,
                &cov,
            )?);
        }
        let total: f64 = next.iter().map(|c| c.weight).sum();
        for c in &mut next {
            c.weight /= total;
        }
        components = next;
    }
    let log_likelihood = *history.last().expect("at least one E-step");
    Ok(Mixture {
        components,
        log_likelihood,
        history,
        converged,
    })
}

/// Mixture discriminant: per class, a Gaussian mixture for each
/// `k = 1..=k_max` on the finite rows, keeping the smallest BIC (ties to
/// the smaller `k`). Values of `k` the class is too small for are skipped.
pub fn fit_mda(matrices: &[DMatrix<f64>], k_max: usize, seed: u64) -> Result<ClassifierModel> {
    fit_mda_with(matrices, k_max, seed, Execution::default())
}

pub(crate) fn fit_mda_with(
    matrices: &[DMatrix<f64>],
    k_max: usize,
    seed: u64,
    execution: Execution,
) -> Result<ClassifierModel> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let m = matrices.first().map_or(0, |x| x.ncols());
    check_classes(matrices, 10 * m)?;
    let root = RngStream::new(seed).derive(&[role::CLASSIFIER]);
    let fits = execution.map(matrices.len(), |class| {
        let (finite, mass) = finite_part(&matrices[class]);
        let n = finite.nrows();
        if n < 2 {
            return Ok((None, mass));
        }
        let stream = root.derive(&[class as u64]);
        let mut best: Option<(f64, Mixture)> = None;
        for k in 1..=k_max {
            if k > 1 && n < k * (m + 1) {
                break;
            }
            let mix = if k == 1 {
                single_component(&finite)?
            } else {
                match em_with_stream(&finite, k, &stream) {
                    Ok(mix) => mix,
                    Err(Error::EmDidNotConverge { .. }) => continue,
                    Err(e) => return Err(e),
                }
            };
            let bic = mix.bic(n);
            if best.as_ref().is_none_or(|(b, _)| bic < *b) {
                best = Some((bic, mix));
            }
        }
        Ok((best.map(|(_, mix)| mix.components), mass))
    });
    let (mixtures, masses): (Vec<_>, Vec<_>) = fits
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    ClassifierModel::new(Densities::Mda(mixtures), Some(masses))
}

/// The `k = 1` EM fixed point, computed directly so that classes smaller
/// than `M + 1` rows still get a (ridged) density.
fn single_component(points: &DMatrix<f64>) -> Result<Mixture> {
    let r = points.nrows();
    let cov = sample_covariance(points)? * ((r - 1) as f64 / r as f64);
    let comp = GaussianComponent::new(1.0, sample_mean(points)?, &cov)?;
    let ll = (0..r)
        .map(|i| comp.log_density(&points.row(i).transpose()))
        .sum();
    Ok(Mixture {
        components: vec![comp],
        log_likelihood: ll,
        history: vec![ll],
        converged: true,
    })
}
