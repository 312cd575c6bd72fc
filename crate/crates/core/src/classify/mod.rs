//! Gaussian discriminant classification of the observed goodness-of-fit
//! vector against the simulated clouds, with equal model priors.
//!
//! Rows containing a non-finite value (a simulation outside a candidate's
//! support) are excluded from density fitting; each class keeps the point
//! mass `finite_rows / rows` so that such classes are not over-credited.

mod em;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::mathcore::log_sum_exp;

pub use em::{
    em_gaussian_mixture, fit_mda, Mixture, DEFAULT_K_MAX, EM_MAX_ITER, EM_RESTARTS, EM_TOL,
};

/// Smallest relative ridge; escalated ×10 up to [`RIDGE_MAX`] on failure.
pub const RIDGE_MIN: f64 = 1e-8;
pub const RIDGE_MAX: f64 = 1e-4;

/// The observed goodness-of-fit of each candidate model.
#[derive(Debug, Clone, PartialEq)]
pub struct GofVector(Vec<f64>);

impl GofVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyData);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteData);
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Lda,
    Qda,
    Mda,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Lda, Method::Qda, Method::Mda];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lda => "lda",
            Method::Qda => "qda",
            Method::Mda => "mda",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lda" => Ok(Method::Lda),
            "qda" => Ok(Method::Qda),
            "mda" => Ok(Method::Mda),
            other => Err(Error::InvalidArgument(format!(
                "unknown classifier `{other}`"
            ))),
        }
    }
}

pub fn sample_mean(points: &DMatrix<f64>) -> Result<DVector<f64>> {
    if points.nrows() == 0 {
        return Err(Error::InsufficientRows { needed: 1, got: 0 });
    }
    Ok(points.row_mean().transpose())
}

/// Unbiased `1/(R−1) Σ (x−x̄)(x−x̄)ᵀ`.
pub fn sample_covariance(points: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let r = points.nrows();
    if r < 2 {
        return Err(Error::InsufficientRows { needed: 2, got: r });
    }
    let mean = sample_mean(points)?;
    let mut centered = points.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let mut cov = centered.transpose() * &centered / (r - 1) as f64;
    symmetrize(&mut cov);
    Ok(cov)
}

/// Unweighted mean of the per-class covariances (every class has R rows).
pub fn pooled_covariance(per_class: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let first = per_class
        .first()
        .ok_or(Error::InsufficientRows { needed: 1, got: 0 })?;
    let mut sum = DMatrix::zeros(first.nrows(), first.ncols());
    for c in per_class {
        if c.shape() != first.shape() {
            return Err(Error::DimensionMismatch {
                expected: first.nrows(),
                got: c.nrows(),
            });
        }
        sum += c;
    }
    Ok(sum / per_class.len() as f64)
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// A covariance with the ridge floor applied and its Cholesky factor cached.
#[derive(Debug, Clone)]
pub struct Covariance {
    matrix: DMatrix<f64>,
    cholesky: Cholesky<f64, Dyn>,
    log_det: f64,
    ridge: f64,
}

impl PartialEq for Covariance {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl Covariance {
    /// Adds `ε·tr(Σ)/M` to the diagonal, ε from 1e−8 escalating ×10 to
    /// 1e−4 until the factorization succeeds. A zero trace falls back to an
    /// absolute scale of 1.
    pub fn regularized(raw: &DMatrix<f64>) -> Result<Self> {
        let dim = raw.nrows();
        if dim == 0 || raw.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: raw.ncols(),
            });
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularCovariance);
        }
        let mut sym = raw.clone();
        symmetrize(&mut sym);
        let trace = sym.trace();
        let scale = if trace > 0.0 { trace / dim as f64 } else { 1.0 };
        let mut eps = RIDGE_MIN;
        while eps <= RIDGE_MAX * (1.0 + 1e-9) {
            let ridge = eps * scale;
            let mut m = sym.clone();
            for i in 0..dim {
                m[(i, i)] += ridge;
            }
            if let Some(chol) = Cholesky::new(m.clone()) {
                let log_det = 2.0
                    * chol
                        .l_dirty()
                        .diagonal()
                        .iter()
                        .map(|d| d.ln())
                        .sum::<f64>();
                if log_det.is_finite() {
                    return Ok(Self {
                        matrix: m,
                        cholesky: chol,
                        log_det,
                        ridge,
                    });
                }
            }
            eps *= 10.0;
        }
        Err(Error::SingularCovariance)
    }

    /// The regularized matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn log_density(&self, x: &DVector<f64>, mean: &DVector<f64>) -> f64 {
        let diff = x - mean;
        let z = self
            .cholesky
            .l_dirty()
            .solve_lower_triangular(&diff)
            .expect("Cholesky factor has a positive diagonal");
        let m = self.dim() as f64;
        -0.5 * (m * (2.0 * PI).ln() + self.log_det + z.norm_squared())
    }
}

/// Multivariate normal log density, with `cov` regularized as in
/// [`Covariance::regularized`].
pub fn mvn_log_density(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    if x.len() != cov.nrows() || mean.len() != cov.nrows() {
        return Err(Error::DimensionMismatch {
            expected: cov.nrows(),
            got: x.len(),
        });
    }
    Ok(Covariance::regularized(cov)?.log_density(x, mean))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: DVector<f64>,
    pub covariance: Covariance,
}

impl GaussianComponent {
    pub fn new(weight: f64, mean: DVector<f64>, covariance: &DMatrix<f64>) -> Result<Self> {
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "component weight {weight} outside (0, 1]"
            )));
        }
        if mean.len() != covariance.nrows() {
            return Err(Error::DimensionMismatch {
                expected: covariance.nrows(),
                got: mean.len(),
            });
        }
        Ok(Self {
            weight,
            mean,
            covariance: Covariance::regularized(covariance)?,
        })
    }

    pub fn log_density(&self, x: &DVector<f64>) -> f64 {
        self.covariance.log_density(x, &self.mean)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Densities {
    /// Per-class means with one shared covariance.
    Lda {
        means: Vec<Option<DVector<f64>>>,
        covariance: Covariance,
    },
    Qda(Vec<Option<GaussianComponent>>),
    /// Per-class mixtures; weights within a mixture sum to one.
    Mda(Vec<Option<Vec<GaussianComponent>>>),
}

/// A fitted discriminant. A class with `None` density had fewer than two
/// finite rows and scores −∞ everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    densities: Densities,
    /// ln(finite rows / rows) per class.
    log_mass: Vec<f64>,
    labels: Vec<String>,
    dim: usize,
}

impl ClassifierModel {
    /// Assembles a model from explicit densities. `log_mass` defaults to 0
    /// (all rows finite).
    pub fn new(densities: Densities, log_mass: Option<Vec<f64>>) -> Result<Self> {
        let (classes, dim) = match &densities {
            Densities::Lda { means, covariance } => (means.len(), covariance.dim()),
            Densities::Qda(c) => (
                c.len(),
                c.iter().flatten().map(|g| g.mean.len()).next().unwrap_or(0),
            ),
            Densities::Mda(c) => (
                c.len(),
                c.iter()
                    .flatten()
                    .flatten()
                    .map(|g| g.mean.len())
                    .next()
                    .unwrap_or(0),
            ),
        };
        if classes == 0 || dim == 0 {
            return Err(Error::InsufficientRows { needed: 1, got: 0 });
        }
        let log_mass = log_mass.unwrap_or_else(|| vec![0.0; classes]);
        if log_mass.len() != classes {
            return Err(Error::DimensionMismatch {
                expected: classes,
                got: log_mass.len(),
            });
        }
        let labels = (0..classes).map(|i| format!("model{i}")).collect();
        Ok(Self {
            densities,
            log_mass,
            labels,
            dim,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.classes() {
            return Err(Error::DimensionMismatch {
                expected: self.classes(),
                got: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn method(&self) -> Method {
        match self.densities {
            Densities::Lda { .. } => Method::Lda,
            Densities::Qda(_) => Method::Qda,
            Densities::Mda(_) => Method::Mda,
        }
    }

    pub fn densities(&self) -> &Densities {
        &self.densities
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn log_mass(&self) -> &[f64] {
        &self.log_mass
    }

    pub fn classes(&self) -> usize {
        self.log_mass.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Log density of each class at `x`, including the finite-row mass.
    pub fn log_densities(&self, x: &DVector<f64>) -> Vec<f64> {
        let raw: Vec<f64> = match &self.densities {
            Densities::Lda { means, covariance } => means
                .iter()
                .map(|m| {
                    m.as_ref()
                        .map_or(f64::NEG_INFINITY, |m| covariance.log_density(x, m))
                })
                .collect(),
            Densities::Qda(cs) => cs
                .iter()
                .map(|c| c.as_ref().map_or(f64::NEG_INFINITY, |c| c.log_density(x)))
                .collect(),
            Densities::Mda(ms) => ms
                .iter()
                .map(|m| {
                    m.as_ref().map_or(f64::NEG_INFINITY, |m| {
                        let terms: Vec<f64> =
                            m.iter().map(|c| c.weight.ln() + c.log_density(x)).collect();
                        log_sum_exp(&terms)
                    })
                })
                .collect(),
        };
        raw.iter().zip(&self.log_mass).map(|(d, m)| d + m).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub posteriors: Vec<f64>,
    /// Index of the largest posterior; ties go to the lowest index.
    pub selected: usize,
    pub method: Method,
    pub log_densities: Vec<f64>,
    /// Set when every class density was zero and the posterior is uniform.
    pub uniform_fallback: bool,
}

/// Posterior model probabilities under equal priors.
pub fn classify(model: &ClassifierModel, gof_obs: &GofVector) -> Result<ClassificationResult> {
    if gof_obs.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: gof_obs.len(),
        });
    }
    let x = DVector::from_column_slice(gof_obs.values());
    let log_densities = model.log_densities(&x);
    let (posteriors, uniform_fallback) = posteriors_from_log(&log_densities);
    let mut selected = 0;
    for (i, p) in posteriors.iter().enumerate() {
        if *p > posteriors[selected] {
            selected = i;
        }
    }
    Ok(ClassificationResult {
        posteriors,
        selected,
        method: model.method(),
        log_densities,
        uniform_fallback,
    })
}

pub(crate) fn posteriors_from_log(log_densities: &[f64]) -> (Vec<f64>, bool) {
    let m = log_densities
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let k = log_densities.len();
    if !m.is_finite() {
        return (vec![1.0 / k as f64; k], true);
    }
    let w: Vec<f64> = log_densities.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = w.iter().sum();
    (w.iter().map(|v| v / s).collect(), false)
}

/// Rows with every entry finite, and the log of their share of all rows.
pub(crate) fn finite_part(points: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let keep: Vec<usize> = (0..points.nrows())
        .filter(|&r| points.row(r).iter().all(|v| v.is_finite()))
        .collect();
    let sub = points.select_rows(keep.iter());
    let mass = (keep.len() as f64 / points.nrows() as f64).ln();
    (sub, mass)
}

fn check_classes(matrices: &[DMatrix<f64>], min_rows: usize) -> Result<usize> {
    let first = matrices
        .first()
        .ok_or(Error::InsufficientRows { needed: 1, got: 0 })?;
    let dim = first.ncols();
    if dim == 0 {
        return Err(Error::InsufficientRows { needed: 1, got: 0 });
    }
    for m in matrices {
        if m.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: m.ncols(),
            });
        }
        if m.nrows() < min_rows {
            return Err(Error::InsufficientRows {
                needed: min_rows,
                got: m.nrows(),
            });
        }
    }
    Ok(dim)
}

struct ClassMoments {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

fn class_moments(matrices: &[DMatrix<f64>]) -> Result<(Vec<Option<ClassMoments>>, Vec<f64>)> {
    let mut moments = Vec::with_capacity(matrices.len());
    let mut masses = Vec::with_capacity(matrices.len());
    for m in matrices {
        let (finite, mass) = finite_part(m);
        masses.push(mass);
        moments.push(if finite.nrows() >= 2 {
            Some(ClassMoments {
                mean: sample_mean(&finite)?,
                cov: sample_covariance(&finite)?,
            })
        } else {
            None
        });
    }
    Ok((moments, masses))
}

/// Linear discriminant: per-class means, one pooled covariance.
pub fn fit_lda(matrices: &[DMatrix<f64>]) -> Result<ClassifierModel> {
    let dim = check_classes(matrices, matrices.first().map_or(0, |m| m.ncols()) + 2)?;
    let (moments, masses) = class_moments(matrices)?;
    let covs: Vec<DMatrix<f64>> = moments.iter().flatten().map(|c| c.cov.clone()).collect();
    if covs.is_empty() {
        return Err(Error::InsufficientRows { needed: 2, got: 0 });
    }
    let covariance = Covariance::regularized(&pooled_covariance(&covs)?)?;
    debug_assert_eq!(covariance.dim(), dim);
    let means = moments.into_iter().map(|c| c.map(|c| c.mean)).collect();
    ClassifierModel::new(Densities::Lda { means, covariance }, Some(masses))
}

/// Quadratic discriminant: per-class means and covariances.
pub fn fit_qda(matrices: &[DMatrix<f64>]) -> Result<ClassifierModel> {
    check_classes(matrices, matrices.first().map_or(0, |m| m.ncols()) + 2)?;
    let (moments, masses) = class_moments(matrices)?;
    let comps = moments
        .into_iter()
        .map(|c| {
            c.map(|c| GaussianComponent::new(1.0, c.mean, &c.cov))
                .transpose()
        })
        .collect::<Result<Vec<_>>>()?;
    ClassifierModel::new(Densities::Qda(comps), Some(masses))
}

/// Fits the requested discriminant; `seed` and `k_max` only matter for MDA.
pub fn fit(
    method: Method,
    matrices: &[DMatrix<f64>],
    k_max: usize,
    seed: u64,
) -> Result<ClassifierModel> {
    match method {
        Method::Lda => fit_lda(matrices),
        Method::Qda => fit_qda(matrices),
        Method::Mda => fit_mda(matrices, k_max, seed),
    }
}
