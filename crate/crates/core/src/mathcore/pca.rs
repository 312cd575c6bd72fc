use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Two-component principal-axis view of pooled GOF clouds.
#[derive(Debug, Clone)]
pub struct PcaProjection {
    /// 2×M, orthonormal rows, PC1 first.
    pub components: DMatrix<f64>,
    pub center: DVector<f64>,
    /// All covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// (λ₁ + λ₂) / Σλ.
    pub explained_fraction: f64,
    /// Per class, one (pc1, pc2) pair per input row. Rows with a
    /// non-finite coordinate project to NaN.
    pub projected_classes: Vec<Vec<[f64; 2]>>,
    pub projected_obs: [f64; 2],
    /// True when the pooled cloud has rank < 2; PC2 then carries no variance.
    pub rank_deficient: bool,
}

fn finite_row(m: &DMatrix<f64>, r: usize) -> bool {
    m.row(r).iter().all(|v| v.is_finite())
}

/// Principal components of all class clouds pooled together (no per-class
/// centering or scaling), with each cloud and `gof_obs` projected onto the
/// top two axes.
pub fn pca_project(classes: &[DMatrix<f64>], gof_obs: &[f64]) -> Result<PcaProjection> {
    let dim = gof_obs.len();
    if dim < 2 {
        return Err(Error::InvalidArgument(
            "PCA needs at least two dimensions".into(),
        ));
    }
    for c in classes {
        if c.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: c.ncols(),
            });
        }
    }
    let rows: Vec<DVector<f64>> = classes
        .iter()
        .flat_map(|c| {
            (0..c.nrows())
                .filter(|&r| finite_row(c, r))
                .map(|r| c.row(r).transpose())
        })
        .collect();
    let n = rows.len();
    if n < dim + 1 {
        return Err(Error::InsufficientRows {
            needed: dim + 1,
            got: n,
        });
    }

    let mut center = DVector::zeros(dim);
    for row in &rows {
        center += row;
    }
    center /= n as f64;
    let mut cov = DMatrix::zeros(dim, dim);
    for row in &rows {
        let d = row - &center;
        cov += &d * d.transpose();
    }
    cov /= (n - 1) as f64;

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();

    let mut components = DMatrix::zeros(2, dim);
    for (k, &i) in order.iter().take(2).enumerate() {
        let mut v = eig.eigenvectors.column(i).clone_owned();
        // Sign convention: largest-magnitude entry positive.
        let lead = v
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            v.neg_mut();
        }
        components.row_mut(k).copy_from(&v.transpose());
    }

    let explained_fraction = if total > 0.0 {
        (eigenvalues[0] + eigenvalues[1]) / total
    } else {
        1.0
    };
    let rank_deficient = eigenvalues[1] <= 1e-12 * eigenvalues[0].max(f64::MIN_POSITIVE);

    let project = |x: DVector<f64>| -> [f64; 2] {
        let p = &components * (x - &center);
        [p[0], p[1]]
    };
    let projected_classes = classes
        .iter()
        .map(|c| {
            (0..c.nrows())
                .map(|r| {
                    if finite_row(c, r) {
                        project(c.row(r).transpose())
                    } else {
                        [f64::NAN; 2]
                    }
                })
                .collect()
        })
        .collect();
    let projected_obs = project(DVector::from_column_slice(gof_obs));

    Ok(PcaProjection {
        components,
        center,
        eigenvalues,
        explained_fraction,
        projected_classes,
        projected_obs,
        rank_deficient,
    })
}
