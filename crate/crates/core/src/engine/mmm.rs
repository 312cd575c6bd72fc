use std::sync::atomic::AtomicUsize;

use nalgebra::DMatrix;

use super::{
    bootstrap_at, check_common, generator_row, observed_fits, redraw, Engine, REJECTION_CAP_FACTOR,
};
use crate::distributions::{Dataset, Family, Lineage, Params};
use crate::error::{Error, Result};
use crate::gof::GofStatistic;
use crate::rng::RngStream;

/// A candidate family with its fit to the observed data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub family: Family,
    pub fitted: Params,
}

/// R×M goodness-of-fit values for data generated under one model.
/// Row `r` is `[GOF_{1|j}, …, GOF_{M|j}]` for replicate `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct GofMatrix {
    pub generator: usize,
    cols: usize,
    values: Vec<f64>,
    /// Bootstrap each row descends from.
    pub lineage: Vec<Lineage>,
}

impl GofMatrix {
    pub fn new(generator: usize, rows: Vec<Vec<f64>>, lineage: Vec<Lineage>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                got: bad.len(),
            });
        }
        if lineage.len() != rows.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: lineage.len(),
            });
        }
        Ok(Self {
            generator,
            cols,
            values: rows.concat(),
            lineage,
        })
    }

    pub fn nrows(&self) -> usize {
        self.lineage.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols.max(1))
    }

    /// Rows containing a support-violation marker (`+∞`).
    pub fn infinite_rows(&self) -> usize {
        self.rows()
            .filter(|r| r.iter().any(|v| !v.is_finite()))
            .count()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.nrows(), self.cols, &self.values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmmResult {
    pub matrices: Vec<GofMatrix>,
    pub gof_obs: Vec<f64>,
    pub models: Vec<ModelSpec>,
    pub statistic: GofStatistic,
    pub replicates: usize,
    pub rejected_replicates: Vec<usize>,
}

impl MmmResult {
    pub fn families(&self) -> Vec<Family> {
        self.models.iter().map(|m| m.family).collect()
    }
}

pub fn mmm_run(
    data: &Dataset,
    models: &[Family],
    stat: GofStatistic,
    replicates: usize,
    seed: u64,
) -> Result<MmmResult> {
    Engine::default().mmm_run(data, models, stat, replicates, seed)
}

struct ReplicateOut {
    rows: Vec<Vec<f64>>,
    lineage: Vec<Lineage>,
}

impl Engine {
    /// Multi-model mimicry: per replicate one shared bootstrap, M fits to
    /// it, M simulations, and M×M fit-and-score cells.
    ///
    /// Rejections are tracked per generator: a generator whose pipeline
    /// fails on attempt `a` retries with the attempt-`a+1` bootstrap while
    /// the other generators keep theirs.
    pub fn mmm_run(
        &self,
        data: &Dataset,
        models: &[Family],
        stat: GofStatistic,
        replicates: usize,
        seed: u64,
    ) -> Result<MmmResult> {
        check_common(data, replicates, &stat)?;
        let m = models.len();
        if m < 2 {
            return Err(Error::InvalidArgument(
                "need at least two candidate models".into(),
            ));
        }
        let root = RngStream::new(seed);
        let (fitted, gof_obs) = observed_fits(data, models, &stat, &root)?;

        let cap = REJECTION_CAP_FACTOR * replicates;
        let rejections: Vec<AtomicUsize> = (0..m).map(|_| AtomicUsize::new(0)).collect();

        let outs = self
            .execution()
            .map(replicates, |r| -> Result<ReplicateOut> {
                let mut boots: Vec<Dataset> = Vec::new();
                let mut rows = Vec::with_capacity(m);
                let mut lineage = Vec::with_capacity(m);
                for (j, rejected) in rejections.iter().enumerate() {
                    let (row, lin) = redraw(rejected, cap, j, |attempt| {
                        let lin = Lineage {
                            replicate: r,
                            attempt,
                        };
                        if boots.len() <= attempt {
                            boots.push(bootstrap_at(data, &root, lin)?);
                        }
                        generator_row(&boots[attempt], j, models, &stat, &root, lin)
                            .map(|(_, row)| (row, lin))
                    })?;
                    rows.push(row);
                    lineage.push(lin);
                }
                Ok(ReplicateOut { rows, lineage })
            });

        let mut per_gen_rows: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(replicates); m];
        let mut per_gen_lineage: Vec<Vec<Lineage>> = vec![Vec::with_capacity(replicates); m];
        for out in outs {
            let out = out?;
            for (j, (row, lin)) in out.rows.into_iter().zip(out.lineage).enumerate() {
                per_gen_rows[j].push(row);
                per_gen_lineage[j].push(lin);
            }
        }
        // Recount from lineage: the atomic counters are only an abort guard.
        let rejected_replicates = per_gen_lineage
            .iter()
            .map(|l| l.iter().map(|x| x.attempt).sum())
            .collect();
        let matrices = per_gen_rows
            .into_iter()
            .zip(per_gen_lineage)
            .enumerate()
            .map(|(j, (rows, lin))| GofMatrix::new(j, rows, lin))
            .collect::<Result<Vec<_>>>()?;

        Ok(MmmResult {
            matrices,
            gof_obs,
            models: models
                .iter()
                .zip(fitted)
                .map(|(&family, fitted)| ModelSpec { family, fitted })
                .collect(),
            statistic: stat,
            replicates,
            rejected_replicates,
        })
    }
}
