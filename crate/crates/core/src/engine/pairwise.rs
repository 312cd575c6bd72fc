use std::f64::consts::PI;
use std::sync::atomic::AtomicUsize;

use super::{
    bootstrap_at, check_common, generator_row, observed_fits, redraw, Engine, REJECTION_CAP_FACTOR,
};
use crate::distributions::{quantile_sorted, Dataset, Family, Lineage};
use crate::error::{Error, Result};
use crate::gof::GofStatistic;
use crate::mathcore::log_sum_exp;
use crate::rng::RngStream;

/// Replicate distributions of ΔGOF = GOF_A − GOF_B under each hypothesis.
///
/// A non-finite delta marks a support violation in that replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseResult {
    pub models: (Family, Family),
    pub statistic: GofStatistic,
    pub delta_obs: f64,
    pub gof_obs: [f64; 2],
    pub delta_under_a: Vec<f64>,
    pub delta_under_b: Vec<f64>,
    pub replicates: usize,
    pub rejected_replicates: usize,
}

pub fn pbcm_pairwise(
    data: &Dataset,
    a: Family,
    b: Family,
    stat: GofStatistic,
    replicates: usize,
    seed: u64,
) -> Result<PairwiseResult> {
    Engine::default().pbcm_pairwise(data, a, b, stat, replicates, seed)
}

impl Engine {
    /// Pairwise parametric bootstrap cross-fitting. A replicate whose any
    /// fit fails is discarded and redrawn as a whole.
    ///
    /// Streams follow the same layout as [`Engine::mmm_run`] with A as model
    /// 0 and B as model 1, so without rejections the deltas equal the row
    /// differences of a two-model run with the same seed.
    pub fn pbcm_pairwise(
        &self,
        data: &Dataset,
        a: Family,
        b: Family,
        stat: GofStatistic,
        replicates: usize,
        seed: u64,
    ) -> Result<PairwiseResult> {
        check_common(data, replicates, &stat)?;
        let models = [a, b];
        let root = RngStream::new(seed);
        let (_, gof_obs) = observed_fits(data, &models, &stat, &root)?;

        let cap = REJECTION_CAP_FACTOR * replicates;
        let rejections = AtomicUsize::new(0);
        let outs = self.execution().map(replicates, |r| {
            redraw(&rejections, cap, 0, |attempt| {
                let lin = Lineage {
                    replicate: r,
                    attempt,
                };
                let boot = bootstrap_at(data, &root, lin)?;
                let (_, under_a) = generator_row(&boot, 0, &models, &stat, &root, lin)?;
                let (_, under_b) = generator_row(&boot, 1, &models, &stat, &root, lin)?;
                Ok((under_a[0] - under_a[1], under_b[0] - under_b[1], attempt))
            })
        });

        let mut delta_under_a = Vec::with_capacity(replicates);
        let mut delta_under_b = Vec::with_capacity(replicates);
        let mut rejected = 0;
        for out in outs {
            let (da, db, attempts) = out?;
            delta_under_a.push(da);
            delta_under_b.push(db);
            rejected += attempts;
        }
        Ok(PairwiseResult {
            models: (a, b),
            statistic: stat,
            delta_obs: gof_obs[0] - gof_obs[1],
            gof_obs: [gof_obs[0], gof_obs[1]],
            delta_under_a,
            delta_under_b,
            replicates,
            rejected_replicates: rejected,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseDecision {
    pub choice: Choice,
    /// f(ΔGOF_obs | A) / f(ΔGOF_obs | B), or the distance ratio
    /// `|obs − mean_B| / |obs − mean_A|` when `degenerate`.
    pub ratio: f64,
    /// Kernel density estimates at ΔGOF_obs; `None` when degenerate.
    pub density_a: Option<f64>,
    pub density_b: Option<f64>,
    /// Set when a replicate distribution had zero spread and the
    /// distance-to-mean rule was used instead of densities.
    pub degenerate: bool,
}

impl PairwiseDecision {
    pub fn selected(&self, result: &PairwiseResult) -> Family {
        match self.choice {
            Choice::A => result.models.0,
            Choice::B => result.models.1,
        }
    }
}

struct Kde {
    /// Finite replicate values.
    points: Vec<f64>,
    bandwidth: f64,
    /// Total replicate count, finite or not.
    total: usize,
}

impl Kde {
    /// Silverman bandwidth `0.9 · min(sd, IQR/1.34) · n^(−1/5)` over the
    /// finite values; `None` if they have zero spread.
    fn new(values: &[f64]) -> Option<Self> {
        let mut points: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        if points.len() < 2 {
            return None;
        }
        points.sort_by(f64::total_cmp);
        let n = points.len() as f64;
        let mean = points.iter().sum::<f64>() / n;
        let sd = (points.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
        if !(sd > 0.0) {
            return None;
        }
        let iqr = quantile_sorted(&points, 0.75) - quantile_sorted(&points, 0.25);
        let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
        Some(Self {
            points,
            bandwidth: 0.9 * spread * n.powf(-0.2),
            total: values.len(),
        })
    }

    /// Log density at `x`. Non-finite replicates contribute zero mass, so
    /// the finite part integrates to (finite count)/(total count).
    fn log_density(&self, x: f64) -> f64 {
        let terms: Vec<f64> = self
            .points
            .iter()
            .map(|p| {
                let u = (x - p) / self.bandwidth;
                -0.5 * u * u
            })
            .collect();
        log_sum_exp(&terms) - (self.total as f64 * self.bandwidth * (2.0 * PI).sqrt()).ln()
    }
}

fn finite_mean(values: &[f64]) -> Option<f64> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64)
}

/// Selects A when f(ΔGOF_obs | A) / f(ΔGOF_obs | B) ≥ 1, with densities from
/// Gaussian kernel smoothing of the replicate deltas.
pub fn pbcm_decide(result: &PairwiseResult) -> Result<PairwiseDecision> {
    if result.replicates < 10 {
        return Err(Error::InsufficientRows {
            needed: 10,
            got: result.replicates,
        });
    }
    let obs = result.delta_obs;
    match (
        Kde::new(&result.delta_under_a),
        Kde::new(&result.delta_under_b),
    ) {
        (Some(ka), Some(kb)) => {
            let (la, lb) = (ka.log_density(obs), kb.log_density(obs));
            Ok(PairwiseDecision {
                choice: if la >= lb { Choice::A } else { Choice::B },
                ratio: (la - lb).exp(),
                density_a: Some(la.exp()),
                density_b: Some(lb.exp()),
                degenerate: false,
            })
        }
        _ => {
            let dist = |v: &[f64]| finite_mean(v).map_or(f64::INFINITY, |m| (obs - m).abs());
            let (da, db) = (dist(&result.delta_under_a), dist(&result.delta_under_b));
            let ratio = if da == db { 1.0 } else { db / da };
            Ok(PairwiseDecision {
                choice: if ratio >= 1.0 { Choice::A } else { Choice::B },
                ratio,
                density_a: None,
                density_b: None,
                degenerate: true,
            })
        }
    }
}
