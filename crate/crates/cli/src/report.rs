use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

/// JSON has no infinities; non-finite values are written as strings.
pub mod lenient_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub posteriors: Vec<f64>,
    pub selected: String,
    /// Every class density vanished at `gof_obs`; the posterior is uniform.
    pub uniform_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmmReport {
    pub config: RunConfig,
    pub gof_obs: Vec<f64>,
    pub classifiers: BTreeMap<String, ClassifierReport>,
    pub rejected_replicates: Vec<usize>,
    /// `None` when the pooled cloud was too small for two components.
    pub pca_explained: Option<f64>,
    pub runtime_seconds: f64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PbcmReport {
    pub config: RunConfig,
    pub gof_obs: [f64; 2],
    pub delta_obs: f64,
    /// Kernel density of each replicate distribution at `delta_obs`; absent
    /// when the distance-to-mean fallback was used.
    pub density_a: Option<f64>,
    pub density_b: Option<f64>,
    #[serde(with = "lenient_f64")]
    pub ratio: f64,
    pub choice: String,
    pub selected: String,
    pub degenerate: bool,
    pub rejected_replicates: usize,
    pub runtime_seconds: f64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilksReport {
    pub statistic: f64,
    pub p_value: f64,
    pub df: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselinesReport {
    pub config: RunConfig,
    pub params_a: Vec<f64>,
    pub params_b: Vec<f64>,
    pub lambda_obs: f64,
    /// Share of λ simulated under A that is ≤ λ_obs (small: evidence against A).
    pub p_against_a: f64,
    /// Share of λ simulated under B that is ≥ λ_obs (small: evidence against B).
    pub p_against_b: f64,
    pub wilks: Option<WilksReport>,
    pub runtime_seconds: f64,
    pub version: String,
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
