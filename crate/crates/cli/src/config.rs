use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use mimicry::classify::{Method, DEFAULT_K_MAX};
use mimicry::{Family, GofStatistic};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Run configuration as written in the JSON file. Relative paths are
/// resolved against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data_path: PathBuf,
    pub models: Vec<String>,
    #[serde(default = "default_statistic")]
    pub statistic: StatisticConfig,
    #[serde(rename = "R", alias = "replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_classifiers")]
    pub classifiers: Vec<String>,
    #[serde(default = "default_k_max")]
    pub mda_k_max: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Declares the two models nested (first inside second); enables the
    /// likelihood-ratio test in `baselines`.
    #[serde(default)]
    pub nested: bool,
}

/// `"energy"` or `{"name": "energy", "m": 2000}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StatisticConfig {
    Name(String),
    Detailed {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<usize>,
    },
}

fn default_statistic() -> StatisticConfig {
    StatisticConfig::Name("energy".into())
}

fn default_classifiers() -> Vec<String> {
    Method::ALL.iter().map(|m| m.name().to_string()).collect()
}

fn default_k_max() -> usize {
    DEFAULT_K_MAX
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(".")
}

pub fn parse_statistic(name: &str, m: Option<usize>) -> Result<GofStatistic, CliError> {
    let stat = match name.to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
        "energy" => GofStatistic::Energy { reference_size: m },
        "ks" | "kolmogorov_smirnov" => GofStatistic::KolmogorovSmirnov,
        "nll" | "neg_log_likelihood" | "negloglik" => GofStatistic::NegLogLikelihood,
        "aic" => GofStatistic::Aic,
        "bic" => GofStatistic::Bic,
        other => return Err(CliError::Config(format!("unknown statistic `{other}`"))),
    };
    if m.is_some() && !matches!(stat, GofStatistic::Energy { .. }) {
        return Err(CliError::Config(format!(
            "option `m` only applies to energy, not `{name}`"
        )));
    }
    stat.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(stat)
}

/// A validated configuration with names resolved to library types.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub raw: RunConfig,
    pub base_dir: PathBuf,
    pub families: Vec<Family>,
    pub statistic: GofStatistic,
    pub methods: Vec<Method>,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let raw: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_raw(raw, base_dir)
    }

    pub fn from_raw(raw: RunConfig, base_dir: PathBuf) -> Result<Self, CliError> {
        let families = raw
            .models
            .iter()
            .map(|m| {
                m.parse::<Family>()
                    .map_err(|e| CliError::Config(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let statistic = match &raw.statistic {
            StatisticConfig::Name(n) => parse_statistic(n, None)?,
            StatisticConfig::Detailed { name, m } => parse_statistic(name, *m)?,
        };
        let mut methods = Vec::new();
        for c in &raw.classifiers {
            let m = c
                .parse::<Method>()
                .map_err(|e| CliError::Config(e.to_string()))?;
            if methods.contains(&m) {
                return Err(CliError::Config(format!("classifier `{c}` listed twice")));
            }
            methods.push(m);
        }
        if raw.replicates == 0 {
            return Err(CliError::Config("R must be at least 1".into()));
        }
        if raw.mda_k_max == 0 {
            return Err(CliError::Config("mda_k_max must be at least 1".into()));
        }
        Ok(Self {
            raw,
            base_dir,
            families,
            statistic,
            methods,
        })
    }

    pub fn data_path(&self) -> PathBuf {
        self.base_dir.join(&self.raw.data_path)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base_dir.join(&self.raw.output_dir)
    }

    pub fn replicates(&self) -> usize {
        self.raw.replicates
    }

    pub fn seed(&self) -> u64 {
        self.raw.seed
    }

    /// Checks for `mmm`: at least two distinct models and enough
    /// replicates for every requested classifier.
    pub fn check_mmm(&self) -> Result<(), CliError> {
        let m = self.families.len();
        if m < 2 {
            return Err(CliError::Config("mmm needs at least two models".into()));
        }
        if self.families.iter().collect::<HashSet<_>>().len() != m {
            return Err(CliError::Config("models must be distinct".into()));
        }
        for method in &self.methods {
            let needed = match method {
                Method::Lda | Method::Qda => m + 2,
                Method::Mda => 10 * m,
            };
            if self.replicates() < needed {
                return Err(CliError::Config(format!(
                    "{method} needs R ≥ {needed}, got {}",
                    self.replicates()
                )));
            }
        }
        Ok(())
    }

    /// Checks for the two-model commands.
    pub fn check_pair(
        &self,
        command: &str,
        min_replicates: usize,
    ) -> Result<(Family, Family), CliError> {
        let [a, b] = self.families[..] else {
            return Err(CliError::Config(format!(
                "{command} needs exactly two models, got {}",
                self.families.len()
            )));
        };
        if self.replicates() < min_replicates {
            return Err(CliError::Config(format!(
                "{command} needs R ≥ {min_replicates}, got {}",
                self.replicates()
            )));
        }
        Ok((a, b))
    }
}
