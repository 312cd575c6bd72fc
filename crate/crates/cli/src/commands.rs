use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mimicry::classify::{self, ClassificationResult, GofVector, Method};
use mimicry::distributions::simulate;
use mimicry::engine::{pbcm_decide, wilks_lrt, Choice, Engine, MmmResult};
use mimicry::gof::neg_log_likelihood;
use mimicry::mathcore::{log_shift, pca_project};
use mimicry::{Dataset, Family, Params, RngStream};
use nalgebra::DMatrix;

use crate::config::LoadedConfig;
use crate::error::CliError;
use crate::io::{fmt_f64, read_csv, read_data, write_atomic, Csv};
use crate::report::{
    BaselinesReport, ClassifierReport, MmmReport, PbcmReport, WilksReport, VERSION,
};

fn load_dataset(cfg: &LoadedConfig) -> Result<Dataset, CliError> {
    let path = cfg.data_path();
    let values = read_data(&path)?;
    if values.is_empty() {
        return Err(CliError::Data(format!(
            "{} holds no observations",
            path.display()
        )));
    }
    Dataset::observed(values).map_err(|e| CliError::from_core("data", e))
}

/// Fits each requested classifier to the GOF clouds and classifies
/// `gof_obs`. Used both by `mmm` and for offline re-classification.
pub fn classify_matrices(
    matrices: &[DMatrix<f64>],
    gof_obs: &[f64],
    methods: &[Method],
    mda_k_max: usize,
    seed: u64,
) -> Result<Vec<(Method, ClassificationResult)>, mimicry::Error> {
    let obs = GofVector::new(gof_obs.to_vec())?;
    methods
        .iter()
        .map(|&m| {
            let model = classify::fit(m, matrices, mda_k_max, seed)?;
            Ok((m, classify::classify(&model, &obs)?))
        })
        .collect()
}

/// Reads `gof_matrices.csv` back into one matrix per generator, in the
/// order generators first appear.
pub fn read_gof_matrices(path: &Path) -> Result<(Vec<String>, Vec<DMatrix<f64>>), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let (header, rows) = read_csv(&text);
    let models: Vec<String> = header.into_iter().skip(2).collect();
    let mut order: Vec<String> = Vec::new();
    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for row in rows {
        let gen = row[0].clone();
        if !order.contains(&gen) {
            order.push(gen.clone());
        }
        let parsed = row[2..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| CliError::Data(format!("bad value `{f}` in {}", path.display())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        values.entry(gen).or_default().extend(parsed);
    }
    let m = models.len();
    let matrices = order
        .iter()
        .map(|g| DMatrix::from_row_slice(values[g].len() / m, m, &values[g]))
        .collect();
    Ok((models, matrices))
}

fn prepare_output(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        context: format!("create {}", dir.display()),
        source,
    })
}

fn to_json<T: serde::Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s.into_bytes()
}

/// Writes the files in order; `report.json` is expected last so that its
/// presence marks a complete run.
fn write_all(dir: &Path, files: Vec<(&str, Vec<u8>)>) -> Result<Vec<PathBuf>, CliError> {
    prepare_output(dir)?;
    let mut written = Vec::new();
    for (name, bytes) in files {
        let p = dir.join(name);
        write_atomic(&p, &bytes)?;
        written.push(p);
    }
    Ok(written)
}

fn names(families: &[Family]) -> Vec<String> {
    families.iter().map(|f| f.name().to_string()).collect()
}

pub fn cmd_mmm(config_path: &Path) -> Result<MmmReport, CliError> {
    run_mmm(&LoadedConfig::load(config_path)?)
}

pub fn run_mmm(cfg: &LoadedConfig) -> Result<MmmReport, CliError> {
    let start = Instant::now();
    cfg.check_mmm()?;
    let data = load_dataset(cfg)?;
    let result = Engine::default()
        .mmm_run(
            &data,
            &cfg.families,
            cfg.statistic,
            cfg.replicates(),
            cfg.seed(),
        )
        .map_err(|e| CliError::from_core("mmm", e))?;
    let labels = names(&cfg.families);
    let matrices: Vec<DMatrix<f64>> = result.matrices.iter().map(|g| g.to_matrix()).collect();

    let classified = classify_matrices(
        &matrices,
        &result.gof_obs,
        &cfg.methods,
        cfg.raw.mda_k_max,
        cfg.seed(),
    )
    .map_err(|e| CliError::from_core("classification", e))?;
    let classifiers = classified
        .iter()
        .map(|(m, c)| {
            let rep = ClassifierReport {
                posteriors: c.posteriors.clone(),
                selected: labels[c.selected].clone(),
                uniform_fallback: c.uniform_fallback,
            };
            (m.name().to_string(), rep)
        })
        .collect();
    let pca = pca_project(&matrices, &result.gof_obs).ok();

    let files = vec![
        ("gof_matrices.csv", gof_matrices_csv(&result, &labels)),
        ("gof_obs.csv", gof_obs_csv(&result.gof_obs, &labels)),
        ("pca.csv", pca_csv(pca.as_ref(), &labels)),
        ("pairs_logshift.csv", pairs_logshift_csv(&result, &labels)),
    ];
    let mut report = MmmReport {
        config: cfg.raw.clone(),
        gof_obs: result.gof_obs.clone(),
        classifiers,
        rejected_replicates: result.rejected_replicates.clone(),
        pca_explained: pca.as_ref().map(|p| p.explained_fraction),
        runtime_seconds: 0.0,
        version: VERSION.to_string(),
    };
    let dir = cfg.output_dir();
    write_all(&dir, files)?;
    report.runtime_seconds = start.elapsed().as_secs_f64();
    write_all(&dir, vec![("report.json", to_json(&report))])?;
    Ok(report)
}

fn gof_matrices_csv(result: &MmmResult, labels: &[String]) -> Vec<u8> {
    let mut header = vec!["generator", "replicate"];
    header.extend(labels.iter().map(String::as_str));
    let mut csv = Csv::new(&[], &header);
    for (j, mat) in result.matrices.iter().enumerate() {
        for (r, row) in mat.rows().enumerate() {
            csv.row(
                [labels[j].clone(), r.to_string()]
                    .into_iter()
                    .chain(row.iter().map(|v| fmt_f64(*v))),
            );
        }
    }
    csv.into_bytes()
}

fn gof_obs_csv(gof_obs: &[f64], labels: &[String]) -> Vec<u8> {
    let mut csv = Csv::new(&[], &["model", "gof"]);
    for (l, v) in labels.iter().zip(gof_obs) {
        csv.row([l.clone(), fmt_f64(*v)]);
    }
    csv.into_bytes()
}

fn pca_csv(pca: Option<&mimicry::mathcore::PcaProjection>, labels: &[String]) -> Vec<u8> {
    let comments = match pca {
        Some(p) => vec![format!(
            "explained_fraction={}",
            fmt_f64(p.explained_fraction)
        )],
        None => vec!["too few finite rows for a projection".to_string()],
    };
    let mut csv = Csv::new(&comments, &["generator", "replicate", "pc1", "pc2"]);
    if let Some(p) = pca {
        for (j, pts) in p.projected_classes.iter().enumerate() {
            for (r, [a, b]) in pts.iter().enumerate() {
                csv.row([labels[j].clone(), r.to_string(), fmt_f64(*a), fmt_f64(*b)]);
            }
        }
        csv.row([
            "observed".to_string(),
            String::new(),
            fmt_f64(p.projected_obs[0]),
            fmt_f64(p.projected_obs[1]),
        ]);
    }
    csv.into_bytes()
}

fn pairs_logshift_csv(result: &MmmResult, labels: &[String]) -> Vec<u8> {
    let mut sets: Vec<Vec<f64>> = result
        .matrices
        .iter()
        .map(|m| m.rows().flatten().copied().collect())
        .collect();
    sets.push(result.gof_obs.clone());
    let (logs, c) = log_shift(&sets);
    let mut header = vec!["generator", "replicate"];
    let cols: Vec<String> = labels.iter().map(|l| format!("log_{l}")).collect();
    header.extend(cols.iter().map(String::as_str));
    let mut csv = Csv::new(&[format!("shift_c={}", fmt_f64(c))], &header);
    let m = labels.len();
    for (j, set) in logs[..result.matrices.len()].iter().enumerate() {
        for (r, row) in set.chunks(m).enumerate() {
            csv.row(
                [labels[j].clone(), r.to_string()]
                    .into_iter()
                    .chain(row.iter().map(|v| fmt_f64(*v))),
            );
        }
    }
    let obs = &logs[result.matrices.len()];
    csv.row(
        ["observed".to_string(), String::new()]
            .into_iter()
            .chain(obs.iter().map(|v| fmt_f64(*v))),
    );
    csv.into_bytes()
}

pub fn cmd_pbcm(config_path: &Path) -> Result<PbcmReport, CliError> {
    run_pbcm(&LoadedConfig::load(config_path)?)
}

pub fn run_pbcm(cfg: &LoadedConfig) -> Result<PbcmReport, CliError> {
    let start = Instant::now();
    let (a, b) = cfg.check_pair("pbcm", 10)?;
    let data = load_dataset(cfg)?;
    let result = Engine::default()
        .pbcm_pairwise(&data, a, b, cfg.statistic, cfg.replicates(), cfg.seed())
        .map_err(|e| CliError::from_core("pbcm", e))?;
    let decision = pbcm_decide(&result).map_err(|e| CliError::from_core("pbcm decision", e))?;

    let mut deltas = Csv::new(&[], &["replicate", "delta_under_A", "delta_under_B"]);
    for (r, (da, db)) in result
        .delta_under_a
        .iter()
        .zip(&result.delta_under_b)
        .enumerate()
    {
        deltas.row([r.to_string(), fmt_f64(*da), fmt_f64(*db)]);
    }
    let (logs, c) = log_shift(&[
        result.delta_under_a.clone(),
        result.delta_under_b.clone(),
        vec![result.delta_obs],
    ]);
    let comments = [
        format!("shift_c={}", fmt_f64(c)),
        format!("log_delta_obs={}", fmt_f64(logs[2][0])),
    ];
    let mut logcsv = Csv::new(
        &comments,
        &["replicate", "log_delta_under_A", "log_delta_under_B"],
    );
    for (r, (la, lb)) in logs[0].iter().zip(&logs[1]).enumerate() {
        logcsv.row([r.to_string(), fmt_f64(*la), fmt_f64(*lb)]);
    }

    let mut report = PbcmReport {
        config: cfg.raw.clone(),
        gof_obs: result.gof_obs,
        delta_obs: result.delta_obs,
        density_a: decision.density_a,
        density_b: decision.density_b,
        ratio: decision.ratio,
        choice: match decision.choice {
            Choice::A => "A".into(),
            Choice::B => "B".into(),
        },
        selected: cfg.raw.models[if decision.choice == Choice::A { 0 } else { 1 }].clone(),
        degenerate: decision.degenerate,
        rejected_replicates: result.rejected_replicates,
        runtime_seconds: 0.0,
        version: VERSION.to_string(),
    };
    let dir = cfg.output_dir();
    write_all(
        &dir,
        vec![
            ("deltas.csv", deltas.into_bytes()),
            ("logshift.csv", logcsv.into_bytes()),
        ],
    )?;
    report.runtime_seconds = start.elapsed().as_secs_f64();
    write_all(&dir, vec![("report.json", to_json(&report))])?;
    Ok(report)
}

pub fn cmd_baselines(config_path: &Path) -> Result<BaselinesReport, CliError> {
    run_baselines(&LoadedConfig::load(config_path)?)
}

pub fn run_baselines(cfg: &LoadedConfig) -> Result<BaselinesReport, CliError> {
    let start = Instant::now();
    let (a, b) = cfg.check_pair("baselines", 1)?;
    let df = if cfg.raw.nested {
        match b.arity().checked_sub(a.arity()) {
            Some(df) if df >= 1 => Some(df),
            _ => {
                return Err(CliError::Config(format!(
                    "nested models need more parameters in `{b}` than in `{a}`"
                )))
            }
        }
    } else {
        None
    };
    let data = load_dataset(cfg)?;
    let w = Engine::default()
        .williams_lambda(&data, a, b, cfg.replicates(), cfg.seed())
        .map_err(|e| CliError::from_core("williams", e))?;
    let wilks = match df {
        Some(df) => {
            let t = wilks_lrt(
                neg_log_likelihood(&data, &w.params.0),
                neg_log_likelihood(&data, &w.params.1),
                df,
            )
            .map_err(|e| CliError::from_core("wilks", e))?;
            Some(WilksReport {
                statistic: t.statistic,
                p_value: t.p_value,
                df: t.df,
            })
        }
        None => None,
    };
    let r = cfg.replicates() as f64;
    let p_against_a = w
        .lambda_under_a
        .iter()
        .filter(|&&l| l <= w.lambda_obs)
        .count() as f64
        / r;
    let p_against_b = w
        .lambda_under_b
        .iter()
        .filter(|&&l| l >= w.lambda_obs)
        .count() as f64
        / r;

    let mut csv = Csv::new(&[], &["replicate", "lambda_under_A", "lambda_under_B"]);
    for (i, (la, lb)) in w.lambda_under_a.iter().zip(&w.lambda_under_b).enumerate() {
        csv.row([i.to_string(), fmt_f64(*la), fmt_f64(*lb)]);
    }
    let mut report = BaselinesReport {
        config: cfg.raw.clone(),
        params_a: w.params.0.values().to_vec(),
        params_b: w.params.1.values().to_vec(),
        lambda_obs: w.lambda_obs,
        p_against_a,
        p_against_b,
        wilks,
        runtime_seconds: 0.0,
        version: VERSION.to_string(),
    };
    let dir = cfg.output_dir();
    write_all(&dir, vec![("lambda.csv", csv.into_bytes())])?;
    report.runtime_seconds = start.elapsed().as_secs_f64();
    write_all(&dir, vec![("report.json", to_json(&report))])?;
    Ok(report)
}

pub fn cmd_simulate(
    family: &str,
    params: &[f64],
    n: usize,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let family: Family = family
        .parse()
        .map_err(|e: mimicry::Error| CliError::Config(e.to_string()))?;
    let p = Params::new(family, params).map_err(|e| CliError::Config(e.to_string()))?;
    let data = simulate(&p, n, &mut RngStream::new(seed));
    let mut text = String::with_capacity(n * 24);
    for v in data.values() {
        text.push_str(&fmt_f64(*v));
        text.push('\n');
    }
    write_atomic(out, text.as_bytes())
}
