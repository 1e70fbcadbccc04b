//! Config-driven entry points behind the `pg-dglm` binary: dataset
//! simulation, model fitting with posterior/predictive summaries, and
//! the batched effective-sampling-rate benchmark.
//!
//! Configs are strict JSON (unknown keys are errors). Every artifact a
//! command writes can be parsed back by the readers in this module, and
//! a run is fully determined by its config: rerunning with the same
//! config produces a byte-identical draw archive.

use crate::diagnostics::{esr_report, BatchChains, DiagnosticsError, EsrReport, EssConfig};
use crate::ffbs::StateSpaceSpec;
use crate::models::{
    run_chain, ArEstimation, BinomLogitSeries, ChainConfig, ChainInit, ChainOutput,
    DispersionPrior, GaussianPrior, GibbsControls, HyperPriorSpec, InverseGammaPrior, ModelError,
    NegBinSeries, SeriesData,
};
use crate::rng::stream_rng;
use crate::stats::mean;
use crate::synth::{
    gen_binom_series, gen_negbin_series, sample_negbin, write_dataset_csv, write_metadata_json,
    BenchDesign, DatasetMetadata, Family, SynthError,
};
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv row {row}, column {column}: {message}")]
    Ingest {
        row: usize,
        column: String,
        message: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Ffbs(#[from] crate::ffbs::FfbsError),
    #[error("malformed artifact {path}: {message}")]
    MalformedArtifact { path: PathBuf, message: String },
}

// ---------------------------------------------------------------------------
// Configuration

/// Column names used when ingesting a CSV dataset. When absent, the
/// native layout `t,y,n,x1..xP,observed` is assumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMapping {
    pub t: String,
    pub y: String,
    #[serde(default)]
    pub n: Option<String>,
    pub x: Vec<String>,
    #[serde(default)]
    pub observed: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    pub path: PathBuf,
    #[serde(default)]
    pub mapping: Option<ColumnMapping>,
    /// Trial count applied to rows without an `n` cell (binomial only).
    #[serde(default)]
    pub n_trials: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSource {
    pub design: BenchDesign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    Csv(CsvSource),
    Synthetic(SyntheticSource),
}

/// Estimation switches plus prior settings, mirrored onto
/// [`HyperPriorSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorConfig {
    pub estimate_mu: bool,
    pub estimate_phi: bool,
    pub estimate_w: bool,
    pub estimate_alpha: bool,
    pub estimate_dispersion: bool,
    pub mu_prior: GaussianPrior,
    pub phi_prior: GaussianPrior,
    pub w_prior: InverseGammaPrior,
    pub alpha_prior: GaussianPrior,
    pub dispersion_prior: DispersionPrior,
}

impl Default for PriorConfig {
    fn default() -> Self {
        let h = HyperPriorSpec::default();
        Self {
            estimate_mu: false,
            estimate_phi: false,
            estimate_w: false,
            estimate_alpha: false,
            estimate_dispersion: false,
            mu_prior: h.mu_prior,
            phi_prior: h.phi_prior,
            w_prior: h.w_prior,
            alpha_prior: h.alpha_prior,
            dispersion_prior: h.dispersion_prior,
        }
    }
}

impl PriorConfig {
    pub fn to_hyper(&self) -> HyperPriorSpec {
        HyperPriorSpec {
            estimate_ar: ArEstimation {
                mu: self.estimate_mu,
                phi: self.estimate_phi,
                w: self.estimate_w,
            },
            mu_prior: self.mu_prior,
            phi_prior: self.phi_prior,
            w_prior: self.w_prior,
            estimate_alpha: self.estimate_alpha,
            alpha_prior: self.alpha_prior,
            estimate_dispersion: self.estimate_dispersion,
            dispersion_prior: self.dispersion_prior,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterceptMode {
    /// Scalar intercept with its own conjugate update.
    #[default]
    Static,
    /// Constant-1 covariate column; the intercept evolves as a state.
    State,
    /// No intercept.
    None,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialCovariance {
    /// Stationary AR(1) covariance implied by `phi` and `w`.
    #[default]
    Stationary,
    /// Explicit diagonal.
    Diagonal(Vec<f64>),
}

/// Latent-state settings: dimension, (diagonal) dynamics and initial
/// moments, plus intercept handling and initial values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub dim: usize,
    #[serde(default)]
    pub mu: Option<Vec<f64>>,
    pub phi: Vec<f64>,
    pub w: Vec<f64>,
    #[serde(default)]
    pub m0: Option<Vec<f64>>,
    #[serde(default)]
    pub c0: InitialCovariance,
    #[serde(default)]
    pub intercept: InterceptMode,
    #[serde(default)]
    pub alpha_init: f64,
    #[serde(default = "default_dispersion_init")]
    pub dispersion_init: f64,
}

fn default_dispersion_init() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSettings {
    pub iterations: usize,
    pub burn_in: usize,
    #[serde(default = "default_thin")]
    pub thin: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
    pub seed: u64,
}

fn default_thin() -> usize {
    1
}

fn default_batches() -> usize {
    10
}

/// Everything a run needs; commands consume this plus an output
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Family,
    pub data: DataSource,
    #[serde(default)]
    pub priors: PriorConfig,
    pub chain: ChainSettings,
    pub state: StateConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.chain.iterations <= self.chain.burn_in {
            return Err(CliError::Config(format!(
                "iterations ({}) must exceed burn_in ({})",
                self.chain.iterations, self.chain.burn_in
            )));
        }
        if self.chain.batches == 0 {
            return Err(CliError::Config("batches must be >= 1".into()));
        }
        if self.chain.thin == 0 {
            return Err(CliError::Config("thin must be >= 1".into()));
        }
        let dim = self.state.dim;
        if dim == 0 {
            return Err(CliError::Config("state dim must be >= 1".into()));
        }
        for (name, v) in [("phi", &self.state.phi), ("w", &self.state.w)] {
            if v.len() != dim {
                return Err(CliError::Config(format!(
                    "state.{name} has {} entries, expected {dim}",
                    v.len()
                )));
            }
        }
        for (name, v) in [("mu", &self.state.mu), ("m0", &self.state.m0)] {
            if let Some(v) = v {
                if v.len() != dim {
                    return Err(CliError::Config(format!(
                        "state.{name} has {} entries, expected {dim}",
                        v.len()
                    )));
                }
            }
        }
        if let InitialCovariance::Diagonal(v) = &self.state.c0 {
            if v.len() != dim {
                return Err(CliError::Config(format!(
                    "state.c0 has {} entries, expected {dim}",
                    v.len()
                )));
            }
        }
        if self.state.intercept != InterceptMode::Static && self.priors.estimate_alpha {
            return Err(CliError::Config(
                "estimate_alpha requires a static intercept".into(),
            ));
        }
        if self.priors.estimate_dispersion && self.model != Family::NegBinom {
            return Err(CliError::Config(
                "estimate_dispersion requires the neg-binom family".into(),
            ));
        }
        if matches!(&self.data, DataSource::Synthetic(s) if s.design.family != self.model) {
            return Err(CliError::Config(
                "synthetic design family does not match the model family".into(),
            ));
        }
        Ok(())
    }

    /// Builds the state-space spec and initial chain values.
    pub fn chain_init(&self) -> Result<ChainInit, CliError> {
        let dim = self.state.dim;
        let zeros = vec![0.0; dim];
        let mu = self.state.mu.clone().unwrap_or_else(|| zeros.clone());
        let m0 = self.state.m0.clone().unwrap_or(zeros);
        let c0 = match &self.state.c0 {
            InitialCovariance::Diagonal(v) => v.clone(),
            InitialCovariance::Stationary => self
                .state
                .phi
                .iter()
                .zip(&self.state.w)
                .map(|(&p, &w)| {
                    if p.abs() < 1.0 {
                        Ok(w / (1.0 - p * p))
                    } else {
                        Err(CliError::Config(format!(
                            "stationary c0 undefined for |phi| >= 1 (phi = {p})"
                        )))
                    }
                })
                .collect::<Result<Vec<f64>, CliError>>()?,
        };
        let spec = StateSpaceSpec::ar1_diagonal(&mu, &self.state.phi, &self.state.w, &m0, &c0)?;
        Ok(ChainInit {
            spec,
            alpha: self.state.alpha_init,
            dispersion: self.state.dispersion_init,
        })
    }
}

/// Command-line overrides layered on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
    pub burnin: Option<usize>,
    pub batches: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) {
        if let Some(seed) = self.seed {
            config.chain.seed = seed;
            if let DataSource::Synthetic(s) = &mut config.data {
                s.design.seed = seed;
            }
        }
        if let Some(iterations) = self.iterations {
            config.chain.iterations = iterations;
        }
        if let Some(burnin) = self.burnin {
            config.chain.burn_in = burnin;
        }
        if let Some(batches) = self.batches {
            config.chain.batches = batches;
        }
        if let Some(out) = &self.out {
            config.output_dir = Some(out.clone());
        }
    }
}

/// Reads a config file. A `meta.json` emitted by a previous run is also
/// accepted: its embedded `config` object reproduces the identical run.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let config_value = match value.get("config") {
        Some(inner) => inner.clone(),
        None => value,
    };
    let config: RunConfig = serde_json::from_value(config_value)?;
    config.validate()?;
    Ok(config)
}

// ---------------------------------------------------------------------------
// CSV ingestion

fn native_mapping(header: &[String]) -> Result<ColumnMapping, CliError> {
    let mut x = Vec::new();
    let mut k = 1;
    while header.contains(&format!("x{k}")) {
        x.push(format!("x{k}"));
        k += 1;
    }
    if x.is_empty() {
        return Err(CliError::Config(
            "no covariate columns x1.. found in header".into(),
        ));
    }
    Ok(ColumnMapping {
        t: "t".into(),
        y: "y".into(),
        n: header.contains(&"n".to_string()).then(|| "n".into()),
        x,
        observed: header
            .contains(&"observed".to_string())
            .then(|| "observed".into()),
    })
}

fn column_index(header: &[String], name: &str) -> Result<usize, CliError> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Config(format!("column '{name}' not found in header")))
}

/// Reads a dataset CSV. Blank responses mark unobserved steps; a
/// constant-1 covariate column is injected when the intercept is
/// modeled as a state component.
pub fn ingest_csv(
    path: &Path,
    mapping: Option<&ColumnMapping>,
    family: Family,
    global_n: Option<u64>,
    intercept_as_state: bool,
) -> Result<SeriesData, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)?;
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mapping = match mapping {
        Some(m) => m.clone(),
        None => native_mapping(&header)?,
    };
    let y_idx = column_index(&header, &mapping.y)?;
    let n_idx = mapping
        .n
        .as_ref()
        .map(|n| column_index(&header, n))
        .transpose()?;
    let x_idx: Vec<usize> = mapping
        .x
        .iter()
        .map(|c| column_index(&header, c))
        .collect::<Result<_, _>>()?;
    let obs_idx = mapping
        .observed
        .as_ref()
        .map(|c| column_index(&header, c))
        .transpose()?;

    let mut ys = Vec::new();
    let mut ns = Vec::new();
    let mut xs = Vec::new();
    let mut observed = Vec::new();

    for (row_num, record) in reader.records().enumerate() {
        let row = row_num + 1; // 1-based data row for error messages
        let record = record?;
        let cell = |idx: usize| record.get(idx).unwrap_or("").trim();

        let y_cell = cell(y_idx);
        let mut obs = !y_cell.is_empty();
        if let Some(idx) = obs_idx {
            let text = cell(idx).to_ascii_lowercase();
            let flagged = match text.as_str() {
                "" | "true" | "1" => true,
                "false" | "0" => false,
                other => {
                    return Err(CliError::Ingest {
                        row,
                        column: mapping.observed.clone().unwrap_or_default(),
                        message: format!("expected a boolean, got '{other}'"),
                    })
                }
            };
            obs = obs && flagged;
        }
        let y = if obs {
            y_cell.parse::<u64>().map_err(|_| CliError::Ingest {
                row,
                column: mapping.y.clone(),
                message: format!("expected a nonnegative integer, got '{y_cell}'"),
            })?
        } else {
            0
        };

        let n = match n_idx {
            Some(idx) if !cell(idx).is_empty() => {
                Some(cell(idx).parse::<u64>().map_err(|_| CliError::Ingest {
                    row,
                    column: mapping.n.clone().unwrap_or_default(),
                    message: format!("expected a nonnegative integer, got '{}'", cell(idx)),
                })?)
            }
            _ => global_n,
        };

        if family == Family::BinomLogit {
            let n = n.ok_or_else(|| CliError::Ingest {
                row,
                column: "n".into(),
                message: "binomial data needs an n cell or a global n_trials".into(),
            })?;
            if obs && y > n {
                return Err(CliError::Ingest {
                    row,
                    column: mapping.y.clone(),
                    message: format!("y = {y} exceeds n = {n}"),
                });
            }
            ns.push(n);
        }

        let mut x_row = Vec::with_capacity(x_idx.len() + intercept_as_state as usize);
        if intercept_as_state {
            x_row.push(1.0);
        }
        for (j, &idx) in x_idx.iter().enumerate() {
            let text = cell(idx);
            let v = text.parse::<f64>().map_err(|_| CliError::Ingest {
                row,
                column: mapping.x[j].clone(),
                message: format!("expected a real number, got '{text}'"),
            })?;
            x_row.push(v);
        }
        xs.push(x_row);
        ys.push(y);
        observed.push(obs);
    }

    if ys.is_empty() {
        return Err(CliError::Config(format!(
            "no data rows in {}",
            path.display()
        )));
    }
    let p = xs[0].len();
    let x = nalgebra::DMatrix::from_fn(ys.len(), p, |t, j| xs[t][j]);
    let data = match family {
        Family::BinomLogit => {
            SeriesData::Binomial(BinomLogitSeries::new(ys, ns, x, observed)?)
        }
        Family::NegBinom => SeriesData::NegBinomial(NegBinSeries::new(ys, x, observed)?),
    };
    Ok(data)
}

/// Materializes the configured data source. Synthetic sources also
/// return the generating truth.
pub fn resolve_data(config: &RunConfig) -> Result<(SeriesData, Option<DatasetMetadata>), CliError> {
    match &config.data {
        DataSource::Csv(src) => {
            let data = ingest_csv(
                &src.path,
                src.mapping.as_ref(),
                config.model,
                src.n_trials,
                config.state.intercept == InterceptMode::State,
            )?;
            Ok((data, None))
        }
        DataSource::Synthetic(src) => {
            if config.state.intercept == InterceptMode::State {
                return Err(CliError::Config(
                    "synthetic designs model a static intercept".into(),
                ));
            }
            let design = &src.design;
            let mut rng = stream_rng(design.seed, 0);
            match design.family {
                Family::BinomLogit => {
                    let (series, path, alpha) = gen_binom_series(design, &mut rng)?;
                    let meta = DatasetMetadata::new(design, &path, &series.x, alpha, None);
                    Ok((SeriesData::Binomial(series), Some(meta)))
                }
                Family::NegBinom => {
                    let (series, path, alpha, d) = gen_negbin_series(design, &mut rng)?;
                    let meta = DatasetMetadata::new(design, &path, &series.x, alpha, Some(d));
                    Ok((SeriesData::NegBinomial(series), Some(meta)))
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Draw archive

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawArchiveHeader {
    pub format: String,
    pub version: u32,
    pub n_draws: usize,
    pub n_params: usize,
    pub param_names: Vec<String>,
    pub seed: u64,
    pub t_len: usize,
    pub dim: usize,
}

fn param_names(output: &ChainOutput) -> Vec<String> {
    let mut names = Vec::new();
    for t in 0..output.t_len {
        for i in 0..output.dim {
            names.push(format!("beta[{}][{}]", t + 1, i + 1));
        }
    }
    if output.alphas.is_some() {
        names.push("alpha".into());
    }
    for (prefix, present) in [
        ("mu", output.mus.is_some()),
        ("phi", output.phis.is_some()),
        ("w", output.ws.is_some()),
    ] {
        if present {
            for i in 0..output.dim {
                names.push(format!("{prefix}[{}]", i + 1));
            }
        }
    }
    if output.dispersions.is_some() {
        names.push("d".into());
    }
    names
}

/// Flat binary of 64-bit little-endian floats behind a JSON header:
/// `[u64 header length][header JSON][n_draws * n_params doubles]`.
pub fn write_draws_bin(path: &Path, output: &ChainOutput, seed: u64) -> Result<(), CliError> {
    let names = param_names(output);
    let header = DrawArchiveHeader {
        format: "pg-dglm-draws".into(),
        version: 1,
        n_draws: output.stored,
        n_params: names.len(),
        param_names: names,
        seed,
        t_len: output.t_len,
        dim: output.dim,
    };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
    file.write_all(&header_bytes)?;

    let width = output.t_len * output.dim;
    for s in 0..output.stored {
        let mut push = |v: f64| file.write_all(&v.to_le_bytes());
        for k in 0..width {
            push(output.betas[s * width + k])?;
        }
        if let Some(a) = &output.alphas {
            push(a[s])?;
        }
        for block in [&output.mus, &output.phis, &output.ws].into_iter().flatten() {
            for i in 0..output.dim {
                push(block[s * output.dim + i])?;
            }
        }
        if let Some(d) = &output.dispersions {
            push(d[s])?;
        }
    }
    Ok(())
}

/// Reads an archive written by [`write_draws_bin`]; returns the header
/// and the row-major draw matrix.
pub fn read_draws_bin(path: &Path) -> Result<(DrawArchiveHeader, Vec<f64>), CliError> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut len_bytes = [0u8; 8];
    file.read_exact(&mut len_bytes)?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    file.read_exact(&mut header_bytes)?;
    let header: DrawArchiveHeader = serde_json::from_slice(&header_bytes)?;
    if header.format != "pg-dglm-draws" {
        return Err(CliError::MalformedArtifact {
            path: path.to_path_buf(),
            message: format!("unknown format '{}'", header.format),
        });
    }
    let mut payload = Vec::new();
    file.read_to_end(&mut payload)?;
    let expect = header.n_draws * header.n_params * 8;
    if payload.len() != expect {
        return Err(CliError::MalformedArtifact {
            path: path.to_path_buf(),
            message: format!("payload is {} bytes, expected {expect}", payload.len()),
        });
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((header, values))
}

// ---------------------------------------------------------------------------
// Artifact rows

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub t: usize,
    pub param: String,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveRow {
    pub t: usize,
    pub observed: bool,
    pub y: Option<u64>,
    pub pred_mean: f64,
    pub pred_lower: f64,
    pub pred_upper: f64,
}

fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<(), CliError> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "t,param,mean,lower,upper")?;
    for r in rows {
        writeln!(file, "{},{},{},{},{}", r.t, r.param, r.mean, r.lower, r.upper)?;
    }
    Ok(())
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let bad = |message: String| CliError::MalformedArtifact {
        path: path.to_path_buf(),
        message,
    };
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != "t,param,mean,lower,upper" {
                return Err(bad(format!("unexpected header '{line}'")));
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad(format!("line {i}: expected 5 fields")));
        }
        rows.push(SummaryRow {
            t: f[0].parse().map_err(|_| bad(format!("line {i}: bad t")))?,
            param: f[1].to_string(),
            mean: f[2].parse().map_err(|_| bad(format!("line {i}: bad mean")))?,
            lower: f[3].parse().map_err(|_| bad(format!("line {i}: bad lower")))?,
            upper: f[4].parse().map_err(|_| bad(format!("line {i}: bad upper")))?,
        });
    }
    Ok(rows)
}

fn write_predictive_csv(path: &Path, rows: &[PredictiveRow]) -> Result<(), CliError> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "t,observed,y,pred_mean,pred_lower,pred_upper")?;
    for r in rows {
        let y_cell = r.y.map_or(String::new(), |y| y.to_string());
        writeln!(
            file,
            "{},{},{},{},{},{}",
            r.t, r.observed, y_cell, r.pred_mean, r.pred_lower, r.pred_upper
        )?;
    }
    Ok(())
}

pub fn read_predictive_csv(path: &Path) -> Result<Vec<PredictiveRow>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let bad = |message: String| CliError::MalformedArtifact {
        path: path.to_path_buf(),
        message,
    };
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != "t,observed,y,pred_mean,pred_lower,pred_upper" {
                return Err(bad(format!("unexpected header '{line}'")));
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(format!("line {i}: expected 6 fields")));
        }
        rows.push(PredictiveRow {
            t: f[0].parse().map_err(|_| bad(format!("line {i}: bad t")))?,
            observed: f[1]
                .parse()
                .map_err(|_| bad(format!("line {i}: bad observed")))?,
            y: if f[2].is_empty() {
                None
            } else {
                Some(f[2].parse().map_err(|_| bad(format!("line {i}: bad y")))?)
            },
            pred_mean: f[3].parse().map_err(|_| bad(format!("line {i}: bad mean")))?,
            pred_lower: f[4]
                .parse()
                .map_err(|_| bad(format!("line {i}: bad lower")))?,
            pred_upper: f[5]
                .parse()
                .map_err(|_| bad(format!("line {i}: bad upper")))?,
        });
    }
    Ok(rows)
}

/// Everything recorded about a run besides the draws themselves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config: RunConfig,
    pub crate_version: String,
    pub burnin_seconds: f64,
    pub sampling_seconds: f64,
    pub stored_draws: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dispersion_step_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_seconds: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<DatasetMetadata>,
}

// ---------------------------------------------------------------------------
// Commands

/// Artifact paths produced by [`cmd_fit`].
#[derive(Debug, Clone)]
pub struct FitArtifacts {
    pub summary: PathBuf,
    pub predictive: PathBuf,
    pub draws: PathBuf,
    pub meta: PathBuf,
}

/// Generates the configured synthetic dataset and writes
/// `dataset.csv` plus `dataset.meta.json`.
pub fn cmd_simulate(config: &RunConfig, out_dir: &Path) -> Result<(PathBuf, PathBuf), CliError> {
    config.validate()?;
    let DataSource::Synthetic(src) = &config.data else {
        return Err(CliError::Config(
            "simulate needs a synthetic data source".into(),
        ));
    };
    std::fs::create_dir_all(out_dir)?;
    let design = &src.design;
    let mut rng = stream_rng(design.seed, 0);
    let csv_path = out_dir.join("dataset.csv");
    let meta_path = out_dir.join("dataset.meta.json");
    match design.family {
        Family::BinomLogit => {
            let (series, path, alpha) = gen_binom_series(design, &mut rng)?;
            write_dataset_csv(
                &csv_path,
                &series.y,
                Some(&series.n),
                &series.x,
                &series.observed,
            )?;
            write_metadata_json(
                &meta_path,
                &DatasetMetadata::new(design, &path, &series.x, alpha, None),
            )?;
        }
        Family::NegBinom => {
            let (series, path, alpha, d) = gen_negbin_series(design, &mut rng)?;
            write_dataset_csv(&csv_path, &series.y, None, &series.x, &series.observed)?;
            write_metadata_json(
                &meta_path,
                &DatasetMetadata::new(design, &path, &series.x, alpha, Some(d)),
            )?;
        }
    }
    Ok((csv_path, meta_path))
}

fn binomial_trials(data: &SeriesData) -> Option<Vec<u64>> {
    match data {
        SeriesData::Binomial(s) => Some(s.n.clone()),
        SeriesData::NegBinomial(_) => None,
    }
}

/// Fits the model and writes posterior summaries, posterior-predictive
/// intervals (missing steps included), the draw archive and run
/// metadata.
pub fn cmd_fit(config: &RunConfig, out_dir: &Path) -> Result<FitArtifacts, CliError> {
    config.validate()?;
    let (data, truth) = resolve_data(config)?;
    let init = config.chain_init()?;
    let priors = config.priors.to_hyper();
    let cfg = ChainConfig {
        iterations: config.chain.iterations,
        burn_in: config.chain.burn_in,
        thin: config.chain.thin,
        seed: config.chain.seed,
        stream: 0,
    };
    let output = run_chain(&data, &priors, &init, &GibbsControls::default(), &cfg)?;

    std::fs::create_dir_all(out_dir)?;
    let t_len = output.t_len;
    let dim = output.dim;
    let predictor_name = match config.model {
        Family::BinomLogit => "psi",
        Family::NegBinom => "lambda",
    };

    // Per-draw linear predictors feed both summaries and predictive draws.
    let x = data.covariates();
    let mut predictor = vec![vec![0.0f64; output.stored]; t_len];
    let width = t_len * dim;
    for s in 0..output.stored {
        let alpha = output
            .alphas
            .as_ref()
            .map_or(init.alpha, |a| a[s]);
        let alpha = if config.state.intercept == InterceptMode::Static {
            alpha
        } else {
            0.0
        };
        for t in 0..t_len {
            let mut acc = alpha;
            for j in 0..dim {
                acc += x[(t, j)] * output.betas[s * width + t * dim + j];
            }
            predictor[t][s] = acc;
        }
    }

    let mut summary = Vec::with_capacity(t_len * (dim + 1));
    for t in 0..t_len {
        for i in 0..dim {
            let chain = output.beta_chain(i, t);
            let qs = crate::stats::quantiles_of(&chain, &[0.025, 0.975]);
            summary.push(SummaryRow {
                t: t + 1,
                param: format!("beta{}", i + 1),
                mean: mean(&chain),
                lower: qs[0],
                upper: qs[1],
            });
        }
        let qs = crate::stats::quantiles_of(&predictor[t], &[0.025, 0.975]);
        summary.push(SummaryRow {
            t: t + 1,
            param: predictor_name.into(),
            mean: mean(&predictor[t]),
            lower: qs[0],
            upper: qs[1],
        });
    }

    // Posterior predictive: one response draw per stored draw per step,
    // from a dedicated stream so fits stay reproducible.
    let mut pred_rng = stream_rng(config.chain.seed, u64::MAX);
    let trials = binomial_trials(&data);
    let observed = data.observed().to_vec();
    let ys: Vec<u64> = match &data {
        SeriesData::Binomial(s) => s.y.clone(),
        SeriesData::NegBinomial(s) => s.y.clone(),
    };
    let mut predictive = Vec::with_capacity(t_len);
    let mut buffer = vec![0.0f64; output.stored];
    for t in 0..t_len {
        for (s, slot) in buffer.iter_mut().enumerate() {
            let eta = predictor[t][s];
            *slot = match config.model {
                Family::BinomLogit => {
                    let n = trials.as_ref().expect("binomial data")[t];
                    let p = (1.0 / (1.0 + (-eta).exp())).clamp(0.0, 1.0);
                    rand_distr::Binomial::new(n, p)
                        .expect("probability in range")
                        .sample(&mut pred_rng) as f64
                }
                Family::NegBinom => {
                    let d = output
                        .dispersions
                        .as_ref()
                        .map_or(init.dispersion, |ds| ds[s]);
                    sample_negbin(d, eta.exp(), &mut pred_rng) as f64
                }
            };
        }
        let qs = crate::stats::quantiles_of(&buffer, &[0.025, 0.975]);
        predictive.push(PredictiveRow {
            t: t + 1,
            observed: observed[t],
            y: observed[t].then(|| ys[t]),
            pred_mean: mean(&buffer),
            pred_lower: qs[0],
            pred_upper: qs[1],
        });
    }

    let artifacts = FitArtifacts {
        summary: out_dir.join("summary.csv"),
        predictive: out_dir.join("predictive.csv"),
        draws: out_dir.join("draws.bin"),
        meta: out_dir.join("meta.json"),
    };
    write_summary_csv(&artifacts.summary, &summary)?;
    write_predictive_csv(&artifacts.predictive, &predictive)?;
    write_draws_bin(&artifacts.draws, &output, config.chain.seed)?;
    let meta = RunMetadata {
        config: config.clone(),
        crate_version: env!("CARGO_PKG_VERSION").into(),
        burnin_seconds: output.burnin_seconds,
        sampling_seconds: output.sampling_seconds,
        stored_draws: output.stored,
        dispersion_step_final: priors
            .estimate_dispersion
            .then_some(output.dispersion_step),
        batch_seconds: None,
        truth,
    };
    serde_json::to_writer_pretty(std::fs::File::create(&artifacts.meta)?, &meta)?;
    Ok(artifacts)
}

/// Runs the batched benchmark protocol and writes `esr_report.csv` plus
/// `meta.json`. Batches run on a worker pool, each owning one random
/// stream; the ESR denominator is each batch's post-burn-in seconds.
pub fn cmd_benchmark(config: &RunConfig, out_dir: &Path) -> Result<EsrReport, CliError> {
    config.validate()?;
    let (data, truth) = resolve_data(config)?;
    let init = config.chain_init()?;
    let priors = config.priors.to_hyper();
    let batches: Vec<BatchChains> = (0..config.chain.batches)
        .into_par_iter()
        .map(|b| -> Result<BatchChains, ModelError> {
            let cfg = ChainConfig {
                iterations: config.chain.iterations,
                burn_in: config.chain.burn_in,
                thin: config.chain.thin,
                seed: config.chain.seed,
                stream: b as u64,
            };
            let output = run_chain(&data, &priors, &init, &GibbsControls::default(), &cfg)?;
            let mut chains =
                Vec::with_capacity(output.dim * output.t_len);
            for i in 0..output.dim {
                for t in 0..output.t_len {
                    chains.push(output.beta_chain(i, t));
                }
            }
            Ok(BatchChains {
                chains,
                seconds: output.sampling_seconds,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut labels = Vec::with_capacity(data.dim() * data.len());
    for i in 0..data.dim() {
        for t in 0..data.len() {
            labels.push((i + 1, t + 1));
        }
    }
    let report = esr_report(&batches, &labels, &EssConfig::default())?;

    std::fs::create_dir_all(out_dir)?;
    report.write_csv(&out_dir.join("esr_report.csv"))?;
    let meta = RunMetadata {
        config: config.clone(),
        crate_version: env!("CARGO_PKG_VERSION").into(),
        burnin_seconds: 0.0,
        sampling_seconds: report.total_seconds,
        stored_draws: ChainConfig {
            iterations: config.chain.iterations,
            burn_in: config.chain.burn_in,
            thin: config.chain.thin,
            seed: 0,
            stream: 0,
        }
        .stored_draws(),
        dispersion_step_final: None,
        batch_seconds: Some(batches.iter().map(|b| b.seconds).collect()),
        truth,
    };
    serde_json::to_writer_pretty(std::fs::File::create(out_dir.join("meta.json"))?, &meta)?;
    Ok(report)
}
