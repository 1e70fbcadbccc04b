//! Synthetic benchmark data generators.
//!
//! Each design simulates a diagonal AR(1) latent path, draws covariate
//! rows from a zero-mean equicorrelated Gaussian and produces a response
//! series from the chosen family: `Binom(n, logistic(alpha + x' beta))`
//! or `NB(d, q)` with mean `exp(alpha + x' beta)`.

use crate::ffbs::{simulate_dlm, LatentPath, StateSpaceSpec};
use crate::models::{BinomLogitSeries, ModelError, NegBinSeries};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ffbs(#[from] crate::ffbs::FfbsError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    BinomLogit,
    NegBinom,
}

/// Amount of cross-correlation between covariate components, mapped to
/// an equicorrelation factor. The benchmark presets are `low` and
/// `high`; `custom` keeps other factors one edit away.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovariateCorrelation {
    Low,
    High,
    Custom(f64),
}

impl CovariateCorrelation {
    pub fn factor(&self) -> f64 {
        match self {
            CovariateCorrelation::Low => 0.1,
            CovariateCorrelation::High => 0.9,
            CovariateCorrelation::Custom(f) => *f,
        }
    }
}

/// One synthetic benchmark design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchDesign {
    pub family: Family,
    /// Series length T.
    pub t_len: usize,
    /// State dimension P.
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Diagonal AR coefficient (0.95 in the benchmark designs).
    #[serde(default = "default_phi")]
    pub phi_diag: f64,
    /// Diagonal innovation variance.
    #[serde(default = "default_w")]
    pub w_diag: f64,
    /// Static intercept: log-odds shift (binomial) or log-mean level
    /// (negative binomial, e.g. `ln 10` or `ln 100`).
    pub alpha: f64,
    /// Trials per step for the binomial family (1 or 20 in the designs).
    #[serde(default = "default_n_trials")]
    pub n_trials: u64,
    pub correlation: CovariateCorrelation,
    /// True dispersion for negative-binomial generation.
    #[serde(default = "default_dispersion")]
    pub dispersion: f64,
    pub seed: u64,
    /// Optional `[start, end)` step range forced unobserved.
    #[serde(default)]
    pub missing: Option<(usize, usize)>,
}

fn default_dim() -> usize {
    2
}

fn default_phi() -> f64 {
    0.95
}

fn default_w() -> f64 {
    0.01
}

fn default_n_trials() -> u64 {
    1
}

fn default_dispersion() -> f64 {
    4.0
}

impl BenchDesign {
    /// Standard binomial benchmark design: P = 2, phi = 0.95, alpha = 0.
    pub fn binomial(t_len: usize, n_trials: u64, correlation: CovariateCorrelation, seed: u64) -> Self {
        Self {
            family: Family::BinomLogit,
            t_len,
            dim: 2,
            phi_diag: 0.95,
            w_diag: 0.01,
            alpha: 0.0,
            n_trials,
            correlation,
            dispersion: default_dispersion(),
            seed,
            missing: None,
        }
    }

    /// Standard count benchmark design: `alpha = ln(mean_count)`.
    pub fn negbin(t_len: usize, mean_count: f64, correlation: CovariateCorrelation, seed: u64) -> Self {
        Self {
            family: Family::NegBinom,
            t_len,
            dim: 2,
            phi_diag: 0.95,
            w_diag: 0.01,
            alpha: mean_count.ln(),
            n_trials: default_n_trials(),
            correlation,
            dispersion: default_dispersion(),
            seed,
            missing: None,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.t_len == 0 || self.dim == 0 {
            return Err(SynthError::InvalidDesign("t_len and dim must be >= 1".into()));
        }
        if self.phi_diag.abs() >= 1.0 {
            return Err(SynthError::InvalidDesign(format!(
                "|phi| must be < 1, got {}",
                self.phi_diag
            )));
        }
        if self.n_trials == 0 {
            return Err(SynthError::InvalidDesign("n_trials must be >= 1".into()));
        }
        if !(self.w_diag >= 0.0) {
            return Err(SynthError::InvalidDesign("w_diag must be >= 0".into()));
        }
        let f = self.correlation.factor();
        if !(0.0..1.0).contains(&f) {
            return Err(SynthError::InvalidDesign(format!(
                "correlation factor must lie in [0, 1), got {f}"
            )));
        }
        if !(self.dispersion > 0.0) {
            return Err(SynthError::InvalidDesign("dispersion must be > 0".into()));
        }
        if let Some((start, end)) = self.missing {
            if start >= end || end > self.t_len {
                return Err(SynthError::InvalidDesign(format!(
                    "missing range {start}..{end} out of bounds for T = {}",
                    self.t_len
                )));
            }
        }
        Ok(())
    }

    /// The latent-state spec implied by the design, with stationary
    /// initial moments.
    pub fn state_spec(&self) -> Result<StateSpaceSpec, SynthError> {
        let p = self.dim;
        let c_stat = self.w_diag / (1.0 - self.phi_diag * self.phi_diag);
        Ok(StateSpaceSpec::ar1_diagonal(
            &vec![0.0; p],
            &vec![self.phi_diag; p],
            &vec![self.w_diag; p],
            &vec![0.0; p],
            &vec![c_stat; p],
        )?)
    }

    fn observed_flags(&self) -> Vec<bool> {
        let mut flags = vec![true; self.t_len];
        if let Some((start, end)) = self.missing {
            for f in flags[start..end].iter_mut() {
                *f = false;
            }
        }
        flags
    }
}

/// Covariate rows drawn i.i.d. from a zero-mean Gaussian with
/// equicorrelation `f` between components:
/// `x = sqrt(1 - f) z + sqrt(f) g 1` with `g` shared across components.
pub fn gen_covariates<R: Rng + ?Sized>(design: &BenchDesign, rng: &mut R) -> DMatrix<f64> {
    let f = design.correlation.factor();
    let a = (1.0 - f).sqrt();
    let b = f.sqrt();
    let mut x = DMatrix::zeros(design.t_len, design.dim);
    for t in 0..design.t_len {
        let shared: f64 = rng.sample(StandardNormal);
        for j in 0..design.dim {
            let own: f64 = rng.sample(StandardNormal);
            x[(t, j)] = a * own + b * shared;
        }
    }
    x
}

fn logistic(psi: f64) -> f64 {
    1.0 / (1.0 + (-psi).exp())
}

/// Simulated binomial series plus the generating truth (path and alpha).
pub fn gen_binom_series<R: Rng + ?Sized>(
    design: &BenchDesign,
    rng: &mut R,
) -> Result<(BinomLogitSeries, LatentPath, f64), SynthError> {
    design.validate()?;
    let spec = design.state_spec()?;
    let path = simulate_dlm(&spec, design.t_len, rng)?;
    let x = gen_covariates(design, rng);
    let mut y = Vec::with_capacity(design.t_len);
    for t in 0..design.t_len {
        let psi = design.alpha
            + (0..design.dim)
                .map(|j| x[(t, j)] * path.component(t, j))
                .sum::<f64>();
        let p = logistic(psi).clamp(0.0, 1.0);
        let draw = Binomial::new(design.n_trials, p)
            .expect("probability in [0, 1]")
            .sample(rng);
        y.push(draw);
    }
    let series = BinomLogitSeries::new(y, vec![design.n_trials; design.t_len], x, design.observed_flags())?;
    Ok((series, path, design.alpha))
}

/// One negative-binomial draw with dispersion `d` and mean `m`, via the
/// gamma-Poisson mixture.
pub fn sample_negbin<R: Rng + ?Sized>(dispersion: f64, mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let rate = Gamma::new(dispersion, mean / dispersion)
        .expect("positive parameters")
        .sample(rng);
    if rate <= 1e-300 {
        return 0;
    }
    Poisson::new(rate).expect("positive rate").sample(rng) as u64
}

/// Simulated count series plus the generating truth (path, alpha, d).
pub fn gen_negbin_series<R: Rng + ?Sized>(
    design: &BenchDesign,
    rng: &mut R,
) -> Result<(NegBinSeries, LatentPath, f64, f64), SynthError> {
    design.validate()?;
    let spec = design.state_spec()?;
    let path = simulate_dlm(&spec, design.t_len, rng)?;
    let x = gen_covariates(design, rng);
    let mut y = Vec::with_capacity(design.t_len);
    for t in 0..design.t_len {
        let lambda = design.alpha
            + (0..design.dim)
                .map(|j| x[(t, j)] * path.component(t, j))
                .sum::<f64>();
        y.push(sample_negbin(design.dispersion, lambda.exp(), rng));
    }
    let series = NegBinSeries::new(y, x, design.observed_flags())?;
    Ok((series, path, design.alpha, design.dispersion))
}

/// Truth record stored next to generated datasets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub design: BenchDesign,
    pub true_alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_dispersion: Option<f64>,
    /// `true_path[t][i]`.
    pub true_path: Vec<Vec<f64>>,
    /// True linear predictor per step (log-odds or log-mean).
    pub true_predictor: Vec<f64>,
}

impl DatasetMetadata {
    pub fn new(
        design: &BenchDesign,
        path: &LatentPath,
        x: &DMatrix<f64>,
        alpha: f64,
        dispersion: Option<f64>,
    ) -> Self {
        let true_path: Vec<Vec<f64>> = (0..path.len())
            .map(|t| (0..path.dim()).map(|i| path.component(t, i)).collect())
            .collect();
        let true_predictor = (0..path.len())
            .map(|t| {
                alpha
                    + (0..path.dim())
                        .map(|j| x[(t, j)] * path.component(t, j))
                        .sum::<f64>()
            })
            .collect();
        Self {
            design: design.clone(),
            true_alpha: alpha,
            true_dispersion: dispersion,
            true_path,
            true_predictor,
        }
    }
}

/// Writes `t,y,n,x1..xP,observed` rows; the response cell is blank at
/// unobserved steps and the `n` column is blank for count data.
pub fn write_dataset_csv(
    path: &Path,
    y: &[u64],
    n: Option<&[u64]>,
    x: &DMatrix<f64>,
    observed: &[bool],
) -> Result<(), SynthError> {
    let mut file = std::fs::File::create(path)?;
    let p = x.ncols();
    let headers: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
    writeln!(file, "t,y,n,{},observed", headers.join(","))?;
    for t in 0..y.len() {
        let y_cell = if observed[t] {
            y[t].to_string()
        } else {
            String::new()
        };
        let n_cell = n.map_or(String::new(), |n| n[t].to_string());
        let xs: Vec<String> = (0..p).map(|j| format!("{}", x[(t, j)])).collect();
        writeln!(
            file,
            "{},{},{},{},{}",
            t + 1,
            y_cell,
            n_cell,
            xs.join(","),
            observed[t]
        )?;
    }
    Ok(())
}

/// Writes the sidecar truth/metadata JSON.
pub fn write_metadata_json(path: &Path, meta: &DatasetMetadata) -> Result<(), SynthError> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(file, meta)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::stats::{mean, sample_variance};

    #[test]
    fn covariates_respect_correlation_factor() {
        let mut rng = stream_rng(70, 0);
        for (corr, expect) in [
            (CovariateCorrelation::Custom(0.0), 0.0),
            (CovariateCorrelation::High, 0.9),
        ] {
            let design = BenchDesign {
                correlation: corr,
                t_len: 10_000,
                ..BenchDesign::binomial(10_000, 1, corr, 0)
            };
            let x = gen_covariates(&design, &mut rng);
            let a: Vec<f64> = (0..x.nrows()).map(|t| x[(t, 0)]).collect();
            let b: Vec<f64> = (0..x.nrows()).map(|t| x[(t, 1)]).collect();
            let (ma, mb) = (mean(&a), mean(&b));
            let cov: f64 = a
                .iter()
                .zip(&b)
                .map(|(u, v)| (u - ma) * (v - mb))
                .sum::<f64>()
                / (a.len() - 1) as f64;
            let corr_hat = cov / (sample_variance(&a) * sample_variance(&b)).sqrt();
            assert!(
                (corr_hat - expect).abs() < 0.02,
                "factor {expect}: got {corr_hat}"
            );
        }
    }

    #[test]
    fn covariates_reproducible_by_seed() {
        let design = BenchDesign::binomial(50, 1, CovariateCorrelation::Low, 9);
        let a = gen_covariates(&design, &mut stream_rng(design.seed, 0));
        let b = gen_covariates(&design, &mut stream_rng(design.seed, 0));
        assert_eq!(a, b);
    }

    #[test]
    fn binomial_balanced_at_zero_predictor() {
        // Degenerate design (w ~ 0, alpha 0, path ~ 0) pins psi at 0.
        let mut design = BenchDesign::binomial(20_000, 1, CovariateCorrelation::Low, 10);
        design.w_diag = 1e-12;
        let (series, _, _) = gen_binom_series(&design, &mut stream_rng(10, 0)).unwrap();
        let rate = series.y.iter().sum::<u64>() as f64 / series.y.len() as f64;
        assert!((rate - 0.5).abs() < 0.02, "rate {rate}");
    }

    #[test]
    fn binomial_single_trial_is_binary() {
        let design = BenchDesign::binomial(500, 1, CovariateCorrelation::Low, 11);
        let (series, _, _) = gen_binom_series(&design, &mut stream_rng(11, 0)).unwrap();
        assert!(series.y.iter().all(|&y| y <= 1));
        assert!(series.n.iter().all(|&n| n == 1));
    }

    #[test]
    fn binomial_saturates_at_large_alpha() {
        let mut design = BenchDesign::binomial(300, 20, CovariateCorrelation::Low, 12);
        design.alpha = 12.0;
        design.w_diag = 1e-10;
        let (series, _, _) = gen_binom_series(&design, &mut stream_rng(12, 0)).unwrap();
        let m = series.y.iter().sum::<u64>() as f64 / series.y.len() as f64;
        assert!(m > 19.5, "mean {m}");
    }

    #[test]
    fn negbin_targets_mean_counts() {
        for &target in &[10.0, 100.0] {
            let mut design =
                BenchDesign::negbin(10_000, target, CovariateCorrelation::Low, 13);
            design.w_diag = 1e-12; // zero latent variance: mean = exp(alpha)
            let (series, _, alpha, _) =
                gen_negbin_series(&design, &mut stream_rng(13, 0)).unwrap();
            assert!((alpha - target.ln()).abs() < 1e-12);
            let m = series.y.iter().sum::<u64>() as f64 / series.y.len() as f64;
            assert!(
                (m - target).abs() < 0.1 * target,
                "target {target}: mean {m}"
            );
        }
    }

    #[test]
    fn negbin_poisson_limit() {
        // Var/mean -> 1 + mean/d ~ 1 as d grows.
        let mut rng = stream_rng(14, 0);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| sample_negbin(1e4, 10.0, &mut rng) as f64)
            .collect();
        let ratio = sample_variance(&xs) / mean(&xs);
        assert!((ratio - 1.0).abs() < 0.05, "var/mean {ratio}");
    }

    #[test]
    fn negbin_overdispersion_matches_formula() {
        let mut rng = stream_rng(15, 0);
        let (d, m) = (4.0, 10.0);
        let xs: Vec<f64> = (0..40_000)
            .map(|_| sample_negbin(d, m, &mut rng) as f64)
            .collect();
        let expect = m + m * m / d; // 35
        let v = sample_variance(&xs);
        assert!((v - expect).abs() < 0.06 * expect, "variance {v}");
    }

    #[test]
    fn designs_round_trip_their_invariants() {
        for seed in 0..5 {
            let design = BenchDesign::binomial(200, 20, CovariateCorrelation::High, seed);
            let (series, path, _) =
                gen_binom_series(&design, &mut stream_rng(seed, 0)).unwrap();
            assert_eq!(series.len(), 200);
            assert_eq!(path.len(), 200);
            assert!(series.y.iter().zip(&series.n).all(|(&y, &n)| y <= n));

            let mut nb = BenchDesign::negbin(200, 10.0, CovariateCorrelation::Low, seed);
            nb.missing = Some((50, 80));
            let (series, _, _, d) = gen_negbin_series(&nb, &mut stream_rng(seed, 1)).unwrap();
            assert_eq!(d, 4.0);
            assert!(series.observed[49] && !series.observed[50] && !series.observed[79]);
            assert!(series.observed[80]);
        }
    }

    #[test]
    fn design_validation() {
        let mut design = BenchDesign::binomial(100, 1, CovariateCorrelation::Low, 0);
        design.phi_diag = 1.0;
        assert!(design.validate().is_err());
        let mut design = BenchDesign::binomial(100, 1, CovariateCorrelation::Custom(1.0), 0);
        assert!(design.validate().is_err());
        design = BenchDesign::binomial(100, 0, CovariateCorrelation::Low, 0);
        assert!(design.validate().is_err());
        design = BenchDesign::binomial(100, 1, CovariateCorrelation::Low, 0);
        design.missing = Some((90, 120));
        assert!(design.validate().is_err());
    }

    #[test]
    fn dataset_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let design = BenchDesign::binomial(30, 20, CovariateCorrelation::Low, 21);
        let mut rng = stream_rng(design.seed, 0);
        let (series, path, alpha) = gen_binom_series(&design, &mut rng).unwrap();
        let csv_path = dir.path().join("dataset.csv");
        write_dataset_csv(
            &csv_path,
            &series.y,
            Some(&series.n),
            &series.x,
            &series.observed,
        )
        .unwrap();
        let meta = DatasetMetadata::new(&design, &path, &series.x, alpha, None);
        let meta_path = dir.path().join("dataset.meta.json");
        write_metadata_json(&meta_path, &meta).unwrap();

        let text = std::fs::read_to_string(&csv_path).unwrap();
        assert!(text.starts_with("t,y,n,x1,x2,observed"));
        assert_eq!(text.lines().count(), 31);
        let parsed: DatasetMetadata =
            serde_json::from_str(&std::fs::read_to_string(&meta_path).unwrap()).unwrap();
        assert_eq!(parsed.design, design);
        assert_eq!(parsed.true_path.len(), 30);
    }
}
