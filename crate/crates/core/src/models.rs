//! Gibbs samplers for dynamic binomial logistic regression and dynamic
//! negative-binomial regression.
//!
//! Both likelihoods share the binomial kernel
//! `exp(psi)^a / (1 + exp(psi))^b`; a Pólya-Gamma draw per observed step
//! cancels the denominator, leaving a Gaussian pseudo-datum
//! `z_t = kappa_t / omega_t` with precision `omega_t`. One sweep updates
//! in order: latent `omega` -> pseudo-data -> state path via FFBS ->
//! static intercept -> AR hyperparameters -> dispersion (negative
//! binomial only). Each conditional is exact; the dispersion update is a
//! random-walk Metropolis step on the log scale.

use crate::ffbs::{
    backward_sample, forward_filter, FfbsError, LatentPath, PseudoObservation, StateSpaceSpec,
};
use crate::pg::{PgError, PgParams, PgSampler};
use crate::rng::stream_rng;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

/// Smallest omega accepted when forming pseudo-data.
const MIN_OMEGA: f64 = 1e-300;

/// Proposal cap for the truncated-normal rejection step on phi.
const TRUNCATION_CAP: usize = 10_000;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Pg(#[from] PgError),
    #[error(transparent)]
    Ffbs(#[from] FfbsError),
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("omega at step {t} is {omega}, below the {MIN_OMEGA:e} floor")]
    OmegaUnderflow { t: usize, omega: f64 },
    #[error("truncated draw of phi[{component}] exceeded {TRUNCATION_CAP} proposals")]
    TruncationCapExceeded { component: usize },
}

// ---------------------------------------------------------------------------
// Series types

/// Binomial time series: `y_t` successes out of `n_t` trials.
#[derive(Debug, Clone)]
pub struct BinomLogitSeries {
    pub y: Vec<u64>,
    pub n: Vec<u64>,
    /// T x P covariate rows (first column constant 1 when the intercept
    /// is modeled as a state component).
    pub x: DMatrix<f64>,
    pub observed: Vec<bool>,
}

impl BinomLogitSeries {
    pub fn new(
        y: Vec<u64>,
        n: Vec<u64>,
        x: DMatrix<f64>,
        observed: Vec<bool>,
    ) -> Result<Self, ModelError> {
        let t_len = y.len();
        if n.len() != t_len || observed.len() != t_len || x.nrows() != t_len {
            return Err(ModelError::InvalidSeries(format!(
                "length mismatch: y {t_len}, n {}, x rows {}, observed {}",
                n.len(),
                x.nrows(),
                observed.len()
            )));
        }
        if t_len == 0 {
            return Err(ModelError::InvalidSeries("empty series".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidSeries("non-finite covariate".into()));
        }
        for t in 0..t_len {
            if observed[t] {
                if n[t] == 0 {
                    return Err(ModelError::InvalidSeries(format!(
                        "n must be >= 1 at observed step {t}"
                    )));
                }
                if y[t] > n[t] {
                    return Err(ModelError::InvalidSeries(format!(
                        "y = {} exceeds n = {} at step {t}",
                        y[t], n[t]
                    )));
                }
            }
        }
        Ok(Self { y, n, x, observed })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }
}

/// Count time series for the negative-binomial model.
#[derive(Debug, Clone)]
pub struct NegBinSeries {
    pub y: Vec<u64>,
    pub x: DMatrix<f64>,
    pub observed: Vec<bool>,
}

impl NegBinSeries {
    pub fn new(y: Vec<u64>, x: DMatrix<f64>, observed: Vec<bool>) -> Result<Self, ModelError> {
        let t_len = y.len();
        if observed.len() != t_len || x.nrows() != t_len {
            return Err(ModelError::InvalidSeries(format!(
                "length mismatch: y {t_len}, x rows {}, observed {}",
                x.nrows(),
                observed.len()
            )));
        }
        if t_len == 0 {
            return Err(ModelError::InvalidSeries("empty series".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidSeries("non-finite covariate".into()));
        }
        Ok(Self { y, x, observed })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }
}

/// Either model family behind one interface.
#[derive(Debug, Clone)]
pub enum SeriesData {
    Binomial(BinomLogitSeries),
    NegBinomial(NegBinSeries),
}

impl SeriesData {
    pub fn len(&self) -> usize {
        match self {
            SeriesData::Binomial(s) => s.len(),
            SeriesData::NegBinomial(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            SeriesData::Binomial(s) => s.dim(),
            SeriesData::NegBinomial(s) => s.dim(),
        }
    }

    pub fn observed(&self) -> &[bool] {
        match self {
            SeriesData::Binomial(s) => &s.observed,
            SeriesData::NegBinomial(s) => &s.observed,
        }
    }

    pub fn covariates(&self) -> &DMatrix<f64> {
        match self {
            SeriesData::Binomial(s) => &s.x,
            SeriesData::NegBinomial(s) => &s.x,
        }
    }
}

/// One step's augmentation record: likelihood exponents, the latent
/// precision and the linear predictors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedObservation {
    /// Success exponent `a_t`.
    pub a: f64,
    /// Kernel exponent `b_t = a_t + d_t`.
    pub b: f64,
    /// `kappa_t = a_t - b_t / 2`, the Gaussian pseudo-datum numerator.
    pub kappa: f64,
    /// Latent Pólya-Gamma precision.
    pub omega: f64,
    /// Log-odds.
    pub psi: f64,
    /// Log-mean (negative-binomial path only).
    pub lambda: Option<f64>,
}

/// Binomial-logit augmentation: `a = y`, `b = n`, `kappa = y - n/2`.
pub fn binom_augment(y: u64, n: u64, psi: f64, omega: f64) -> AugmentedObservation {
    let a = y as f64;
    let b = n as f64;
    AugmentedObservation {
        a,
        b,
        kappa: a - 0.5 * b,
        omega,
        psi,
        lambda: None,
    }
}

/// Negative-binomial augmentation: `a = y`, `b = y + d`,
/// `kappa = (y - d)/2`, `psi = lambda - ln d`.
pub fn nb_augment(y: u64, dispersion: f64, lambda: f64, omega: f64) -> AugmentedObservation {
    let a = y as f64;
    let b = a + dispersion;
    AugmentedObservation {
        a,
        b,
        kappa: a - 0.5 * b,
        omega,
        psi: lambda - dispersion.ln(),
        lambda: Some(lambda),
    }
}

// ---------------------------------------------------------------------------
// Priors

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrior {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianPrior {
    pub fn new(mean: f64, variance: f64) -> Result<Self, ModelError> {
        if !(variance > 0.0) || !variance.is_finite() || !mean.is_finite() {
            return Err(ModelError::InvalidConfig(format!(
                "Gaussian prior needs finite mean and positive variance, got ({mean}, {variance})"
            )));
        }
        Ok(Self { mean, variance })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseGammaPrior {
    pub shape: f64,
    pub scale: f64,
}

impl InverseGammaPrior {
    pub fn new(shape: f64, scale: f64) -> Result<Self, ModelError> {
        if !(shape > 0.0) || !(scale > 0.0) {
            return Err(ModelError::InvalidConfig(format!(
                "inverse-gamma prior needs positive shape and scale, got ({shape}, {scale})"
            )));
        }
        Ok(Self { shape, scale })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DispersionPrior {
    /// Improper flat prior on `(0, inf)`.
    ImproperUniform,
    /// Log-normal with the given location and scale on `ln d`.
    LogNormal { location: f64, scale: f64 },
}

/// Which AR parameters get drawn each sweep (all diagonal).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArEstimation {
    pub mu: bool,
    pub phi: bool,
    pub w: bool,
}

impl ArEstimation {
    pub fn all() -> Self {
        Self {
            mu: true,
            phi: true,
            w: true,
        }
    }

    pub fn any(&self) -> bool {
        self.mu || self.phi || self.w
    }
}

/// Priors and estimation switches for everything beyond the state path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperPriorSpec {
    pub estimate_ar: ArEstimation,
    pub mu_prior: GaussianPrior,
    /// Truncated to `(-1, 1)` by rejection.
    pub phi_prior: GaussianPrior,
    pub w_prior: InverseGammaPrior,
    pub estimate_alpha: bool,
    pub alpha_prior: GaussianPrior,
    pub estimate_dispersion: bool,
    pub dispersion_prior: DispersionPrior,
}

impl Default for HyperPriorSpec {
    fn default() -> Self {
        Self {
            estimate_ar: ArEstimation::default(),
            mu_prior: GaussianPrior {
                mean: 0.0,
                variance: 1.0,
            },
            phi_prior: GaussianPrior {
                mean: 0.5,
                variance: 0.09,
            },
            w_prior: InverseGammaPrior {
                shape: 3.0,
                scale: 0.2,
            },
            estimate_alpha: false,
            alpha_prior: GaussianPrior {
                mean: 0.0,
                variance: 1.0,
            },
            estimate_dispersion: false,
            dispersion_prior: DispersionPrior::ImproperUniform,
        }
    }
}

/// Full Gibbs state for one chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub path: LatentPath,
    /// Latent precisions; `NaN` sentinel at unobserved steps.
    pub omegas: Vec<f64>,
    pub alpha: f64,
    pub spec: StateSpaceSpec,
    pub dispersion: f64,
}

impl ChainState {
    /// Start a chain at the prior mean path with placeholder latents.
    pub fn init(
        data: &SeriesData,
        spec: StateSpaceSpec,
        alpha: f64,
        dispersion: f64,
    ) -> Result<Self, ModelError> {
        if data.dim() != spec.dim() {
            return Err(ModelError::InvalidConfig(format!(
                "covariate dimension {} does not match state dimension {}",
                data.dim(),
                spec.dim()
            )));
        }
        if !(dispersion > 0.0) {
            return Err(ModelError::InvalidConfig(format!(
                "dispersion must be positive, got {dispersion}"
            )));
        }
        let t_len = data.len();
        let omegas = data
            .observed()
            .iter()
            .map(|&obs| if obs { 1.0 } else { f64::NAN })
            .collect();
        Ok(Self {
            path: LatentPath::constant(t_len, spec.m0()),
            omegas,
            alpha,
            spec,
            dispersion,
        })
    }
}

fn linear_predictor(x: &DMatrix<f64>, path: &LatentPath, alpha: f64, t: usize) -> f64 {
    let mut acc = alpha;
    for j in 0..x.ncols() {
        acc += x[(t, j)] * path.component(t, j);
    }
    acc
}

// ---------------------------------------------------------------------------
// Per-family conditionals

/// `kappa_t = y_t - n_t / 2`, elementwise.
pub fn binom_kappa(series: &BinomLogitSeries) -> Vec<f64> {
    series
        .y
        .iter()
        .zip(&series.n)
        .map(|(&y, &n)| y as f64 - 0.5 * n as f64)
        .collect()
}

/// Draws `omega_t ~ PG(n_t, alpha + x_t' beta_t)` at observed steps,
/// leaving unobserved entries untouched.
pub fn binom_draw_omegas<R: Rng + ?Sized>(
    series: &BinomLogitSeries,
    path: &LatentPath,
    alpha: f64,
    sampler: &PgSampler,
    omegas: &mut [f64],
    rng: &mut R,
) -> Result<(), ModelError> {
    for t in 0..series.len() {
        if !series.observed[t] {
            continue;
        }
        let psi = linear_predictor(&series.x, path, alpha, t);
        let params = PgParams::new(series.n[t] as f64, psi)?;
        omegas[t] = sampler.sample(params, rng)?;
    }
    Ok(())
}

/// Pseudo-data `z_t = kappa_t / omega_t - alpha` with precision
/// `omega_t`; the intercept is subtracted so the state model explains
/// only `x_t' beta_t`.
pub fn binom_pseudo_obs(
    series: &BinomLogitSeries,
    omegas: &[f64],
    alpha: f64,
) -> Result<Vec<PseudoObservation>, ModelError> {
    let mut out = Vec::with_capacity(series.len());
    for t in 0..series.len() {
        let x = DVector::from_fn(series.dim(), |j, _| series.x[(t, j)]);
        if series.observed[t] {
            let omega = omegas[t];
            if !(omega >= MIN_OMEGA) || !omega.is_finite() {
                return Err(ModelError::OmegaUnderflow { t, omega });
            }
            let aug = binom_augment(series.y[t], series.n[t], 0.0, omega);
            out.push(PseudoObservation::observed(
                aug.kappa / omega - alpha,
                omega,
                x,
            )?);
        } else {
            out.push(PseudoObservation::missing(x)?);
        }
    }
    Ok(out)
}

/// Draws `omega_t ~ PG(y_t + d, lambda_t - ln d)` at observed steps.
pub fn nb_draw_omegas<R: Rng + ?Sized>(
    series: &NegBinSeries,
    path: &LatentPath,
    alpha: f64,
    dispersion: f64,
    sampler: &PgSampler,
    omegas: &mut [f64],
    rng: &mut R,
) -> Result<(), ModelError> {
    for t in 0..series.len() {
        if !series.observed[t] {
            continue;
        }
        let lambda = linear_predictor(&series.x, path, alpha, t);
        let aug = nb_augment(series.y[t], dispersion, lambda, 0.0);
        let params = PgParams::new(aug.b, aug.psi)?;
        omegas[t] = sampler.sample(params, rng)?;
    }
    Ok(())
}

/// Pseudo-data `z_t = (y_t - d) / (2 omega_t) + ln d - alpha` with
/// precision `omega_t`.
pub fn nb_pseudo_obs(
    series: &NegBinSeries,
    omegas: &[f64],
    alpha: f64,
    dispersion: f64,
) -> Result<Vec<PseudoObservation>, ModelError> {
    let log_d = dispersion.ln();
    let mut out = Vec::with_capacity(series.len());
    for t in 0..series.len() {
        let x = DVector::from_fn(series.dim(), |j, _| series.x[(t, j)]);
        if series.observed[t] {
            let omega = omegas[t];
            if !(omega >= MIN_OMEGA) || !omega.is_finite() {
                return Err(ModelError::OmegaUnderflow { t, omega });
            }
            let aug = nb_augment(series.y[t], dispersion, 0.0, omega);
            out.push(PseudoObservation::observed(
                aug.kappa / omega + log_d - alpha,
                omega,
                x,
            )?);
        } else {
            out.push(PseudoObservation::missing(x)?);
        }
    }
    Ok(out)
}

/// Exact Gaussian draw for the static intercept: precision-weighted
/// least squares on residuals `r_t = z_t + alpha - x_t' beta_t`.
pub fn draw_alpha<R: Rng + ?Sized>(
    residuals: &[f64],
    precisions: &[f64],
    prior: &GaussianPrior,
    rng: &mut R,
) -> f64 {
    let mut precision = 1.0 / prior.variance;
    let mut weighted = prior.mean / prior.variance;
    for (&r, &w) in residuals.iter().zip(precisions) {
        precision += w;
        weighted += w * r;
    }
    let mean = weighted / precision;
    let z: f64 = rng.sample(StandardNormal);
    mean + z / precision.sqrt()
}

/// One inverse-gamma draw via `scale / Gamma(shape, 1)`.
fn draw_inverse_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    let g = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
    scale / g
}

/// Per-component sweep over the diagonal AR parameters: `W_ii` from its
/// inverse-gamma conditional, then `mu_i` and `phi_ii` from their
/// Gaussian conditionals, `phi_ii` truncated to `(-1, 1)` by rejection.
pub fn draw_ar_hyperparams<R: Rng + ?Sized>(
    path: &LatentPath,
    priors: &HyperPriorSpec,
    spec: &mut StateSpaceSpec,
    rng: &mut R,
) -> Result<(), ModelError> {
    if !priors.estimate_ar.any() {
        return Ok(());
    }
    if !spec.phi_is_diagonal() || !spec.w_is_diagonal() {
        return Err(ModelError::InvalidConfig(
            "AR estimation requires diagonal phi and w".into(),
        ));
    }
    let t_len = path.len();
    for i in 0..spec.dim() {
        let mut mu = spec.mu()[i];
        let mut phi = spec.phi()[(i, i)];
        let mut w = spec.w()[(i, i)];

        if priors.estimate_ar.w {
            let mut sq = 0.0;
            for t in 1..t_len {
                let e = path.component(t, i) - mu - phi * (path.component(t - 1, i) - mu);
                sq += e * e;
            }
            let shape = priors.w_prior.shape + 0.5 * (t_len.saturating_sub(1)) as f64;
            let scale = priors.w_prior.scale + 0.5 * sq;
            w = draw_inverse_gamma(shape, scale, rng);
            spec.set_w_diag(i, w);
        }

        if priors.estimate_ar.mu {
            // beta_t - phi beta_{t-1} = (1 - phi) mu + e_t
            let s = 1.0 - phi;
            let mut sum_d = 0.0;
            for t in 1..t_len {
                sum_d += path.component(t, i) - phi * path.component(t - 1, i);
            }
            let prior = &priors.mu_prior;
            let precision = 1.0 / prior.variance + (t_len - 1) as f64 * s * s / w;
            let mean = (prior.mean / prior.variance + s * sum_d / w) / precision;
            let z: f64 = rng.sample(StandardNormal);
            mu = mean + z / precision.sqrt();
            spec.set_mu_component(i, mu);
        }

        if priors.estimate_ar.phi {
            let mut sum_sq = 0.0;
            let mut sum_cross = 0.0;
            for t in 1..t_len {
                let prev = path.component(t - 1, i) - mu;
                let cur = path.component(t, i) - mu;
                sum_sq += prev * prev;
                sum_cross += prev * cur;
            }
            let prior = &priors.phi_prior;
            let precision = 1.0 / prior.variance + sum_sq / w;
            let mean = (prior.mean / prior.variance + sum_cross / w) / precision;
            let sd = precision.sqrt().recip();
            let mut accepted = None;
            for _ in 0..TRUNCATION_CAP {
                let z: f64 = rng.sample(StandardNormal);
                let cand = mean + sd * z;
                if cand.abs() < 1.0 {
                    accepted = Some(cand);
                    break;
                }
            }
            phi = accepted.ok_or(ModelError::TruncationCapExceeded { component: i })?;
            spec.set_phi_diag(i, phi);
        }
    }
    Ok(())
}

/// `ln 1 + e^x` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Negative-binomial log likelihood of the observed steps given the path
/// and intercept, as a function of the dispersion.
pub fn nb_log_likelihood(
    series: &NegBinSeries,
    path: &LatentPath,
    alpha: f64,
    dispersion: f64,
) -> f64 {
    let log_d = dispersion.ln();
    let lg_d = libm::lgamma(dispersion);
    let mut total = 0.0;
    for t in 0..series.len() {
        if !series.observed[t] {
            continue;
        }
        let y = series.y[t] as f64;
        let psi = linear_predictor(&series.x, path, alpha, t) - log_d;
        total += libm::lgamma(y + dispersion) - lg_d - libm::lgamma(y + 1.0) + y * psi
            - (y + dispersion) * softplus(psi);
    }
    total
}

/// Log target for the dispersion update on the `u = ln d` scale
/// (likelihood plus prior plus the change-of-variables term).
pub fn dispersion_log_target(
    series: &NegBinSeries,
    path: &LatentPath,
    alpha: f64,
    prior: &DispersionPrior,
    u: f64,
) -> f64 {
    let d = u.exp();
    let prior_term = match prior {
        // Flat on d: only the Jacobian of d = e^u survives.
        DispersionPrior::ImproperUniform => u,
        // Log-normal density in d times the Jacobian is a plain normal in u.
        DispersionPrior::LogNormal { location, scale } => {
            -0.5 * ((u - location) / scale).powi(2)
        }
    };
    nb_log_likelihood(series, path, alpha, d) + prior_term
}

/// One Gaussian random-walk Metropolis step for the dispersion on the
/// log scale. Returns the (possibly unchanged) value and whether the
/// proposal was accepted.
pub fn draw_dispersion<R: Rng + ?Sized>(
    series: &NegBinSeries,
    path: &LatentPath,
    alpha: f64,
    current: f64,
    prior: &DispersionPrior,
    step: f64,
    rng: &mut R,
) -> Result<(f64, bool), ModelError> {
    if !(current > 0.0) {
        return Err(ModelError::InvalidConfig(format!(
            "dispersion must be positive, got {current}"
        )));
    }
    let u = current.ln();
    let z: f64 = rng.sample(StandardNormal);
    let proposal_u = u + step * z;
    let log_ratio = dispersion_log_target(series, path, alpha, prior, proposal_u)
        - dispersion_log_target(series, path, alpha, prior, u);
    let accept = log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio;
    if accept {
        Ok((proposal_u.exp(), true))
    } else {
        Ok((current, false))
    }
}

// ---------------------------------------------------------------------------
// Full sweep and chain driver

/// Runtime knobs for a sweep.
#[derive(Debug, Clone)]
pub struct GibbsControls {
    pub pg: PgSampler,
    /// Random-walk scale for the dispersion update (log scale).
    pub dispersion_step: f64,
}

impl Default for GibbsControls {
    fn default() -> Self {
        Self {
            pg: PgSampler::default(),
            dispersion_step: 0.3,
        }
    }
}

/// What a sweep reported back; used for proposal adaptation.
#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOutcome {
    pub dispersion_accepted: Option<bool>,
}

/// One full Gibbs sweep in the fixed order
/// omega -> pseudo-data -> path -> alpha -> AR hyperparameters -> d.
pub fn gibbs_step<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &SeriesData,
    priors: &HyperPriorSpec,
    controls: &GibbsControls,
    rng: &mut R,
) -> Result<SweepOutcome, ModelError> {
    let mut outcome = SweepOutcome::default();

    let pseudo = match data {
        SeriesData::Binomial(series) => {
            binom_draw_omegas(
                series,
                &state.path,
                state.alpha,
                &controls.pg,
                &mut state.omegas,
                rng,
            )?;
            binom_pseudo_obs(series, &state.omegas, state.alpha)?
        }
        SeriesData::NegBinomial(series) => {
            nb_draw_omegas(
                series,
                &state.path,
                state.alpha,
                state.dispersion,
                &controls.pg,
                &mut state.omegas,
                rng,
            )?;
            nb_pseudo_obs(series, &state.omegas, state.alpha, state.dispersion)?
        }
    };

    let filt = forward_filter(&state.spec, &pseudo)?;
    state.path = backward_sample(&state.spec, &filt, rng)?;

    if priors.estimate_alpha {
        let mut residuals = Vec::new();
        let mut precisions = Vec::new();
        let x = data.covariates();
        for (t, ob) in pseudo.iter().enumerate() {
            if !ob.observed {
                continue;
            }
            // z_t + alpha - x_t' beta_t, with the fresh path.
            let fitted = linear_predictor(x, &state.path, 0.0, t);
            residuals.push(ob.z + state.alpha - fitted);
            precisions.push(ob.precision);
        }
        state.alpha = draw_alpha(&residuals, &precisions, &priors.alpha_prior, rng);
    }

    if priors.estimate_ar.any() {
        draw_ar_hyperparams(&state.path, priors, &mut state.spec, rng)?;
    }

    if priors.estimate_dispersion {
        if let SeriesData::NegBinomial(series) = data {
            let (d, accepted) = draw_dispersion(
                series,
                &state.path,
                state.alpha,
                state.dispersion,
                &priors.dispersion_prior,
                controls.dispersion_step,
                rng,
            )?;
            state.dispersion = d;
            outcome.dispersion_accepted = Some(accepted);
        }
    }

    Ok(outcome)
}

/// Chain schedule: total sweeps, burn-in discarded, thinning stride and
/// the seed/stream pair identifying this chain's random stream.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub stream: u64,
}

impl ChainConfig {
    fn validate(&self) -> Result<(), ModelError> {
        if self.iterations <= self.burn_in {
            return Err(ModelError::InvalidConfig(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(ModelError::InvalidConfig("thin must be >= 1".into()));
        }
        Ok(())
    }

    pub fn stored_draws(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }
}

/// Initial values for a chain.
#[derive(Debug, Clone)]
pub struct ChainInit {
    pub spec: StateSpaceSpec,
    pub alpha: f64,
    pub dispersion: f64,
}

/// Post-burn-in draws plus phase timings.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub t_len: usize,
    pub dim: usize,
    pub stored: usize,
    /// `stored x (t_len * dim)` row-major; within a draw, t-major then
    /// component.
    pub betas: Vec<f64>,
    pub alphas: Option<Vec<f64>>,
    pub mus: Option<Vec<f64>>,
    pub phis: Option<Vec<f64>>,
    pub ws: Option<Vec<f64>>,
    pub dispersions: Option<Vec<f64>>,
    pub burnin_seconds: f64,
    /// The ESR denominator: wall-clock spent producing post-burn-in draws.
    pub sampling_seconds: f64,
    /// Final proposal step for the dispersion update (frozen after burn-in).
    pub dispersion_step: f64,
}

impl ChainOutput {
    /// Stored chain of `beta[t][i]` (zero-based indices).
    pub fn beta_chain(&self, i: usize, t: usize) -> Vec<f64> {
        let width = self.t_len * self.dim;
        (0..self.stored)
            .map(|s| self.betas[s * width + t * self.dim + i])
            .collect()
    }
}

/// Runs one chain: burn-in with proposal adaptation, then recording.
/// Partial output is discarded if any sweep fails.
pub fn run_chain(
    data: &SeriesData,
    priors: &HyperPriorSpec,
    init: &ChainInit,
    controls: &GibbsControls,
    cfg: &ChainConfig,
) -> Result<ChainOutput, ModelError> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, cfg.stream);
    let mut state = ChainState::init(data, init.spec.clone(), init.alpha, init.dispersion)?;
    let mut controls = controls.clone();

    let t_len = data.len();
    let dim = data.dim();
    let stored_target = cfg.stored_draws();
    let mut betas = Vec::with_capacity(stored_target * t_len * dim);
    let estimate_d =
        priors.estimate_dispersion && matches!(data, SeriesData::NegBinomial(_));
    let mut alphas = priors.estimate_alpha.then(|| Vec::with_capacity(stored_target));
    let mut mus = priors.estimate_ar.mu.then(|| Vec::with_capacity(stored_target * dim));
    let mut phis = priors.estimate_ar.phi.then(|| Vec::with_capacity(stored_target * dim));
    let mut ws = priors.estimate_ar.w.then(|| Vec::with_capacity(stored_target * dim));
    let mut dispersions = estimate_d.then(|| Vec::with_capacity(stored_target));

    // Windowed acceptance tracking for the burn-in dispersion tuner.
    const TUNE_WINDOW: usize = 50;
    let mut window_accepts = 0usize;
    let mut window_total = 0usize;

    let start = Instant::now();
    let mut burnin_seconds = 0.0;

    for iter in 0..cfg.iterations {
        let outcome = gibbs_step(&mut state, data, priors, &controls, &mut rng)?;

        if iter < cfg.burn_in {
            if let Some(accepted) = outcome.dispersion_accepted {
                window_accepts += accepted as usize;
                window_total += 1;
                if window_total == TUNE_WINDOW {
                    let rate = window_accepts as f64 / window_total as f64;
                    if rate < 0.2 {
                        controls.dispersion_step =
                            (controls.dispersion_step * 0.7).max(1e-3);
                    } else if rate > 0.5 {
                        controls.dispersion_step =
                            (controls.dispersion_step * 1.4).min(10.0);
                    }
                    window_accepts = 0;
                    window_total = 0;
                }
            }
            if iter + 1 == cfg.burn_in {
                burnin_seconds = start.elapsed().as_secs_f64();
            }
            continue;
        }

        if (iter - cfg.burn_in) % cfg.thin != 0 {
            continue;
        }
        for t in 0..t_len {
            for i in 0..dim {
                betas.push(state.path.component(t, i));
            }
        }
        if let Some(v) = alphas.as_mut() {
            v.push(state.alpha);
        }
        if let Some(v) = mus.as_mut() {
            v.extend((0..dim).map(|i| state.spec.mu()[i]));
        }
        if let Some(v) = phis.as_mut() {
            v.extend((0..dim).map(|i| state.spec.phi()[(i, i)]));
        }
        if let Some(v) = ws.as_mut() {
            v.extend((0..dim).map(|i| state.spec.w()[(i, i)]));
        }
        if let Some(v) = dispersions.as_mut() {
            v.push(state.dispersion);
        }
    }
    let total_seconds = start.elapsed().as_secs_f64();
    if cfg.burn_in == 0 {
        burnin_seconds = 0.0;
    }

    Ok(ChainOutput {
        t_len,
        dim,
        stored: stored_target,
        betas,
        alphas,
        mus,
        phis,
        ws,
        dispersions,
        burnin_seconds,
        sampling_seconds: total_seconds - burnin_seconds,
        dispersion_step: controls.dispersion_step,
    })
}
