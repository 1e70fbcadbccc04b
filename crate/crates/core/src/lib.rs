//! # pg-dglm
//!
//! Posterior simulation for dynamic generalized linear models with
//! binomial-form likelihoods (dynamic binomial logistic regression and
//! dynamic negative-binomial regression).
//!
//! A Pólya-Gamma latent variable per time step turns the awkward
//! `exp(psi)^a / (1 + exp(psi))^b` likelihood kernel into the likelihood
//! of a Gaussian pseudo-datum, so the latent state path can be drawn
//! exactly with forward-filter backward-sampling. The crate provides:
//!
//! - [`pg`] — exact Pólya-Gamma variate generation and analytic moments;
//! - [`ffbs`] — Kalman forward filtering and backward sampling with
//!   per-step precisions and missing-data handling;
//! - [`models`] — the Gibbs samplers for both model families, with
//!   optional hyperparameter and dispersion estimation;
//! - [`diagnostics`] — effective sample size / effective sampling rate
//!   reporting over batches of chains;
//! - [`synth`] — synthetic benchmark data generators;
//! - [`cli`] — config-file driven `simulate` / `fit` / `benchmark`
//!   entry points used by the `pg-dglm` binary.
//!
//! Runnable walkthroughs live in the `examples/` directory; start with
//! `cargo run --release --example binomial_fit`.

pub mod cli;
pub mod diagnostics;
pub mod ffbs;
pub mod models;
pub mod pg;
pub mod rng;
pub mod stats;
pub mod synth;
