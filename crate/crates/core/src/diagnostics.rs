//! Effective sample size and effective sampling rate reporting.
//!
//! For a stored chain of `M` draws,
//! `ESS = M / (1 + 2 sum_{k=1}^{l} rho_k)`, with the lag cutoff `l`
//! chosen either by a fixed bound or (the default) by truncating at the
//! first lag where paired autocorrelation sums go non-positive. The
//! effective sampling rate divides ESS by the seconds spent producing
//! the post-burn-in draws; benchmark summaries average over batches and
//! report the median over components.

use crate::stats::{mean, median};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("lag {lag} out of range for chain of length {len}")]
    LagOutOfRange { lag: usize, len: usize },
    #[error("chain is degenerate (zero variance), autocorrelation undefined")]
    DegenerateChain,
    #[error("chain too short: {0} draws (need at least 100)")]
    ChainTooShort(usize),
    #[error("mismatched dimensions: {0}")]
    MismatchedDimensions(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed report file: {0}")]
    MalformedReport(String),
}

/// Rule for picking the lag cutoff in the ESS sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LagCutoff {
    /// Sum autocorrelations up to a fixed lag.
    Fixed(usize),
    /// Truncate before the first adjacent pair `rho_k + rho_{k+1} <= 0`.
    InitialPositiveSequence,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EssConfig {
    pub cutoff: LagCutoff,
    /// Hard upper bound on scanned lags, as a fraction of the chain length.
    pub max_lag_fraction: f64,
}

impl Default for EssConfig {
    fn default() -> Self {
        Self {
            cutoff: LagCutoff::InitialPositiveSequence,
            max_lag_fraction: 0.3,
        }
    }
}

/// Biased (1/M-normalized) sample autocovariance at lag `k`.
pub fn autocovariance(chain: &[f64], k: usize) -> Result<f64, DiagnosticsError> {
    let m = chain.len();
    if k >= m {
        return Err(DiagnosticsError::LagOutOfRange { lag: k, len: m });
    }
    let mu = mean(chain);
    let sum: f64 = (0..m - k)
        .map(|t| (chain[t] - mu) * (chain[t + k] - mu))
        .sum();
    Ok(sum / m as f64)
}

/// Lag-`k` autocorrelation; errors on constant chains.
pub fn autocorrelation(chain: &[f64], k: usize) -> Result<f64, DiagnosticsError> {
    let var = autocovariance(chain, 0)?;
    if var <= 0.0 || !var.is_finite() {
        return Err(DiagnosticsError::DegenerateChain);
    }
    Ok(autocovariance(chain, k)? / var)
}

/// Effective sample size, clamped to `(0, 1.05 M]`.
pub fn ess(chain: &[f64], cfg: &EssConfig) -> Result<f64, DiagnosticsError> {
    let m = chain.len();
    if m < 100 {
        return Err(DiagnosticsError::ChainTooShort(m));
    }
    let var = autocovariance(chain, 0)?;
    if var <= 0.0 || !var.is_finite() {
        return Err(DiagnosticsError::DegenerateChain);
    }
    let mu = mean(chain);
    let rho = |k: usize| -> f64 {
        let sum: f64 = (0..m - k)
            .map(|t| (chain[t] - mu) * (chain[t + k] - mu))
            .sum();
        sum / (m as f64 * var)
    };
    let hard_cap = ((m as f64 * cfg.max_lag_fraction) as usize).clamp(1, m - 1);

    let mut acf_sum = 0.0;
    match cfg.cutoff {
        LagCutoff::Fixed(l) => {
            for k in 1..=l.min(hard_cap) {
                acf_sum += rho(k);
            }
        }
        LagCutoff::InitialPositiveSequence => {
            let mut k = 1;
            while k < hard_cap {
                let pair = rho(k) + rho(k + 1);
                if pair <= 0.0 {
                    break;
                }
                acf_sum += pair;
                k += 2;
            }
        }
    }

    let tau = 1.0 + 2.0 * acf_sum;
    let cap = 1.05 * m as f64;
    if tau <= 0.0 {
        // Anti-correlated ("superefficient") chains: the formula turns
        // negative, so report the documented clamp value.
        return Ok(cap);
    }
    Ok((m as f64 / tau).min(cap))
}

/// One benchmark batch: post-burn-in component chains plus the seconds
/// spent producing them.
#[derive(Debug, Clone)]
pub struct BatchChains {
    /// `chains[c][draw]`, one inner vector per reported component.
    pub chains: Vec<Vec<f64>>,
    /// Post-burn-in sampling seconds (the ESR denominator).
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsrRow {
    /// State component index (1-based in reports).
    pub component: usize,
    /// Time index (1-based in reports).
    pub t: usize,
    pub mean_ess: f64,
    pub mean_esr: f64,
}

/// Per-component batch-averaged ESS/ESR plus the median-ESR summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsrReport {
    pub rows: Vec<EsrRow>,
    pub median_esr: f64,
    pub total_seconds: f64,
}

/// Builds the batch-averaged report. `labels[c] = (component, t)` names
/// each chain; every batch must carry the same component layout.
pub fn esr_report(
    batches: &[BatchChains],
    labels: &[(usize, usize)],
    cfg: &EssConfig,
) -> Result<EsrReport, DiagnosticsError> {
    if batches.is_empty() {
        return Err(DiagnosticsError::MismatchedDimensions(
            "need at least one batch".into(),
        ));
    }
    let n_comp = labels.len();
    for (b, batch) in batches.iter().enumerate() {
        if batch.chains.len() != n_comp {
            return Err(DiagnosticsError::MismatchedDimensions(format!(
                "batch {b} has {} chains, labels name {n_comp}",
                batch.chains.len()
            )));
        }
    }

    let mut rows = Vec::with_capacity(n_comp);
    for (c, &(component, t)) in labels.iter().enumerate() {
        let mut ess_values = Vec::with_capacity(batches.len());
        let mut esr_values = Vec::with_capacity(batches.len());
        for batch in batches {
            let e = ess(&batch.chains[c], cfg)?;
            ess_values.push(e);
            esr_values.push(e / batch.seconds);
        }
        rows.push(EsrRow {
            component,
            t,
            mean_ess: mean(&ess_values),
            mean_esr: mean(&esr_values),
        });
    }

    let medians: Vec<f64> = rows.iter().map(|r| r.mean_esr).collect();
    Ok(EsrReport {
        median_esr: median(&medians),
        total_seconds: batches.iter().map(|b| b.seconds).sum(),
        rows,
    })
}

impl EsrReport {
    /// Component rows as CSV followed by two summary lines
    /// (`median_esr`, `total_seconds`).
    pub fn write_csv(&self, path: &Path) -> Result<(), DiagnosticsError> {
        let mut file = std::fs::File::create(path)?;
        writeln!(file, "i,t,mean_ess,mean_esr")?;
        for row in &self.rows {
            writeln!(
                file,
                "{},{},{},{}",
                row.component, row.t, row.mean_ess, row.mean_esr
            )?;
        }
        writeln!(file, "median_esr,{}", self.median_esr)?;
        writeln!(file, "total_seconds,{}", self.total_seconds)?;
        Ok(())
    }

    /// Parses a file produced by [`EsrReport::write_csv`].
    pub fn read_csv(path: &Path) -> Result<Self, DiagnosticsError> {
        let text = std::fs::read_to_string(path)?;
        let mut rows = Vec::new();
        let mut median_esr = None;
        let mut total_seconds = None;
        for (idx, line) in text.lines().enumerate() {
            if idx == 0 {
                if line != "i,t,mean_ess,mean_esr" {
                    return Err(DiagnosticsError::MalformedReport(format!(
                        "unexpected header: {line}"
                    )));
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let bad = |what: &str| DiagnosticsError::MalformedReport(format!("line {idx}: {what}"));
            match fields.as_slice() {
                ["median_esr", v] => {
                    median_esr = Some(v.parse().map_err(|_| bad("bad median"))?);
                }
                ["total_seconds", v] => {
                    total_seconds = Some(v.parse().map_err(|_| bad("bad seconds"))?);
                }
                [i, t, e, r] => rows.push(EsrRow {
                    component: i.parse().map_err(|_| bad("bad component"))?,
                    t: t.parse().map_err(|_| bad("bad t"))?,
                    mean_ess: e.parse().map_err(|_| bad("bad ess"))?,
                    mean_esr: r.parse().map_err(|_| bad("bad esr"))?,
                }),
                _ => return Err(bad("wrong field count")),
            }
        }
        Ok(Self {
            rows,
            median_esr: median_esr
                .ok_or_else(|| DiagnosticsError::MalformedReport("missing median_esr".into()))?,
            total_seconds: total_seconds.ok_or_else(|| {
                DiagnosticsError::MalformedReport("missing total_seconds".into())
            })?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn ar1_chain(coef: f64, m: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        let mut x = 0.0;
        let scale = (1.0 - coef * coef).sqrt();
        (0..m)
            .map(|_| {
                let e: f64 = rng.sample(StandardNormal);
                x = coef * x + scale * e;
                x
            })
            .collect()
    }

    #[test]
    fn alternating_chain_has_rho1_minus_one() {
        let chain: Vec<f64> = (0..1000)
            .map(|t| if t % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let rho1 = autocorrelation(&chain, 1).unwrap();
        assert!((rho1 + 1.0).abs() < 1e-2, "rho1 {rho1}");
    }

    #[test]
    fn white_noise_has_near_zero_rho1() {
        let chain = ar1_chain(0.0, 100_000, 1);
        let rho1 = autocorrelation(&chain, 1).unwrap();
        assert!(rho1.abs() < 0.01, "rho1 {rho1}");
    }

    #[test]
    fn ar1_autocorrelation_decays_geometrically() {
        let chain = ar1_chain(0.5, 200_000, 2);
        for k in 1..=6 {
            let rho = autocorrelation(&chain, k).unwrap();
            assert!((rho - 0.5f64.powi(k as i32)).abs() < 0.02, "lag {k}: {rho}");
        }
    }

    #[test]
    fn degenerate_chain_is_an_error() {
        let chain = vec![2.0; 500];
        assert!(matches!(
            autocorrelation(&chain, 1),
            Err(DiagnosticsError::DegenerateChain)
        ));
        assert!(matches!(
            ess(&chain, &EssConfig::default()),
            Err(DiagnosticsError::DegenerateChain)
        ));
    }

    #[test]
    fn iid_chain_ess_near_m() {
        let chain = ar1_chain(0.0, 10_000, 3);
        let e = ess(&chain, &EssConfig::default()).unwrap();
        let m = chain.len() as f64;
        assert!(e > 0.9 * m && e <= 1.05 * m, "ESS {e}");
    }

    #[test]
    fn ar1_half_ess_one_third() {
        let chain = ar1_chain(0.5, 100_000, 4);
        let e = ess(&chain, &EssConfig::default()).unwrap();
        let ratio = e / chain.len() as f64;
        assert!((ratio - 1.0 / 3.0).abs() < 0.05, "ESS/M {ratio}");
    }

    #[test]
    fn alternating_chain_clamps_high() {
        let chain: Vec<f64> = (0..1000)
            .map(|t| if t % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let cfg = EssConfig {
            cutoff: LagCutoff::Fixed(1),
            ..EssConfig::default()
        };
        let e = ess(&chain, &cfg).unwrap();
        assert!((e - 1.05 * 1000.0).abs() < 1e-9, "ESS {e}");
    }

    #[test]
    fn ess_monotone_in_autocorrelation() {
        let mut last = f64::INFINITY;
        for (i, &coef) in [0.0, 0.3, 0.6, 0.9].iter().enumerate() {
            let chain = ar1_chain(coef, 100_000, 10 + i as u64);
            let e = ess(&chain, &EssConfig::default()).unwrap();
            assert!(e < last, "coef {coef}: ESS {e} !< {last}");
            last = e;
        }
    }

    #[test]
    fn chain_too_short_is_an_error() {
        let chain = vec![0.0; 50];
        assert!(matches!(
            ess(&chain, &EssConfig::default()),
            Err(DiagnosticsError::ChainTooShort(50))
        ));
    }

    fn toy_batches(seconds: f64) -> (Vec<BatchChains>, Vec<(usize, usize)>) {
        let labels = vec![(1, 1), (1, 2), (2, 1)];
        let batches = (0..2)
            .map(|b| BatchChains {
                chains: (0..3)
                    .map(|c| ar1_chain(0.3, 2000, 100 + b * 3 + c))
                    .collect(),
                seconds,
            })
            .collect();
        (batches, labels)
    }

    #[test]
    fn esr_is_ess_per_second() {
        let chain = ar1_chain(0.0, 10_000, 20);
        let batch = BatchChains {
            chains: vec![chain.clone()],
            seconds: 10.0,
        };
        let report = esr_report(&[batch], &[(1, 1)], &EssConfig::default()).unwrap();
        let e = ess(&chain, &EssConfig::default()).unwrap();
        assert!((report.rows[0].mean_esr - e / 10.0).abs() < 1e-9);
        assert!(report.rows[0].mean_esr > 900.0, "about 1000/s for iid");
    }

    #[test]
    fn identical_batches_average_to_single_value() {
        let chain = ar1_chain(0.4, 5000, 21);
        let batch = BatchChains {
            chains: vec![chain.clone()],
            seconds: 2.0,
        };
        let one =
            esr_report(std::slice::from_ref(&batch), &[(1, 1)], &EssConfig::default()).unwrap();
        let two = esr_report(&[batch.clone(), batch], &[(1, 1)], &EssConfig::default()).unwrap();
        assert!((one.rows[0].mean_esr - two.rows[0].mean_esr).abs() < 1e-12);
        assert!((one.rows[0].mean_ess - two.rows[0].mean_ess).abs() < 1e-12);
    }

    #[test]
    fn median_is_middle_value() {
        let (batches, labels) = toy_batches(1.0);
        let report = esr_report(&batches, &labels, &EssConfig::default()).unwrap();
        let mut esrs: Vec<f64> = report.rows.iter().map(|r| r.mean_esr).collect();
        esrs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(report.median_esr, esrs[1]);
    }

    #[test]
    fn doubling_seconds_halves_esr() {
        let (fast, labels) = toy_batches(1.0);
        let (slow, _) = toy_batches(2.0);
        let a = esr_report(&fast, &labels, &EssConfig::default()).unwrap();
        let b = esr_report(&slow, &labels, &EssConfig::default()).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert!((ra.mean_esr - 2.0 * rb.mean_esr).abs() < 1e-10);
        }
        assert!((a.median_esr - 2.0 * b.median_esr).abs() < 1e-10);
    }

    #[test]
    fn batch_order_does_not_matter() {
        let (mut batches, labels) = toy_batches(1.5);
        let a = esr_report(&batches, &labels, &EssConfig::default()).unwrap();
        batches.reverse();
        let b = esr_report(&batches, &labels, &EssConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let (batches, _) = toy_batches(1.0);
        let err = esr_report(&batches, &[(1, 1)], &EssConfig::default());
        assert!(matches!(
            err,
            Err(DiagnosticsError::MismatchedDimensions(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let (batches, labels) = toy_batches(1.0);
        let report = esr_report(&batches, &labels, &EssConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("esr_report.csv");
        report.write_csv(&path).unwrap();
        let back = EsrReport::read_csv(&path).unwrap();
        assert_eq!(report, back);
    }
}
