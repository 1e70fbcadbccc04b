//! Kalman forward filtering and backward sampling for the conditionally
//! Gaussian model produced by the augmentation:
//!
//! ```text
//! z_t    = x_t' beta_t + nu_t,          nu_t ~ N(0, 1 / omega_t)
//! beta_t = mu + Phi (beta_{t-1} - mu) + eps_t,   eps_t ~ N(0, W)
//! ```
//!
//! Observations are scalar per step with precision `omega_t`; steps with
//! precision zero (missing data) get a predict-only update. The first
//! state uses `(m0, C0)` directly.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FfbsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix {0} must be symmetric positive semidefinite")]
    NotPositiveSemidefinite(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("empty observation sequence")]
    EmptySeries,
    #[error("pseudo-observation precision must be positive and finite, got {0}")]
    InvalidPrecision(f64),
    #[error("numerical breakdown at step {step}: {what}")]
    NumericalBreakdown { step: usize, what: &'static str },
}

/// AR(1) latent state dynamics plus initial-state moments.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceSpec {
    dim: usize,
    mu: DVector<f64>,
    phi: DMatrix<f64>,
    w: DMatrix<f64>,
    m0: DVector<f64>,
    c0: DMatrix<f64>,
}

impl StateSpaceSpec {
    pub fn new(
        mu: DVector<f64>,
        phi: DMatrix<f64>,
        w: DMatrix<f64>,
        m0: DVector<f64>,
        c0: DMatrix<f64>,
    ) -> Result<Self, FfbsError> {
        let dim = mu.len();
        for (mat, name) in [(&phi, "phi"), (&w, "w"), (&c0, "c0")] {
            if mat.nrows() != dim || mat.ncols() != dim {
                return Err(FfbsError::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {dim}x{dim}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
        }
        if m0.len() != dim {
            return Err(FfbsError::DimensionMismatch(format!(
                "m0 has length {}, expected {dim}",
                m0.len()
            )));
        }
        for (ok, name) in [
            (mu.iter().all(|v| v.is_finite()), "mu"),
            (phi.iter().all(|v| v.is_finite()), "phi"),
            (w.iter().all(|v| v.is_finite()), "w"),
            (m0.iter().all(|v| v.is_finite()), "m0"),
            (c0.iter().all(|v| v.is_finite()), "c0"),
        ] {
            if !ok {
                return Err(FfbsError::NonFinite(name));
            }
        }
        check_psd(&w, "w")?;
        check_psd(&c0, "c0")?;
        Ok(Self {
            dim,
            mu,
            phi,
            w,
            m0,
            c0,
        })
    }

    /// Diagonal AR(1) constructor: `Phi = diag(phi)`, `W = diag(w)`.
    pub fn ar1_diagonal(
        mu: &[f64],
        phi: &[f64],
        w: &[f64],
        m0: &[f64],
        c0: &[f64],
    ) -> Result<Self, FfbsError> {
        let dim = mu.len();
        if [phi.len(), w.len(), m0.len(), c0.len()] != [dim; 4] {
            return Err(FfbsError::DimensionMismatch(
                "diagonal constructor slices must share one length".into(),
            ));
        }
        Self::new(
            DVector::from_column_slice(mu),
            DMatrix::from_diagonal(&DVector::from_column_slice(phi)),
            DMatrix::from_diagonal(&DVector::from_column_slice(w)),
            DVector::from_column_slice(m0),
            DMatrix::from_diagonal(&DVector::from_column_slice(c0)),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn m0(&self) -> &DVector<f64> {
        &self.m0
    }

    pub fn c0(&self) -> &DMatrix<f64> {
        &self.c0
    }

    pub fn phi_is_diagonal(&self) -> bool {
        is_diagonal(&self.phi)
    }

    pub fn w_is_diagonal(&self) -> bool {
        is_diagonal(&self.w)
    }

    pub(crate) fn set_mu_component(&mut self, i: usize, value: f64) {
        self.mu[i] = value;
    }

    pub(crate) fn set_phi_diag(&mut self, i: usize, value: f64) {
        self.phi[(i, i)] = value;
    }

    pub(crate) fn set_w_diag(&mut self, i: usize, value: f64) {
        self.w[(i, i)] = value;
    }

    /// Stationary covariance of the AR(1) process, solved by iterating
    /// `C <- Phi C Phi' + W`. Offered as a convenient `c0` choice; never
    /// imposed. `None` when the dynamics are not contractive.
    pub fn stationary_covariance(&self) -> Option<DMatrix<f64>> {
        let mut c = self.w.clone();
        for _ in 0..20_000 {
            let next = &self.phi * &c * self.phi.transpose() + &self.w;
            let delta = (&next - &c).abs().max();
            c = next;
            if !delta.is_finite() {
                return None;
            }
            if delta < 1e-14 * (1.0 + c.abs().max()) {
                return Some(c);
            }
        }
        None
    }
}

fn is_diagonal(m: &DMatrix<f64>) -> bool {
    m.row_iter()
        .enumerate()
        .all(|(i, row)| row.iter().enumerate().all(|(j, &v)| i == j || v == 0.0))
}

fn check_psd(m: &DMatrix<f64>, name: &'static str) -> Result<(), FfbsError> {
    let skew = (m - m.transpose()).abs().max();
    if skew > 1e-10 * (1.0 + m.abs().max()) {
        return Err(FfbsError::NotPositiveSemidefinite(name));
    }
    let eigs = m.clone().symmetric_eigenvalues();
    let floor = -1e-10 * (1.0 + m.abs().max());
    if eigs.iter().any(|&e| e < floor) {
        return Err(FfbsError::NotPositiveSemidefinite(name));
    }
    Ok(())
}

/// One time step of the pseudo-data sequence fed to the filter.
/// Missing steps carry precision zero and no fabricated value.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoObservation {
    pub z: f64,
    pub precision: f64,
    pub x: DVector<f64>,
    pub observed: bool,
}

impl PseudoObservation {
    pub fn observed(z: f64, precision: f64, x: DVector<f64>) -> Result<Self, FfbsError> {
        if !(precision > 0.0) || !precision.is_finite() {
            return Err(FfbsError::InvalidPrecision(precision));
        }
        if !z.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(FfbsError::NonFinite("pseudo-observation"));
        }
        Ok(Self {
            z,
            precision,
            x,
            observed: true,
        })
    }

    pub fn missing(x: DVector<f64>) -> Result<Self, FfbsError> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(FfbsError::NonFinite("pseudo-observation"));
        }
        Ok(Self {
            z: 0.0,
            precision: 0.0,
            x,
            observed: false,
        })
    }
}

/// Filtered and one-step-predicted moments from a forward pass.
#[derive(Debug, Clone)]
pub struct FilterResult {
    /// Filtered means `m_t`.
    pub means: Vec<DVector<f64>>,
    /// Filtered covariances `C_t` (kept exactly symmetric).
    pub covs: Vec<DMatrix<f64>>,
    /// One-step-ahead state means `a_t` (equals `m0` at `t = 1`).
    pub pred_means: Vec<DVector<f64>>,
    /// One-step-ahead state covariances `R_t` (equals `C0` at `t = 1`).
    pub pred_covs: Vec<DMatrix<f64>>,
    /// Sum of observed-step predictive log densities.
    pub pred_loglik: f64,
}

impl FilterResult {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }
}

/// A sampled latent trajectory `beta_1..beta_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPath {
    states: Vec<DVector<f64>>,
}

impl LatentPath {
    pub fn new(states: Vec<DVector<f64>>) -> Self {
        Self { states }
    }

    /// Path holding `value` at every step; handy as a chain initializer.
    pub fn constant(t_len: usize, value: &DVector<f64>) -> Self {
        Self {
            states: vec![value.clone(); t_len],
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    pub fn state(&self, t: usize) -> &DVector<f64> {
        &self.states[t]
    }

    pub fn component(&self, t: usize, i: usize) -> f64 {
        self.states[t][i]
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Lower factor `F` with `F F' = m` for symmetric PSD `m`. Cholesky
/// first; on failure (semidefinite or slightly indefinite from roundoff)
/// an eigenvalue square root with negative eigenvalues clamped to zero.
fn psd_sqrt(m: &DMatrix<f64>, step: usize) -> Result<DMatrix<f64>, FfbsError> {
    if let Some(chol) = Cholesky::new(m.clone()) {
        return Ok(chol.l());
    }
    let eig = m.clone().symmetric_eigen();
    let floor = -1e-8 * (1.0 + m.abs().max());
    if eig.eigenvalues.iter().any(|&e| e < floor) {
        return Err(FfbsError::NumericalBreakdown {
            step,
            what: "covariance not positive semidefinite",
        });
    }
    let sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| e.max(0.0).sqrt()));
    Ok(&eig.eigenvectors * sqrt)
}

fn sample_mvn<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    step: usize,
    rng: &mut R,
) -> Result<DVector<f64>, FfbsError> {
    let factor = psd_sqrt(cov, step)?;
    let z = DVector::from_fn(mean.len(), |_, _| rng.sample(StandardNormal));
    Ok(mean + factor * z)
}

/// Exact Gaussian filtering of the pseudo-data model. Steps with
/// `observed = false` (or precision zero) are predict-only.
pub fn forward_filter(
    spec: &StateSpaceSpec,
    obs: &[PseudoObservation],
) -> Result<FilterResult, FfbsError> {
    if obs.is_empty() {
        return Err(FfbsError::EmptySeries);
    }
    let t_len = obs.len();
    let p = spec.dim;
    let mut means = Vec::with_capacity(t_len);
    let mut covs: Vec<DMatrix<f64>> = Vec::with_capacity(t_len);
    let mut pred_means = Vec::with_capacity(t_len);
    let mut pred_covs = Vec::with_capacity(t_len);
    let mut pred_loglik = 0.0;

    for (t, ob) in obs.iter().enumerate() {
        if ob.x.len() != p {
            return Err(FfbsError::DimensionMismatch(format!(
                "covariate row at step {t} has length {}, expected {p}",
                ob.x.len()
            )));
        }
        let (a, mut r) = if t == 0 {
            (spec.m0.clone(), spec.c0.clone())
        } else {
            let a = &spec.mu + &spec.phi * (&means[t - 1] - &spec.mu);
            let r = &spec.phi * &covs[t - 1] * spec.phi.transpose() + &spec.w;
            (a, r)
        };
        symmetrize(&mut r);

        let (m, mut c) = if ob.observed && ob.precision > 0.0 {
            let rx = &r * &ob.x;
            let forecast = ob.x.dot(&a);
            let q = ob.x.dot(&rx) + 1.0 / ob.precision;
            if !(q > 0.0) || !q.is_finite() {
                return Err(FfbsError::NumericalBreakdown {
                    step: t,
                    what: "non-positive forecast variance",
                });
            }
            let gain = &rx / q;
            let innovation = ob.z - forecast;
            pred_loglik +=
                -0.5 * ((2.0 * std::f64::consts::PI * q).ln() + innovation * innovation / q);
            let m = &a + &gain * innovation;
            let c = &r - (&gain * gain.transpose()) * q;
            (m, c)
        } else {
            (a.clone(), r.clone())
        };
        symmetrize(&mut c);
        if m.iter().any(|v| !v.is_finite()) || c.iter().any(|v| !v.is_finite()) {
            return Err(FfbsError::NumericalBreakdown {
                step: t,
                what: "non-finite filtered moments",
            });
        }

        pred_means.push(a);
        pred_covs.push(r);
        means.push(m);
        covs.push(c);
    }

    Ok(FilterResult {
        means,
        covs,
        pred_means,
        pred_covs,
        pred_loglik,
    })
}

/// One exact joint draw of the state path given the filter output,
/// conditioning each `beta_t` on the sampled `beta_{t+1}`.
pub fn backward_sample<R: Rng + ?Sized>(
    spec: &StateSpaceSpec,
    filt: &FilterResult,
    rng: &mut R,
) -> Result<LatentPath, FfbsError> {
    let t_len = filt.len();
    if t_len == 0 {
        return Err(FfbsError::EmptySeries);
    }
    let mut states = vec![DVector::zeros(spec.dim); t_len];
    states[t_len - 1] = sample_mvn(&filt.means[t_len - 1], &filt.covs[t_len - 1], t_len - 1, rng)?;

    for t in (0..t_len - 1).rev() {
        let c_t = &filt.covs[t];
        let r_next = &filt.pred_covs[t + 1];
        // Gain J = C_t Phi' R_{t+1}^{-1}, via Cholesky solve of R_{t+1}.
        let chol = Cholesky::new(r_next.clone()).ok_or(FfbsError::NumericalBreakdown {
            step: t + 1,
            what: "predicted covariance not positive definite",
        })?;
        let rhs = &spec.phi * c_t; // gain' = R^{-1} (Phi C_t)
        let gain = chol.solve(&rhs).transpose();
        let mean = &filt.means[t] + &gain * (&states[t + 1] - &filt.pred_means[t + 1]);
        let mut cov = c_t - &gain * r_next * gain.transpose();
        symmetrize(&mut cov);
        states[t] = sample_mvn(&mean, &cov, t, rng)?;
    }
    Ok(LatentPath::new(states))
}

/// Simulate a latent trajectory: `beta_1 ~ N(m0, C0)`, then the AR(1)
/// evolution equation.
pub fn simulate_dlm<R: Rng + ?Sized>(
    spec: &StateSpaceSpec,
    t_len: usize,
    rng: &mut R,
) -> Result<LatentPath, FfbsError> {
    if t_len == 0 {
        return Err(FfbsError::EmptySeries);
    }
    let c0_factor = psd_sqrt(&spec.c0, 0)?;
    let w_factor = psd_sqrt(&spec.w, 0)?;
    let mut states = Vec::with_capacity(t_len);
    let z0 = DVector::from_fn(spec.dim, |_, _| rng.sample(StandardNormal));
    states.push(&spec.m0 + &c0_factor * z0);
    for _ in 1..t_len {
        let prev = states.last().expect("nonempty");
        let z = DVector::from_fn(spec.dim, |_, _| rng.sample(StandardNormal));
        states.push(&spec.mu + &spec.phi * (prev - &spec.mu) + &w_factor * z);
    }
    Ok(LatentPath::new(states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn scalar_spec(mu: f64, phi: f64, w: f64, m0: f64, c0: f64) -> StateSpaceSpec {
        StateSpaceSpec::ar1_diagonal(&[mu], &[phi], &[w], &[m0], &[c0]).unwrap()
    }

    #[test]
    fn single_step_conjugate_update() {
        // Equal prior and observation precision: posterior splits the
        // difference and halves the variance.
        let spec = scalar_spec(0.0, 1.0, 0.0, 0.0, 1.0);
        let obs =
            vec![PseudoObservation::observed(1.0, 1.0, DVector::from_element(1, 1.0)).unwrap()];
        let filt = forward_filter(&spec, &obs).unwrap();
        assert!((filt.means[0][0] - 0.5).abs() < 1e-12);
        assert!((filt.covs[0][(0, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn all_missing_reproduces_prior_marginals() {
        let spec = scalar_spec(2.0, 0.8, 0.5, -1.0, 0.3);
        let obs: Vec<PseudoObservation> = (0..6)
            .map(|_| PseudoObservation::missing(DVector::from_element(1, 1.0)).unwrap())
            .collect();
        let filt = forward_filter(&spec, &obs).unwrap();
        // Direct prior recursion.
        let (mut m, mut c) = (-1.0f64, 0.3f64);
        for t in 0..6 {
            if t > 0 {
                m = 2.0 + 0.8 * (m - 2.0);
                c = 0.8 * 0.8 * c + 0.5;
            }
            assert!((filt.means[t][0] - m).abs() < 1e-12, "t={t}");
            assert!((filt.covs[t][(0, 0)] - c).abs() < 1e-12, "t={t}");
        }
        assert_eq!(filt.pred_loglik, 0.0);
    }

    #[test]
    fn missing_equals_vanishing_precision() {
        let spec = scalar_spec(0.3, 0.9, 0.2, 0.0, 1.0);
        let x = DVector::from_element(1, 1.0);
        let mixed = vec![
            PseudoObservation::observed(0.4, 2.0, x.clone()).unwrap(),
            PseudoObservation::missing(x.clone()).unwrap(),
            PseudoObservation::observed(-0.2, 1.5, x.clone()).unwrap(),
        ];
        let tiny = vec![
            mixed[0].clone(),
            PseudoObservation::observed(123.0, 1e-300, x.clone()).unwrap(),
            mixed[2].clone(),
        ];
        let fa = forward_filter(&spec, &mixed).unwrap();
        let fb = forward_filter(&spec, &tiny).unwrap();
        for t in 0..3 {
            assert!((fa.means[t][0] - fb.means[t][0]).abs() < 1e-9);
            assert!((fa.covs[t][(0, 0)] - fb.covs[t][(0, 0)]).abs() < 1e-9);
        }
    }

    #[test]
    fn covariances_stay_symmetric() {
        let mut rng = stream_rng(11, 0);
        let spec = StateSpaceSpec::ar1_diagonal(
            &[0.1, -0.2, 0.0],
            &[0.9, 0.5, -0.3],
            &[0.4, 0.2, 0.1],
            &[0.0; 3],
            &[1.0; 3],
        )
        .unwrap();
        let obs: Vec<PseudoObservation> = (0..40)
            .map(|t| {
                let x = DVector::from_fn(3, |_, _| rng.random::<f64>() - 0.5);
                if t % 5 == 0 {
                    PseudoObservation::missing(x).unwrap()
                } else {
                    PseudoObservation::observed(rng.random::<f64>(), 1.3, x).unwrap()
                }
            })
            .collect();
        let filt = forward_filter(&spec, &obs).unwrap();
        for c in filt.covs.iter().chain(filt.pred_covs.iter()) {
            assert!((c - c.transpose()).abs().max() < 1e-10);
        }
    }

    #[test]
    fn degenerate_random_walk_gives_constant_path() {
        // W -> 0 with Phi = I: the whole path collapses onto one value.
        let spec = scalar_spec(5.0, 1.0, 1e-18, 0.0, 1.0);
        let x = DVector::from_element(1, 1.0);
        let obs: Vec<PseudoObservation> = (0..5)
            .map(|_| PseudoObservation::observed(0.7, 1.0, x.clone()).unwrap())
            .collect();
        let filt = forward_filter(&spec, &obs).unwrap();
        let mut rng = stream_rng(12, 0);
        let path = backward_sample(&spec, &filt, &mut rng).unwrap();
        for t in 1..5 {
            assert!(
                (path.component(t, 0) - path.component(0, 0)).abs() < 1e-6,
                "step {t}"
            );
        }
    }

    #[test]
    fn backward_sample_deterministic_given_seed() {
        let spec = scalar_spec(0.0, 0.9, 0.3, 0.0, 1.0);
        let x = DVector::from_element(1, 1.0);
        let obs: Vec<PseudoObservation> = (0..8)
            .map(|t| PseudoObservation::observed(t as f64 * 0.1, 2.0, x.clone()).unwrap())
            .collect();
        let filt = forward_filter(&spec, &obs).unwrap();
        let a = backward_sample(&spec, &filt, &mut stream_rng(3, 7)).unwrap();
        let b = backward_sample(&spec, &filt, &mut stream_rng(3, 7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn simulate_zero_autocorrelation_is_iid() {
        let spec = scalar_spec(1.5, 0.0, 0.25, 1.5, 0.25);
        let mut rng = stream_rng(21, 0);
        let path = simulate_dlm(&spec, 100_000, &mut rng).unwrap();
        let xs: Vec<f64> = (0..path.len()).map(|t| path.component(t, 0)).collect();
        let m = crate::stats::mean(&xs);
        let v = crate::stats::sample_variance(&xs);
        let se_m = (0.25f64 / xs.len() as f64).sqrt();
        assert!((m - 1.5).abs() < 5.0 * se_m, "mean {m}");
        assert!((v - 0.25).abs() < 0.01, "variance {v}");
    }

    #[test]
    fn simulate_matches_design_autocorrelation() {
        // Phi = 0.95 I_2 under stationary initialization.
        let phi = 0.95;
        let w = 0.01;
        let c_stat = w / (1.0 - phi * phi);
        let spec = StateSpaceSpec::ar1_diagonal(
            &[0.0, 0.0],
            &[phi, phi],
            &[w, w],
            &[0.0, 0.0],
            &[c_stat, c_stat],
        )
        .unwrap();
        let mut rng = stream_rng(22, 0);
        let path = simulate_dlm(&spec, 100_000, &mut rng).unwrap();
        for i in 0..2 {
            let xs: Vec<f64> = (0..path.len()).map(|t| path.component(t, i)).collect();
            let m = crate::stats::mean(&xs);
            let num: f64 = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
            let den: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
            let rho1 = num / den;
            assert!((rho1 - phi).abs() < 0.01, "component {i}: rho1 {rho1}");
        }
    }

    #[test]
    fn simulate_degenerate_constant() {
        let spec = scalar_spec(0.0, 1.0, 0.0, 3.0, 0.0);
        let mut rng = stream_rng(23, 0);
        let path = simulate_dlm(&spec, 50, &mut rng).unwrap();
        for t in 0..50 {
            assert_eq!(path.component(t, 0), 3.0);
        }
    }

    #[test]
    fn stationary_covariance_helper() {
        let spec = scalar_spec(0.0, 0.95, 0.01, 0.0, 1.0);
        let c = spec.stationary_covariance().unwrap();
        assert!((c[(0, 0)] - 0.01 / (1.0 - 0.95f64 * 0.95)).abs() < 1e-10);
        let rw = scalar_spec(0.0, 1.0, 0.01, 0.0, 1.0);
        assert!(rw.stationary_covariance().is_none());
    }

    #[test]
    fn spec_validation_rejects_bad_input() {
        let bad_c0 = StateSpaceSpec::ar1_diagonal(&[0.0], &[0.9], &[0.1], &[0.0], &[-1.0]);
        assert!(bad_c0.is_err());
        let bad_w = StateSpaceSpec::new(
            DVector::zeros(2),
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.9, -0.9, 1.0]),
            DVector::zeros(2),
            DMatrix::identity(2, 2),
        );
        assert!(bad_w.is_err());
        let nan = StateSpaceSpec::ar1_diagonal(&[f64::NAN], &[0.9], &[0.1], &[0.0], &[1.0]);
        assert!(nan.is_err());
    }

    #[test]
    fn precision_validation() {
        let x = DVector::from_element(1, 1.0);
        assert!(PseudoObservation::observed(0.0, 0.0, x.clone()).is_err());
        assert!(PseudoObservation::observed(0.0, -1.0, x.clone()).is_err());
        assert!(PseudoObservation::observed(f64::NAN, 1.0, x).is_err());
    }

    #[test]
    fn runtime_scales_linearly_in_t() {
        let spec = StateSpaceSpec::ar1_diagonal(
            &[0.0, 0.0],
            &[0.9, 0.9],
            &[0.1, 0.1],
            &[0.0, 0.0],
            &[1.0, 1.0],
        )
        .unwrap();
        let mut rng = stream_rng(31, 0);
        let build = |t_len: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<PseudoObservation> {
            (0..t_len)
                .map(|_| {
                    let x = DVector::from_fn(2, |_, _| rng.random::<f64>());
                    PseudoObservation::observed(rng.random::<f64>(), 1.0, x).unwrap()
                })
                .collect()
        };
        let obs_short = build(6000, &mut rng);
        let obs_long = build(12_000, &mut rng);
        let time = |obs: &[PseudoObservation]| {
            let start = std::time::Instant::now();
            let filt = forward_filter(&spec, obs).unwrap();
            std::hint::black_box(&filt);
            start.elapsed().as_secs_f64()
        };
        // Interleaved repetitions, keeping the minimum of each, so load
        // from concurrently running tests hits both sides alike.
        let mut short = f64::INFINITY;
        let mut long = f64::INFINITY;
        for _ in 0..9 {
            short = short.min(time(&obs_short));
            long = long.min(time(&obs_long));
        }
        assert!(
            long / short < 2.5,
            "doubling T scaled runtime by {:.2}",
            long / short
        );
    }
}
