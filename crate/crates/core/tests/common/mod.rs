//! Shared test oracles, all independent of the library's filtering and
//! sampling code paths: a dense joint-Gaussian solver for the latent
//! path posterior, a 1-D grid-quadrature posterior, and KS statistics.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pg_dglm::ffbs::{PseudoObservation, StateSpaceSpec};

/// Posterior of the whole path by brute force: assemble the joint
/// precision of `(beta_1..beta_T | z)` and invert it.
pub struct DenseOracle {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub dim: usize,
    pub t_len: usize,
}

impl DenseOracle {
    pub fn build(spec: &StateSpaceSpec, obs: &[PseudoObservation]) -> Self {
        let p = spec.dim();
        let t_len = obs.len();
        let n = p * t_len;
        let mut precision = DMatrix::<f64>::zeros(n, n);
        let mut shift = DVector::<f64>::zeros(n);

        let q0 = spec
            .c0()
            .clone()
            .try_inverse()
            .expect("invertible initial covariance");
        let qw = spec
            .w()
            .clone()
            .try_inverse()
            .expect("invertible innovation covariance");
        let phi = spec.phi();

        let add_block = |m: &mut DMatrix<f64>, r: usize, c: usize, b: &DMatrix<f64>| {
            for i in 0..p {
                for j in 0..p {
                    m[(r * p + i, c * p + j)] += b[(i, j)];
                }
            }
        };

        // Initial state: beta_1 ~ N(m0, C0).
        add_block(&mut precision, 0, 0, &q0);
        let eta0 = &q0 * spec.m0();
        for i in 0..p {
            shift[i] += eta0[i];
        }

        // Evolution terms: beta_t - Phi beta_{t-1} - (I - Phi) mu ~ N(0, W).
        let drift = (DMatrix::<f64>::identity(p, p) - phi) * spec.mu();
        let qw_phi = &qw * phi;
        let phit_qw = phi.transpose() * &qw;
        let phit_qw_phi = phi.transpose() * &qw_phi;
        for t in 1..t_len {
            add_block(&mut precision, t, t, &qw);
            add_block(&mut precision, t - 1, t - 1, &phit_qw_phi);
            add_block(&mut precision, t - 1, t, &(-&phit_qw));
            add_block(&mut precision, t, t - 1, &(-&qw_phi));
            let eta_t = &qw * &drift;
            let eta_prev = phi.transpose() * &eta_t;
            for i in 0..p {
                shift[t * p + i] += eta_t[i];
                shift[(t - 1) * p + i] -= eta_prev[i];
            }
        }

        // Observation terms: z_t = x_t' beta_t + N(0, 1/omega_t).
        for (t, ob) in obs.iter().enumerate() {
            if !ob.observed || ob.precision <= 0.0 {
                continue;
            }
            for i in 0..p {
                for j in 0..p {
                    precision[(t * p + i, t * p + j)] += ob.precision * ob.x[i] * ob.x[j];
                }
            }
            for i in 0..p {
                shift[t * p + i] += ob.precision * ob.z * ob.x[i];
            }
        }

        let cov = precision.try_inverse().expect("posterior precision invertible");
        let mean = &cov * shift;
        Self {
            mean,
            cov,
            dim: p,
            t_len,
        }
    }

    /// Smoothed marginal mean of `beta_t`.
    pub fn marginal_mean(&self, t: usize) -> DVector<f64> {
        DVector::from_fn(self.dim, |i, _| self.mean[t * self.dim + i])
    }

    /// Smoothed marginal covariance of `beta_t`.
    pub fn marginal_cov(&self, t: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| {
            self.cov[(t * self.dim + i, t * self.dim + j)]
        })
    }
}

/// Filtered moments by brute force: the dense oracle applied to the
/// truncated observation record ending at `t`.
pub fn dense_filtered_moments(
    spec: &StateSpaceSpec,
    obs: &[PseudoObservation],
    t: usize,
) -> (DVector<f64>, DMatrix<f64>) {
    let oracle = DenseOracle::build(spec, &obs[..=t]);
    (oracle.marginal_mean(t), oracle.marginal_cov(t))
}

/// Grid posterior for the one-step binomial model
/// `y ~ Binom(n, logistic(beta))`, `beta ~ N(m, v)`.
pub struct GridPosterior {
    pub xs: Vec<f64>,
    pub cdf: Vec<f64>,
}

impl GridPosterior {
    pub fn binomial(y: u64, n: u64, prior_mean: f64, prior_var: f64, points: usize) -> Self {
        let sd = prior_var.sqrt();
        let lo = prior_mean - 10.0 * sd;
        let hi = prior_mean + 10.0 * sd;
        let xs: Vec<f64> = (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect();
        let softplus = |x: f64| {
            if x > 0.0 {
                x + (-x).exp().ln_1p()
            } else {
                x.exp().ln_1p()
            }
        };
        let log_density: Vec<f64> = xs
            .iter()
            .map(|&b| {
                y as f64 * b - n as f64 * softplus(b) - 0.5 * (b - prior_mean).powi(2) / prior_var
            })
            .collect();
        let max = log_density.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let density: Vec<f64> = log_density.iter().map(|l| (l - max).exp()).collect();

        // Trapezoid CDF, normalized to end exactly at 1.
        let mut cdf = vec![0.0; points];
        for i in 1..points {
            cdf[i] = cdf[i - 1] + 0.5 * (density[i] + density[i - 1]) * (xs[i] - xs[i - 1]);
        }
        let total = cdf[points - 1];
        for c in cdf.iter_mut() {
            *c /= total;
        }
        Self { xs, cdf }
    }

    pub fn cdf_at(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= *self.xs.last().unwrap() {
            return 1.0;
        }
        let idx = self.xs.partition_point(|&g| g <= x);
        let (x0, x1) = (self.xs[idx - 1], self.xs[idx]);
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        c0 + (c1 - c0) * (x - x0) / (x1 - x0)
    }
}

/// One-sample KS statistic against a reference CDF.
pub fn ks_one_sample(draws: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = draws.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in draws.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Two-sample KS statistic.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < n && j < m {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}
