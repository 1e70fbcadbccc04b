//! Oracle equivalence for the filter/sampler pair: filtered moments and
//! backward-sampled path moments must match a dense joint-Gaussian
//! solver that never touches the recursive code path.

mod common;

use common::{dense_filtered_moments, DenseOracle};
use nalgebra::{DMatrix, DVector};
use pg_dglm::ffbs::{
    backward_sample, forward_filter, simulate_dlm, PseudoObservation, StateSpaceSpec,
};
use pg_dglm::rng::stream_rng;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn random_spd(p: usize, scale: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal) * scale);
    &a * a.transpose() + DMatrix::identity(p, p) * (0.3 * scale * scale)
}

fn random_case(
    p: usize,
    t_len: usize,
    missing_mask: u8,
    seed: u64,
) -> (StateSpaceSpec, Vec<PseudoObservation>) {
    let mut rng = stream_rng(seed, 99);
    let mu = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let phi = DMatrix::from_fn(p, p, |_, _| 0.8 * (rng.random::<f64>() - 0.5));
    let w = random_spd(p, 0.7, &mut rng);
    let m0 = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let c0 = random_spd(p, 0.9, &mut rng);
    let spec = StateSpaceSpec::new(mu, phi, w, m0, c0).expect("valid random spec");
    let obs = (0..t_len)
        .map(|t| {
            let x = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
            if missing_mask >> (t % 8) & 1 == 1 {
                PseudoObservation::missing(x).unwrap()
            } else {
                let z = rng.sample::<f64, _>(StandardNormal) * 2.0;
                let precision = 0.1 + 4.9 * rng.random::<f64>();
                PseudoObservation::observed(z, precision, x).unwrap()
            }
        })
        .collect();
    (spec, obs)
}

fn assert_close(actual: f64, expect: f64, what: &str) {
    let tol = 1e-8 * (1.0 + expect.abs());
    assert!(
        (actual - expect).abs() <= tol,
        "{what}: {actual} vs {expect}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn filtered_moments_match_dense_oracle(
        p in 1usize..=3,
        t_len in 1usize..=6,
        missing_mask in 0u8..255,
        seed in 0u64..10_000,
    ) {
        let (spec, obs) = random_case(p, t_len, missing_mask, seed);
        let filt = forward_filter(&spec, &obs).unwrap();
        for t in 0..t_len {
            let (mean, cov) = dense_filtered_moments(&spec, &obs, t);
            for i in 0..p {
                assert_close(filt.means[t][i], mean[i], &format!("mean t={t} i={i}"));
                for j in 0..p {
                    assert_close(
                        filt.covs[t][(i, j)],
                        cov[(i, j)],
                        &format!("cov t={t} ({i},{j})"),
                    );
                }
            }
        }
    }
}

#[test]
fn fixed_case_t4_p2_matches_oracle() {
    let (spec, obs) = random_case(2, 4, 0b0100, 7);
    let filt = forward_filter(&spec, &obs).unwrap();
    for t in 0..4 {
        let (mean, cov) = dense_filtered_moments(&spec, &obs, t);
        for i in 0..2 {
            assert_close(filt.means[t][i], mean[i], "mean");
            for j in 0..2 {
                assert_close(filt.covs[t][(i, j)], cov[(i, j)], "cov");
            }
        }
    }
}

#[test]
fn backward_sampling_matches_smoothed_moments() {
    // T = 3, P = 1 fixed spec: empirical joint moments over many sampled
    // paths against the dense posterior, within Monte Carlo error.
    let spec = StateSpaceSpec::ar1_diagonal(&[0.5], &[0.8], &[0.4], &[-0.3], &[1.2]).unwrap();
    let x = DVector::from_element(1, 1.0);
    let obs = vec![
        PseudoObservation::observed(1.0, 2.0, x.clone()).unwrap(),
        PseudoObservation::missing(x.clone()).unwrap(),
        PseudoObservation::observed(-0.5, 0.7, x).unwrap(),
    ];
    let oracle = DenseOracle::build(&spec, &obs);
    let filt = forward_filter(&spec, &obs).unwrap();

    let n = 100_000;
    let mut rng = stream_rng(123, 0);
    let mut sums = [0.0f64; 3];
    let mut prods = [[0.0f64; 3]; 3];
    for _ in 0..n {
        let path = backward_sample(&spec, &filt, &mut rng).unwrap();
        let vals = [
            path.component(0, 0),
            path.component(1, 0),
            path.component(2, 0),
        ];
        for i in 0..3 {
            sums[i] += vals[i];
            for j in 0..3 {
                prods[i][j] += vals[i] * vals[j];
            }
        }
    }
    let nf = n as f64;
    for i in 0..3 {
        let mean = sums[i] / nf;
        let se = (oracle.cov[(i, i)] / nf).sqrt();
        assert!(
            (mean - oracle.mean[i]).abs() < 5.0 * se,
            "mean[{i}]: {mean} vs {} (se {se})",
            oracle.mean[i]
        );
        for j in 0..3 {
            let cov = prods[i][j] / nf - (sums[i] / nf) * (sums[j] / nf);
            let expect = oracle.cov[(i, j)];
            // Asymptotic SE of a Gaussian covariance estimate.
            let se_cov =
                ((oracle.cov[(i, i)] * oracle.cov[(j, j)] + expect * expect) / nf).sqrt();
            assert!(
                (cov - expect).abs() < 5.0 * se_cov,
                "cov[{i}][{j}]: {cov} vs {expect} (se {se_cov})"
            );
        }
    }
}

#[test]
fn simulated_paths_match_prior_oracle_moments() {
    // All-missing record: the smoothed posterior is the prior, so
    // simulate_dlm and the dense oracle must agree on marginal moments.
    let spec = StateSpaceSpec::ar1_diagonal(&[1.0], &[0.9], &[0.2], &[0.0], &[0.5]).unwrap();
    let x = DVector::from_element(1, 1.0);
    let obs: Vec<PseudoObservation> = (0..5)
        .map(|_| PseudoObservation::missing(x.clone()).unwrap())
        .collect();
    let oracle = DenseOracle::build(&spec, &obs);

    let n = 200_000;
    let mut rng = stream_rng(321, 0);
    let mut sums = [0.0f64; 5];
    let mut sq = [0.0f64; 5];
    for _ in 0..n {
        let path = simulate_dlm(&spec, 5, &mut rng).unwrap();
        for t in 0..5 {
            let v = path.component(t, 0);
            sums[t] += v;
            sq[t] += v * v;
        }
    }
    for t in 0..5 {
        let mean = sums[t] / n as f64;
        let var = sq[t] / n as f64 - mean * mean;
        let expect_mean = oracle.mean[t];
        let expect_var = oracle.cov[(t, t)];
        let se = (expect_var / n as f64).sqrt();
        assert!((mean - expect_mean).abs() < 5.0 * se, "t={t} mean");
        assert!(
            (var - expect_var).abs() < 5.0 * expect_var * (2.0 / n as f64).sqrt() + 1e-9,
            "t={t} var {var} vs {expect_var}"
        );
    }
}
