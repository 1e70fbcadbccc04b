//! Fit the dynamic binomial logistic model to a synthetic benchmark
//! design and report how well the pointwise 95% bands for the log-odds
//! cover the generating truth.
//!
//! ```bash
//! cargo run --release --example binomial_fit
//! ```

use pg_dglm::models::{
    run_chain, ChainConfig, ChainInit, GaussianPrior, GibbsControls, HyperPriorSpec, SeriesData,
};
use pg_dglm::rng::stream_rng;
use pg_dglm::stats::{mean, quantiles_of};
use pg_dglm::synth::{gen_binom_series, BenchDesign, CovariateCorrelation};

fn main() {
    let design = BenchDesign::binomial(300, 20, CovariateCorrelation::Low, 42);
    let mut rng = stream_rng(design.seed, 0);
    let (series, true_path, true_alpha) =
        gen_binom_series(&design, &mut rng).expect("valid design");
    let t_len = series.len();
    println!(
        "simulated {t_len} steps of Binom({}, logistic(alpha + x' beta)) data",
        design.n_trials
    );

    let true_psi: Vec<f64> = (0..t_len)
        .map(|t| {
            true_alpha
                + series.x[(t, 0)] * true_path.component(t, 0)
                + series.x[(t, 1)] * true_path.component(t, 1)
        })
        .collect();
    let x = series.x.clone();
    let data = SeriesData::Binomial(series);

    let init = ChainInit {
        spec: design.state_spec().expect("stationary spec"),
        alpha: 0.0,
        dispersion: 1.0,
    };
    let hyper = HyperPriorSpec {
        estimate_alpha: true,
        alpha_prior: GaussianPrior {
            mean: 0.0,
            variance: 4.0,
        },
        ..HyperPriorSpec::default()
    };
    let cfg = ChainConfig {
        iterations: 3_000,
        burn_in: 500,
        thin: 1,
        seed: 43,
        stream: 0,
    };
    println!(
        "running {} sweeps ({} burn-in)...",
        cfg.iterations, cfg.burn_in
    );
    let out = run_chain(&data, &hyper, &init, &GibbsControls::default(), &cfg)
        .expect("chain runs to completion");
    println!(
        "burn-in {:.2} s, sampling {:.2} s\n",
        out.burnin_seconds, out.sampling_seconds
    );

    let width = out.t_len * out.dim;
    let mut covered = 0;
    let mut show = Vec::new();
    for t in 0..t_len {
        let psis: Vec<f64> = (0..out.stored)
            .map(|s| {
                out.alphas.as_ref().expect("estimated")[s]
                    + x[(t, 0)] * out.betas[s * width + t * 2]
                    + x[(t, 1)] * out.betas[s * width + t * 2 + 1]
            })
            .collect();
        let qs = quantiles_of(&psis, &[0.025, 0.975]);
        let inside = true_psi[t] >= qs[0] && true_psi[t] <= qs[1];
        covered += inside as usize;
        if t % 50 == 0 {
            show.push((t + 1, true_psi[t], mean(&psis), qs[0], qs[1]));
        }
    }

    println!(
        "{:>4} {:>9} {:>9} {:>9} {:>9}",
        "t", "true", "mean", "2.5%", "97.5%"
    );
    for (t, truth, m, lo, hi) in show {
        println!("{t:>4} {truth:>9.3} {m:>9.3} {lo:>9.3} {hi:>9.3}");
    }
    println!(
        "\npointwise 95% bands cover the true log-odds at {covered}/{t_len} steps ({:.1}%)",
        100.0 * covered as f64 / t_len as f64
    );
}
