//! Simulate a 2-D AR(1) state path, observe it through noisy scalar
//! projections with a missing stretch, then filter and draw posterior
//! path samples.
//!
//! ```bash
//! cargo run --release --example ffbs_demo
//! ```

use nalgebra::DVector;
use pg_dglm::ffbs::{
    backward_sample, forward_filter, simulate_dlm, PseudoObservation, StateSpaceSpec,
};
use pg_dglm::rng::stream_rng;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() {
    let t_len = 40;
    let spec = StateSpaceSpec::ar1_diagonal(
        &[0.0, 0.0],
        &[0.95, 0.95],
        &[0.03, 0.03],
        &[0.0, 0.0],
        &[0.3, 0.3],
    )
    .expect("valid spec");

    let mut rng = stream_rng(11, 0);
    let truth = simulate_dlm(&spec, t_len, &mut rng).expect("simulation");

    // Scalar observations z_t = x_t' beta_t + noise; steps 15..25 missing.
    let obs: Vec<PseudoObservation> = (0..t_len)
        .map(|t| {
            let x = DVector::from_fn(2, |_, _| rng.sample::<f64, _>(StandardNormal));
            if (15..25).contains(&t) {
                PseudoObservation::missing(x).expect("finite covariates")
            } else {
                let precision = 4.0f64;
                let noise: f64 = rng.sample::<f64, _>(StandardNormal) / precision.sqrt();
                let z = x.dot(truth.state(t)) + noise;
                PseudoObservation::observed(z, precision, x).expect("valid observation")
            }
        })
        .collect();

    let filt = forward_filter(&spec, &obs).expect("filtering");
    println!("predictive log-likelihood: {:.3}\n", filt.pred_loglik);

    // Average a handful of joint posterior draws for display.
    let n_paths = 200;
    let mut mean_path = vec![[0.0f64; 2]; t_len];
    for _ in 0..n_paths {
        let path = backward_sample(&spec, &filt, &mut rng).expect("sampling");
        for t in 0..t_len {
            mean_path[t][0] += path.component(t, 0) / n_paths as f64;
            mean_path[t][1] += path.component(t, 1) / n_paths as f64;
        }
    }

    println!(
        "{:>4} {:>8} {:>8} {:>8} {:>8} {:>9}",
        "t", "true_1", "draw_1", "true_2", "draw_2", "observed"
    );
    for t in 0..t_len {
        println!(
            "{:>4} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>9}",
            t + 1,
            truth.component(t, 0),
            mean_path[t][0],
            truth.component(t, 1),
            mean_path[t][1],
            obs[t].observed
        );
    }
    println!("\nAveraged backward samples track the truth where observed and");
    println!("revert toward the prior across the missing stretch.");
}
