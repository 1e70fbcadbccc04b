use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use pg_dglm::cli::{cmd_benchmark, cmd_fit, cmd_simulate, load_config, Overrides};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "pg-dglm",
    about = "Dynamic binomial-logit and negative-binomial models via Polya-Gamma augmentation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration (a meta.json from a previous run also works).
    #[arg(long)]
    config: PathBuf,
    /// Override the root seed (and the synthetic design seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (CSV plus truth metadata).
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Fit the model: posterior summaries, predictive intervals, draw
    /// archive and run metadata.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Override total sweeps.
        #[arg(long)]
        iterations: Option<usize>,
        /// Override burn-in sweeps.
        #[arg(long)]
        burnin: Option<usize>,
    },
    /// Run the batched effective-sampling-rate benchmark.
    Benchmark {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        burnin: Option<usize>,
        /// Override the batch count.
        #[arg(long)]
        batches: Option<usize>,
    },
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let (common, overrides) = match &cli.command {
        Command::Simulate { common } => (
            common,
            Overrides {
                seed: common.seed,
                out: common.out.clone(),
                ..Overrides::default()
            },
        ),
        Command::Fit {
            common,
            iterations,
            burnin,
        } => (
            common,
            Overrides {
                seed: common.seed,
                iterations: *iterations,
                burnin: *burnin,
                out: common.out.clone(),
                ..Overrides::default()
            },
        ),
        Command::Benchmark {
            common,
            iterations,
            burnin,
            batches,
        } => (
            common,
            Overrides {
                seed: common.seed,
                iterations: *iterations,
                burnin: *burnin,
                batches: *batches,
                out: common.out.clone(),
            },
        ),
    };

    let mut config = load_config(&common.config)
        .with_context(|| format!("loading {}", common.config.display()))?;
    overrides.apply(&mut config);
    let out_dir = config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("pg-dglm-out"));

    match &cli.command {
        Command::Simulate { .. } => {
            let (csv, meta) = cmd_simulate(&config, &out_dir)?;
            println!("wrote {}", csv.display());
            println!("wrote {}", meta.display());
        }
        Command::Fit { .. } => {
            let arts = cmd_fit(&config, &out_dir)?;
            println!("wrote {}", arts.summary.display());
            println!("wrote {}", arts.predictive.display());
            println!("wrote {}", arts.draws.display());
            println!("wrote {}", arts.meta.display());
        }
        Command::Benchmark { .. } => {
            let report = cmd_benchmark(&config, &out_dir)?;
            println!(
                "median ESR: {:.3} effective draws/second over {} components ({:.1} s total)",
                report.median_esr,
                report.rows.len(),
                report.total_seconds
            );
            println!("wrote {}", out_dir.join("esr_report.csv").display());
        }
    }
    Ok(())
}
