//! `ganfs`: preprocess flow data, train the GAN, rank features, run the
//! baselines, evaluate top-k subsets and write a report.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ganfs_core::baseline::BaselineMethod;
use ganfs_core::gan::EpochRecord;
use ganfs_core::pipeline::{EvaluateSummary, Pipeline, RunConfig};
use ganfs_core::{numfmt, Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "ganfs",
    version,
    about = "GAN-based feature selection for network-flow intrusion data"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, env = "GANFS_CONFIG")]
    config: Option<PathBuf>,
    /// Master seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config file).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean, split and normalize the input data.
    Preprocess {
        /// Input CSV files (replace `data.paths`).
        #[arg(long = "input")]
        inputs: Vec<PathBuf>,
    },
    /// Train the GAN on attack rows of the train partition.
    TrainGan {
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Rank features by discriminator sensitivity.
    Rank,
    /// Rank features with a classical selector.
    Baseline {
        #[arg(long, value_parser = parse_method)]
        method: BaselineMethod,
    },
    /// Evaluate top-k subsets of every selector with both classifiers.
    Evaluate,
    /// Write metric series and the summary from the metric table.
    Report,
    /// Write the configured synthetic dataset as a raw CSV fixture.
    Synth,
    /// Run every stage in order.
    Run {
        #[arg(long)]
        epochs: Option<usize>,
    },
}

fn parse_method(s: &str) -> std::result::Result<BaselineMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    match &cli.command {
        Command::Preprocess { inputs } if !inputs.is_empty() => cfg.data.paths = inputs.clone(),
        Command::TrainGan { epochs: Some(n) } | Command::Run { epochs: Some(n) } => {
            cfg.gan.epochs = *n
        }
        _ => {}
    }
    Ok(cfg)
}

fn progress_printer(every: usize, total: usize) -> impl FnMut(&EpochRecord) {
    move |r| {
        if every > 0 && (r.epoch % every == 0 || r.epoch == total) {
            eprintln!(
                "epoch {}/{total}: d_loss {} g_loss {} d_acc {}",
                r.epoch,
                numfmt::sig(r.d_loss(), 6),
                numfmt::sig(r.g_loss, 6),
                numfmt::sig(r.d_accuracy, 4)
            );
        }
    }
}

fn report_evaluation(s: &EvaluateSummary) {
    for (selector, k) in &s.skipped {
        eprintln!("warning: skipped {selector} at k = {k}: more features requested than available");
    }
    println!("evaluated {} combinations", s.rows.len());
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let cfg = load_config(cli)?;
    let mut pipeline = Pipeline::open(&cfg)?;
    let mut progress = progress_printer(cfg.progress_every, cfg.gan.epochs);
    let dir = pipeline.dir().display().to_string();
    match &cli.command {
        Command::Preprocess { .. } => {
            let s = pipeline.preprocess()?;
            println!(
                "wrote {dir}/data: {} train rows, {} test rows, {} features",
                s.train_rows, s.test_rows, s.n_features
            );
        }
        Command::TrainGan { .. } => {
            let log = pipeline.train_gan(&mut progress)?;
            println!("wrote {dir}/gan after {} epochs", log.records.len());
        }
        Command::Rank => {
            let report = pipeline.rank()?;
            let top = &report.feature_names[report.ranking[0]];
            println!("wrote {dir}/rankings/ganfs.csv (top feature: {top})");
        }
        Command::Baseline { method } => {
            pipeline.baseline(*method)?;
            println!("wrote {dir}/rankings/{method}.csv");
        }
        Command::Evaluate => report_evaluation(&pipeline.evaluate()?),
        Command::Report => {
            let best = pipeline.report()?;
            println!(
                "wrote {dir}/report (best F1 {}: {} + {} at k = {})",
                numfmt::sig(best.f1, 6),
                best.selector,
                best.classifier,
                best.k
            );
        }
        Command::Synth => {
            let path = pipeline.synth()?;
            println!("wrote {}", path.display());
        }
        Command::Run { .. } => report_evaluation(&pipeline.run_all(&mut progress)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
