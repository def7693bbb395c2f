//! `treestack`: NSL-KDD intrusion detection with tree ensembles and an
//! out-of-fold stacked ensemble.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use treestack::pipeline::{
    cmd_evaluate, cmd_ingest, cmd_report, cmd_run, cmd_stack, cmd_train, cmd_tune, load_config,
    with_threads, EvalSplit, HyperMode, Run, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "treestack",
    version,
    about = "Tree-ensemble intrusion detection on NSL-KDD"
)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(short, long, global = true, default_value = "treestack.toml")]
    config: PathBuf,
    /// Override `run.seed` (default 42).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override `run.folds` (default 10).
    #[arg(long, global = true)]
    folds: Option<usize>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Use tuned hyperparameters with this many trials per learner instead
    /// of the published defaults.
    #[arg(long, global = true)]
    tune_budget: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Split {
    Test,
    Train,
}

#[derive(Subcommand)]
enum Command {
    /// Parse both splits, write the caches and check class counts.
    Ingest,
    /// Cross-validated hyperparameter search for each learner.
    Tune,
    /// Fit each learner on the full training split.
    Train,
    /// Build the out-of-fold stacked ensemble.
    Stack,
    /// Score models and write the results table and plot data.
    Evaluate {
        #[arg(long, value_enum, default_value = "test")]
        split: Split,
        /// Model files; defaults to every trained model of the run.
        #[arg(long = "model")]
        models: Vec<PathBuf>,
    },
    /// Compare the test report with the published results.
    Report,
    /// ingest, tune (if enabled), train, stack, evaluate and report.
    Run,
}

fn configure(cli: &Cli) -> Result<RunConfig> {
    let mut cfg =
        load_config(&cli.config).with_context(|| format!("loading {}", cli.config.display()))?;
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some(k) = cli.folds {
        cfg.run.folds = k;
    }
    if let Some(t) = cli.threads {
        cfg.run.threads = t;
    }
    if let Some(b) = cli.tune_budget {
        cfg.tuning.mode = HyperMode::Tune;
        cfg.tuning.budget = b;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    let mut run = Run::open(cfg)?;
    let result = dispatch(&cli.command, &mut run);
    run.save()?;
    result
}

fn dispatch(command: &Command, run: &mut Run) -> Result<()> {
    match command {
        Command::Ingest => {
            let out = cmd_ingest(run)?;
            println!("{}", out.report.summary);
            for r in [&out.report.train, &out.report.test] {
                println!(
                    "{:?}: {} rows ({} normal, {} attack)",
                    r.split, r.n_rows, r.normal, r.attack
                );
                for n in &r.notes {
                    println!("  {n}");
                }
            }
        }
        Command::Tune => {
            for s in cmd_tune(run)? {
                println!(
                    "{}: best {} {:.6} ± {:.6} (trial {}, {} failed of {})",
                    s.learner,
                    s.best.metric.as_str(),
                    s.best.mean,
                    s.best.std,
                    s.best.trial,
                    s.failed,
                    s.trials
                );
            }
        }
        Command::Train => {
            let out = cmd_train(run)?;
            for (id, path) in &out.models {
                println!("{id}: {}", path.display());
            }
            for (id, e) in &out.failures {
                println!("{id}: FAILED {e}");
            }
        }
        Command::Stack => {
            let out = cmd_stack(run)?;
            let b = &out.model.blend;
            for (m, w) in b.members.iter().zip(&b.weights) {
                println!("{m}: weight {w:.4}");
            }
            println!("blended out-of-fold {}: {:.6}", b.metric.as_str(), b.value);
            println!("{}", out.path.display());
        }
        Command::Evaluate { split, models } => {
            let split = match split {
                Split::Test => EvalSplit::Test,
                Split::Train => EvalSplit::Train,
            };
            let out = cmd_evaluate(run, split, models)?;
            print!("{}", std::fs::read_to_string(out.dir.join("metrics.csv"))?);
        }
        Command::Report => {
            for n in cmd_report(run)?.notes {
                println!("{n}");
            }
        }
        Command::Run => {
            let out = cmd_run(run)?;
            println!("{}", out.ingest.report.summary);
            print!(
                "{}",
                std::fs::read_to_string(out.test.dir.join("metrics.csv"))?
            );
            for n in &out.gap.notes {
                println!("{n}");
            }
            if !out.train.failures.is_empty() {
                bail!("{} learner(s) failed to train", out.train.failures.len());
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cfg = configure(&cli)?;
    let threads = cfg.run.threads;
    with_threads(threads, || execute(&cli, &cfg))?
}
