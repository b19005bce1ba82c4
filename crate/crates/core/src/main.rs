use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use rationale_frontier::pipeline::{
    run_experiment, run_stage, Context, ExperimentConfig, Overrides,
};
use rationale_frontier::Error;

#[derive(Parser)]
#[command(
    name = "rationale-frontier",
    version,
    about = "Trace accuracy/plausibility trade-offs of rationale-trained text classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prepare the corpus, fit the featurizer and write features
    Featurize(StageArgs),
    /// Select the penalty and trace the frontier with NISE
    Frontier(StageArgs),
    /// Explain the test subset under every frontier model
    Explain(StageArgs),
    /// Score accuracy, plausibility and faithfulness of every model
    Evaluate(StageArgs),
    /// Pick a model under the selection policy
    Select(StageArgs),
    /// Write report.csv and summary.json
    Report(StageArgs),
    /// Run every stage in order
    Run(StageArgs),
}

#[derive(Args)]
struct StageArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Sets every seed
    #[arg(long)]
    seed: Option<u64>,
    /// `lime` or `shapley`
    #[arg(long)]
    explainer: Option<String>,
    #[arg(long)]
    subset: Option<usize>,
    /// Run directory
    #[arg(long)]
    out: Option<PathBuf>,
}

impl StageArgs {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            budget: self.budget,
            m: self.m,
            seed: self.seed,
            explainer: self.explainer.clone(),
            subset: self.subset,
            out: self.out.clone(),
        })?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (stage, args) = match &cli.command {
        Command::Featurize(a) => (Some("featurize"), a),
        Command::Frontier(a) => (Some("frontier"), a),
        Command::Explain(a) => (Some("explain"), a),
        Command::Evaluate(a) => (Some("evaluate"), a),
        Command::Select(a) => (Some("select"), a),
        Command::Report(a) => (Some("report"), a),
        Command::Run(a) => (None, a),
    };
    let result = args.load().and_then(|cfg| match stage {
        Some(stage) => run_stage(&mut Context::new(cfg), stage),
        None => run_experiment(&cfg).map(|run| println!("{}", run.dir.display())),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
