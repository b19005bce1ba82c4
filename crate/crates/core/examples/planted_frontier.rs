//! Full pipeline on a planted-rationale corpus: frontier, explanations,
//! selection and the comparison report.
//!
//! cargo run --release --example planted_frontier [out_dir]

use std::path::PathBuf;
use std::time::Instant;

use rationale_frontier::pipeline::{
    run_experiment, ExperimentConfig, FeaturizerConfig, RunArtifact,
};
use rationale_frontier::synthetic::{write_planted_corpus, PlantedConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("planted_frontier"));
    let (corpus, labels) = write_planted_corpus(&out.join("data"), &PlantedConfig::default(), 7)?;

    let mut config = ExperimentConfig::from_json(
        r#"{"corpus": "x", "labels": "x", "featurizer": {"kind": "tfidf", "k": 50},
            "m": 3, "budget": 20, "subset": 100}"#,
        &out,
    )?;
    config.corpus = corpus;
    config.labels = labels;
    config.out = out.join("run");
    assert!(matches!(
        config.featurizer,
        FeaturizerConfig::Tfidf { k: 50 }
    ));

    let start = Instant::now();
    let run = run_experiment(&config)?;
    println!("finished in {:.1?}", start.elapsed());
    print_run(&run)?;
    Ok(())
}

fn print_run(run: &RunArtifact) -> Result<(), Box<dyn std::error::Error>> {
    let solves = run.load_nise()?.solves;
    println!(
        "{:>8} {:>9} {:>9} {:>8} {:>8}",
        "w1", "train_ce", "train_crl", "acc", "auprc"
    );
    for m in run.load_metrics()? {
        let s = &solves[m.model_index];
        println!(
            "{:>8.4} {:>9.4} {:>9.4} {:>8.4} {:>8.4}",
            s.w1, s.train_ce, s.train_crl, m.report.accuracy, m.report.mean_auprc
        );
    }
    let selection = run.load_selection()?;
    println!(
        "baseline #{}, chosen #{}",
        selection.baseline, selection.chosen
    );
    print!("{}", std::fs::read_to_string(run.report())?);
    Ok(())
}
