//! Converts an ERASER-layout corpus (e.g. Movie Reviews) and optionally runs
//! the full experiment on it.
//!
//! cargo run --release --example import_eraser_movies -- <eraser_dir> <out_dir> [--run]

use std::path::PathBuf;

use rationale_frontier::corpus::{consensus, save_corpus, Split};
use rationale_frontier::eraser::import_eraser;
use rationale_frontier::pipeline::{run_experiment, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().collect();
    if args.len() < 3 {
        eprintln!("usage: import_eraser_movies <eraser_dir> <out_dir> [--run]");
        std::process::exit(2);
    }
    let (data, out) = (PathBuf::from(&args[1]), PathBuf::from(&args[2]));
    let (samples, labels) = import_eraser(&data)?;
    std::fs::create_dir_all(&out)?;
    save_corpus(&samples, &out.join("corpus.jsonl"))?;
    labels.save(&out.join("labels.json"))?;

    let merged: Vec<_> = samples
        .iter()
        .filter_map(|s| consensus(s, &labels).ok().flatten())
        .collect();
    let test = merged
        .iter()
        .filter(|s| s.split == Some(Split::Test))
        .count();
    let with_rationale = merged.iter().filter(|s| s.has_rationale()).count();
    let tokens: usize = merged.iter().map(|s| s.len()).sum();
    println!(
        "{} documents ({} test), classes {:?}, {} with rationales, {:.0} tokens on average",
        merged.len(),
        test,
        labels.names(),
        with_rationale,
        tokens as f64 / merged.len().max(1) as f64
    );

    let config_text = r#"{
  "corpus": "corpus.jsonl",
  "labels": "labels.json",
  "featurizer": {"kind": "tfidf", "k": 200},
  "m": 3,
  "budget": 15,
  "subset": 50,
  "explainer": {"kind": "lime"},
  "out": "run"
}
"#;
    std::fs::write(out.join("config.json"), config_text)?;
    println!("wrote {}", out.join("config.json").display());

    if args.iter().any(|a| a == "--run") {
        let config = ExperimentConfig::from_json(config_text, &out)?;
        let run = run_experiment(&config)?;
        print!("{}", std::fs::read_to_string(run.summary())?);
    }
    Ok(())
}
