//! Running on features from an external encoder. The featurize stage writes
//! the masks it needs under `requests/`; an encoder answers each list with an
//! FMAT file whose sidecar names every row, and the stage is rerun.
//!
//! cargo run --release --example imported_features [out_dir]

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rationale_frontier::corpus::load_tokenized;
use rationale_frontier::featurize::{read_mask_requests, store_feature_matrix, FeatureMatrix};
use rationale_frontier::linalg::Matrix;
use rationale_frontier::pipeline::{run_experiment, ExperimentConfig, RunArtifact};
use rationale_frontier::synthetic::{write_planted_corpus, PlantedConfig};
use rationale_frontier::Error;

const DIM: usize = 24;

/// Toy encoder: character-trigram counts of the kept tokens, hashed.
fn encode(tokens: &[String], mask: &[bool]) -> Vec<f64> {
    let mut v = [0.0; DIM];
    for (t, _) in tokens.iter().zip(mask).filter(|(_, &keep)| keep) {
        let padded: Vec<u8> = format!("#{t}#").into_bytes();
        for w in padded.windows(3) {
            let h = w
                .iter()
                .fold(7u64, |h, &b| h.wrapping_mul(31).wrapping_add(b as u64));
            v[(h % DIM as u64) as usize] += 1.0;
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    v.iter().map(|x| x / norm).collect()
}

/// Answers the request lists whose names start with `prefix` with one FMAT file.
fn export(
    run: &RunArtifact,
    prefix: &str,
    path: &Path,
) -> Result<usize, Box<dyn std::error::Error>> {
    let docs: HashMap<String, Vec<String>> = load_tokenized(&run.prepared())?
        .into_iter()
        .map(|s| (s.id, s.tokens))
        .collect();
    let mut requests = Vec::new();
    for entry in std::fs::read_dir(run.dir.join("requests"))? {
        let list = entry?.path();
        if list
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with(prefix))
        {
            requests.extend(read_mask_requests(&list)?);
        }
    }
    requests.sort_by(|a, b| a.row_id.cmp(&b.row_id));
    requests.dedup_by(|a, b| a.row_id == b.row_id);
    let rows: Vec<Vec<f64>> = requests
        .iter()
        .map(|r| Ok(encode(&docs[&r.sample_id], &r.bits()?)))
        .collect::<Result<_, Error>>()?;
    let ids = requests.iter().map(|r| r.row_id.clone()).collect();
    let matrix = if rows.is_empty() {
        Matrix::zeros(0, DIM)
    } else {
        Matrix::from_rows(&rows, DIM)?
    };
    store_feature_matrix(&FeatureMatrix::new(matrix, ids, "trigram-hash")?, path)?;
    Ok(requests.len())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("imported_features"));
    let planted = PlantedConfig {
        samples: 300,
        background: 800,
        ..Default::default()
    };
    let (corpus, labels) = write_planted_corpus(&out.join("data"), &planted, 4)?;
    let exported = out.join("exported");
    std::fs::create_dir_all(&exported)?;
    let prefixes = ["variants", "explain", "faithfulness_"];
    let files: Vec<PathBuf> = prefixes
        .iter()
        .map(|p| {
            exported
                .join(p.trim_end_matches('_'))
                .with_extension("fmat")
        })
        .collect();

    for round in 1..=4 {
        let featurizer = serde_json::json!({"kind": "imported", "files": files});
        let text = serde_json::json!({
            "corpus": corpus, "labels": labels, "featurizer": featurizer,
            "m": 3, "budget": 8, "subset": 40, "out": out.join("run"),
        });
        let config = ExperimentConfig::from_json(&text.to_string(), &out)?;
        match run_experiment(&config) {
            Ok(run) => {
                println!("round {round}: complete");
                print!("{}", std::fs::read_to_string(run.report())?);
                return Ok(());
            }
            Err(e) => {
                println!("round {round}: {e}");
                let run = RunArtifact::new(&config.out);
                for (prefix, file) in prefixes.iter().zip(&files) {
                    let n = export(&run, prefix, file)?;
                    println!("  {n} rows -> {}", file.display());
                }
            }
        }
    }
    Err("features never covered every request".into())
}
