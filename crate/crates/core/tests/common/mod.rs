#![allow(dead_code)]

pub mod oracles;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rationale_frontier::featurize::VariantBatch;
use rationale_frontier::linalg::Matrix;
use rationale_frontier::model::{ClassifierWeights, TradeOff, TrainingProblem};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| scale * normal(rng)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_weights(
    rng: &mut ChaCha8Rng,
    classes: usize,
    dim: usize,
    scale: f64,
) -> ClassifierWeights {
    let theta = gaussian_matrix(rng, classes, dim, scale);
    let bias = (0..classes).map(|_| scale * normal(rng)).collect();
    ClassifierWeights::new(theta, bias).unwrap()
}

/// A random problem with `n` labelled rows and `sets` variant sets of size `m`.
pub fn random_problem(
    rng: &mut ChaCha8Rng,
    classes: usize,
    dim: usize,
    m: usize,
    n: usize,
    sets: usize,
    l2: f64,
    w: TradeOff,
) -> TrainingProblem {
    let x = gaussian_matrix(rng, n, dim, 1.0);
    let y: Vec<usize> = (0..n)
        .map(|i| {
            if i < classes {
                i
            } else {
                rng.random_range(0..classes)
            }
        })
        .collect();
    let rows = gaussian_matrix(rng, sets * m, dim, 1.0);
    let labels = (0..sets).map(|_| rng.random_range(0..classes)).collect();
    let variants = VariantBatch::from_parts(m, rows, labels).unwrap();
    TrainingProblem::new(x, y, classes, variants, l2, w).unwrap()
}

/// Class blobs around random centres, so small problems are well conditioned.
pub fn blobs(
    rng: &mut ChaCha8Rng,
    classes: usize,
    dim: usize,
    n: usize,
    spread: f64,
) -> (Matrix, Vec<usize>) {
    let centres: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..dim).map(|_| 2.0 * normal(rng)).collect())
        .collect();
    let mut data = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = i % classes;
        for j in 0..dim {
            data.push(centres[y][j] + spread * normal(rng));
        }
        labels.push(y);
    }
    (Matrix::from_vec(n, dim, data).unwrap(), labels)
}

/// Property-test settings without failure files (integration tests have no
/// source root for proptest to write next to).
pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases: n,
        failure_persistence: None,
        ..Default::default()
    }
}

/// A small planted corpus under `dir` and an experiment over it. `extra` holds
/// additional top-level config fields, each followed by a comma; without a
/// featurizer entry, TF-IDF with k = 12 is used.
pub fn small_experiment(
    dir: &std::path::Path,
    extra: &str,
) -> rationale_frontier::pipeline::ExperimentConfig {
    use rationale_frontier::synthetic::{write_planted_corpus, PlantedConfig};
    let planted = PlantedConfig {
        samples: 240,
        tokens_per_doc: 20,
        background: 400,
        ..Default::default()
    };
    let (corpus, labels) = write_planted_corpus(&dir.join("data"), &planted, 3).unwrap();
    let featurizer = if extra.contains("\"featurizer\"") {
        ""
    } else {
        r#""featurizer": {"kind": "tfidf", "k": 12},"#
    };
    let text = format!(
        r#"{{"corpus": {corpus:?}, "labels": {labels:?}, {featurizer} {extra} "subset": 30, "out": {:?}}}"#,
        dir.join("run")
    );
    rationale_frontier::pipeline::ExperimentConfig::from_json(&text, dir).unwrap()
}
