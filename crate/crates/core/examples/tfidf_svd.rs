//! TF-IDF with a randomized truncated SVD: idf weights, projections and the
//! orthonormal basis.

use rationale_frontier::featurize::TfIdfModel;
use rationale_frontier::linalg::dot;
use rationale_frontier::synthetic::{planted_corpus, PlantedConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = PlantedConfig {
        samples: 400,
        background: 2000,
        ..Default::default()
    };
    let (raw, _) = planted_corpus(&cfg, 1)?;
    let docs: Vec<&[String]> = raw.iter().map(|r| r.tokens.as_slice()).collect();
    let model = TfIdfModel::fit(&docs, 20, 0)?;
    println!(
        "vocabulary {} terms, k = {}",
        model.vocabulary_len(),
        model.k()
    );

    for term in ["alpha0", "tagalpha0", "w17"] {
        if let Some(col) = model.column_of(term) {
            println!("idf({term}) = {:.3}", model.idf()[col]);
        }
    }

    let basis = model.basis();
    let mut worst: f64 = 0.0;
    for i in 0..basis.cols() {
        for j in 0..basis.cols() {
            let col =
                |c: usize| -> Vec<f64> { (0..basis.rows()).map(|r| basis.get(r, c)).collect() };
            let expected = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot(&col(i), &col(j)) - expected).abs());
        }
    }
    println!("basis orthonormal to {worst:.1e}");

    let x = model.transform(docs[0].iter().map(String::as_str));
    println!("first document -> {:.3?}", &x[..5]);
    Ok(())
}
