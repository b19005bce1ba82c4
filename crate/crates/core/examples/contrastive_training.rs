//! Training with the contrastive rationale loss: the same data solved at
//! several trade-off weights.

use rationale_frontier::corpus::{consensus, split, Split};
use rationale_frontier::featurize::{build_variants, Featurizer, TfIdfModel, VariantBatch};
use rationale_frontier::linalg::Matrix;
use rationale_frontier::metrics::classification_report;
use rationale_frontier::model::{
    contrastive_rationale_loss, cross_entropy, train, TradeOff, TrainingProblem,
};
use rationale_frontier::synthetic::{planted_corpus, PlantedConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = PlantedConfig {
        samples: 600,
        background: 3000,
        ..Default::default()
    };
    let (raw, labels) = planted_corpus(&cfg, 2)?;
    let samples: Vec<_> = raw
        .iter()
        .filter_map(|r| consensus(r, &labels).transpose())
        .collect::<Result<_, _>>()?;
    let samples = split(samples, 0.8, 2)?;
    let (train_set, test_set): (Vec<_>, Vec<_>) = samples
        .into_iter()
        .partition(|s| s.split == Some(Split::Train));

    let docs: Vec<&[String]> = train_set.iter().map(|s| s.tokens.as_slice()).collect();
    let tfidf = TfIdfModel::fit(&docs, 30, 0)?;
    let featurize = |set: &[_]| -> Result<Matrix, Box<dyn std::error::Error>> {
        let rows = set
            .iter()
            .map(|s| tfidf.full_features(s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Matrix::from_rows(&rows, tfidf.dim())?)
    };
    let x_train = featurize(&train_set)?;
    let x_test = featurize(&test_set)?;
    let y_train: Vec<usize> = train_set.iter().map(|s| s.label).collect();
    let y_test: Vec<usize> = test_set.iter().map(|s| s.label).collect();

    let m = 3;
    let sets = build_variants(&train_set, &tfidf, m, 5)?;
    let variants = VariantBatch::from_sets(&sets, tfidf.dim(), m)?;
    println!(
        "{} training docs, {} variant sets of size {m}",
        train_set.len(),
        variants.len()
    );

    let base = TrainingProblem::new(
        x_train,
        y_train,
        2,
        variants,
        1e-3,
        TradeOff::CROSS_ENTROPY_ONLY,
    )?;
    println!(
        "{:>5} {:>8} {:>8} {:>8} {:>6}",
        "w1", "CE", "CRL", "acc", "iters"
    );
    for w1 in [1.0, 0.75, 0.5, 0.25, 0.0] {
        let problem = base.with_trade_off(TradeOff::from_w1(w1)?);
        let out = train(&problem, 1e-6, 1000)?;
        let ce = cross_entropy(&out.weights, &problem.features, &problem.labels).value;
        let crl = contrastive_rationale_loss(&out.weights, &problem.variants).value;
        let acc = classification_report(&out.weights, &x_test, &y_test)?.accuracy;
        println!(
            "{w1:>5.2} {ce:>8.4} {crl:>8.4} {acc:>8.3} {:>6}",
            out.iterations
        );
    }
    Ok(())
}
