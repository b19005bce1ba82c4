//! Acceptance checks: one PASS/FAIL line per criterion, non-zero exit when any
//! criterion fails.
//!
//! The Movie Reviews check needs the ERASER movies directory, found through
//! `MOVIE_REVIEWS_DIR` or at `data/movie_reviews` in the workspace root.

mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::Rng;
use rationale_frontier::corpus::save_corpus;
use rationale_frontier::eraser::import_eraser;
use rationale_frontier::explain::shapley_values;
use rationale_frontier::featurize::VariantBatch;
use rationale_frontier::metrics::auprc;
use rationale_frontier::model::{
    contrastive_rationale_loss, cross_entropy, l2_penalty, scalarized_objective, train,
    ClassifierWeights, TradeOff, TrainingProblem, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use rationale_frontier::moo::{certify_frontier, nise, pareto_filter, ObjectivePoint};
use rationale_frontier::pipeline::{run_experiment, ExperimentConfig, Summary};
use rationale_frontier::synthetic::{write_planted_corpus, PlantedConfig};

use common::oracles::{
    brute_force_pareto, exact_shapley, gradient_error, reference_ap, toy, InteractionGame,
    Reference,
};
use common::{blobs, random_problem, random_weights, rng};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(20);
    let mut worst: f64 = 0.0;
    let mut configs = 0;
    for &nc in &[2, 3] {
        for &d in &[3, 10] {
            for &m in &[1, 2, 5] {
                for rep in 0..9 {
                    if configs == 100 {
                        break;
                    }
                    configs += 1;
                    let w1 = [0.0, 0.3, 0.7, 1.0][rep % 4];
                    let problem = random_problem(
                        &mut rng,
                        nc,
                        d,
                        m,
                        12,
                        6,
                        0.1,
                        TradeOff::from_w1(w1).unwrap(),
                    );
                    let weights = random_weights(&mut rng, nc, d, 0.7);
                    for e in [
                        gradient_error(&weights, |w| {
                            cross_entropy(w, &problem.features, &problem.labels)
                        }),
                        gradient_error(&weights, |w| {
                            contrastive_rationale_loss(w, &problem.variants)
                        }),
                        gradient_error(&weights, |w| l2_penalty(w, problem.l2_strength)),
                        gradient_error(&weights, |w| scalarized_objective(&problem, w)),
                    ] {
                        worst = worst.max(e);
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(
        configs == 100 && worst < 1e-4 && elapsed < Duration::from_secs(10),
        format!("{configs} configurations, worst relative error {worst:.2e}, {elapsed:.2?}"),
    )
}

fn anchors() -> Outcome {
    let mut rng = rng(3);
    let mut worst: f64 = 0.0;
    for (nc, m) in [(2, 2), (2, 3), (3, 5), (4, 2)] {
        let problem = random_problem(&mut rng, nc, 4, m, 10, 7, 0.3, TradeOff::CROSS_ENTROPY_ONLY);
        let zero = ClassifierWeights::zeros(nc, 4);
        worst = worst.max(
            (cross_entropy(&zero, &problem.features, &problem.labels).value - (nc as f64).ln())
                .abs(),
        );
        worst = worst.max(
            (contrastive_rationale_loss(&zero, &problem.variants).value - (m as f64).ln()).abs(),
        );
    }
    let single = random_problem(&mut rng, 3, 4, 1, 10, 7, 0.3, TradeOff::RATIONALE_ONLY);
    let w = random_weights(&mut rng, 3, 4, 2.0);
    let one = contrastive_rationale_loss(&w, &single.variants).value;
    ensure(
        worst <= 1e-12 && one == 0.0,
        format!("worst anchor error {worst:.1e}, CRL(m=1) = {one}"),
    )
}

fn reference_solver() -> Outcome {
    let mut rng = rng(11);
    let mut worst: f64 = 0.0;
    for (classes, dim, n, spread, l2) in [
        (2, 3, 40, 1.5, 0.1),
        (3, 5, 60, 1.2, 0.01),
        (4, 4, 50, 2.0, 0.05),
    ] {
        let (x, y) = blobs(&mut rng, classes, dim, n, spread);
        let problem = TrainingProblem::new(
            x.clone(),
            y.clone(),
            classes,
            VariantBatch::empty(dim, 3),
            l2,
            TradeOff::CROSS_ENTROPY_ONLY,
        )
        .map_err(|e| e.to_string())?;
        let out = train(&problem, DEFAULT_TOL, DEFAULT_MAX_ITER).map_err(|e| e.to_string())?;
        let reference = Reference {
            x: &x,
            y: &y,
            classes,
            l2,
        };
        let best = reference.loss(&reference.solve());
        worst = worst.max((reference.loss(&out.weights.to_params()) - best).abs());
    }
    ensure(
        worst <= 1e-6,
        format!("3 datasets, worst final-loss gap {worst:.2e}"),
    )
}

fn nise_toy() -> Outcome {
    let frontier = nise(toy, 30, 0.0).map_err(|e| e.to_string())?;
    let off = frontier
        .evaluated
        .iter()
        .map(|p| (p.f1.sqrt() + p.f2.sqrt() - 2.0).abs())
        .fold(0.0, f64::max);
    let report = certify_frontier(&frontier.evaluated);
    ensure(
        off <= 1e-6 && frontier.solver_budget_used <= 30 && report.is_clean(),
        format!(
            "{} points, {} solves, worst curve residual {off:.1e}, {} violations",
            frontier.points.len(),
            frontier.solver_budget_used,
            report.violations.len()
        ),
    )
}

fn pareto() -> Outcome {
    let mut rng = rng(99);
    let refs = |points: &[ObjectivePoint]| {
        let mut r: Vec<usize> = points.iter().map(|p| p.solution_ref).collect();
        r.sort_unstable();
        r
    };
    for trial in 0..50 {
        let grid = if trial % 2 == 0 { 1e6 } else { 20.0 };
        let points: Vec<ObjectivePoint> = (0..1000)
            .map(|i| ObjectivePoint {
                f1: (rng.random::<f64>() * grid).floor(),
                f2: (rng.random::<f64>() * grid).floor(),
                w: TradeOff::from_w1(0.5).unwrap(),
                solution_ref: i,
            })
            .collect();
        if refs(&pareto_filter(&points)) != refs(&brute_force_pareto(&points)) {
            return Err(format!("trial {trial} differs from brute force"));
        }
    }
    Ok("50 trials of 1000 points agree with brute force".into())
}

fn shapley() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_eff: f64 = 0.0;
    for (p, seed) in [(3, 1), (5, 2), (6, 3), (8, 4), (8, 5)] {
        let game = InteractionGame::random(p, seed);
        let exact = exact_shapley(&game, p);
        let est = shapley_values(&game, &format!("doc{seed}"), p, &[1], 2000, 17)
            .map_err(|e| e.to_string())?;
        for (a, b) in exact.iter().zip(&est.values[0]) {
            worst = worst.max((a - b).abs());
        }
        let target = game.value(&vec![true; p]) - game.value(&vec![false; p]);
        let sum: f64 = est.values[0].iter().sum();
        let se = est.std_errors[0].iter().map(|s| s * s).sum::<f64>().sqrt();
        let gap = (sum - target).abs();
        // in units of standard errors; an exact sum counts as zero
        worst_eff = worst_eff.max(if gap == 0.0 {
            0.0
        } else {
            gap / se.max(f64::MIN_POSITIVE)
        });
    }
    ensure(
        worst <= 0.02 && worst_eff <= 3.0,
        format!("p <= 8, worst |error| {worst:.4}, efficiency gap {worst_eff:.2} SE"),
    )
}

fn auprc_check() -> Outcome {
    let hand = auprc(&[0.1, 0.9, 0.2], &[true, false, true]).map_err(|e| e.to_string())?;
    let perfect =
        auprc(&[0.9, 0.8, 0.1, 0.0], &[true, true, false, false]).map_err(|e| e.to_string())?;
    let mut rng = rng(12);
    for case in 0..1000 {
        let p = rng.random_range(1..40);
        let scores: Vec<f64> = (0..p)
            .map(|_| rng.random_range(-50i64..50) as f64)
            .collect();
        let mut rationale: Vec<bool> = (0..p).map(|_| rng.random::<bool>()).collect();
        rationale[0] = true;
        let mapped: Vec<f64> = scores.iter().map(|s| s.powi(3) + 5.0 * s - 11.0).collect();
        let a = auprc(&scores, &rationale).map_err(|e| e.to_string())?;
        let b = auprc(&mapped, &rationale).map_err(|e| e.to_string())?;
        if a != b || (a - reference_ap(&scores, &rationale)).abs() > 1e-12 {
            return Err(format!("case {case}: {a} vs {b}"));
        }
    }
    ensure(
        (hand - 0.583333).abs() < 1e-6 && perfect == 1.0,
        format!("hand value {hand:.6}, perfect ranking {perfect}, 1000 monotone-map cases"),
    )
}

fn planted_config(dir: &Path) -> ExperimentConfig {
    let (corpus, labels) =
        write_planted_corpus(&dir.join("data"), &PlantedConfig::default(), 7).unwrap();
    let text = format!(
        r#"{{"corpus": {corpus:?}, "labels": {labels:?}, "featurizer": {{"kind": "tfidf", "k": 50}},
            "m": 3, "budget": 20, "subset": 100, "explainer": {{"kind": "lime"}}, "out": {:?}}}"#,
        dir.join("run")
    );
    ExperimentConfig::from_json(&text, dir).unwrap()
}

fn summary_of(dir: &Path) -> Summary {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn planted(dir: &Path) -> Outcome {
    let start = Instant::now();
    let run = run_experiment(&planted_config(dir)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let s = summary_of(&run.dir);
    ensure(
        s.delta.auprc_pct_delta >= 5.0 && s.delta.acc_pct_delta >= -2.0 && elapsed < Duration::from_secs(300),
        format!(
            "AUPRC {:.4} -> {:.4} ({:+.2} points) at w1 = {:.3}, accuracy {:+.2} points, {elapsed:.1?}",
            s.baseline.mean_auprc, s.chosen.mean_auprc, s.delta.auprc_pct_delta, s.chosen.w1, s.delta.acc_pct_delta
        ),
    )
}

fn determinism(first: &Path, second: &Path) -> Outcome {
    run_experiment(&planted_config(second)).map_err(|e| e.to_string())?;
    for name in ["frontier.json", "report.csv"] {
        let a = fs::read(first.join("run").join(name)).map_err(|e| e.to_string())?;
        let b = fs::read(second.join("run").join(name)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{name} differs between identical runs"));
        }
    }
    Ok("frontier.json and report.csv byte-identical across two planted runs".into())
}

fn movie_reviews_dir() -> Option<PathBuf> {
    let candidates = [
        std::env::var_os("MOVIE_REVIEWS_DIR").map(PathBuf::from),
        Some(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/movie_reviews")),
    ];
    candidates
        .into_iter()
        .flatten()
        .find(|p| p.join("test.jsonl").exists())
}

fn movie_reviews(dir: &Path) -> Outcome {
    let Some(data) = movie_reviews_dir() else {
        return Err(
            "ERASER movies data not found (set MOVIE_REVIEWS_DIR or add data/movie_reviews)".into(),
        );
    };
    let start = Instant::now();
    let (samples, labels) = import_eraser(&data).map_err(|e| e.to_string())?;
    fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    save_corpus(&samples, &dir.join("corpus.jsonl")).map_err(|e| e.to_string())?;
    labels
        .save(&dir.join("labels.json"))
        .map_err(|e| e.to_string())?;
    let text = r#"{"corpus": "corpus.jsonl", "labels": "labels.json", "featurizer": {"kind": "tfidf", "k": 200},
            "m": 3, "budget": 15, "subset": 50, "explainer": {"kind": "lime"}, "out": "run"}"#;
    let config = ExperimentConfig::from_json(text, dir).map_err(|e| e.to_string())?;
    let run = run_experiment(&config).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let s = summary_of(&run.dir);
    let rel = s.delta.auprc_rel_pct_delta;
    let acc = s.delta.acc_pct_delta;
    ensure(
        s.delta.auprc_pct_delta > 0.0
            && (2.0..=12.0).contains(&rel)
            && (acc - 0.56).abs() <= 2.0
            && elapsed <= Duration::from_secs(2 * 3600),
        format!(
            "AUPRC {:+.2} points ({rel:+.2}% relative) at w1 = {:.3}, accuracy {acc:+.2} points, {elapsed:.1?}",
            s.delta.auprc_pct_delta, s.chosen.w1
        ),
    )
}

fn main() {
    let scratch = tempfile::tempdir().expect("temporary directory");
    let root = scratch.path().to_path_buf();
    let checks: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("gradient correctness", Box::new(gradients)),
        ("closed-form loss anchors", Box::new(anchors)),
        ("reference-solver equivalence", Box::new(reference_solver)),
        ("NISE on the analytic toy problem", Box::new(nise_toy)),
        ("Pareto filter vs brute force", Box::new(pareto)),
        ("Shapley vs exact enumeration", Box::new(shapley)),
        ("AUPRC values and invariance", Box::new(auprc_check)),
        (
            "planted-rationale end to end",
            Box::new({
                let dir = root.join("planted-a");
                move || planted(&dir)
            }),
        ),
        (
            "Movie Reviews sign reproduction",
            Box::new({
                let dir = root.join("movies");
                move || movie_reviews(&dir)
            }),
        ),
        (
            "determinism",
            Box::new({
                let (a, b) = (root.join("planted-a"), root.join("planted-b"));
                move || determinism(&a, &b)
            }),
        ),
    ];

    let mut failed = 0;
    for (name, check) in &checks {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {message}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        checks.len() - failed,
        checks.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
