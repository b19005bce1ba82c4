//! Exit codes and stage-by-stage runs of the command-line tool.

mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use common::small_experiment;

fn cli(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_rationale-frontier"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap();
    out.status.code().expect("exit code")
}

fn write_config(dir: &Path) -> String {
    let config = small_experiment(
        dir,
        r#""m": 3, "budget": 6, "regularization": {"fixed": 10.0},"#,
    );
    let path = dir.join("config.json");
    fs::write(&path, config.to_json().unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(cli(&["featurize", "--config", bad.to_str().unwrap()]), 2);

    fs::write(
        &bad,
        r#"{"corpus": "c", "labels": "l", "featurizer": {"kind": "tfidf", "k": 5}, "colour": 1}"#,
    )
    .unwrap();
    assert_eq!(cli(&["frontier", "--config", bad.to_str().unwrap()]), 2);

    let good = write_config(dir.path());
    assert_eq!(
        cli(&["run", "--config", &good, "--explainer", "anchors"]),
        2
    );
    assert_eq!(cli(&["run", "--config", &good, "--budget", "1"]), 2);
    assert_eq!(
        cli(&[
            "explain",
            "--config",
            dir.path().join("absent.json").to_str().unwrap()
        ]),
        2
    );
}

#[test]
fn stage_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("fresh");
    // later stages need the earlier ones' artifacts
    assert_eq!(
        cli(&[
            "explain",
            "--config",
            &config,
            "--out",
            out.to_str().unwrap()
        ]),
        3
    );
    fs::remove_file(dir.path().join("data").join("corpus.jsonl")).unwrap();
    assert_eq!(cli(&["featurize", "--config", &config]), 3);
}

#[test]
fn every_stage_runs_in_order_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("staged");
    let out = out.to_str().unwrap();
    let overrides = [
        "--budget",
        "5",
        "--m",
        "2",
        "--seed",
        "4",
        "--explainer",
        "shapley",
        "--subset",
        "12",
        "--out",
        out,
    ];
    for stage in [
        "featurize",
        "frontier",
        "explain",
        "evaluate",
        "select",
        "report",
    ] {
        let mut args = vec![stage, "--config", &config];
        args.extend_from_slice(&overrides);
        assert_eq!(cli(&args), 0, "stage {stage}");
    }
    let report = fs::read_to_string(Path::new(out).join("report.csv")).unwrap();
    assert!(report.starts_with("w1,acc_pct_delta,auprc_pct_delta"));
    let subset: Vec<String> =
        serde_json::from_str(&fs::read_to_string(Path::new(out).join("subset.json")).unwrap())
            .unwrap();
    assert_eq!(subset.len(), 12);
    let nise: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(Path::new(out).join("nise.json")).unwrap())
            .unwrap();
    assert!(nise["solves"].as_array().unwrap().len() <= 5);

    assert_eq!(cli(&["run", "--config", &config]), 0);
}
