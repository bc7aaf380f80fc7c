mod common;

use std::fs;

use rpushpull::algorithms::AlgorithmKind;
use rpushpull::harness::{emit_outputs, run_experiment, ExperimentConfig, InitConfig};
use rpushpull::Error;

fn small(iterations: usize) -> ExperimentConfig {
    ExperimentConfig {
        seed: 77,
        ..common::reference_setup(0.01, 3, iterations)
    }
}

#[test]
fn csv_has_one_row_per_algorithm_and_iteration() {
    let report = run_experiment(&small(120)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = emit_outputs(&report, dir.path()).unwrap();
    let text = fs::read_to_string(&paths.csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iteration,algorithm,mean_error,trial_min,trial_max"));
    assert_eq!(lines.count(), 3 * 120);
    assert_eq!(paths.plots.len(), 3);
    let plot = fs::read_to_string(&paths.plots[0]).unwrap();
    assert_eq!(plot.lines().filter(|l| !l.starts_with('#')).count(), 120);
}

#[test]
fn re_emitting_a_report_rewrites_identical_files() {
    let report = run_experiment(&small(50)).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let pa = emit_outputs(&report, a.path()).unwrap();
    let pb = emit_outputs(&report, b.path()).unwrap();
    assert_eq!(fs::read(&pa.csv).unwrap(), fs::read(&pb.csv).unwrap());
    assert_eq!(fs::read(&pa.json).unwrap(), fs::read(&pb.json).unwrap());
}

#[test]
fn unwritable_directory_reports_the_path() {
    let report = run_experiment(&small(5)).unwrap();
    let file = tempfile::NamedTempFile::new().unwrap();
    let target = file.path().join("nested");
    match emit_outputs(&report, &target) {
        Err(Error::Io { path, .. }) => assert_eq!(path, target),
        other => panic!("expected an i/o error, got {other:?}"),
    }
}

#[test]
fn json_report_carries_config_theory_and_abort_flags() {
    let report = run_experiment(&small(30)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = emit_outputs(&report, dir.path()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(paths.json).unwrap()).unwrap();
    assert_eq!(v["config"]["n"], 15);
    assert!(v["theory"]["at_alpha_max"]["rho_a"].as_f64().unwrap() < 1.0);
    assert!(v["theory"]["at_run_alpha"]["c"].as_array().unwrap().len() == 14);
    assert_eq!(v["series"][0]["aborted_trials"], 0);
    assert!(v.get("wall_clock").is_none());
}

#[test]
fn algorithms_share_the_initial_iterate_within_a_trial() {
    // Noiseless, S₀ = 0 and Y₀ = ∇F(X₀): the first R-Push-Pull and Push-Pull
    // steps coincide exactly when X₀ is shared.
    let cfg = ExperimentConfig {
        sigma_link2: 0.0,
        init: InitConfig {
            x0_std: 3.0,
            ..InitConfig::default()
        },
        algorithms: vec![AlgorithmKind::RPushPull, AlgorithmKind::PushPull],
        ..small(1)
    };
    let report = run_experiment(&cfg).unwrap();
    for t in 0..cfg.trials {
        let by_alg: Vec<f64> = report
            .trials
            .iter()
            .filter(|r| r.trial == t)
            .map(|r| r.series[0])
            .collect();
        assert_eq!(by_alg[0], by_alg[1]);
    }
    let first = &report.trials[0].series[0];
    let other = report.trials.iter().find(|r| r.trial == 1).unwrap().series[0];
    assert_ne!(*first, other, "trials should draw different X₀");
}

#[test]
fn adding_an_algorithm_leaves_other_streams_alone() {
    let only = ExperimentConfig {
        algorithms: vec![AlgorithmKind::PushPull],
        ..small(60)
    };
    let a = run_experiment(&only).unwrap();
    let b = run_experiment(&small(60)).unwrap();
    assert_eq!(a.series[0].mean, b.series_for(AlgorithmKind::PushPull).unwrap().mean);
}

#[test]
fn divergent_trials_are_recorded_not_fatal() {
    let cfg = ExperimentConfig {
        alpha: 50.0,
        algorithms: vec![AlgorithmKind::PushPull],
        ..small(2000)
    };
    let report = run_experiment(&cfg).unwrap();
    assert!(report.all_aborted());
    assert!(report.theory.at_run_alpha.is_none());
    assert!(report.theory.at_run_alpha_error.as_deref().unwrap().contains("1/(mu + L)"));
    for r in &report.trials {
        let k = r.aborted_at.expect("abort iteration");
        assert_eq!(r.series.len(), k - 1);
        assert!(r.final_error.is_none());
    }
    let s = &report.series[0];
    assert!(s.diverged);
    assert!(s.mean.last().unwrap().is_nan());
}

#[test]
fn custom_graph_file_is_used_and_checked() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("ring.txt");
    fs::write(&good, "n 3\n0 1\n1 2\n2 0\n").unwrap();
    let cfg = ExperimentConfig {
        n: 3,
        p: 2,
        graph_file: Some(good),
        ..small(10)
    };
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.graph_edges.len(), 6);

    let bad = dir.path().join("path.txt");
    fs::write(&bad, "n 3\n0 1\n1 2\n").unwrap();
    let cfg = ExperimentConfig {
        graph_file: Some(bad),
        ..cfg
    };
    assert!(matches!(run_experiment(&cfg), Err(Error::AssumptionViolation(_))));
}

#[test]
fn config_file_round_trip_and_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    let cfg = small(10);
    fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    assert_eq!(ExperimentConfig::from_json_file(&path).unwrap(), cfg);

    fs::write(&path, r#"{"algorithms": []}"#).unwrap();
    assert!(matches!(ExperimentConfig::from_json_file(&path), Err(Error::InvalidParameter(_))));
    fs::write(&path, r#"{"trails": 3}"#).unwrap();
    assert!(matches!(ExperimentConfig::from_json_file(&path), Err(Error::Json(_))));
    assert!(matches!(
        ExperimentConfig::from_json_file(&dir.path().join("missing.json")),
        Err(Error::Io { .. })
    ));
}
