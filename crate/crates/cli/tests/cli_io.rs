//! File-level behavior of the CLI: scenario loading, output layout,
//! reproducibility, sweeps, and exit codes of the installed binary.

use stardcm::scenario::{Scenario, SplitConfig};
use stardcm_cli::{load_scenario, run, sweep, RunOptions, SweepAxis};
use std::path::Path;
use std::process::Command;

fn write_scenario(dir: &Path, name: &str, sc: &Scenario) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(sc).unwrap()).unwrap();
    path
}

fn mid_snr_scenario() -> Scenario {
    let mut sc = Scenario::minimal(28e9, 16, 16, 16, 16);
    sc.n_slots = 10;
    sc.trials = 1;
    sc.seed = 4242;
    sc
}

#[test]
fn single_trial_single_slot_yields_one_row() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sc = mid_snr_scenario();
    sc.n_slots = 1;
    run(&sc, tmp.path(), &RunOptions::default()).unwrap();
    let csv = std::fs::read_to_string(tmp.path().join("slots.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2, "header plus exactly one data row");
    assert!(lines[0].starts_with("trial,slot,rho,lambda"));
    assert!(lines[1].starts_with("0,1,"));
}

#[test]
fn same_seed_produces_byte_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = mid_snr_scenario();
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    run(&sc, &dir_a, &RunOptions::default()).unwrap();
    run(&sc, &dir_b, &RunOptions::default()).unwrap();
    let a = std::fs::read(dir_a.join("slots.csv")).unwrap();
    let b = std::fs::read(dir_b.join("slots.csv")).unwrap();
    assert_eq!(a, b);

    // a different seed changes the bytes
    let dir_c = tmp.path().join("c");
    run(
        &sc,
        &dir_c,
        &RunOptions {
            seed: Some(999),
            ..Default::default()
        },
    )
    .unwrap();
    let c = std::fs::read(dir_c.join("slots.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn outputs_include_manifest_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = mid_snr_scenario();
    let summary = run(
        &sc,
        tmp.path(),
        &RunOptions {
            trials: Some(3),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(summary.trials, 3);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["master_seed"], 4242);
    assert_eq!(manifest["trial_seeds"].as_array().unwrap().len(), 3);
    assert!(manifest["seed_rule"].as_str().unwrap().contains("splitmix64"));
    assert!(manifest["mu_c_convention"].as_str().unwrap().contains("mu_c^2"));
    assert_eq!(manifest["scenario"]["carrier_hz"], 28e9);

    let summary_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary_json["schema_version"], 1);
    assert!(summary_json["sum_rate"]["mean"].as_f64().unwrap() > 0.0);
}

#[test]
fn worker_count_does_not_change_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sc = mid_snr_scenario();
    sc.trials = 6;
    let dir_a = tmp.path().join("w1");
    let dir_b = tmp.path().join("w4");
    run(
        &sc,
        &dir_a,
        &RunOptions {
            workers: Some(1),
            ..Default::default()
        },
    )
    .unwrap();
    run(
        &sc,
        &dir_b,
        &RunOptions {
            workers: Some(4),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(
        std::fs::read(dir_a.join("slots.csv")).unwrap(),
        std::fs::read(dir_b.join("slots.csv")).unwrap()
    );
}

#[test]
fn pattern_export_writes_per_slot_grids() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sc = mid_snr_scenario();
    sc.n_slots = 2;
    run(
        &sc,
        tmp.path(),
        &RunOptions {
            patterns: true,
            ..Default::default()
        },
    )
    .unwrap();
    for k in 1..=2 {
        let text =
            std::fs::read_to_string(tmp.path().join(format!("pattern_{k}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "theta,reflection_power,transmission_power"
        );
        assert_eq!(lines.count(), 181);
    }
}

#[test]
fn lambda_sweep_is_monotone_in_both_directions() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sc = mid_snr_scenario();
    sc.link_budget.p_r = 1e-3; // high budget keeps every slot inside the lobes
    sc.trials = 2;
    sc.n_slots = 5;
    let values = [0.2, 0.4, 0.6, 0.8, 1.0];
    sweep(&sc, SweepAxis::Lambda, &values, tmp.path(), &RunOptions::default()).unwrap();
    let text = std::fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    assert_eq!(rows.len(), values.len());
    // columns after the axis label: value, mean_sum_rate, mean_snr1, mean_rate1, ...
    let snr1: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    let rate1: Vec<f64> = rows.iter().map(|r| r[3]).collect();
    for w in snr1.windows(2) {
        assert!(w[1] >= w[0] * (1.0 - 1e-12), "snr1 not nondecreasing: {snr1:?}");
    }
    for w in rate1.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "rate1 not nonincreasing: {rate1:?}");
    }
}

#[test]
fn rho_sweep_tightens_angle_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sc = mid_snr_scenario();
    sc.trials = 2;
    sc.n_slots = 5;
    let values = [0.1, 0.3, 0.5, 0.8];
    sweep(&sc, SweepAxis::Rho, &values, tmp.path(), &RunOptions::default()).unwrap();
    let text = std::fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    let rmse: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(6).unwrap().parse().unwrap())
        .collect();
    for w in rmse.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-9), "angle RMSE not nonincreasing: {rmse:?}");
    }
}

#[test]
fn golden_reference_run_stays_inside_bands() {
    // self-generated reference for the default mid-SNR scenario: values frozen
    // from a reference run of this configuration; bands cover libm variation
    let tmp = tempfile::tempdir().unwrap();
    let mut sc = mid_snr_scenario();
    sc.trials = 100;
    sc.n_slots = 10;
    let summary = run(&sc, tmp.path(), &RunOptions::default()).unwrap();
    let reference_sum_rate = 6.5077483286418625;
    let reference_snr1 = 82.35832970049321;
    let reference_angle_rmse = 0.0025867700689192422;
    assert!(
        (summary.sum_rate.mean - reference_sum_rate).abs() <= 0.005 * reference_sum_rate,
        "sum rate {} outside band around {reference_sum_rate}",
        summary.sum_rate.mean
    );
    assert!(
        (summary.snr1.mean - reference_snr1).abs() <= 0.005 * reference_snr1,
        "snr1 {} outside band around {reference_snr1}",
        summary.snr1.mean
    );
    assert!(
        (summary.angle_rmse.mean - reference_angle_rmse).abs() <= 0.01 * reference_angle_rmse,
        "angle RMSE {} outside band around {reference_angle_rmse}",
        summary.angle_rmse.mean
    );
}

#[test]
fn optimizer_scenario_runs_through_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sc = mid_snr_scenario();
    sc.split = SplitConfig::Optimizer { resolution: 0.05 };
    sc.n_slots = 3;
    let summary = run(&sc, tmp.path(), &RunOptions::default()).unwrap();
    assert!(summary.rho.mean > 0.0 && summary.rho.mean <= 1.0);
}

#[test]
fn binary_exit_codes_and_validate() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write_scenario(tmp.path(), "good.json", &mid_snr_scenario());
    let bin = env!("CARGO_BIN_EXE_stardcm");

    let ok = Command::new(bin).args(["validate"]).arg(&good).output().unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("scenario valid"));

    // config error: narrowband violation named in the message, exit code 2
    let mut bad = mid_snr_scenario();
    bad.bandwidth_hz = Some(28e9);
    let bad_path = write_scenario(tmp.path(), "bad.json", &bad);
    let err = Command::new(bin).args(["validate"]).arg(&bad_path).output().unwrap();
    assert_eq!(err.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&err.stderr).contains("narrowband"));

    // malformed JSON reports line/column, exit code 2
    let mangled = tmp.path().join("mangled.json");
    std::fs::write(&mangled, "{\"carrier_hz\": 28e9,,}").unwrap();
    let err = Command::new(bin).args(["validate"]).arg(&mangled).output().unwrap();
    assert_eq!(err.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&err.stderr).contains("line"));

    // missing file, exit code 2
    let err = Command::new(bin)
        .args(["validate", "does-not-exist.json"])
        .output()
        .unwrap();
    assert_eq!(err.status.code(), Some(2));

    // full run through the binary
    let out_dir = tmp.path().join("run-out");
    let ok = Command::new(bin)
        .args(["run"])
        .arg(&good)
        .args(["-o"])
        .arg(&out_dir)
        .args(["--trials", "1"])
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(out_dir.join("slots.csv").exists());

    // env var overrides the output directory
    let env_dir = tmp.path().join("env-out");
    let ok = Command::new(bin)
        .args(["run"])
        .arg(&good)
        .args(["-o"])
        .arg(&out_dir)
        .env("STARDCM_OUT_DIR", &env_dir)
        .args(["--trials", "1"])
        .output()
        .unwrap();
    assert!(ok.status.success());
    assert!(env_dir.join("slots.csv").exists());
}

#[test]
fn load_scenario_reports_field_violations() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sc = mid_snr_scenario();
    sc.split = SplitConfig::Fixed {
        rho: 0.2,
        lambda: 2.0,
    };
    let path = write_scenario(tmp.path(), "lam.json", &sc);
    let err = load_scenario(&path).unwrap_err();
    assert!(err.to_string().contains("split.lambda"), "{err}");
    assert_eq!(err.exit_code(), 2);
}
