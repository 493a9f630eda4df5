//! Campaign execution and result export for the stardcm simulator: scenario
//! loading, Monte-Carlo trial dispatch, per-slot CSV logs, summary statistics,
//! sweeps along one configuration axis, and the reproducibility manifest.
//!
//! Output files per run: `manifest.json` (everything needed to reproduce the
//! run bitwise), `slots.csv` (one row per slot per trial), `summary.json`
//! (means/stds across trials), and optional `pattern_<k>.csv` scattering-grid
//! exports for the first trial.

use rayon::prelude::*;
use serde::Serialize;
use stardcm::geometry::Direction;
use stardcm::metasurface::{
    design_reflection_phases, design_transmission_phases, quantize_phase, scattering_pattern,
    DcmProfile, Side,
};
use stardcm::protocol::{derive_trial_seed, run_campaign, CampaignOutcome, SlotMetrics, SEED_RULE};
use stardcm::scenario::{CompiledScenario, Scenario, SplitConfig};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Version of the slots.csv column layout and summary.json structure.
pub const SCHEMA_VERSION: u32 = 1;

/// Convention note recorded in every manifest: the communication SNR constant
/// carries the squared mean short-range magnitude.
pub const MU_C_CONVENTION: &str = "c_t = mu_c^2 * p_t * N * L^2 * loss / sigma2_wt";

pub const SLOTS_CSV_HEADER: &str = "trial,slot,rho,lambda,p_a1,p_a2,snr1,rate1,rate2,rate2_genie,\
sum_rate,gain_tx1,gain_sens_rx,gain_dcm,gain_comms_rx1,gain_tx2,gain_comms_rx2,\
true_theta,true_phi,true_d,true_v,\
pred_err_theta,pred_err_phi,pred_err_d,pred_err_v,\
fine_err_theta,fine_err_phi,fine_err_d,fine_err_v,\
meas_var_theta,meas_var_phi,meas_var_d,meas_var_v,\
empirical_snr1,empirical_comm_snr1";

#[derive(Debug, Error)]
pub enum CliError {
    /// Configuration problems: exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// Simulation or I/O failures: exit code 3.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(context: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{context}: {e}"))
}

/// CLI-level overrides on top of the scenario file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub signal_level: bool,
    pub patterns: bool,
    pub workers: Option<usize>,
}

/// Loads and validates a scenario file; parse errors carry line/column.
pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let scenario: Scenario = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    scenario.validate().map_err(config_err)?;
    Ok(scenario)
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub software_version: &'static str,
    pub created_utc: String,
    pub master_seed: u64,
    pub trial_seeds: Vec<u64>,
    pub seed_rule: &'static str,
    pub mu_c_convention: &'static str,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

fn stat(values: &[f64]) -> Stat {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Stat {
        mean,
        std: var.sqrt(),
    }
}

/// Per-trial aggregates feeding the cross-trial summary.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrialAggregate {
    pub trial: usize,
    pub slots: usize,
    pub terminated: bool,
    pub mean_sum_rate: f64,
    pub mean_snr1: f64,
    pub mean_rate1: f64,
    pub mean_rate2: f64,
    pub mean_rate2_genie: f64,
    pub mean_p_a1: f64,
    pub mean_p_a2: f64,
    pub mean_rho: f64,
    pub mean_lambda: f64,
    /// RMSE of the combined angular fine error, radians.
    pub angle_rmse: f64,
    pub rmse_theta: f64,
    pub rmse_phi: f64,
    /// Mean sum rate over the genie communication-only rate.
    pub genie_ratio: f64,
}

fn aggregate(trial: usize, outcome: &CampaignOutcome) -> TrialAggregate {
    let n = outcome.slots.len().max(1) as f64;
    let mean = |f: &dyn Fn(&SlotMetrics) -> f64| outcome.slots.iter().map(|s| f(s)).sum::<f64>() / n;
    let sq_theta = mean(&|s| s.fine_error[0].powi(2));
    let sq_phi = mean(&|s| s.fine_error[1].powi(2));
    let mean_rate2_genie = mean(&|s| s.rate_subslot2_genie);
    let mean_sum_rate = mean(&|s| s.sum_rate);
    TrialAggregate {
        trial,
        slots: outcome.slots.len(),
        terminated: outcome.termination.is_some(),
        mean_sum_rate,
        mean_snr1: mean(&|s| s.snr_subslot1),
        mean_rate1: mean(&|s| s.rate_subslot1),
        mean_rate2: mean(&|s| s.rate_subslot2),
        mean_rate2_genie,
        mean_p_a1: mean(&|s| s.p_a1),
        mean_p_a2: mean(&|s| s.p_a2),
        mean_rho: mean(&|s| s.rho),
        mean_lambda: mean(&|s| s.lambda),
        angle_rmse: (sq_theta + sq_phi).sqrt(),
        rmse_theta: sq_theta.sqrt(),
        rmse_phi: sq_phi.sqrt(),
        genie_ratio: if mean_rate2_genie > 0.0 {
            mean_sum_rate / mean_rate2_genie
        } else {
            0.0
        },
    }
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub trials: usize,
    pub slots_per_trial: usize,
    pub terminated_trials: usize,
    pub sum_rate: Stat,
    pub snr1: Stat,
    pub rate1: Stat,
    pub rate2: Stat,
    pub rate2_genie: Stat,
    pub p_a1: Stat,
    pub p_a2: Stat,
    pub rho: Stat,
    pub lambda: Stat,
    pub angle_rmse: Stat,
    pub genie_ratio: Stat,
    pub terminations: Vec<String>,
}

fn summarize(aggregates: &[TrialAggregate], outcomes: &[CampaignOutcome]) -> RunSummary {
    let col = |f: &dyn Fn(&TrialAggregate) -> f64| {
        stat(&aggregates.iter().map(|a| f(a)).collect::<Vec<_>>())
    };
    RunSummary {
        schema_version: SCHEMA_VERSION,
        trials: aggregates.len(),
        slots_per_trial: aggregates.iter().map(|a| a.slots).max().unwrap_or(0),
        terminated_trials: aggregates.iter().filter(|a| a.terminated).count(),
        sum_rate: col(&|a| a.mean_sum_rate),
        snr1: col(&|a| a.mean_snr1),
        rate1: col(&|a| a.mean_rate1),
        rate2: col(&|a| a.mean_rate2),
        rate2_genie: col(&|a| a.mean_rate2_genie),
        p_a1: col(&|a| a.mean_p_a1),
        p_a2: col(&|a| a.mean_p_a2),
        rho: col(&|a| a.mean_rho),
        lambda: col(&|a| a.mean_lambda),
        angle_rmse: col(&|a| a.angle_rmse),
        genie_ratio: col(&|a| a.genie_ratio),
        terminations: outcomes
            .iter()
            .filter_map(|o| o.termination.clone())
            .collect(),
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn slot_row(trial: usize, s: &SlotMetrics) -> String {
    let mut row = String::with_capacity(512);
    let _ = write!(
        row,
        "{trial},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        s.slot_index,
        fmt_f64(s.rho),
        fmt_f64(s.lambda),
        fmt_f64(s.p_a1),
        fmt_f64(s.p_a2),
        fmt_f64(s.snr_subslot1),
        fmt_f64(s.rate_subslot1),
        fmt_f64(s.rate_subslot2),
        fmt_f64(s.rate_subslot2_genie),
        fmt_f64(s.sum_rate),
        fmt_f64(s.gains.tx1),
        fmt_f64(s.gains.sens_rx),
        fmt_f64(s.gains.dcm),
        fmt_f64(s.gains.comms_rx1),
        fmt_f64(s.gains.tx2),
        fmt_f64(s.gains.comms_rx2),
    );
    for block in [
        &s.true_state,
        &s.prediction_error,
        &s.fine_error,
        &s.meas_variance,
    ] {
        for v in block.iter() {
            let _ = write!(row, ",{}", fmt_f64(*v));
        }
    }
    let _ = write!(
        row,
        ",{},{}",
        fmt_opt(s.empirical_snr1),
        fmt_opt(s.empirical_comm_snr1)
    );
    row
}

pub fn slots_csv(outcomes: &[CampaignOutcome]) -> String {
    let mut out = String::new();
    out.push_str(SLOTS_CSV_HEADER);
    out.push('\n');
    for (trial, outcome) in outcomes.iter().enumerate() {
        for s in &outcome.slots {
            out.push_str(&slot_row(trial, s));
            out.push('\n');
        }
    }
    out
}

fn worker_count(opts: &RunOptions) -> usize {
    if let Ok(s) = std::env::var("STARDCM_WORKERS") {
        if let Ok(n) = s.parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    opts.workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs all trials of a scenario. Trials are dispatched to a bounded worker
/// pool; rows are buffered per trial and written in trial order, so the
/// output bytes do not depend on the concurrency level.
pub fn run_trials(
    compiled: &CompiledScenario,
    trials: usize,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<CampaignOutcome>, CliError> {
    let n_slots = compiled.config.n_slots;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| runtime_err("worker pool", e))?;
    pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|trial| {
                run_campaign(compiled, n_slots, derive_trial_seed(master_seed, trial as u64))
                    .map_err(|e| runtime_err(&format!("trial {trial}"), e))
            })
            .collect()
    })
}

/// Executes a scenario and writes `manifest.json`, `slots.csv`,
/// `summary.json`, and optional pattern exports into `output_dir`.
pub fn run(
    scenario: &Scenario,
    output_dir: &Path,
    opts: &RunOptions,
) -> Result<RunSummary, CliError> {
    let mut effective = scenario.clone();
    if let Some(t) = opts.trials {
        effective.trials = t;
    }
    if let Some(s) = opts.seed {
        effective.seed = s;
    }
    if opts.signal_level {
        effective.signal_level = true;
    }
    effective.validate().map_err(config_err)?;
    let compiled = effective.compile().map_err(config_err)?;

    std::fs::create_dir_all(output_dir)
        .map_err(|e| runtime_err(&format!("creating {}", output_dir.display()), e))?;

    let trials = effective.trials;
    let master_seed = effective.seed;
    let outcomes = run_trials(&compiled, trials, master_seed, worker_count(opts))?;

    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        software_version: env!("CARGO_PKG_VERSION"),
        created_utc: chrono::Utc::now().to_rfc3339(),
        master_seed,
        trial_seeds: (0..trials as u64)
            .map(|t| derive_trial_seed(master_seed, t))
            .collect(),
        seed_rule: SEED_RULE,
        mu_c_convention: MU_C_CONVENTION,
        scenario: effective.clone(),
    };
    write_json(&output_dir.join("manifest.json"), &manifest)?;
    write_text(&output_dir.join("slots.csv"), &slots_csv(&outcomes))?;

    let aggregates: Vec<TrialAggregate> = outcomes
        .iter()
        .enumerate()
        .map(|(t, o)| aggregate(t, o))
        .collect();
    let summary = summarize(&aggregates, &outcomes);
    write_json(&output_dir.join("summary.json"), &summary)?;

    if opts.patterns {
        if let Some(first) = outcomes.first() {
            export_patterns(&compiled, first, output_dir)?;
        }
    }
    Ok(summary)
}

/// Per-slot scattering-pattern export for the first trial: the reflection side
/// of the joint-sub-slot profile and the transmission side of the refined
/// profile, evaluated over a polar-angle cut at the slot's true azimuth with
/// the short-range phase compensation removed.
fn export_patterns(
    sc: &CompiledScenario,
    outcome: &CampaignOutcome,
    output_dir: &Path,
) -> Result<(), CliError> {
    let grid_len = 181;
    for s in &outcome.slots {
        let truth = s.true_state;
        let pred_theta = truth[0] + s.prediction_error[0];
        let pred_phi = truth[1] + s.prediction_error[1];
        let fine_theta = truth[0] + s.fine_error[0];
        let fine_phi = truth[1] + s.fine_error[1];
        let (Ok(pred_dir), Ok(fine_dir), Ok(true_dir)) = (
            Direction::new(pred_theta.clamp(0.0, std::f64::consts::FRAC_PI_2), pred_phi),
            Direction::new(fine_theta.clamp(0.0, std::f64::consts::FRAC_PI_2), fine_phi),
            Direction::new(truth[0], truth[1]),
        ) else {
            continue;
        };
        let dcm = &sc.geometry.dcm;
        let zeros = vec![0.0; dcm.len()];
        let reflect: Vec<f64> = design_reflection_phases(&pred_dir, dcm, sc.lambda0)
            .iter()
            .map(|&p| quantize_phase(p, sc.reflect_codebook.as_ref()))
            .collect();
        let transmit: Vec<f64> =
            design_transmission_phases(&fine_dir, &zeros, dcm, sc.lambda0)
                .map_err(|e| runtime_err("pattern export", e))?
                .iter()
                .map(|&p| quantize_phase(p, sc.transmit_codebook.as_ref()))
                .collect();
        let profile = DcmProfile::build(
            stardcm::metasurface::StarMechanism::EnergySplitting { lambda: s.lambda },
            &reflect,
            &transmit,
            sc.loss_factor,
        )
        .map_err(|e| runtime_err("pattern export", e))?;

        let grid: Vec<Direction> = (0..grid_len)
            .map(|i| {
                Direction::new(
                    i as f64 / (grid_len - 1) as f64 * std::f64::consts::FRAC_PI_2,
                    truth[1],
                )
                .expect("grid angle in range")
            })
            .collect();
        let refl = scattering_pattern(&profile, &true_dir, Side::Reflection, &grid, dcm, sc.lambda0);
        let tran = scattering_pattern(&profile, &true_dir, Side::Transmission, &grid, dcm, sc.lambda0);

        let mut text = String::from("theta,reflection_power,transmission_power\n");
        for (i, d) in grid.iter().enumerate() {
            let _ = writeln!(text, "{},{},{}", fmt_f64(d.theta()), fmt_f64(refl[i]), fmt_f64(tran[i]));
        }
        write_text(
            &output_dir.join(format!("pattern_{}.csv", s.slot_index)),
            &text,
        )?;
    }
    Ok(())
}

/// Sweepable configuration axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Fixed-mode energy split.
    Lambda,
    /// Fixed-mode time split.
    Rho,
    /// Forced prediction event probability (optimizer mode).
    PA1,
    /// Maximum sensing SNR constant (linear); adjusts the received power.
    CR,
    /// Maximum sensing SNR in dB; adjusts the received power.
    Snr,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lambda" => Ok(SweepAxis::Lambda),
            "rho" => Ok(SweepAxis::Rho),
            "p_a1" => Ok(SweepAxis::PA1),
            "c_r" => Ok(SweepAxis::CR),
            "snr" => Ok(SweepAxis::Snr),
            other => Err(format!(
                "unknown axis {other:?}; expected lambda | rho | p_a1 | c_r | snr"
            )),
        }
    }
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda",
            SweepAxis::Rho => "rho",
            SweepAxis::PA1 => "p_a1",
            SweepAxis::CR => "c_r",
            SweepAxis::Snr => "snr",
        }
    }
}

fn apply_axis(scenario: &Scenario, axis: SweepAxis, value: f64) -> Result<Scenario, CliError> {
    let mut sc = scenario.clone();
    match axis {
        SweepAxis::Lambda => match sc.split {
            SplitConfig::Fixed { rho, .. } => {
                sc.split = SplitConfig::Fixed { rho, lambda: value };
            }
            _ => {
                return Err(CliError::Config(
                    "axis lambda requires split.mode = fixed".into(),
                ))
            }
        },
        SweepAxis::Rho => match sc.split {
            SplitConfig::Fixed { lambda, .. } => {
                sc.split = SplitConfig::Fixed { rho: value, lambda };
            }
            _ => {
                return Err(CliError::Config(
                    "axis rho requires split.mode = fixed".into(),
                ))
            }
        },
        SweepAxis::PA1 => {
            sc.p_a1_override = Some(value);
        }
        SweepAxis::CR | SweepAxis::Snr => {
            let c_r = match axis {
                SweepAxis::Snr => 10f64.powf(value / 10.0),
                _ => value,
            };
            if !(c_r > 0.0) {
                return Err(CliError::Config(format!(
                    "axis {} value {value} yields a nonpositive SNR constant",
                    axis.name()
                )));
            }
            let (n, m, l) = (
                sc.comms_tx_elements as f64,
                sc.sens_rx_elements as f64,
                (sc.dcm_l_h * sc.dcm_l_v) as f64,
            );
            sc.link_budget.p_r =
                c_r * sc.link_budget.sigma2_wr / (n * m * l * l * sc.loss_factor);
        }
    }
    sc.validate().map_err(config_err)?;
    Ok(sc)
}

pub const SWEEP_CSV_HEADER: &str = "axis,value,mean_sum_rate,mean_snr1,mean_rate1,mean_rate2,\
angle_rmse,rmse_theta,rmse_phi,mean_p_a1,mean_p_a2,mean_rho,mean_lambda,terminated_trials";

/// Runs the scenario once per sweep value and writes one summary row each to
/// `sweep.csv`, plus a manifest.
pub fn sweep(
    scenario: &Scenario,
    axis: SweepAxis,
    values: &[f64],
    output_dir: &Path,
    opts: &RunOptions,
) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    std::fs::create_dir_all(output_dir)
        .map_err(|e| runtime_err(&format!("creating {}", output_dir.display()), e))?;

    let mut rows = String::from(SWEEP_CSV_HEADER);
    rows.push('\n');
    for &value in values {
        let mut point = apply_axis(scenario, axis, value)?;
        if let Some(t) = opts.trials {
            point.trials = t;
        }
        if let Some(s) = opts.seed {
            point.seed = s;
        }
        point.validate().map_err(config_err)?;
        let compiled = point.compile().map_err(config_err)?;
        let outcomes = run_trials(&compiled, point.trials, point.seed, worker_count(opts))?;
        let aggregates: Vec<TrialAggregate> = outcomes
            .iter()
            .enumerate()
            .map(|(t, o)| aggregate(t, o))
            .collect();
        let s = summarize(&aggregates, &outcomes);
        let _ = writeln!(
            rows,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            axis.name(),
            fmt_f64(value),
            fmt_f64(s.sum_rate.mean),
            fmt_f64(s.snr1.mean),
            fmt_f64(s.rate1.mean),
            fmt_f64(s.rate2.mean),
            fmt_f64(s.angle_rmse.mean),
            fmt_f64(stat(&aggregates.iter().map(|a| a.rmse_theta).collect::<Vec<_>>()).mean),
            fmt_f64(stat(&aggregates.iter().map(|a| a.rmse_phi).collect::<Vec<_>>()).mean),
            fmt_f64(s.p_a1.mean),
            fmt_f64(s.p_a2.mean),
            fmt_f64(s.rho.mean),
            fmt_f64(s.lambda.mean),
            s.terminated_trials,
        );
    }
    write_text(&output_dir.join("sweep.csv"), &rows)?;

    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        software_version: env!("CARGO_PKG_VERSION"),
        created_utc: chrono::Utc::now().to_rfc3339(),
        master_seed: opts.seed.unwrap_or(scenario.seed),
        trial_seeds: Vec::new(),
        seed_rule: SEED_RULE,
        mu_c_convention: MU_C_CONVENTION,
        scenario: scenario.clone(),
    };
    write_json(&output_dir.join("manifest.json"), &manifest)?;
    Ok(())
}

/// Resolves the output directory, honoring the `STARDCM_OUT_DIR` override.
pub fn resolve_output_dir(cli_dir: &Path) -> PathBuf {
    match std::env::var("STARDCM_OUT_DIR") {
        Ok(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => cli_dir.to_path_buf(),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| runtime_err(&format!("writing {}", path.display()), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| runtime_err("serializing output", e))?;
    write_text(path, &(text + "\n"))
}
