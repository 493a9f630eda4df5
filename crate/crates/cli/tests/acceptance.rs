//! Acceptance suite: one test per release criterion, each printing a PASS
//! line with the measured values. Criteria with runtime budgets serialize on
//! a mutex so wall-clock assertions are not distorted by sibling tests.

use nalgebra::{DVector, Matrix4, Vector4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stardcm::channel::{
    empirical_snr, realize_channel_with_c, sensing_snr, synthesize_comm_block,
    synthesize_sensing_block, ArrayGains, LinkBudget, SystemGeometry,
};
use stardcm::geometry::{
    round_trip_steering, steering_vector, steering_vector_cosines, ArrayGeometry, ArrayRole,
    Direction,
};
use stardcm::metasurface::{
    design_reflection_phases, design_transmission_phases, dcm_reflection_gain, DcmProfile,
    PhaseCodebook, PolarizationRole, StarMechanism,
};
use stardcm::optimizer::{optimize_split, AverageBudget, Pa2Closure};
use stardcm::protocol::BeamformerPair;
use stardcm::scenario::{Scenario, SplitConfig, TruthConfig};
use stardcm::tracking::{ekf_update, measurement_noise, PcrbProxy, StateEstimate, TargetState};
use std::f64::consts::{PI, TAU};
use std::sync::Mutex;
use std::time::Instant;

static TIMED: Mutex<()> = Mutex::new(());

fn timed_guard() -> std::sync::MutexGuard<'static, ()> {
    TIMED.lock().unwrap_or_else(|e| e.into_inner())
}

fn rand_direction(rng: &mut ChaCha8Rng) -> Direction {
    Direction::new(rng.random_range(0.0..PI / 2.0), rng.random_range(0.0..TAU)).unwrap()
}

fn rand_phases(l: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..l).map(|_| rng.random_range(0.0..TAU)).collect()
}

#[test]
fn criterion_01_power_conservation() {
    let _guard = timed_guard();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let l = 16;
    let profiles_per_mechanism = 10_000;
    let mut worst: f64 = 0.0;
    for mechanism_id in 0..5 {
        for trial in 0..profiles_per_mechanism {
            let loss = if trial % 3 == 0 {
                1.0
            } else {
                rng.random_range(0.05..1.0)
            };
            let mechanism = match mechanism_id {
                0 => StarMechanism::EnergySplitting {
                    lambda: rng.random_range(f64::EPSILON..=1.0),
                },
                1 => StarMechanism::ModeSwitching {
                    reflect_mask: (0..l).map(|_| rng.random_bool(0.5)).collect(),
                },
                2 => StarMechanism::TimeDivision {
                    reflect_fraction: rng.random_range(0.0..=1.0),
                },
                3 => StarMechanism::PolarizationDivision {
                    assignment: (0..l)
                        .map(|_| {
                            if rng.random_bool(0.5) {
                                PolarizationRole::HTransmits
                            } else {
                                PolarizationRole::VTransmits
                            }
                        })
                        .collect(),
                },
                _ => StarMechanism::FrequencyDivision {
                    f_reflect_hz: rng.random_range(1e9..5e9),
                    f_transmit_hz: rng.random_range(5.1e9..9e9),
                },
            };
            let profile = DcmProfile::build(
                mechanism,
                &rand_phases(l, &mut rng),
                &rand_phases(l, &mut rng),
                loss,
            )
            .unwrap();
            worst = worst.max(profile.power_conservation_residual());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(worst <= 1e-12, "max conservation residual {worst}");
    assert!(elapsed < 5.0, "runtime {elapsed:.2} s exceeds 5 s");
    println!(
        "criterion 1 PASS: power conservation over 5 x {profiles_per_mechanism} profiles, \
         max residual {worst:.2e}, {elapsed:.2} s"
    );
}

#[test]
fn criterion_02_cauchy_schwarz_optimality() {
    let lambda0 = 0.0107;
    let dcm = ArrayGeometry::rectangular_dcm(16, 16, lambda0 / 2.0).unwrap();
    let l2 = (dcm.len() * dcm.len()) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst_rel: f64 = 0.0;
    for _ in 0..1000 {
        let d = rand_direction(&mut rng);
        let lambda: f64 = rng.random_range(0.01..=1.0);
        let phases = design_reflection_phases(&d, &dcm, lambda0);
        let gamma = DVector::from_iterator(
            dcm.len(),
            phases
                .iter()
                .map(|&p| Complex64::from_polar(lambda.sqrt(), p)),
        );
        let alpha = round_trip_steering(&dcm, &d, lambda0);
        let gain = alpha.dotc(&gamma).norm_sqr();
        worst_rel = worst_rel.max((gain - lambda * l2).abs() / (lambda * l2));
    }
    assert!(worst_rel <= 1e-9, "matched gain off by {worst_rel:.2e} relative");

    let mut worst_gain: f64 = 0.0;
    for _ in 0..1000 {
        let d1 = rand_direction(&mut rng);
        let d2 = rand_direction(&mut rng);
        let gain = dcm_reflection_gain(&d1, &d2, &dcm, lambda0);
        assert!(gain <= l2 * (1.0 + 1e-12), "gain {gain} exceeds L^2 = {l2}");
        worst_gain = worst_gain.max(gain);
    }
    println!(
        "criterion 2 PASS: matched reflection gain = lambda L^2 within {worst_rel:.2e} \
         relative; mismatched gains bounded by L^2 (max {worst_gain:.4e} <= {l2})"
    );
}

#[test]
fn criterion_03_gain_bounds_and_upsilon_sum() {
    let lambda0 = 0.0107;
    let geometry = SystemGeometry {
        comms_tx: ArrayGeometry::uniform_linear(ArrayRole::CommsTx, 16, lambda0 / 2.0).unwrap(),
        sens_rx: ArrayGeometry::uniform_linear(ArrayRole::SensRx, 16, lambda0 / 2.0).unwrap(),
        dcm: ArrayGeometry::rectangular_dcm(8, 8, lambda0 / 2.0).unwrap(),
    };
    let (n, m) = (geometry.n(), geometry.m());
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst_upsilon_rel: f64 = 0.0;
    for _ in 0..1000 {
        let true_dir = rand_direction(&mut rng);
        let steer_dir = rand_direction(&mut rng);
        let pair = BeamformerPair::matched(
            &steer_dir,
            &geometry.comms_tx,
            &geometry.sens_rx,
            lambda0,
        );
        let a_tx = steering_vector(&geometry.comms_tx, &true_dir, lambda0);
        let a_rx = steering_vector(&geometry.sens_rx, &true_dir, lambda0);
        let tx_gain = a_tx.dotc(&pair.b).norm_sqr();
        let rx_gain = pair.v.dotc(&a_rx).norm_sqr();
        assert!(tx_gain <= n as f64 * (1.0 + 1e-12), "tx gain {tx_gain}");
        assert!(rx_gain <= m as f64 * (1.0 + 1e-12), "rx gain {rx_gain}");

        // production path: designed phases against the incident signature
        let c: Vec<Complex64> = (0..geometry.l())
            .map(|_| {
                Complex64::from_polar(rng.random_range(0.02..0.2), rng.random_range(0.0..TAU))
            })
            .collect();
        let c_phases: Vec<f64> = c.iter().map(|z| z.arg()).collect();
        let phases =
            design_transmission_phases(&steer_dir, &c_phases, &geometry.dcm, lambda0).unwrap();
        let a_in =
            steering_vector_cosines(&geometry.dcm, &true_dir.cosines().negated(), lambda0);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..geometry.l() {
            acc += c[i] * Complex64::cis(phases[i]) * a_in[i];
        }
        let gain = acc.norm_sqr();

        // oracle: the short-range combining sum from first principles
        let kt = *true_dir.cosines().as_vector() * (TAU / lambda0);
        let ks = *steer_dir.cosines().as_vector() * (TAU / lambda0);
        let mut upsilon = Complex64::new(0.0, 0.0);
        for (i, p) in geometry.dcm.positions().iter().enumerate() {
            upsilon += Complex64::from_polar(c[i].norm(), (kt - ks).dot(p));
        }
        let oracle = upsilon.norm_sqr();
        let rel = (gain - oracle).abs() / oracle.max(1e-300);
        worst_upsilon_rel = worst_upsilon_rel.max(rel);
    }
    assert!(
        worst_upsilon_rel <= 1e-9,
        "combining gain off the brute-force sum by {worst_upsilon_rel:.2e}"
    );
    println!(
        "criterion 3 PASS: array gains bounded by N = {n} and M = {m}; Comms-Rx gain \
         matches the brute-force combining sum within {worst_upsilon_rel:.2e} relative \
         on 1000 random configs"
    );
}

#[test]
fn criterion_04_monte_carlo_matches_closed_forms() {
    let _guard = timed_guard();
    let start = Instant::now();
    let lambda0 = 0.0107;
    let geometry = SystemGeometry {
        comms_tx: ArrayGeometry::uniform_linear(ArrayRole::CommsTx, 8, lambda0 / 2.0).unwrap(),
        sens_rx: ArrayGeometry::uniform_linear(ArrayRole::SensRx, 8, lambda0 / 2.0).unwrap(),
        dcm: ArrayGeometry::rectangular_dcm(8, 8, lambda0 / 2.0).unwrap(),
    };
    let (n, m, l) = (geometry.n(), geometry.m(), geometry.l());
    let samples = 20_000;
    let lambda = 0.5;
    let state = TargetState {
        theta: 0.35,
        phi: 0.9,
        d: 80.0,
        v: 6.0,
    };
    let dir = state.direction().unwrap();
    let mut results = Vec::new();

    for (point, &snr_db) in [0.0, 10.0, 20.0].iter().enumerate() {
        let target = 10f64.powf(snr_db / 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(104 + point as u64);
        let c = stardcm::channel::draw_c_vector(0.1, l, 0.1, &mut rng);
        let c_phases: Vec<f64> = c.iter().map(|z| z.arg()).collect();

        // aligned beams and exact (unquantized) phase designs
        let pair = BeamformerPair::matched(&dir, &geometry.comms_tx, &geometry.sens_rx, lambda0);
        let reflect = design_reflection_phases(&dir, &geometry.dcm, lambda0);
        let transmit =
            design_transmission_phases(&dir, &c_phases, &geometry.dcm, lambda0).unwrap();
        let profile = DcmProfile::build(
            StarMechanism::EnergySplitting { lambda },
            &reflect,
            &transmit,
            1.0,
        )
        .unwrap();

        // closed-form gains (the factored expressions, not the cascade)
        let a_tx = steering_vector(&geometry.comms_tx, &dir, lambda0);
        let a_rx = steering_vector(&geometry.sens_rx, &dir, lambda0);
        let alpha = round_trip_steering(&geometry.dcm, &dir, lambda0);
        let a_in = steering_vector_cosines(&geometry.dcm, &dir.cosines().negated(), lambda0);
        let tx_gain = a_tx.dotc(&pair.b).norm_sqr();
        let rx_gain = pair.v.dotc(&a_rx).norm_sqr();
        let dcm_unit = alpha
            .dotc(&DVector::from_iterator(
                l,
                reflect.iter().map(|&p| Complex64::cis(p)),
            ))
            .norm_sqr();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..l {
            acc += c[i] * Complex64::cis(transmit[i]) * a_in[i];
        }
        let comms_rx_gain = acc.norm_sqr();

        // pin the operating points exactly through the power budget
        let p_r = target / (lambda * rx_gain * dcm_unit * tx_gain);
        let p_t = target / ((1.0 - lambda) * comms_rx_gain * tx_gain);
        let budget = LinkBudget {
            p_r,
            p_t,
            sigma2_wr: 1.0,
            sigma2_wt: 1.0,
            mu_c: 0.1,
        };
        let gains = ArrayGains::new(tx_gain, rx_gain, dcm_unit, n, m, l).unwrap();
        let closed_sensing = sensing_snr(&budget, &gains, lambda);
        let closed_comm =
            (1.0 - lambda) * budget.p_t * comms_rx_gain * tx_gain / budget.sigma2_wt;

        let ch = realize_channel_with_c(&state, &budget, &geometry, lambda0, c.clone(), 10.0)
            .unwrap();
        let symbols: Vec<Complex64> = (0..samples)
            .map(|_| {
                let re = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let im = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect();
        let t_u = 1e-5;
        let block =
            synthesize_sensing_block(&ch, &profile, &pair.b, &pair.v, &symbols, t_u, &mut rng)
                .unwrap();
        let reference: Vec<Complex64> = symbols
            .iter()
            .enumerate()
            .map(|(i, &s)| s * Complex64::cis(TAU * ch.doppler_round_trip_hz * t_u * i as f64))
            .collect();
        let empirical_sensing = empirical_snr(&block.combined, &reference);

        // the joint-sub-slot transmission keeps the energy-splitting magnitudes
        let comm = synthesize_comm_block(&ch, &profile, &pair.b, &symbols, t_u, &mut rng).unwrap();
        let reference_c: Vec<Complex64> = symbols
            .iter()
            .enumerate()
            .map(|(i, &s)| s * Complex64::cis(TAU * ch.doppler_forward_hz * t_u * i as f64))
            .collect();
        let empirical_comm = empirical_snr(&comm.samples, &reference_c);

        let dev_s = (empirical_sensing - closed_sensing).abs() / closed_sensing;
        let dev_c = (empirical_comm - closed_comm).abs() / closed_comm;
        assert!(
            dev_s <= 0.03,
            "{snr_db} dB: sensing deviation {dev_s:.4} exceeds 3% \
             (empirical {empirical_sensing:.4}, closed {closed_sensing:.4})"
        );
        assert!(
            dev_c <= 0.03,
            "{snr_db} dB: comm deviation {dev_c:.4} exceeds 3% \
             (empirical {empirical_comm:.4}, closed {closed_comm:.4})"
        );
        results.push((snr_db, dev_s, dev_c));
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "runtime {elapsed:.2} s exceeds 30 s");
    for (snr_db, dev_s, dev_c) in &results {
        println!(
            "criterion 4 PASS at {snr_db} dB: sensing within {:.2}%, comm within {:.2}% \
             over {samples} samples",
            dev_s * 100.0,
            dev_c * 100.0
        );
    }
    println!("criterion 4 PASS: all operating points, {elapsed:.2} s");
}

#[test]
fn criterion_05_accuracy_proxy_scaling_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for _ in 0..1000 {
        let proxy = PcrbProxy {
            kappa_theta: rng.random_range(1e-4..10.0),
            kappa_phi: rng.random_range(1e-4..10.0),
            kappa_d: rng.random_range(1e-2..100.0),
            kappa_v: rng.random_range(1e-2..100.0),
        };
        let i: u64 = rng.random_range(1..100_000);
        let snr = rng.random_range(1e-3..1e6);
        let base = measurement_noise(&proxy, i, snr).unwrap();
        let double_i = measurement_noise(&proxy, 2 * i, snr).unwrap();
        let double_snr = measurement_noise(&proxy, i, 2.0 * snr).unwrap();
        for q in 0..4 {
            assert_eq!(double_i[(q, q)], base[(q, q)] / 2.0);
            assert_eq!(double_snr[(q, q)], base[(q, q)] / 2.0);
        }
    }
    println!(
        "criterion 5 PASS: variance halves exactly when doubling the measurement count \
         or the SNR, 1000 random configurations"
    );
}

#[test]
fn criterion_06_ekf_matches_fusion_oracle_and_tracks_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let pv = Vector4::new(
            rng.random_range(1e-4..4.0),
            rng.random_range(1e-4..4.0),
            rng.random_range(1e-2..100.0),
            rng.random_range(1e-2..25.0),
        );
        let rv = Vector4::new(
            rng.random_range(1e-4..4.0),
            rng.random_range(1e-4..4.0),
            rng.random_range(1e-2..100.0),
            rng.random_range(1e-2..25.0),
        );
        let prior_mean = Vector4::new(
            rng.random_range(0.1..1.4),
            rng.random_range(0.5..5.5),
            rng.random_range(30.0..150.0),
            rng.random_range(-20.0..20.0),
        );
        let shift = rng.random_range(-1.0..1.0);
        let meas_mean = prior_mean + Vector4::new(0.02, 0.03, 1.0, 0.2) * shift;
        let prior = StateEstimate::new(
            TargetState::from_vector(&prior_mean),
            Matrix4::from_diagonal(&pv),
        )
        .unwrap();
        let post = ekf_update(
            &prior,
            &TargetState::from_vector(&meas_mean),
            &Matrix4::from_diagonal(&rv),
        )
        .unwrap();
        for q in 0..4 {
            let var = 1.0 / (1.0 / pv[q] + 1.0 / rv[q]);
            let mean = var * (prior_mean[q] / pv[q] + meas_mean[q] / rv[q]);
            worst = worst.max((post.covariance[(q, q)] - var).abs() / var);
            worst = worst.max((post.mean.as_vector()[q] - mean).abs() / mean.abs().max(1e-9));
        }
    }
    assert!(worst <= 1e-9, "worst fusion deviation {worst:.2e}");

    // noise-free closed loop over 20 slots
    let mut cfg = Scenario::minimal(28e9, 16, 16, 16, 16);
    cfg.disable_measurement_noise = true;
    cfg.initial_truth = TruthConfig::Polar {
        theta: stardcm::scenario::Angle(0.35),
        phi: stardcm::scenario::Angle(0.9),
        distance_m: 120.0,
        radial_speed_mps: 7.0,
    };
    let compiled = cfg.compile().unwrap();
    let outcome = stardcm::protocol::run_campaign(&compiled, 20, 1).unwrap();
    assert_eq!(outcome.slots.len(), 20);
    let mut worst_track: f64 = 0.0;
    for s in &outcome.slots {
        for e in s.fine_error {
            worst_track = worst_track.max(e.abs());
        }
    }
    assert!(worst_track < 1e-9, "noise-free loop drifted by {worst_track:.2e}");
    println!(
        "criterion 6 PASS: Bayesian-fusion oracle agreement within {worst:.2e} on 1000 \
         diagonal problems; noise-free loop error {worst_track:.2e} over 20 slots"
    );
}

#[test]
fn criterion_07_optimizer_regimes() {
    let _guard = timed_guard();
    let start = Instant::now();
    let proxy = PcrbProxy::default();
    // effective beamwidth of the 16-element / 16x16 half-wavelength setup
    let hpbw = (0.886 / 7.5, 0.886 / 7.5);
    let closure = Pa2Closure::Model {
        hpbw_effective: hpbw,
        proxy: &proxy,
        slot_symbols: 1000.0,
    };
    for &c_t in &[10.0, 100.0, 1000.0] {
        let poor = AverageBudget::new(1e4, c_t, 0.01).unwrap();
        let d = optimize_split(&poor, 0.01, &closure).unwrap();
        assert!(
            d.lambda >= 0.95,
            "c_t = {c_t}: poor prediction - lambda* = {} below 0.95",
            d.lambda
        );

        let accurate = AverageBudget::new(1e3, c_t, 0.99).unwrap();
        let d = optimize_split(&accurate, 0.01, &closure).unwrap();
        assert!(
            d.rho <= 0.1,
            "c_t = {c_t}: accurate prediction - rho* = {} above 0.1",
            d.rho
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "runtime {elapsed:.2} s exceeds 10 s");
    println!(
        "criterion 7 PASS: poor prediction drives lambda* >= 0.95 and accurate \
         prediction drives rho* <= 0.1 for C_T in {{10, 100, 1000}}, {elapsed:.2} s"
    );
}

#[test]
fn criterion_08_quantization_loss() {
    let lambda0 = 0.0107;
    let dcm = ArrayGeometry::rectangular_dcm(16, 16, lambda0 / 2.0).unwrap();
    let l = dcm.len() as f64;
    let mut results = Vec::new();
    for &(bits, floor) in &[(4u32, 0.98), (2u32, 0.90)] {
        let cb = PhaseCodebook::new(bits).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(108);
        let mut amp_sum = 0.0;
        let mut pow_sum = 0.0;
        let targets = 1000;
        for _ in 0..targets {
            let d = rand_direction(&mut rng);
            let phases = design_reflection_phases(&d, &dcm, lambda0);
            let alpha = round_trip_steering(&dcm, &d, lambda0);
            let quantized = DVector::from_iterator(
                dcm.len(),
                phases.iter().map(|&p| Complex64::cis(cb.quantize(p))),
            );
            let coherent = alpha.dotc(&quantized).norm();
            amp_sum += coherent / l;
            pow_sum += (coherent / l).powi(2);
        }
        let mean_amp = amp_sum / targets as f64;
        let mean_pow = pow_sum / targets as f64;
        // uniform-error expectation of the coherent sum: sin(x)/x per element
        // with x = pi / 2^bits; the power factor is its square
        let x = PI / (1u32 << bits) as f64;
        let sinc = x.sin() / x;
        assert!(
            mean_amp >= floor,
            "{bits}-bit mean normalized gain {mean_amp:.5} below {floor} \
             (power factor {mean_pow:.5}, uniform-error expectation {sinc:.5})"
        );
        results.push((bits, mean_amp, mean_pow, sinc));
    }
    for (bits, amp, pow, sinc) in results {
        println!(
            "criterion 8 PASS: {bits}-bit mean normalized gain {amp:.5} \
             (power factor {pow:.5}, uniform-error expectation {sinc:.5} amplitude / \
             {:.5} power)",
            sinc * sinc
        );
    }
}

fn benchmark_scenario() -> Scenario {
    let mut sc = Scenario::minimal(28e9, 16, 16, 16, 16);
    // C_R = 1e5 (50 dB at full reflection) keeps every slot at or above 20 dB
    // even at the smallest grid lambda; C_T = 100
    sc.link_budget.p_r = 1e5 / (16.0 * 16.0 * 65536.0);
    sc.link_budget.p_t = 100.0 / (0.01 * 16.0 * 65536.0);
    sc.link_budget.mu_c = 0.1;
    sc.split = SplitConfig::Optimizer { resolution: 0.01 };
    sc.initial_truth = TruthConfig::Cartesian {
        position_m: [25.0, 15.0, 110.0],
        velocity_mps: [2.0, -1.0, -9.0],
    };
    sc.n_slots = 50;
    sc.trials = 100;
    sc.seed = 20_240_901;
    sc
}

#[test]
fn criterion_09_closed_loop_benchmark() {
    let _guard = timed_guard();
    let start = Instant::now();
    let sc = benchmark_scenario();
    let compiled = sc.compile().unwrap();
    let outcomes =
        stardcm_cli::run_trials(&compiled, sc.trials, sc.seed, num_workers()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();

    let mut sq_angle = 0.0;
    let mut sum_rate = 0.0;
    let mut genie = 0.0;
    let mut min_snr = f64::INFINITY;
    let mut count = 0usize;
    for outcome in &outcomes {
        assert_eq!(outcome.slots.len(), 50, "campaign terminated early");
        for s in &outcome.slots {
            sq_angle += s.fine_error[0].powi(2) + s.fine_error[1].powi(2);
            sum_rate += s.sum_rate;
            genie += s.rate_subslot2_genie;
            min_snr = min_snr.min(s.snr_subslot1);
            count += 1;
        }
    }
    let rmse = (sq_angle / count as f64).sqrt();
    let hpbw = compiled.hpbw_effective.0.min(compiled.hpbw_effective.1);
    let mean_sum_rate = sum_rate / count as f64;
    let mean_genie = genie / count as f64;
    let ratio = mean_sum_rate / mean_genie;

    assert!(
        min_snr >= 100.0,
        "per-slot sensing SNR dropped to {min_snr:.1} (below 20 dB)"
    );
    assert!(
        rmse < hpbw / 4.0,
        "direction RMSE {rmse:.4e} not below HPBW/4 = {:.4e}",
        hpbw / 4.0
    );
    assert!(
        ratio >= 0.95,
        "mean sum rate {mean_sum_rate:.4} is {:.1}% of the genie rate {mean_genie:.4}",
        ratio * 100.0
    );
    assert!(elapsed < 60.0, "runtime {elapsed:.2} s exceeds 60 s");
    println!(
        "criterion 9 PASS: direction RMSE {rmse:.3e} < HPBW/4 = {:.3e}, sum rate at \
         {:.1}% of genie, min slot SNR {:.0} ({:.1} dB), 100 trials in {elapsed:.2} s",
        hpbw / 4.0,
        ratio * 100.0,
        min_snr,
        10.0 * min_snr.log10()
    );
}

fn num_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[test]
fn criterion_10_benchmark_is_bitwise_reproducible() {
    let _guard = timed_guard();
    let sc = benchmark_scenario();
    let tmp = tempfile::tempdir().unwrap();
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    stardcm_cli::run(&sc, &dir_a, &Default::default()).unwrap();
    stardcm_cli::run(&sc, &dir_b, &Default::default()).unwrap();
    let a = std::fs::read(dir_a.join("slots.csv")).unwrap();
    let b = std::fs::read(dir_b.join("slots.csv")).unwrap();
    assert_eq!(a, b, "slots.csv differs between identical runs");
    println!(
        "criterion 10 PASS: two runs with the same master seed produced byte-identical \
         slots.csv ({} bytes)",
        a.len()
    );
}
