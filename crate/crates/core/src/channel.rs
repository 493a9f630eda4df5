//! Cascaded LoS channel realizations, baseband signal synthesis for the
//! sensing and communication links, beamformer combining, and closed-form
//! SNR/rate evaluation.
//!
//! Cascade conventions. The spatial factors are rank-one LoS products built
//! from array response vectors. A wave arriving from direction `u` accumulates
//! the phase `+k(u)^T p_l` at element `l`, so the Comms-Tx-to-DCM factor
//! carries the negated-direction response on its DCM side and the
//! DCM-to-Sens-Rx factor carries the conjugated response:
//!
//! - `F = a_DCM(-u)  a_CommsTx^H(u)`   (L x N, unit path gain)
//! - `G = sqrt(P_R) a_SensRx(u) a_DCM^H(u)`   (M x L, carries the round-trip budget)
//!
//! With these choices the monostatic DCM factor of the cascade
//! `G Gamma_R F` equals `alpha^H gamma_R` exactly, where `alpha` is the
//! round-trip response with doubled phases — the identity every closed-form
//! expression in this crate is written against. The forward budget `P_T`
//! multiplies the communication synthesis directly, since both links share
//! `F` while only the reflected path is a round trip.

use crate::geometry::{steering_vector_cosines, ArrayGeometry};
use crate::metasurface::DcmProfile;
use crate::tracking::TargetState;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("{what} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{what} gain {value} exceeds its bound {bound}")]
    GainBoundViolation {
        what: &'static str,
        value: f64,
        bound: f64,
    },
    #[error("bandwidth {bandwidth_hz} Hz violates the narrowband contract (must be < f0/10 = {limit_hz} Hz)")]
    NarrowbandViolation { bandwidth_hz: f64, limit_hz: f64 },
    #[error("link budget field {field} must be positive, got {value}")]
    InvalidBudget { field: &'static str, value: f64 },
    #[error("transmit fraction must lie in [0, 1], got {0}")]
    InvalidTransmitFraction(f64),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Tracking(#[from] crate::tracking::TrackingError),
}

/// Received powers, noise variances, and the mean short-range channel
/// magnitude. `p_r` is the round-trip received sensing power and `p_t` the
/// forward received communication power, each already encompassing transmit
/// power and path loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// Received sensing power (round trip), watts.
    pub p_r: f64,
    /// Received communication power (forward), watts.
    pub p_t: f64,
    /// Sensing noise variance per receive antenna, watts.
    pub sigma2_wr: f64,
    /// Communication noise variance, watts.
    pub sigma2_wt: f64,
    /// Mean magnitude of the DCM-to-Comms-Rx channel entries, unitless.
    pub mu_c: f64,
}

impl LinkBudget {
    pub fn validate(&self) -> Result<(), ChannelError> {
        for (field, value) in [
            ("p_r", self.p_r),
            ("p_t", self.p_t),
            ("sigma2_wr", self.sigma2_wr),
            ("sigma2_wt", self.sigma2_wt),
            ("mu_c", self.mu_c),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ChannelError::InvalidBudget { field, value });
            }
        }
        Ok(())
    }
}

/// One-way free-space power gain `(lambda0 / (4 pi d))^2`.
pub fn free_space_path_gain(distance: f64, lambda0: f64) -> f64 {
    assert!(distance > 0.0 && lambda0 > 0.0);
    (lambda0 / (4.0 * PI * distance)).powi(2)
}

/// Round-trip free-space power gain, the square of the one-way gain.
pub fn round_trip_path_gain(distance: f64, lambda0: f64) -> f64 {
    free_space_path_gain(distance, lambda0).powi(2)
}

/// The transmit, sensing-receive, and DCM apertures of one transceiver setup.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemGeometry {
    pub comms_tx: ArrayGeometry,
    pub sens_rx: ArrayGeometry,
    pub dcm: ArrayGeometry,
}

impl SystemGeometry {
    pub fn n(&self) -> usize {
        self.comms_tx.len()
    }

    pub fn m(&self) -> usize {
        self.sens_rx.len()
    }

    pub fn l(&self) -> usize {
        self.dcm.len()
    }

    /// Largest aperture extent over all arrays and axes, meters.
    pub fn max_aperture(&self) -> f64 {
        [&self.comms_tx, &self.sens_rx, &self.dcm]
            .iter()
            .flat_map(|g| (0..3).map(|ax| g.aperture_extent(ax)))
            .fold(0.0, f64::max)
    }
}

/// One slot's cascaded channel state.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Comms-Tx-to-DCM factor, L x N, unit path gain.
    pub f: DMatrix<Complex64>,
    /// DCM-to-Sens-Rx factor, M x L, scaled by `sqrt(p_r)`.
    pub g: DMatrix<Complex64>,
    /// DCM-to-Comms-Rx channel, length L, magnitudes around `mu_c`.
    pub c: DVector<Complex64>,
    /// Round-trip delay, seconds.
    pub tau_r: f64,
    /// Forward delay, seconds.
    pub tau_t: f64,
    /// Doppler shift of the round-trip sensing path, Hz (`2 v / lambda0`).
    pub doppler_round_trip_hz: f64,
    /// Doppler shift of the forward path, Hz (`v / lambda0`).
    pub doppler_forward_hz: f64,
    /// Budget used to scale synthesis (noise variances, forward power).
    pub budget: LinkBudget,
    /// Non-fatal modeling warnings (for example far-field violations).
    pub warnings: Vec<String>,
}

/// Draws the DCM-to-Comms-Rx channel: magnitudes i.i.d. uniform in
/// `mu_c * [1 - spread, 1 + spread]`, phases i.i.d. uniform on the circle.
pub fn draw_c_vector(
    mu_c: f64,
    l: usize,
    magnitude_spread: f64,
    rng: &mut impl Rng,
) -> DVector<Complex64> {
    assert!((0.0..1.0).contains(&magnitude_spread));
    DVector::from_iterator(
        l,
        (0..l).map(|_| {
            let mag = if magnitude_spread == 0.0 {
                mu_c
            } else {
                mu_c * (1.0 + magnitude_spread * rng.random_range(-1.0..=1.0))
            };
            Complex64::from_polar(mag, rng.random_range(0.0..TAU))
        }),
    )
}

/// Builds the rank-one LoS realization for one slot.
///
/// Distances closer than `far_field_factor` times the largest aperture are
/// flagged as a warning on the returned realization rather than an error.
pub fn realize_channel(
    state: &TargetState,
    budget: &LinkBudget,
    geometry: &SystemGeometry,
    lambda0: f64,
    c_magnitude_spread: f64,
    far_field_factor: f64,
    rng: &mut impl Rng,
) -> Result<ChannelRealization, ChannelError> {
    let c = draw_c_vector(budget.mu_c, geometry.l(), c_magnitude_spread, rng);
    realize_channel_with_c(state, budget, geometry, lambda0, c, far_field_factor)
}

/// Same as [`realize_channel`] with the short-range channel supplied by the
/// caller (used when the random draw happens elsewhere).
pub fn realize_channel_with_c(
    state: &TargetState,
    budget: &LinkBudget,
    geometry: &SystemGeometry,
    lambda0: f64,
    c: DVector<Complex64>,
    far_field_factor: f64,
) -> Result<ChannelRealization, ChannelError> {
    budget.validate()?;
    check_dim("c vector", c.len(), geometry.l())?;
    let direction = state.direction()?;
    let u = direction.cosines();

    let mut warnings = Vec::new();
    let bound = far_field_factor * geometry.max_aperture();
    if state.d < bound {
        warnings.push(format!(
            "far-field violation: distance {} m below {} x aperture = {} m",
            state.d, far_field_factor, bound
        ));
    }

    let a_tx = steering_vector_cosines(&geometry.comms_tx, &u, lambda0);
    let a_rx = steering_vector_cosines(&geometry.sens_rx, &u, lambda0);
    let a_dcm_in = steering_vector_cosines(&geometry.dcm, &u.negated(), lambda0);
    let a_dcm_out = steering_vector_cosines(&geometry.dcm, &u, lambda0);

    let (n, m, l) = (geometry.n(), geometry.m(), geometry.l());
    let f = DMatrix::from_fn(l, n, |li, ni| a_dcm_in[li] * a_tx[ni].conj());
    let sqrt_pr = budget.p_r.sqrt();
    let g = DMatrix::from_fn(m, l, |mi, li| sqrt_pr * a_rx[mi] * a_dcm_out[li].conj());

    Ok(ChannelRealization {
        f,
        g,
        c,
        tau_r: 2.0 * state.d / crate::SPEED_OF_LIGHT,
        tau_t: state.d / crate::SPEED_OF_LIGHT,
        doppler_round_trip_hz: 2.0 * state.v / lambda0,
        doppler_forward_hz: state.v / lambda0,
        budget: *budget,
        warnings,
    })
}

/// Sensing-side baseband block: per-sample receive vectors and the combiner output.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingBlock {
    pub samples: Vec<DVector<Complex64>>,
    /// Beamformer output `z = v^H y` per sample.
    pub combined: Vec<Complex64>,
    pub sample_period: f64,
}

/// Communication-side baseband block: one scalar sample per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct CommBlock {
    pub samples: Vec<Complex64>,
    pub sample_period: f64,
}

fn complex_gaussian(variance: f64, rng: &mut impl Rng) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Synthesizes the received sensing block `y = G Gamma_R F x + w` for a
/// unit-power waveform, with the Doppler rotation applied per sample, and
/// attaches the combiner output `z = v^H y`. Delays are carried on the
/// realization but compensated ideally (frame-synchronous operation).
pub fn synthesize_sensing_block(
    ch: &ChannelRealization,
    profile: &DcmProfile,
    transmit_beamformer: &DVector<Complex64>,
    receive_beamformer: &DVector<Complex64>,
    waveform: &[Complex64],
    sample_period: f64,
    rng: &mut impl Rng,
) -> Result<SensingBlock, ChannelError> {
    let (m, l) = (ch.g.nrows(), ch.g.ncols());
    let n = ch.f.ncols();
    check_dim("profile", profile.len(), l)?;
    check_dim("transmit beamformer", transmit_beamformer.len(), n)?;
    check_dim("receive beamformer", receive_beamformer.len(), m)?;
    if waveform.is_empty() {
        return Err(ChannelError::DimensionMismatch {
            what: "waveform",
            expected: 1,
            found: 0,
        });
    }

    // effective array response of the whole cascade for this slot
    let fb = &ch.f * transmit_beamformer;
    let reflected = DVector::from_iterator(
        l,
        fb.iter().zip(profile.gamma_r().iter()).map(|(x, g)| g * x),
    );
    let h = &ch.g * &reflected;

    let mut samples = Vec::with_capacity(waveform.len());
    let mut combined = Vec::with_capacity(waveform.len());
    for (i, &x) in waveform.iter().enumerate() {
        let rot = Complex64::cis(TAU * ch.doppler_round_trip_hz * sample_period * i as f64);
        let mut y = &h * (x * rot);
        for e in y.iter_mut() {
            *e += complex_gaussian(ch.budget.sigma2_wr, rng);
        }
        combined.push(receive_beamformer.dotc(&y));
        samples.push(y);
    }
    Ok(SensingBlock {
        samples,
        combined,
        sample_period,
    })
}

/// Synthesizes the received communication block
/// `y = sqrt(P_T) c^T Gamma_T F x + w`, one scalar sample per symbol.
pub fn synthesize_comm_block(
    ch: &ChannelRealization,
    profile: &DcmProfile,
    transmit_beamformer: &DVector<Complex64>,
    symbols: &[Complex64],
    sample_period: f64,
    rng: &mut impl Rng,
) -> Result<CommBlock, ChannelError> {
    let l = ch.f.nrows();
    let n = ch.f.ncols();
    check_dim("profile", profile.len(), l)?;
    check_dim("transmit beamformer", transmit_beamformer.len(), n)?;
    if symbols.is_empty() {
        return Err(ChannelError::DimensionMismatch {
            what: "symbols",
            expected: 1,
            found: 0,
        });
    }

    let fb = &ch.f * transmit_beamformer;
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..l {
        s += ch.c[i] * profile.gamma_t()[i] * fb[i];
    }
    s *= ch.budget.p_t.sqrt();

    let samples = symbols
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let rot = Complex64::cis(TAU * ch.doppler_forward_hz * sample_period * i as f64);
            s * x * rot + complex_gaussian(ch.budget.sigma2_wt, rng)
        })
        .collect();
    Ok(CommBlock {
        samples,
        sample_period,
    })
}

fn check_dim(what: &'static str, found: usize, expected: usize) -> Result<(), ChannelError> {
    if found != expected {
        Err(ChannelError::DimensionMismatch {
            what,
            expected,
            found,
        })
    } else {
        Ok(())
    }
}

/// Matched-reference SNR estimate of a received block: correlates the samples
/// against the known unit-power reference and compares the coherent power to
/// the residual power.
pub fn empirical_snr(samples: &[Complex64], reference: &[Complex64]) -> f64 {
    assert_eq!(samples.len(), reference.len());
    assert!(!samples.is_empty());
    let n = samples.len() as f64;
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for (y, r) in samples.iter().zip(reference) {
        num += y * r.conj();
        den += r.norm_sqr();
    }
    let s_hat = num / den;
    let signal_power = s_hat.norm_sqr() * den / n;
    let noise_power = samples
        .iter()
        .zip(reference)
        .map(|(y, r)| (y - s_hat * r).norm_sqr())
        .sum::<f64>()
        / n;
    signal_power / noise_power
}

/// Validated squared array gains of one sub-slot: the Comms-Tx gain is bounded
/// by N, the Sens-Rx gain by M, and the DCM round-trip gain by L^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGains {
    comms_tx: f64,
    sens_rx: f64,
    dcm: f64,
}

impl ArrayGains {
    pub fn new(
        comms_tx: f64,
        sens_rx: f64,
        dcm: f64,
        n: usize,
        m: usize,
        l: usize,
    ) -> Result<Self, ChannelError> {
        let slack = 1.0 + 1e-9;
        let checks = [
            ("comms-tx", comms_tx, n as f64),
            ("sens-rx", sens_rx, m as f64),
            ("dcm", dcm, (l * l) as f64),
        ];
        for (what, value, bound) in checks {
            if !(0.0..=bound * slack).contains(&value) {
                return Err(ChannelError::GainBoundViolation { what, value, bound });
            }
        }
        Ok(Self {
            comms_tx,
            sens_rx,
            dcm,
        })
    }

    pub fn comms_tx(&self) -> f64 {
        self.comms_tx
    }

    pub fn sens_rx(&self) -> f64 {
        self.sens_rx
    }

    pub fn dcm(&self) -> f64 {
        self.dcm
    }
}

/// Closed-form combiner-output SNR of the joint sub-slot:
/// `lambda * P_R * |G_sens|^2 * |G_dcm|^2 * |G_tx|^2 / sigma2_wr`,
/// where `lambda` is the reflected power fraction (including any loss factor).
pub fn sensing_snr(budget: &LinkBudget, gains: &ArrayGains, lambda: f64) -> f64 {
    assert!((0.0..=1.0).contains(&lambda), "lambda must lie in [0, 1]");
    lambda * budget.p_r * gains.sens_rx * gains.dcm * gains.comms_tx / budget.sigma2_wr
}

/// Closed-form achievable rate in bits/s/Hz:
/// `log2(1 + transmit_fraction * P_T * |G_rx|^2 * |G_tx|^2 / sigma2_wt)`.
///
/// `transmit_fraction` is the transmitted power fraction of the DCM
/// (`1 - lambda` in the joint sub-slot, 1 in the communication-only sub-slot,
/// scaled by the loss factor when losses are modeled); `comms_rx_gain` is the
/// squared magnitude of the short-range combining sum with unit-modulus
/// transmission phases.
pub fn comm_rate(
    budget: &LinkBudget,
    comms_rx_gain: f64,
    comms_tx_gain: f64,
    transmit_fraction: f64,
) -> Result<f64, ChannelError> {
    if !(0.0..=1.0).contains(&transmit_fraction) {
        return Err(ChannelError::InvalidTransmitFraction(transmit_fraction));
    }
    Ok((1.0
        + transmit_fraction * budget.p_t * comms_rx_gain * comms_tx_gain / budget.sigma2_wt)
        .log2())
}

/// Narrowband contract: the one-sided bandwidth must be much smaller than the
/// carrier (below a tenth of it).
pub fn validate_narrowband(f0_hz: f64, bandwidth_hz: f64) -> Result<(), ChannelError> {
    let limit_hz = f0_hz / 10.0;
    if bandwidth_hz >= limit_hz {
        return Err(ChannelError::NarrowbandViolation {
            bandwidth_hz,
            limit_hz,
        });
    }
    Ok(())
}
