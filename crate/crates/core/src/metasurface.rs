//! STAR-DCM coefficient profiles under the five splitting mechanisms,
//! power-conservation enforcement, phase codebooks and quantization,
//! closed-form phase designs, and full-space scattering patterns.
//!
//! Per element, power conservation ties the transmission and reflection
//! coefficients together: `|gamma_T|^2 + |gamma_R|^2 = loss_factor`, with
//! `loss_factor = 1` in the lossless default. For the mechanisms that keep
//! both sides active at once (energy splitting, mode switching) the pair is
//! checked directly; for time, polarization, and frequency division the pair
//! is checked per active interval/polarization/frequency register, where the
//! inactive side is exactly zero.

use crate::geometry::{one_way_phases, round_trip_phases, steering_vector, ArrayGeometry, Direction};
use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetasurfaceError {
    #[error("phase vector length {found} does not match element count {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("energy-splitting fraction must lie in (0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("loss factor must lie in (0, 1], got {0}")]
    InvalidLossFactor(f64),
    #[error("time-division reflect fraction must lie in [0, 1], got {0}")]
    InvalidReflectFraction(f64),
    #[error("frequency-division registers must use distinct frequencies")]
    EqualFrequencies,
    #[error("mode-switching mask length {found} does not match element count {expected}")]
    MaskLengthMismatch { expected: usize, found: usize },
    #[error("polarization assignment length {found} does not match element count {expected}")]
    AssignmentLengthMismatch { expected: usize, found: usize },
    #[error("codebook bits must lie in [1, 16], got {0}")]
    InvalidCodebookBits(u32),
    #[error("phase code {code} is out of range for {bits} bits")]
    CodeOutOfRange { code: u32, bits: u32 },
}

/// Which side of the metasurface a coefficient vector or pattern refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Reflection,
    Transmission,
}

/// Per-element polarization assignment for the polarization-division mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarizationRole {
    /// The horizontal polarization transmits, the vertical reflects.
    HTransmits,
    /// The vertical polarization transmits, the horizontal reflects.
    VTransmits,
}

/// How an element apportions incident power between reflection and transmission.
#[derive(Debug, Clone, PartialEq)]
pub enum StarMechanism {
    /// Both coefficients active at once; `|gamma_R|^2 = lambda * loss`,
    /// `|gamma_T|^2 = (1 - lambda) * loss`, same fraction for every element.
    EnergySplitting { lambda: f64 },
    /// Each element fully reflects (`true`) or fully transmits (`false`).
    ModeSwitching { reflect_mask: Vec<bool> },
    /// Elements alternate between full reflection and full transmission in
    /// orthogonal time intervals; `reflect_fraction` is the reflecting share
    /// of the slot, used by sub-slot scheduling.
    TimeDivision { reflect_fraction: f64 },
    /// One linear polarization transmits while the other reflects, per element.
    PolarizationDivision { assignment: Vec<PolarizationRole> },
    /// Full reflection at `f_reflect_hz` and full transmission at `f_transmit_hz`.
    FrequencyDivision { f_reflect_hz: f64, f_transmit_hz: f64 },
}

impl StarMechanism {
    pub fn validate(&self, elements: usize) -> Result<(), MetasurfaceError> {
        match self {
            StarMechanism::EnergySplitting { lambda } => {
                if !(*lambda > 0.0 && *lambda <= 1.0) {
                    return Err(MetasurfaceError::InvalidLambda(*lambda));
                }
            }
            StarMechanism::ModeSwitching { reflect_mask } => {
                if reflect_mask.len() != elements {
                    return Err(MetasurfaceError::MaskLengthMismatch {
                        expected: elements,
                        found: reflect_mask.len(),
                    });
                }
            }
            StarMechanism::TimeDivision { reflect_fraction } => {
                if !(0.0..=1.0).contains(reflect_fraction) || !reflect_fraction.is_finite() {
                    return Err(MetasurfaceError::InvalidReflectFraction(*reflect_fraction));
                }
            }
            StarMechanism::PolarizationDivision { assignment } => {
                if assignment.len() != elements {
                    return Err(MetasurfaceError::AssignmentLengthMismatch {
                        expected: elements,
                        found: assignment.len(),
                    });
                }
            }
            StarMechanism::FrequencyDivision {
                f_reflect_hz,
                f_transmit_hz,
            } => {
                if f_reflect_hz == f_transmit_hz {
                    return Err(MetasurfaceError::EqualFrequencies);
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            StarMechanism::EnergySplitting { .. } => "energy_splitting",
            StarMechanism::ModeSwitching { .. } => "mode_switching",
            StarMechanism::TimeDivision { .. } => "time_division",
            StarMechanism::PolarizationDivision { .. } => "polarization_division",
            StarMechanism::FrequencyDivision { .. } => "frequency_division",
        }
    }

    /// Whether both coefficient vectors are active in the same
    /// interval/register/polarization (and thus share the power budget).
    fn simultaneous(&self) -> bool {
        matches!(
            self,
            StarMechanism::EnergySplitting { .. } | StarMechanism::ModeSwitching { .. }
        )
    }
}

/// Uniform phase codebook with `2^bits` values `2*pi*i / 2^bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseCodebook {
    bits: u32,
}

impl PhaseCodebook {
    pub fn new(bits: u32) -> Result<Self, MetasurfaceError> {
        if !(1..=16).contains(&bits) {
            return Err(MetasurfaceError::InvalidCodebookBits(bits));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> u32 {
        1 << self.bits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Codebook step `2*pi / 2^bits`.
    pub fn step(&self) -> f64 {
        TAU / self.len() as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.phase_of(i)).collect()
    }

    pub fn phase_of(&self, code: u32) -> f64 {
        debug_assert!(code < self.len());
        TAU * code as f64 / self.len() as f64
    }

    /// Nearest code index in circular distance; ties break toward the smaller index.
    pub fn code_of(&self, phase: f64) -> u32 {
        let n = self.len();
        let x = crate::geometry::wrap_angle(phase) / self.step();
        let lo = x.floor();
        let code_lo = (lo as u32) % n;
        let code_hi = (lo as u32 + 1) % n;
        let d_lo = x - lo;
        let d_hi = 1.0 - d_lo;
        if d_lo < d_hi {
            code_lo
        } else if d_hi < d_lo {
            code_hi
        } else {
            code_lo.min(code_hi)
        }
    }

    /// Nearest codebook phase in circular distance; ties break toward the smaller index.
    pub fn quantize(&self, phase: f64) -> f64 {
        self.phase_of(self.code_of(phase))
    }
}

/// Optionally quantized phase: passes through when no codebook is given.
pub fn quantize_phase(phase: f64, codebook: Option<&PhaseCodebook>) -> f64 {
    match codebook {
        Some(cb) => cb.quantize(phase),
        None => crate::geometry::wrap_angle(phase),
    }
}

/// Immutable per-slot coefficient state of the metasurface.
#[derive(Debug, Clone, PartialEq)]
pub struct DcmProfile {
    mechanism: StarMechanism,
    loss_factor: f64,
    gamma_r: DVector<Complex64>,
    gamma_t: DVector<Complex64>,
}

impl DcmProfile {
    /// Builds a profile with mechanism-determined magnitudes and the given phases.
    pub fn build(
        mechanism: StarMechanism,
        reflect_phases: &[f64],
        transmit_phases: &[f64],
        loss_factor: f64,
    ) -> Result<Self, MetasurfaceError> {
        let l = reflect_phases.len();
        if transmit_phases.len() != l {
            return Err(MetasurfaceError::LengthMismatch {
                expected: l,
                found: transmit_phases.len(),
            });
        }
        if !(loss_factor > 0.0 && loss_factor <= 1.0) {
            return Err(MetasurfaceError::InvalidLossFactor(loss_factor));
        }
        mechanism.validate(l)?;

        let full = loss_factor.sqrt();
        let (mag_r, mag_t): (Vec<f64>, Vec<f64>) = match &mechanism {
            StarMechanism::EnergySplitting { lambda } => {
                let r = (lambda * loss_factor).sqrt();
                let t = ((1.0 - lambda) * loss_factor).sqrt();
                (vec![r; l], vec![t; l])
            }
            StarMechanism::ModeSwitching { reflect_mask } => reflect_mask
                .iter()
                .map(|&reflect| if reflect { (full, 0.0) } else { (0.0, full) })
                .unzip(),
            // full magnitude in each element's own interval/polarization/register
            StarMechanism::TimeDivision { .. }
            | StarMechanism::PolarizationDivision { .. }
            | StarMechanism::FrequencyDivision { .. } => (vec![full; l], vec![full; l]),
        };

        let gamma_r = DVector::from_iterator(
            l,
            mag_r
                .iter()
                .zip(reflect_phases)
                .map(|(&m, &p)| Complex64::from_polar(m, p)),
        );
        let gamma_t = DVector::from_iterator(
            l,
            mag_t
                .iter()
                .zip(transmit_phases)
                .map(|(&m, &p)| Complex64::from_polar(m, p)),
        );
        Ok(Self {
            mechanism,
            loss_factor,
            gamma_r,
            gamma_t,
        })
    }

    /// Fully reflective state (`gamma_T = 0`), used during initial estimation.
    pub fn totally_reflective(
        reflect_phases: &[f64],
        loss_factor: f64,
    ) -> Result<Self, MetasurfaceError> {
        let mask = vec![true; reflect_phases.len()];
        Self::build(
            StarMechanism::ModeSwitching { reflect_mask: mask },
            reflect_phases,
            &vec![0.0; reflect_phases.len()],
            loss_factor,
        )
    }

    /// Fully transmissive state (`gamma_R = 0`), used in the communication-only sub-slot.
    pub fn totally_transmissive(
        transmit_phases: &[f64],
        loss_factor: f64,
    ) -> Result<Self, MetasurfaceError> {
        let mask = vec![false; transmit_phases.len()];
        Self::build(
            StarMechanism::ModeSwitching { reflect_mask: mask },
            &vec![0.0; transmit_phases.len()],
            transmit_phases,
            loss_factor,
        )
    }

    pub fn mechanism(&self) -> &StarMechanism {
        &self.mechanism
    }

    pub fn loss_factor(&self) -> f64 {
        self.loss_factor
    }

    pub fn len(&self) -> usize {
        self.gamma_r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma_r.is_empty()
    }

    /// Reflection coefficients in their active interval/register/polarization.
    pub fn gamma_r(&self) -> &DVector<Complex64> {
        &self.gamma_r
    }

    /// Transmission coefficients in their active interval/register/polarization.
    pub fn gamma_t(&self) -> &DVector<Complex64> {
        &self.gamma_t
    }

    pub fn side(&self, side: Side) -> &DVector<Complex64> {
        match side {
            Side::Reflection => &self.gamma_r,
            Side::Transmission => &self.gamma_t,
        }
    }

    /// Largest deviation of `|gamma_T|^2 + |gamma_R|^2` from the loss factor,
    /// taken over every element and every active pairing of the mechanism.
    pub fn power_conservation_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for l in 0..self.len() {
            let pr = self.gamma_r[l].norm_sqr();
            let pt = self.gamma_t[l].norm_sqr();
            if self.mechanism.simultaneous() {
                worst = worst.max((pr + pt - self.loss_factor).abs());
            } else {
                // the inactive side is identically zero in each register
                worst = worst.max((pr - self.loss_factor).abs());
                worst = worst.max((pt - self.loss_factor).abs());
            }
        }
        worst
    }
}

/// Reflection-coefficient phases that maximize the round-trip sensing SNR for
/// a predicted direction: `-2 k(predicted)^T p_l`, wrapped to `[0, 2*pi)`.
pub fn design_reflection_phases(
    predicted: &Direction,
    geometry: &ArrayGeometry,
    lambda0: f64,
) -> Vec<f64> {
    debug_assert!(geometry.is_dcm());
    round_trip_phases(geometry, predicted, lambda0)
}

/// Transmission-coefficient phases that maximize the received power at the
/// Comms Rx for an estimated direction: `-k(estimated)^T p_l - angle(c_l)`,
/// wrapped to `[0, 2*pi)`.
pub fn design_transmission_phases(
    estimated: &Direction,
    c_phases: &[f64],
    geometry: &ArrayGeometry,
    lambda0: f64,
) -> Result<Vec<f64>, MetasurfaceError> {
    if c_phases.len() != geometry.len() {
        return Err(MetasurfaceError::LengthMismatch {
            expected: geometry.len(),
            found: c_phases.len(),
        });
    }
    Ok(one_way_phases(geometry, estimated, lambda0)
        .iter()
        .zip(c_phases)
        .map(|(&a, &c)| crate::geometry::wrap_angle(a - c))
        .collect())
}

/// DCM reflection gain between the true and the predicted direction:
/// the squared inner product of the two round-trip response vectors.
/// Equals `L^2` when the directions coincide and never exceeds it.
pub fn dcm_reflection_gain(
    true_dir: &Direction,
    pred_dir: &Direction,
    geometry: &ArrayGeometry,
    lambda0: f64,
) -> f64 {
    debug_assert!(geometry.is_dcm());
    let a_true = crate::geometry::round_trip_steering(geometry, true_dir, lambda0);
    let a_pred = crate::geometry::round_trip_steering(geometry, pred_dir, lambda0);
    a_true.dotc(&a_pred).norm_sqr()
}

/// Power scattered toward each observation direction for one side of the
/// profile, under the idealized isotropic array-factor model:
/// `|a(d)^H Gamma_side a(incident)|^2` per grid direction `d`.
pub fn scattering_pattern(
    profile: &DcmProfile,
    incident: &Direction,
    side: Side,
    observation_grid: &[Direction],
    geometry: &ArrayGeometry,
    lambda0: f64,
) -> Vec<f64> {
    assert!(!observation_grid.is_empty(), "observation grid must be non-empty");
    debug_assert_eq!(profile.len(), geometry.len());
    let a_inc = steering_vector(geometry, incident, lambda0);
    let gamma = profile.side(side);
    let excited = DVector::from_iterator(
        geometry.len(),
        gamma.iter().zip(a_inc.iter()).map(|(g, a)| g * a),
    );
    observation_grid
        .iter()
        .map(|d| steering_vector(geometry, d, lambda0).dotc(&excited).norm_sqr())
        .collect()
}
