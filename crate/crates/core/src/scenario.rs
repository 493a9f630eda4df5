//! End-to-end scenario configuration: a human-editable JSON document with
//! defaults, strict validation (out-of-domain values are rejected, never
//! clamped), and compilation into the runtime objects the slot loop consumes.
//!
//! Angles are stored in radians everywhere; on input a string with an explicit
//! unit suffix (`"30deg"` or `"0.5rad"`) is accepted wherever an angle field
//! appears.

use crate::channel::{validate_narrowband, ChannelError, LinkBudget, SystemGeometry};
use crate::geometry::{hpbw, ArrayGeometry, ArrayRole, Direction};
use crate::metasurface::PhaseCodebook;
use crate::tracking::{KinematicTruth, PcrbProxy, ProcessNoise};
use nalgebra::{Matrix4, Vector3, Vector4};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("field {field}: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("field bandwidth_hz: {0}")]
    Narrowband(ChannelError),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Metasurface(#[from] crate::metasurface::MetasurfaceError),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::InvalidField {
        field,
        reason: reason.into(),
    }
}

/// Angle in radians; deserializes from a bare number (radians) or a string
/// with an explicit unit suffix, `"30deg"` or `"0.5236rad"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle(pub f64);

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(Angle(x)),
            Raw::Text(s) => {
                let t = s.trim();
                if let Some(deg) = t.strip_suffix("deg") {
                    deg.trim()
                        .parse::<f64>()
                        .map(|v| Angle(v * PI / 180.0))
                        .map_err(serde::de::Error::custom)
                } else if let Some(rad) = t.strip_suffix("rad") {
                    rad.trim()
                        .parse::<f64>()
                        .map(Angle)
                        .map_err(serde::de::Error::custom)
                } else {
                    Err(serde::de::Error::custom(format!(
                        "angle {t:?} needs a 'deg' or 'rad' suffix"
                    )))
                }
            }
        }
    }
}

/// STAR mechanism selection for the scenario. The slot loop drives an
/// energy-splitting surface; the other mechanisms are available through the
/// metasurface API for profile construction and coding-matrix export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MechanismConfig {
    #[default]
    EnergySplitting,
    ModeSwitching,
    TimeDivision,
    PolarizationDivision,
    FrequencyDivision {
        f_reflect_hz: f64,
        f_transmit_hz: f64,
    },
}

/// Slot timing: duration and symbol period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotConfig {
    pub delta_t_s: f64,
    pub symbol_period_s: f64,
}

impl Default for SlotConfig {
    fn default() -> Self {
        Self {
            delta_t_s: 10e-3,
            symbol_period_s: 10e-6,
        }
    }
}

/// Accuracy-proxy constants, variances per unit of `I_ISAC * SNR`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcrbConfig {
    pub kappa_theta: f64,
    pub kappa_phi: f64,
    pub kappa_d: f64,
    pub kappa_v: f64,
}

impl Default for PcrbConfig {
    fn default() -> Self {
        Self {
            kappa_theta: 1.0,
            kappa_phi: 1.0,
            kappa_d: 1.0,
            kappa_v: 1.0,
        }
    }
}

/// Initial target truth, either Cartesian or polar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TruthConfig {
    Cartesian {
        position_m: [f64; 3],
        velocity_mps: [f64; 3],
    },
    Polar {
        theta: Angle,
        phi: Angle,
        distance_m: f64,
        radial_speed_mps: f64,
    },
}

impl Default for TruthConfig {
    fn default() -> Self {
        TruthConfig::Cartesian {
            position_m: [20.0, 10.0, 100.0],
            velocity_mps: [0.0, 0.0, -5.0],
        }
    }
}

/// Per-slot split selection: fixed `(rho, lambda)` or the grid optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SplitConfig {
    Fixed { rho: f64, lambda: f64 },
    Optimizer { resolution: f64 },
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig::Fixed {
            rho: 0.2,
            lambda: 0.5,
        }
    }
}

fn default_spacing() -> f64 {
    0.5
}

fn default_bits() -> Option<u32> {
    Some(4)
}

fn default_loss() -> f64 {
    1.0
}

fn default_far_field() -> f64 {
    10.0
}

fn default_spread() -> f64 {
    0.1
}

fn default_bound_factor() -> f64 {
    0.5
}

fn default_prior_std() -> [f64; 4] {
    [0.05, 0.05, 5.0, 5.0]
}

fn default_seed() -> u64 {
    1
}

fn default_trials() -> usize {
    1
}

fn default_n_slots() -> usize {
    10
}

fn default_link_budget() -> LinkBudget {
    LinkBudget {
        p_r: 1e-5,
        p_t: 1e-2,
        sigma2_wr: 1.0,
        sigma2_wt: 1.0,
        mu_c: 0.1,
    }
}

/// Full simulation configuration. A minimal document needs only the carrier
/// and the four array sizes; everything else has documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Carrier frequency, Hz.
    pub carrier_hz: f64,
    /// One-sided signal bandwidth, Hz; defaults to carrier/100.
    #[serde(default)]
    pub bandwidth_hz: Option<f64>,
    /// Comms Tx element count N.
    pub comms_tx_elements: usize,
    /// Sens Rx element count M.
    pub sens_rx_elements: usize,
    /// DCM grid columns (horizontal).
    pub dcm_l_h: usize,
    /// DCM grid rows (vertical).
    pub dcm_l_v: usize,
    /// Element spacing in wavelengths for every aperture.
    #[serde(default = "default_spacing")]
    pub element_spacing_wavelengths: f64,
    #[serde(default)]
    pub mechanism: MechanismConfig,
    /// Reflection phase codebook bits; `null` disables quantization.
    #[serde(default = "default_bits")]
    pub reflect_codebook_bits: Option<u32>,
    /// Transmission phase codebook bits; `null` disables quantization.
    #[serde(default = "default_bits")]
    pub transmit_codebook_bits: Option<u32>,
    /// Scalar power loss factor of the surface, in (0, 1].
    #[serde(default = "default_loss")]
    pub loss_factor: f64,
    #[serde(default = "default_link_budget")]
    pub link_budget: LinkBudget,
    #[serde(default)]
    pub slot: SlotConfig,
    #[serde(default)]
    pub pcrb: PcrbConfig,
    /// Process-noise variances per second for `(theta, phi, d, v)`.
    #[serde(default)]
    pub process_noise: [f64; 4],
    /// Prior standard deviations for `(theta, phi, d, v)` before slot 0.
    #[serde(default = "default_prior_std")]
    pub initial_prior_std: [f64; 4],
    #[serde(default)]
    pub initial_truth: TruthConfig,
    #[serde(default)]
    pub split: SplitConfig,
    /// Far-field margin: minimum distance in units of the largest aperture.
    #[serde(default = "default_far_field")]
    pub far_field_factor: f64,
    /// Relative spread of the short-range channel magnitudes around their mean.
    #[serde(default = "default_spread")]
    pub c_magnitude_spread: f64,
    /// Fraction of the HPBW used as the within-lobe error bound.
    #[serde(default = "default_bound_factor")]
    pub hpbw_bound_factor: f64,
    /// Diagnostic switch: skip the measurement-noise draws (truth-fed tracking).
    #[serde(default)]
    pub disable_measurement_noise: bool,
    /// Diagnostic/sweep hook: force the prediction event probability instead
    /// of deriving it from the tracking covariance.
    #[serde(default)]
    pub p_a1_override: Option<f64>,
    /// White acceleration noise on the ground truth, m/s^2 per sqrt(s).
    #[serde(default)]
    pub process_accel_std: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_n_slots")]
    pub n_slots: usize,
    /// Synthesize baseband blocks per slot and log empirical SNRs (slower).
    #[serde(default)]
    pub signal_level: bool,
}

impl Scenario {
    /// Minimal scenario with every optional field at its default.
    pub fn minimal(
        carrier_hz: f64,
        comms_tx_elements: usize,
        sens_rx_elements: usize,
        dcm_l_h: usize,
        dcm_l_v: usize,
    ) -> Self {
        serde_json::from_value(serde_json::json!({
            "carrier_hz": carrier_hz,
            "comms_tx_elements": comms_tx_elements,
            "sens_rx_elements": sens_rx_elements,
            "dcm_l_h": dcm_l_h,
            "dcm_l_v": dcm_l_v,
        }))
        .expect("minimal scenario deserializes")
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz.unwrap_or(self.carrier_hz / 100.0)
    }

    pub fn delta_t(&self) -> f64 {
        self.slot.delta_t_s
    }

    pub fn symbol_period(&self) -> f64 {
        self.slot.symbol_period_s
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.carrier_hz > 0.0) || !self.carrier_hz.is_finite() {
            return Err(invalid("carrier_hz", "must be positive"));
        }
        validate_narrowband(self.carrier_hz, self.bandwidth_hz())
            .map_err(ScenarioError::Narrowband)?;
        if self.comms_tx_elements == 0 {
            return Err(invalid("comms_tx_elements", "must be at least 1"));
        }
        if self.sens_rx_elements == 0 {
            return Err(invalid("sens_rx_elements", "must be at least 1"));
        }
        if self.dcm_l_h == 0 || self.dcm_l_v == 0 {
            return Err(invalid("dcm_l_h/dcm_l_v", "must be at least 1"));
        }
        if !(self.element_spacing_wavelengths > 0.0) {
            return Err(invalid("element_spacing_wavelengths", "must be positive"));
        }
        for (field, bits) in [
            ("reflect_codebook_bits", self.reflect_codebook_bits),
            ("transmit_codebook_bits", self.transmit_codebook_bits),
        ] {
            if let Some(b) = bits {
                if !(1..=16).contains(&b) {
                    return Err(invalid(field, format!("{b} outside [1, 16]")));
                }
            }
        }
        if !(self.loss_factor > 0.0 && self.loss_factor <= 1.0) {
            return Err(invalid("loss_factor", "must lie in (0, 1]"));
        }
        self.link_budget
            .validate()
            .map_err(|e| invalid("link_budget", e.to_string()))?;
        if !(self.slot.delta_t_s > 0.0) {
            return Err(invalid("slot.delta_t_s", "must be positive"));
        }
        if !(self.slot.symbol_period_s > 0.0) {
            return Err(invalid("slot.symbol_period_s", "must be positive"));
        }
        if self.slot.symbol_period_s > self.slot.delta_t_s {
            return Err(invalid(
                "slot.symbol_period_s",
                "must not exceed slot.delta_t_s",
            ));
        }
        let proxy = self.proxy();
        proxy
            .validate()
            .map_err(|_| invalid("pcrb", "constants must be positive"))?;
        if self.process_noise.iter().any(|&q| q < 0.0) {
            return Err(invalid("process_noise", "variances must be nonnegative"));
        }
        if self.initial_prior_std.iter().any(|&s| !(s > 0.0)) {
            return Err(invalid("initial_prior_std", "must be positive"));
        }
        match self.split {
            SplitConfig::Fixed { rho, lambda } => {
                if !(rho > 0.0 && rho <= 1.0) {
                    return Err(invalid("split.rho", format!("{rho} outside (0, 1]")));
                }
                if !(lambda > 0.0 && lambda <= 1.0) {
                    return Err(invalid("split.lambda", format!("{lambda} outside (0, 1]")));
                }
            }
            SplitConfig::Optimizer { resolution } => {
                if !(resolution > 0.0 && resolution <= 0.5) {
                    return Err(invalid(
                        "split.resolution",
                        format!("{resolution} outside (0, 0.5]"),
                    ));
                }
            }
        }
        if !(self.far_field_factor >= 1.0) {
            return Err(invalid("far_field_factor", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.c_magnitude_spread) {
            return Err(invalid("c_magnitude_spread", "must lie in [0, 1)"));
        }
        if !(self.hpbw_bound_factor > 0.0 && self.hpbw_bound_factor <= 1.0) {
            return Err(invalid("hpbw_bound_factor", "must lie in (0, 1]"));
        }
        if self.process_accel_std < 0.0 {
            return Err(invalid("process_accel_std", "must be nonnegative"));
        }
        if let Some(p) = self.p_a1_override {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid("p_a1_override", "must lie in [0, 1]"));
            }
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if self.n_slots == 0 {
            return Err(invalid("n_slots", "must be at least 1"));
        }
        if let MechanismConfig::FrequencyDivision {
            f_reflect_hz,
            f_transmit_hz,
        } = self.mechanism
        {
            if f_reflect_hz == f_transmit_hz {
                return Err(invalid("mechanism", "register frequencies must differ"));
            }
        }
        self.initial_truth_kinematics()?;
        Ok(())
    }

    pub fn lambda0(&self) -> f64 {
        crate::SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn proxy(&self) -> PcrbProxy {
        PcrbProxy {
            kappa_theta: self.pcrb.kappa_theta,
            kappa_phi: self.pcrb.kappa_phi,
            kappa_d: self.pcrb.kappa_d,
            kappa_v: self.pcrb.kappa_v,
        }
    }

    fn initial_truth_kinematics(&self) -> Result<KinematicTruth, ScenarioError> {
        let truth = match self.initial_truth {
            TruthConfig::Cartesian {
                position_m,
                velocity_mps,
            } => KinematicTruth {
                position: Vector3::from(position_m),
                velocity: Vector3::from(velocity_mps),
            },
            TruthConfig::Polar {
                theta,
                phi,
                distance_m,
                radial_speed_mps,
            } => {
                if !(distance_m > 0.0) {
                    return Err(invalid("initial_truth.distance_m", "must be positive"));
                }
                let dir = Direction::new(theta.0, phi.0).map_err(|e| {
                    invalid("initial_truth.theta", e.to_string())
                })?;
                let u = *dir.cosines().as_vector();
                KinematicTruth {
                    position: u * distance_m,
                    velocity: -u * radial_speed_mps,
                }
            }
        };
        if truth.position.norm() == 0.0 {
            return Err(invalid(
                "initial_truth.position_m",
                "must not coincide with the transceiver origin",
            ));
        }
        truth
            .observe()
            .map_err(|e| invalid("initial_truth", e.to_string()))?
            .direction()
            .map_err(|e| invalid("initial_truth", e.to_string()))?;
        Ok(truth)
    }

    /// Validates the scenario and builds the runtime objects for the slot loop.
    pub fn compile(&self) -> Result<CompiledScenario, ScenarioError> {
        self.validate()?;
        if self.mechanism != MechanismConfig::EnergySplitting {
            return Err(invalid(
                "mechanism",
                "the slot loop drives an energy-splitting surface; other mechanisms \
                 are available through the metasurface API",
            ));
        }
        let lambda0 = self.lambda0();
        let spacing = self.element_spacing_wavelengths * lambda0;
        let geometry = SystemGeometry {
            comms_tx: ArrayGeometry::uniform_linear(
                ArrayRole::CommsTx,
                self.comms_tx_elements,
                spacing,
            )?,
            sens_rx: ArrayGeometry::uniform_linear(
                ArrayRole::SensRx,
                self.sens_rx_elements,
                spacing,
            )?,
            dcm: ArrayGeometry::rectangular_dcm(self.dcm_l_h, self.dcm_l_v, spacing)?,
        };

        // per-axis effective beamwidth: the tightest lobe a prediction error
        // must stay inside (tx and rx apertures plus the matching DCM axis)
        let lobe = |extent: f64| if extent > 0.0 { hpbw(extent, lambda0) } else { PI };
        let tx_lobe = lobe(geometry.comms_tx.aperture_extent(0));
        let rx_lobe = lobe(geometry.sens_rx.aperture_extent(0));
        let dcm_h = lobe(geometry.dcm.aperture_extent(0));
        let dcm_v = lobe(geometry.dcm.aperture_extent(1));
        let hpbw_effective = (
            tx_lobe.min(rx_lobe).min(dcm_v),
            tx_lobe.min(rx_lobe).min(dcm_h),
        );
        // the event bound is hpbw_bound_factor * HPBW; the probability model
        // integrates over +-h/2, so rescale the lobe accordingly
        let scale = 2.0 * self.hpbw_bound_factor;
        let hpbw_event = (hpbw_effective.0 * scale, hpbw_effective.1 * scale);

        let slot_symbols =
            crate::protocol::symbols_per_slot(self.slot.delta_t_s, self.slot.symbol_period_s);
        if slot_symbols == 0 {
            return Err(invalid("slot", "slot must hold at least one symbol"));
        }

        let prior = Vector4::from(self.initial_prior_std);
        let initial_prior = Matrix4::from_diagonal(&prior.component_mul(&prior));

        Ok(CompiledScenario {
            config: self.clone(),
            lambda0,
            geometry,
            budget: self.link_budget,
            reflect_codebook: match self.reflect_codebook_bits {
                Some(b) => Some(PhaseCodebook::new(b)?),
                None => None,
            },
            transmit_codebook: match self.transmit_codebook_bits {
                Some(b) => Some(PhaseCodebook::new(b)?),
                None => None,
            },
            proxy: self.proxy(),
            process_noise: ProcessNoise {
                q: Vector4::from(self.process_noise),
            },
            initial_prior,
            initial_truth: self.initial_truth_kinematics()?,
            slot_symbols,
            hpbw_effective,
            hpbw_event,
            split: self.split,
            loss_factor: self.loss_factor,
        })
    }
}

/// Runtime view of a validated scenario.
#[derive(Debug, Clone)]
pub struct CompiledScenario {
    /// The validated configuration this was compiled from.
    pub config: Scenario,
    pub lambda0: f64,
    pub geometry: SystemGeometry,
    pub budget: LinkBudget,
    pub reflect_codebook: Option<PhaseCodebook>,
    pub transmit_codebook: Option<PhaseCodebook>,
    pub proxy: PcrbProxy,
    pub process_noise: ProcessNoise,
    /// Prior covariance before the initial estimation step.
    pub initial_prior: Matrix4<f64>,
    pub initial_truth: KinematicTruth,
    /// Symbols per slot, `floor(delta_t / t_u)`.
    pub slot_symbols: u64,
    /// Per-axis (theta, phi) effective half-power beamwidth, radians.
    pub hpbw_effective: (f64, f64),
    /// Beamwidth rescaled by the configured error-bound factor, for event probabilities.
    pub hpbw_event: (f64, f64),
    pub split: SplitConfig,
    pub loss_factor: f64,
}

impl CompiledScenario {
    /// Maximum sensing SNR constant `P_R N M L^2 loss / sigma2_wr`.
    pub fn c_r(&self) -> f64 {
        let (n, m, l) = (
            self.geometry.n() as f64,
            self.geometry.m() as f64,
            self.geometry.l() as f64,
        );
        self.budget.p_r * n * m * l * l * self.loss_factor / self.budget.sigma2_wr
    }

    /// Communication SNR constant `mu_c^2 P_T N L^2 loss / sigma2_wt`.
    ///
    /// Carries the squared mean short-range magnitude so that the constant is
    /// consistent with the power expressions throughout the crate; the run
    /// manifest records this convention.
    pub fn c_t(&self) -> f64 {
        let (n, l) = (self.geometry.n() as f64, self.geometry.l() as f64);
        self.budget.mu_c * self.budget.mu_c * self.budget.p_t * n * l * l * self.loss_factor
            / self.budget.sigma2_wt
    }

    /// Minimum allowed target distance, meters.
    pub fn far_field_bound(&self) -> f64 {
        self.config.far_field_factor * self.geometry.max_aperture()
    }
}
