//! Link-level simulator for integrated sensing and communication (ISAC) through a
//! simultaneously transmitting and reflecting digital coding metasurface (STAR-DCM).
//!
//! The library closes the loop of beam prediction, a joint sensing/communication
//! sub-slot, fine tracking, and a communication-only sub-slot, and optimizes the
//! time split `rho` and energy split `lambda` between sensing and communication.
//!
//! Module map:
//! - [`geometry`] — directions, wavevectors, array geometries, steering vectors, HPBW
//! - [`metasurface`] — STAR coefficient profiles, phase codebooks, closed-form phase designs
//! - [`coding`] — plain-text import/export of DCM coding matrices
//! - [`channel`] — cascaded LoS channel realizations, baseband synthesis, SNR/rate closed forms
//! - [`tracking`] — target kinematics, state prediction, EKF fusion, accuracy proxy
//! - [`protocol`] — the slot-structured ISAC loop and per-slot metrics
//! - [`optimizer`] — average-metric models and the (rho, lambda) grid search
//! - [`scenario`] — end-to-end configuration, validation, and compilation

pub mod channel;
pub mod coding;
pub mod geometry;
pub mod metasurface;
pub mod optimizer;
pub mod protocol;
pub mod scenario;
pub mod tracking;

pub use channel::{ArrayGains, ChannelRealization, LinkBudget, SystemGeometry};
pub use geometry::{ArrayGeometry, ArrayRole, Direction, DirectionCosines, Wavevector};
pub use metasurface::{DcmProfile, PhaseCodebook, Side, StarMechanism};
pub use optimizer::{AverageBudget, SplitDecision};
pub use protocol::{BeamformerPair, SlotMetrics, SlotPlan};
pub use scenario::Scenario;
pub use tracking::{KinematicTruth, PcrbProxy, StateEstimate, TargetState};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
