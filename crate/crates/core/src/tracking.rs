//! Ground-truth target kinematics, model-based state prediction, a
//! Cramér-Rao-style measurement-accuracy proxy, Kalman fine estimation,
//! and within-beamwidth event probabilities.
//!
//! The target state is `(theta, phi, d, v)`: direction, distance, and radial
//! speed (positive toward the transceiver), constant within a slot. Ground
//! truth moves as constant-velocity Cartesian motion; the state-level
//! prediction model keeps the angles and shrinks the distance by `v * dt`,
//! which is the linearization of the Cartesian model about the mean.
//!
//! The fine-estimation stage abstracts the high-resolution direction-finding
//! front end as truth plus Gaussian noise whose per-parameter variance is
//! `kappa_q / (I_isac * SNR)` — inversely proportional to both the number of
//! reflected-signal measurements and the combiner-output SNR, with
//! configuration-dependent constants.

use crate::geometry::{wrap_angle, Direction, GeometryError};
use nalgebra::{DMatrix, DVector, Matrix4, Vector3, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erf;
use std::f64::consts::PI;
use thiserror::Error;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Error, PartialEq)]
pub enum TrackingError {
    #[error("distance must be positive, got {0}")]
    InvalidDistance(f64),
    #[error("kinematic position coincides with the transceiver origin")]
    DegeneratePosition,
    #[error("covariance is not symmetric positive semidefinite")]
    NotPsd,
    #[error("infinite measurement variance requires a diagonal covariance")]
    InvalidSentinel,
    #[error("measurement count must be at least 1, got {0}")]
    InvalidMeasurementCount(u64),
    #[error("SNR must be positive, got {0}")]
    InvalidSnr(f64),
    #[error("accuracy-proxy constants must be positive")]
    InvalidProxy,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Target state `(theta, phi, d, v)` for one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetState {
    /// Polar angle from boresight, radians.
    pub theta: f64,
    /// Azimuth, radians.
    pub phi: f64,
    /// Distance, meters (positive).
    pub d: f64,
    /// Radial speed, m/s, positive toward the transceiver.
    pub v: f64,
}

impl TargetState {
    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.theta, self.phi, self.d, self.v)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self {
            theta: v[0],
            phi: v[1],
            d: v[2],
            v: v[3],
        }
    }

    /// The state direction as a validated [`Direction`]. Small negative polar
    /// angles (estimator noise around boresight) fold onto the positive cone;
    /// angles beyond `pi/2` are genuinely out of coverage and fail.
    pub fn direction(&self) -> Result<Direction, GeometryError> {
        let (mut theta, mut phi) = (self.theta, self.phi);
        if theta < 0.0 {
            theta = -theta;
            phi += PI;
        }
        Direction::new(theta, wrap_angle(phi))
    }
}

/// Cartesian ground truth of the target relative to the transceiver origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicTruth {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

impl KinematicTruth {
    /// Constant-velocity propagation over `dt` seconds.
    pub fn propagate(&self, dt: f64) -> Self {
        debug_assert!(dt > 0.0);
        Self {
            position: self.position + self.velocity * dt,
            velocity: self.velocity,
        }
    }

    /// Constant-velocity propagation with white acceleration noise of the
    /// given standard deviation (m/s^2) applied to the velocity.
    pub fn propagate_with_accel_noise(
        &self,
        dt: f64,
        accel_std: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let mut next = self.propagate(dt);
        if accel_std > 0.0 {
            let scale = accel_std * dt.sqrt();
            for i in 0..3 {
                let z: f64 = rng.sample(StandardNormal);
                next.velocity[i] += scale * z;
            }
        }
        next
    }

    /// Maps the Cartesian truth to the polar state observed by the transceiver.
    pub fn observe(&self) -> Result<TargetState, TrackingError> {
        let d = self.position.norm();
        if d == 0.0 {
            return Err(TrackingError::DegeneratePosition);
        }
        let u = self.position / d;
        let theta = u.z.clamp(-1.0, 1.0).acos();
        let phi = if u.x == 0.0 && u.y == 0.0 {
            0.0
        } else {
            wrap_angle(u.y.atan2(u.x))
        };
        Ok(TargetState {
            theta,
            phi,
            d,
            v: -self.position.dot(&self.velocity) / d,
        })
    }
}

/// Gaussian state estimate: mean plus 4x4 covariance in `(theta, phi, d, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEstimate {
    pub mean: TargetState,
    pub covariance: Matrix4<f64>,
}

impl StateEstimate {
    pub fn new(mean: TargetState, covariance: Matrix4<f64>) -> Result<Self, TrackingError> {
        check_psd(&covariance)?;
        Ok(Self { mean, covariance })
    }
}

fn check_psd(m: &Matrix4<f64>) -> Result<(), TrackingError> {
    let scale = m.amax().max(1.0);
    if !m.iter().all(|x| x.is_finite()) {
        return Err(TrackingError::NotPsd);
    }
    if (m - m.transpose()).amax() > 1e-9 * scale {
        return Err(TrackingError::NotPsd);
    }
    let sym = (m + m.transpose()) * 0.5;
    let eigs = sym.symmetric_eigenvalues();
    if eigs.iter().any(|&e| e < -1e-9 * scale) {
        return Err(TrackingError::NotPsd);
    }
    Ok(())
}

/// Per-parameter accuracy-proxy constants, carrying the units of each
/// parameter's variance. Only proportionality is modeled; the constants are
/// configuration inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcrbProxy {
    pub kappa_theta: f64,
    pub kappa_phi: f64,
    pub kappa_d: f64,
    pub kappa_v: f64,
}

impl Default for PcrbProxy {
    fn default() -> Self {
        Self {
            kappa_theta: 1.0,
            kappa_phi: 1.0,
            kappa_d: 1.0,
            kappa_v: 1.0,
        }
    }
}

impl PcrbProxy {
    pub fn validate(&self) -> Result<(), TrackingError> {
        let all = [self.kappa_theta, self.kappa_phi, self.kappa_d, self.kappa_v];
        if all.iter().all(|&k| k > 0.0 && k.is_finite()) {
            Ok(())
        } else {
            Err(TrackingError::InvalidProxy)
        }
    }

    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.kappa_theta, self.kappa_phi, self.kappa_d, self.kappa_v)
    }
}

/// Process-noise variances per unit time for `(theta, phi, d, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProcessNoise {
    pub q: Vector4<f64>,
}

/// Time update through the constant-velocity model linearized about the mean:
/// angles persist, the distance shrinks by `v * dt`, and the covariance is
/// propagated through the (already linear) transition plus `Q * dt`.
pub fn predict_state(previous: &StateEstimate, dt: f64, noise: &ProcessNoise) -> StateEstimate {
    debug_assert!(dt > 0.0);
    let mut f = Matrix4::identity();
    f[(2, 3)] = -dt;
    let mean = f * previous.mean.as_vector();
    let mut cov = f * previous.covariance * f.transpose();
    for i in 0..4 {
        cov[(i, i)] += noise.q[i] * dt;
    }
    StateEstimate {
        mean: TargetState::from_vector(&mean),
        covariance: cov,
    }
}

/// Diagonal measurement covariance of the fine-estimation front end:
/// `var_q = kappa_q / (i_isac * snr)` per parameter.
pub fn measurement_noise(
    proxy: &PcrbProxy,
    i_isac: u64,
    snr: f64,
) -> Result<Matrix4<f64>, TrackingError> {
    proxy.validate()?;
    if i_isac < 1 {
        return Err(TrackingError::InvalidMeasurementCount(i_isac));
    }
    if !(snr > 0.0) {
        return Err(TrackingError::InvalidSnr(snr));
    }
    let denom = i_isac as f64 * snr;
    let k = proxy.as_vector();
    Ok(Matrix4::from_diagonal(&Vector4::new(
        k[0] / denom,
        k[1] / denom,
        k[2] / denom,
        k[3] / denom,
    )))
}

/// Draws a noisy state measurement: truth plus independent Gaussian noise with
/// the given diagonal covariance. Components with infinite variance are left
/// at the truth value; they carry no information and are ignored by the fusion.
pub fn draw_measurement(
    truth: &TargetState,
    meas_cov: &Matrix4<f64>,
    rng: &mut impl Rng,
) -> TargetState {
    let mut m = truth.as_vector();
    for i in 0..4 {
        let var = meas_cov[(i, i)];
        if var.is_finite() && var > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            m[i] += var.sqrt() * z;
        }
    }
    TargetState::from_vector(&m)
}

/// Kalman fusion of a predicted estimate with a direct state measurement
/// (identity measurement map in `(theta, phi, d, v)` coordinates).
///
/// An infinite diagonal entry of `meas_cov` is the no-information sentinel for
/// that component; with every entry infinite the posterior equals the prior.
/// The azimuth innovation is wrapped to `(-pi, pi]`.
pub fn ekf_update(
    predicted: &StateEstimate,
    measurement: &TargetState,
    meas_cov: &Matrix4<f64>,
) -> Result<StateEstimate, TrackingError> {
    let observed: Vec<usize> = (0..4).filter(|&i| meas_cov[(i, i)].is_finite()).collect();

    // off-diagonal coupling to an unobserved component is not meaningful
    for r in 0..4 {
        for c in 0..4 {
            let x = meas_cov[(r, c)];
            if r != c && !x.is_finite() {
                return Err(TrackingError::InvalidSentinel);
            }
            if r != c
                && x != 0.0
                && (!meas_cov[(r, r)].is_finite() || !meas_cov[(c, c)].is_finite())
            {
                return Err(TrackingError::InvalidSentinel);
            }
        }
    }
    if observed.is_empty() {
        return Ok(predicted.clone());
    }

    let s_dim = observed.len();
    let r_obs = DMatrix::from_fn(s_dim, s_dim, |i, j| meas_cov[(observed[i], observed[j])]);
    check_psd_dyn(&r_obs)?;

    let p = &predicted.covariance;
    let p_obs = DMatrix::from_fn(s_dim, s_dim, |i, j| p[(observed[i], observed[j])]);
    let s = &p_obs + &r_obs;
    let Some(s_inv) = s.clone().try_inverse() else {
        // prior and measurement are both exact on the observed block
        return Ok(predicted.clone());
    };

    // K = P H^T S^{-1}, with H the selection of observed components
    let p_cols = DMatrix::from_fn(4, s_dim, |i, j| p[(i, observed[j])]);
    let k = &p_cols * &s_inv;

    let mut innovation = DVector::zeros(s_dim);
    let prior = predicted.mean.as_vector();
    let meas = measurement.as_vector();
    for (j, &idx) in observed.iter().enumerate() {
        let mut delta = meas[idx] - prior[idx];
        if idx == 1 {
            // azimuth lives on the circle
            delta = (delta + PI).rem_euclid(2.0 * PI) - PI;
        }
        innovation[j] = delta;
    }

    let correction = &k * &innovation;
    let mut mean = prior;
    for i in 0..4 {
        mean[i] += correction[i];
    }
    mean[1] = wrap_angle(mean[1]);

    // Joseph form: P' = (I - K H) P (I - K H)^T + K R K^T
    let mut kh = Matrix4::zeros();
    for i in 0..4 {
        for (j, &idx) in observed.iter().enumerate() {
            kh[(i, idx)] = k[(i, j)];
        }
    }
    let i_kh = Matrix4::identity() - kh;
    let krk = &k * &r_obs * k.transpose();
    let mut cov = i_kh * p * i_kh.transpose();
    for i in 0..4 {
        for j in 0..4 {
            cov[(i, j)] += krk[(i, j)];
        }
    }

    Ok(StateEstimate {
        mean: TargetState::from_vector(&mean),
        covariance: cov,
    })
}

fn check_psd_dyn(m: &DMatrix<f64>) -> Result<(), TrackingError> {
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-9 * scale {
        return Err(TrackingError::NotPsd);
    }
    let sym = (m + m.transpose()) * 0.5;
    if sym
        .symmetric_eigenvalues()
        .iter()
        .any(|&e| e < -1e-9 * scale)
    {
        return Err(TrackingError::NotPsd);
    }
    Ok(())
}

/// Probability that Gaussian angle errors stay inside half the effective
/// half-power beamwidth on both axes: the product over the two angles of
/// `2*Phi(h / (2*sigma)) - 1`, which is 1 at `sigma = 0`.
pub fn event_probability(angle_stds: (f64, f64), hpbw_effective: (f64, f64)) -> f64 {
    axis_probability(angle_stds.0, hpbw_effective.0)
        * axis_probability(angle_stds.1, hpbw_effective.1)
}

fn axis_probability(sigma: f64, h: f64) -> f64 {
    assert!(h > 0.0, "beamwidth must be positive");
    assert!(sigma >= 0.0, "standard deviation must be nonnegative");
    if sigma == 0.0 {
        return 1.0;
    }
    // 2*Phi(x) - 1 = erf(x / sqrt(2)) with x = h / (2*sigma)
    erf(h / (2.0 * sigma * SQRT_2))
}
