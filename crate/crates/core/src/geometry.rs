//! Directions, direction cosines, wavevectors, array geometries, steering and
//! round-trip response vectors, and half-power beamwidths.
//!
//! Coordinate convention used by every module: the DCM lies in the x-y plane
//! with boresight along +z, and a direction with polar angle `theta` (from
//! boresight) and azimuth `phi` has unit cosines
//! `u = [sin(theta) cos(phi), sin(theta) sin(phi), cos(theta)]`.

use nalgebra::{DVector, Vector3};
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Half-power beamwidth factor for a uniformly excited aperture.
const HPBW_FACTOR: f64 = 0.886;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("polar angle {0} rad is outside [0, pi/2]")]
    ThetaOutOfRange(f64),
    #[error("direction cosines must have unit norm, got {0}")]
    NotUnitNorm(f64),
    #[error("direction points below the array plane (u_z = {0})")]
    BelowHorizon(f64),
    #[error("array must contain at least one element")]
    EmptyArray,
    #[error("array positions must be pairwise distinct")]
    DuplicatePositions,
    #[error("positions do not form a {0}x{1} rectangular grid indexed row-by-row")]
    NotRectangularGrid(usize, usize),
    #[error("element count {found} does not match grid size {expected}")]
    GridCountMismatch { expected: usize, found: usize },
    #[error("wavelength must be positive, got {0}")]
    InvalidWavelength(f64),
    #[error("element spacing must be positive, got {0}")]
    InvalidSpacing(f64),
}

/// Target direction seen from the transceiver: polar angle from boresight in
/// `[0, pi/2]` and azimuth wrapped to `[0, 2*pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    theta: f64,
    phi: f64,
}

impl Direction {
    pub fn new(theta: f64, phi: f64) -> Result<Self, GeometryError> {
        if !(0.0..=PI / 2.0).contains(&theta) || !theta.is_finite() {
            return Err(GeometryError::ThetaOutOfRange(theta));
        }
        Ok(Self {
            theta,
            phi: wrap_angle(phi),
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn cosines(&self) -> DirectionCosines {
        let (st, ct) = (self.theta.sin(), self.theta.cos());
        let (sp, cp) = (self.phi.sin(), self.phi.cos());
        DirectionCosines {
            u: Vector3::new(st * cp, st * sp, ct),
        }
    }
}

/// Wrap an angle into `[0, 2*pi)`.
pub fn wrap_angle(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    // rem_euclid can return exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Unit vector of direction cosines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionCosines {
    u: Vector3<f64>,
}

impl DirectionCosines {
    /// Wraps a raw vector, requiring unit norm (renormalized to machine precision).
    pub fn from_vector(u: Vector3<f64>) -> Result<Self, GeometryError> {
        let n = u.norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-9 {
            return Err(GeometryError::NotUnitNorm(n));
        }
        Ok(Self { u: u / n })
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.u
    }

    /// The opposite direction, used for outgoing-wave signatures.
    pub fn negated(&self) -> Self {
        Self { u: -self.u }
    }

    /// Recovers the polar direction; fails for directions below the horizon.
    pub fn to_direction(&self) -> Result<Direction, GeometryError> {
        if self.u.z < 0.0 {
            return Err(GeometryError::BelowHorizon(self.u.z));
        }
        let theta = self.u.z.clamp(-1.0, 1.0).acos();
        let phi = if self.u.x == 0.0 && self.u.y == 0.0 {
            0.0
        } else {
            self.u.y.atan2(self.u.x)
        };
        Direction::new(theta.min(PI / 2.0), phi)
    }
}

/// Wavevector `k = (2*pi / lambda0) * u` in rad/m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavevector {
    k: Vector3<f64>,
}

impl Wavevector {
    pub fn new(u: &DirectionCosines, lambda0: f64) -> Result<Self, GeometryError> {
        if !(lambda0 > 0.0) {
            return Err(GeometryError::InvalidWavelength(lambda0));
        }
        Ok(Self {
            k: u.as_vector() * (TAU / lambda0),
        })
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.k
    }
}

/// Which aperture an [`ArrayGeometry`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayRole {
    /// Communications transmitter, N elements.
    CommsTx,
    /// Sensing receiver, M elements.
    SensRx,
    /// Metasurface, `l_h * l_v` elements in a rectangular grid indexed row-by-row.
    Dcm { l_h: usize, l_v: usize },
}

/// Element positions (meters) of one aperture.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    role: ArrayRole,
    positions: Vec<Vector3<f64>>,
}

impl ArrayGeometry {
    /// Validates and wraps explicit element positions.
    pub fn from_positions(
        role: ArrayRole,
        positions: Vec<Vector3<f64>>,
    ) -> Result<Self, GeometryError> {
        if positions.is_empty() {
            return Err(GeometryError::EmptyArray);
        }
        let mut keys: Vec<[u64; 3]> = positions
            .iter()
            .map(|p| [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()])
            .collect();
        keys.sort_unstable();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(GeometryError::DuplicatePositions);
        }
        if let ArrayRole::Dcm { l_h, l_v } = role {
            check_rectangular_grid(&positions, l_h, l_v)?;
        }
        Ok(Self { role, positions })
    }

    /// Uniform linear array along the x-axis, centered on the origin.
    pub fn uniform_linear(role: ArrayRole, n: usize, spacing: f64) -> Result<Self, GeometryError> {
        if !(spacing > 0.0) {
            return Err(GeometryError::InvalidSpacing(spacing));
        }
        let mid = (n as f64 - 1.0) / 2.0;
        let positions = (0..n)
            .map(|i| Vector3::new((i as f64 - mid) * spacing, 0.0, 0.0))
            .collect();
        Self::from_positions(role, positions)
    }

    /// Rectangular DCM grid in the x-y plane: `l_h` columns along x (horizontal)
    /// and `l_v` rows along y (vertical), indexed row-by-row, centered on the origin.
    pub fn rectangular_dcm(l_h: usize, l_v: usize, spacing: f64) -> Result<Self, GeometryError> {
        if !(spacing > 0.0) {
            return Err(GeometryError::InvalidSpacing(spacing));
        }
        let (mh, mv) = ((l_h as f64 - 1.0) / 2.0, (l_v as f64 - 1.0) / 2.0);
        let mut positions = Vec::with_capacity(l_h * l_v);
        for row in 0..l_v {
            for col in 0..l_h {
                positions.push(Vector3::new(
                    (col as f64 - mh) * spacing,
                    (row as f64 - mv) * spacing,
                    0.0,
                ));
            }
        }
        Self::from_positions(ArrayRole::Dcm { l_h, l_v }, positions)
    }

    pub fn role(&self) -> ArrayRole {
        self.role
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn is_dcm(&self) -> bool {
        matches!(self.role, ArrayRole::Dcm { .. })
    }

    /// Extent of the element positions along one coordinate axis (0 = x, 1 = y, 2 = z).
    pub fn aperture_extent(&self, axis: usize) -> f64 {
        let vals = self.positions.iter().map(|p| p[axis]);
        let max = vals.clone().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.fold(f64::INFINITY, f64::min);
        max - min
    }
}

fn check_rectangular_grid(
    positions: &[Vector3<f64>],
    l_h: usize,
    l_v: usize,
) -> Result<(), GeometryError> {
    let expected = l_h * l_v;
    if l_h == 0 || l_v == 0 || positions.len() != expected {
        return Err(GeometryError::GridCountMismatch {
            expected,
            found: positions.len(),
        });
    }
    let origin = positions[0];
    let dx = if l_h > 1 {
        positions[1] - origin
    } else {
        Vector3::zeros()
    };
    let dy = if l_v > 1 {
        positions[l_h] - origin
    } else {
        Vector3::zeros()
    };
    if (l_h > 1 && dx.norm() == 0.0)
        || (l_v > 1 && dy.norm() == 0.0)
        || (l_h > 1 && l_v > 1 && dx.cross(&dy).norm() < 1e-12 * dx.norm() * dy.norm())
    {
        return Err(GeometryError::NotRectangularGrid(l_h, l_v));
    }
    let scale = 1.0_f64.max(dx.norm()).max(dy.norm());
    for row in 0..l_v {
        for col in 0..l_h {
            let want = origin + dx * col as f64 + dy * row as f64;
            if (positions[row * l_h + col] - want).norm() > 1e-9 * scale {
                return Err(GeometryError::NotRectangularGrid(l_h, l_v));
            }
        }
    }
    Ok(())
}

/// Array response vector: entry `l` is `exp(-j k(d)^T p_l)`.
///
/// Every entry has unit modulus, so the squared norm equals the element count.
pub fn steering_vector(
    geometry: &ArrayGeometry,
    direction: &Direction,
    lambda0: f64,
) -> DVector<Complex64> {
    steering_vector_cosines(geometry, &direction.cosines(), lambda0)
}

/// Same as [`steering_vector`] but from raw cosines, which also admits the
/// negated (outgoing) direction.
pub fn steering_vector_cosines(
    geometry: &ArrayGeometry,
    u: &DirectionCosines,
    lambda0: f64,
) -> DVector<Complex64> {
    assert!(lambda0 > 0.0, "wavelength must be positive");
    let k = u.as_vector() * (TAU / lambda0);
    DVector::from_iterator(
        geometry.len(),
        geometry.positions().iter().map(|p| Complex64::cis(-k.dot(p))),
    )
}

/// Round-trip response of the DCM: entry `l` is `exp(-j 2 k(d)^T p_l)`,
/// the monostatic incident-plus-reflected phase accumulated by element `l`.
pub fn round_trip_steering(
    geometry: &ArrayGeometry,
    direction: &Direction,
    lambda0: f64,
) -> DVector<Complex64> {
    debug_assert!(geometry.is_dcm(), "round-trip response is a DCM quantity");
    assert!(lambda0 > 0.0, "wavelength must be positive");
    let k = direction.cosines().as_vector() * (2.0 * TAU / lambda0);
    DVector::from_iterator(
        geometry.len(),
        geometry.positions().iter().map(|p| Complex64::cis(-k.dot(p))),
    )
}

/// Round-trip phase profile in radians, wrapped to `[0, 2*pi)`: `-2 k(d)^T p_l`.
pub fn round_trip_phases(geometry: &ArrayGeometry, direction: &Direction, lambda0: f64) -> Vec<f64> {
    assert!(lambda0 > 0.0, "wavelength must be positive");
    let k = direction.cosines().as_vector() * (2.0 * TAU / lambda0);
    geometry
        .positions()
        .iter()
        .map(|p| wrap_angle(-k.dot(p)))
        .collect()
}

/// One-way phase profile in radians, wrapped to `[0, 2*pi)`: `-k(d)^T p_l`.
pub fn one_way_phases(geometry: &ArrayGeometry, direction: &Direction, lambda0: f64) -> Vec<f64> {
    assert!(lambda0 > 0.0, "wavelength must be positive");
    let k = direction.cosines().as_vector() * (TAU / lambda0);
    geometry
        .positions()
        .iter()
        .map(|p| wrap_angle(-k.dot(p)))
        .collect()
}

/// Half-power beamwidth of a uniformly excited aperture of the given length,
/// `0.886 * lambda0 / aperture_length`, clamped to at most `pi`.
pub fn hpbw(aperture_length: f64, lambda0: f64) -> f64 {
    assert!(aperture_length > 0.0, "aperture length must be positive");
    assert!(lambda0 > 0.0, "wavelength must be positive");
    (HPBW_FACTOR * lambda0 / aperture_length).min(PI)
}
