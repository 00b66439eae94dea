//! Service model: camera coverage descriptors and their triangulated
//! field of view.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{destination_point, normalize_bearing, normalize_signed_deg, GeoPoint};
use crate::scalar::Real;

/// Opaque unique identifier of a service within a dataset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ServiceId(pub String);

impl ServiceId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ServiceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ServiceId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for ServiceId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// Camera lens/sensor parameters used to derive the viewable angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics<T> {
    /// Effective focal length, millimeters.
    pub focal_length_mm: T,
    /// Sensor size in the direction of the captured scene, millimeters.
    pub sensor_extent_mm: T,
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(focal_length_mm: T, sensor_extent_mm: T) -> Result<Self> {
        if !focal_length_mm.is_finite() || focal_length_mm <= T::zero() {
            return Err(Error::InvalidIntrinsics(format!(
                "focal length must be positive, got {focal_length_mm}"
            )));
        }
        if !sensor_extent_mm.is_finite() || sensor_extent_mm <= T::zero() {
            return Err(Error::InvalidIntrinsics(format!(
                "sensor extent must be positive, got {sensor_extent_mm}"
            )));
        }
        Ok(Self {
            focal_length_mm,
            sensor_extent_mm,
        })
    }
}

/// Viewable angle of a camera in degrees: `2 * arctan(d / 2f)`, in `(0, 180)`.
pub fn viewable_angle<T: Real>(intrinsics: &CameraIntrinsics<T>) -> T {
    let two = T::of(2.0);
    (two * (intrinsics.sensor_extent_mm / (two * intrinsics.focal_length_mm)).atan())
        .to_degrees()
}

/// Spatial coverage descriptor of one service: heading, viewable angle and
/// maximum visible distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage<T> {
    /// Compass heading in `[0, 360)`, clockwise from North.
    pub dir_deg: T,
    /// Viewable angle in `(0, 180)`.
    pub alpha_deg: T,
    /// Maximum visible distance, meters.
    pub visd_m: T,
}

impl<T: Real> Coverage<T> {
    pub fn new(dir_deg: T, alpha_deg: T, visd_m: T) -> Result<Self> {
        if !dir_deg.is_finite() {
            return Err(Error::InvalidCoverage(format!(
                "heading must be finite, got {dir_deg}"
            )));
        }
        if !alpha_deg.is_finite() || alpha_deg <= T::zero() || alpha_deg >= T::of(180.0) {
            return Err(Error::InvalidCoverage(format!(
                "viewable angle {alpha_deg} outside (0, 180)"
            )));
        }
        if !visd_m.is_finite() || visd_m <= T::zero() {
            return Err(Error::InvalidCoverage(format!(
                "visible distance must be positive, got {visd_m}"
            )));
        }
        Ok(Self {
            dir_deg: normalize_bearing(dir_deg),
            alpha_deg,
            visd_m,
        })
    }
}

/// Capture time of a service: an instant or a short interval, epoch seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ServiceTime<T> {
    Instant(T),
    Interval { start: T, end: T },
}

impl<T: Real> ServiceTime<T> {
    pub fn instant(t: T) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::InvalidTime(format!("non-finite time {t}")));
        }
        Ok(Self::Instant(t))
    }

    pub fn interval(start: T, end: T) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() || start > end {
            return Err(Error::InvalidTime(format!(
                "interval [{start}, {end}] is not ordered"
            )));
        }
        Ok(Self::Interval { start, end })
    }

    pub fn start(&self) -> T {
        match *self {
            Self::Instant(t) => t,
            Self::Interval { start, .. } => start,
        }
    }

    pub fn end(&self) -> T {
        match *self {
            Self::Instant(t) => t,
            Self::Interval { end, .. } => end,
        }
    }

    /// Representative instant: the midpoint for intervals.
    pub fn mid(&self) -> T {
        (self.start() + self.end()) / T::of(2.0)
    }
}

/// One crowdsourced image abstracted as a service: identity, location,
/// capture time and coverage. Carries no pixel data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocSenService<T> {
    pub id: ServiceId,
    pub location: GeoPoint<T>,
    pub time: ServiceTime<T>,
    pub coverage: Coverage<T>,
}

impl<T: Real> SocSenService<T> {
    pub fn new(
        id: impl Into<ServiceId>,
        location: GeoPoint<T>,
        time: ServiceTime<T>,
        coverage: Coverage<T>,
    ) -> Self {
        Self {
            id: id.into(),
            location,
            time,
            coverage,
        }
    }
}

/// Linear field of view: the chord spanned by the coverage triangle,
/// `2 * visd * sin(alpha / 2)`.
///
/// `alpha_deg` may take the degenerate boundary values 0 (zero-width sliver)
/// and 180 (half-plane).
pub fn fov_chord<T: Real>(alpha_deg: T, visd_m: T) -> Result<T> {
    if !alpha_deg.is_finite() || alpha_deg < T::zero() || alpha_deg > T::of(180.0) {
        return Err(Error::InvalidCoverage(format!(
            "viewable angle {alpha_deg} outside [0, 180]"
        )));
    }
    if !visd_m.is_finite() || visd_m < T::zero() {
        return Err(Error::InvalidCoverage(format!(
            "visible distance must be non-negative, got {visd_m}"
        )));
    }
    Ok(T::of(2.0) * visd_m * (alpha_deg / T::of(2.0)).to_radians().sin())
}

/// Height of the coverage triangle from apex to chord,
/// `sqrt(visd^2 - lfov^2 / 4)`.
pub fn fov_height<T: Real>(visd_m: T, lfov_m: T) -> Result<T> {
    if !visd_m.is_finite() || visd_m < T::zero() || !lfov_m.is_finite() || lfov_m < T::zero() {
        return Err(Error::InvalidCoverage(format!(
            "lengths must be non-negative, got visd={visd_m} lfov={lfov_m}"
        )));
    }
    let half = lfov_m / T::of(2.0);
    if half > visd_m {
        return Err(Error::GeometryInconsistency(format!(
            "chord {lfov_m} exceeds twice the visible distance {visd_m}"
        )));
    }
    // Factored form (v - l/2)(v + l/2) loses less precision than v^2 - l^2/4.
    Ok(((visd_m - half) * (visd_m + half)).max(T::zero()).sqrt())
}

/// Triangulated coverage: the camera location plus the two far corners of
/// the field of view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FovTriangle<T> {
    pub apex: GeoPoint<T>,
    pub left: GeoPoint<T>,
    pub right: GeoPoint<T>,
}

/// Triangulates a service's coverage: both far corners lie `visd` meters from
/// the camera along the bearings `dir -/+ alpha/2`.
pub fn fov_triangle<T: Real>(service: &SocSenService<T>) -> FovTriangle<T> {
    let cov = &service.coverage;
    let half = cov.alpha_deg / T::of(2.0);
    // Validated coverage implies a non-negative travel distance, so the
    // destination computations cannot fail.
    let left = destination_point(service.location, cov.dir_deg - half, cov.visd_m)
        .expect("validated coverage");
    let right = destination_point(service.location, cov.dir_deg + half, cov.visd_m)
        .expect("validated coverage");
    FovTriangle {
        apex: service.location,
        left,
        right,
    }
}

/// Angular overlap between two services: the signed heading difference
/// `a.dir - b.dir`, normalized into `(-180, 180]`.
pub fn angular_overlap<T: Real>(a: &SocSenService<T>, b: &SocSenService<T>) -> T {
    normalize_signed_deg(a.coverage.dir_deg - b.coverage.dir_deg)
}
