//! Geographic points, bearings and spherical-earth primitives.
//!
//! All public interfaces speak degrees; radians only appear inside function
//! bodies. Bearings are compass headings, clockwise from North, normalized
//! into `[0, 360)`; angular differences normalize into `(-180, 180]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Mean Earth radius in meters (spherical model).
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Mean Earth radius in the scalar type.
pub fn earth_radius<T: Real>() -> T {
    T::of(EARTH_RADIUS_M)
}

/// Normalizes a bearing into `[0, 360)`.
pub fn normalize_bearing<T: Real>(deg: T) -> T {
    let full = T::of(360.0);
    let r = deg % full;
    if r < T::zero() {
        r + full
    } else {
        r
    }
}

/// Normalizes an angular difference into `(-180, 180]`.
pub fn normalize_signed_deg<T: Real>(deg: T) -> T {
    let full = T::of(360.0);
    let half = T::of(180.0);
    let mut r = deg % full;
    if r > half {
        r -= full;
    }
    if r <= -half {
        r += full;
    }
    r
}

/// Normalizes a longitude into `[-180, 180)`.
pub fn normalize_lon<T: Real>(deg: T) -> T {
    let r = normalize_signed_deg(deg);
    if r == T::of(180.0) {
        T::of(-180.0)
    } else {
        r
    }
}

/// Cosine of an angle in degrees, exact at quadrant boundaries so that
/// perpendicular headings yield exactly zero and opposed headings exactly -1.
pub fn cos_deg<T: Real>(deg: T) -> T {
    let r = normalize_signed_deg(deg);
    let ninety = T::of(90.0);
    if r == T::zero() {
        T::one()
    } else if r == ninety || r == -ninety {
        T::zero()
    } else if r == T::of(180.0) {
        -T::one()
    } else {
        r.to_radians().cos()
    }
}

/// A geographic coordinate in decimal degrees.
///
/// Latitude lies in `[-90, 90]`; longitude is kept normalized in `[-180, 180)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint<T> {
    pub lat: T,
    pub lon: T,
}

impl<T: Real> GeoPoint<T> {
    pub fn new(lat: T, lon: T) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(Error::InvalidPoint(format!(
                "non-finite coordinates ({lat}, {lon})"
            )));
        }
        if lat < T::of(-90.0) || lat > T::of(90.0) {
            return Err(Error::InvalidPoint(format!(
                "latitude {lat} outside [-90, 90]"
            )));
        }
        Ok(Self {
            lat,
            lon: normalize_lon(lon),
        })
    }

    /// True when both coordinates agree within `tol_deg`.
    pub fn coincident(&self, other: &Self, tol_deg: T) -> bool {
        (self.lat - other.lat).abs() <= tol_deg
            && normalize_signed_deg(self.lon - other.lon).abs() <= tol_deg
    }
}

/// Haversine great-circle distance in meters.
pub fn geodesic_distance<T: Real>(p1: GeoPoint<T>, p2: GeoPoint<T>) -> T {
    let two = T::of(2.0);
    let phi1 = p1.lat.to_radians();
    let phi2 = p2.lat.to_radians();
    let d_phi = (p2.lat - p1.lat).to_radians();
    let d_lam = normalize_signed_deg(p2.lon - p1.lon).to_radians();
    let a = (d_phi / two).sin().powi(2)
        + phi1.cos() * phi2.cos() * (d_lam / two).sin().powi(2);
    let c = two * a.sqrt().atan2((T::one() - a).sqrt());
    earth_radius::<T>() * c
}

/// Initial great-circle bearing from `from` toward `to`, in `[0, 360)`.
///
/// Coincident points have no defined bearing; this returns 0 for them.
pub fn initial_bearing<T: Real>(from: GeoPoint<T>, to: GeoPoint<T>) -> T {
    let phi1 = from.lat.to_radians();
    let phi2 = to.lat.to_radians();
    let d_lam = normalize_signed_deg(to.lon - from.lon).to_radians();
    let y = d_lam.sin() * phi2.cos();
    let x = phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * d_lam.cos();
    if y == T::zero() && x == T::zero() {
        return T::zero();
    }
    normalize_bearing(y.atan2(x).to_degrees())
}

/// Destination reached from `origin` after traveling `distance_m` along the
/// great circle with the given initial bearing (spherical law of cosines,
/// pole-safe atan2 form).
pub fn destination_point<T: Real>(
    origin: GeoPoint<T>,
    bearing_deg: T,
    distance_m: T,
) -> Result<GeoPoint<T>> {
    if !distance_m.is_finite() || distance_m < T::zero() {
        return Err(Error::InvalidPoint(format!(
            "travel distance must be finite and non-negative, got {distance_m}"
        )));
    }
    let phi1 = origin.lat.to_radians();
    let lam1 = origin.lon.to_radians();
    let theta = bearing_deg.to_radians();
    let delta = distance_m / earth_radius::<T>();

    let phi2 = (phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * theta.cos()).asin();
    let lam2 = lam1
        + (theta.sin() * delta.sin() * phi1.cos())
            .atan2(delta.cos() - phi1.sin() * phi2.sin());
    GeoPoint::new(phi2.to_degrees(), normalize_lon(lam2.to_degrees()))
}

/// Geodesic midpoint of two points.
pub fn geodesic_midpoint<T: Real>(p1: GeoPoint<T>, p2: GeoPoint<T>) -> GeoPoint<T> {
    let phi1 = p1.lat.to_radians();
    let phi2 = p2.lat.to_radians();
    let lam1 = p1.lon.to_radians();
    let d_lam = normalize_signed_deg(p2.lon - p1.lon).to_radians();

    let bx = phi2.cos() * d_lam.cos();
    let by = phi2.cos() * d_lam.sin();
    let phi_m = (phi1.sin() + phi2.sin())
        .atan2(((phi1.cos() + bx).powi(2) + by * by).sqrt());
    let lam_m = lam1 + by.atan2(phi1.cos() + bx);
    GeoPoint {
        lat: phi_m.to_degrees(),
        lon: normalize_lon(lam_m.to_degrees()),
    }
}

/// Circular mean of two compass bearings, in `[0, 360)`.
///
/// Exactly opposed bearings have no mean; 0 is returned by convention.
pub fn mean_bearing<T: Real>(a_deg: T, b_deg: T) -> T {
    let (sa, ca) = a_deg.to_radians().sin_cos();
    let (sb, cb) = b_deg.to_radians().sin_cos();
    let y = (sa + sb) / T::of(2.0);
    let x = (ca + cb) / T::of(2.0);
    if y == T::zero() && x == T::zero() {
        return T::zero();
    }
    normalize_bearing(y.atan2(x).to_degrees())
}

/// A scene query: rectangular region of interest plus a time window.
///
/// `half_length_m` is the east-west half extent and `half_width_m` the
/// north-south half extent of the region around `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneQuery<T> {
    pub center: GeoPoint<T>,
    pub half_length_m: T,
    pub half_width_m: T,
    pub t_start_s: T,
    pub t_end_s: T,
}

impl<T: Real> SceneQuery<T> {
    pub fn new(
        center: GeoPoint<T>,
        half_length_m: T,
        half_width_m: T,
        t_start_s: T,
        t_end_s: T,
    ) -> Result<Self> {
        if !(half_length_m.is_finite() && half_width_m.is_finite())
            || half_length_m <= T::zero()
            || half_width_m <= T::zero()
        {
            return Err(Error::InvalidQuery(format!(
                "half extents must be positive, got l={half_length_m} w={half_width_m}"
            )));
        }
        if !(t_start_s.is_finite() && t_end_s.is_finite()) || t_start_s > t_end_s {
            return Err(Error::InvalidQuery(format!(
                "time window [{t_start_s}, {t_end_s}] is not ordered"
            )));
        }
        Ok(Self {
            center,
            half_length_m,
            half_width_m,
            t_start_s,
            t_end_s,
        })
    }

    /// Window length in seconds.
    pub fn window_s(&self) -> T {
        self.t_end_s - self.t_start_s
    }

    /// Diagonal scale of the query rectangle, `sqrt(l^2 + w^2)`.
    pub fn diagonal_scale_m(&self) -> T {
        self.half_length_m.hypot(self.half_width_m)
    }
}
