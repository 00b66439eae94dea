//! Directional relevance between services and toward the query center.

use crate::coverage::{angular_overlap, SocSenService};
use crate::error::{Error, Result};
use crate::geo::{cos_deg, initial_bearing, normalize_signed_deg, GeoPoint};
use crate::scalar::Real;

/// Tolerance, in degrees, under which two coordinates count as coincident.
pub const COINCIDENT_TOL_DEG: f64 = 1e-9;

/// Normalization context for pair relevance: coverage magnitudes are scaled
/// by the maximum visible distance over the current candidate set, which
/// keeps the relevance product inside `[-1, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct RelevanceScale<T> {
    visd_max: T,
}

impl<T: Real> RelevanceScale<T> {
    /// Builds the scale from the candidate set. Empty sets have no defined
    /// maximum and are rejected.
    pub fn from_services(services: &[SocSenService<T>]) -> Result<Self> {
        let visd_max = services
            .iter()
            .map(|s| s.coverage.visd_m)
            .fold(T::nan(), T::max);
        if !visd_max.is_finite() || visd_max <= T::zero() {
            return Err(Error::EmptyCandidateSet);
        }
        Ok(Self { visd_max })
    }

    /// Unit-normalized coverage magnitude of one service, in `(0, 1]`.
    pub fn magnitude(&self, service: &SocSenService<T>) -> T {
        service.coverage.visd_m / self.visd_max
    }

    /// Directional relevance of a pair in `[-1, 1]`: the product of the two
    /// normalized coverage magnitudes and the cosine of the angular overlap.
    /// Positive when the services point within 90 degrees of each other,
    /// negative when they oppose.
    pub fn pair_relevance(&self, a: &SocSenService<T>, b: &SocSenService<T>) -> T {
        self.magnitude(a) * self.magnitude(b) * cos_deg(angular_overlap(a, b))
    }
}

/// Unsigned angle in `[0, 180]` between a service's viewing direction and the
/// initial bearing from its location toward `p`. Zero means the camera points
/// exactly at `p`.
///
/// A camera located at `p` itself has no defined bearing toward it; by
/// convention this returns 0 (the camera trivially covers the center), which
/// callers may treat as a data-quality signal via [`points_coincident`].
pub fn direction_to_point<T: Real>(service: &SocSenService<T>, p: GeoPoint<T>) -> T {
    if points_coincident(service, p) {
        return T::zero();
    }
    let bearing = initial_bearing(service.location, p);
    normalize_signed_deg(service.coverage.dir_deg - bearing).abs()
}

/// True when the service sits on `p` within [`COINCIDENT_TOL_DEG`].
pub fn points_coincident<T: Real>(service: &SocSenService<T>, p: GeoPoint<T>) -> bool {
    service.location.coincident(&p, T::of(COINCIDENT_TOL_DEG))
}
