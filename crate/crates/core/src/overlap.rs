//! Overlap ratio between two FOV triangles.
//!
//! Triangles are projected into a local equirectangular frame about their
//! joint centroid, intersected by convex clipping, and compared by area.

use crate::coverage::FovTriangle;
use crate::geo::{earth_radius, normalize_signed_deg, GeoPoint};
use crate::scalar::Real;

/// Planar point in the local frame, meters east/north.
type P2<T> = [T; 2];

struct LocalFrame<T> {
    origin: GeoPoint<T>,
    meters_per_deg: T,
    cos_lat: T,
}

impl<T: Real> LocalFrame<T> {
    fn about(points: &[GeoPoint<T>]) -> Self {
        let n = T::from_usize(points.len()).expect("point count");
        let lat = points.iter().map(|p| p.lat).sum::<T>() / n;
        // Average longitudes as offsets from the first point so frames near
        // the antimeridian stay consistent.
        let base = points[0].lon;
        let lon = base
            + points
                .iter()
                .map(|p| normalize_signed_deg(p.lon - base))
                .sum::<T>()
                / n;
        let origin = GeoPoint { lat, lon };
        Self {
            origin,
            meters_per_deg: earth_radius::<T>() * T::of(std::f64::consts::PI / 180.0),
            cos_lat: lat.to_radians().cos(),
        }
    }

    fn project(&self, p: GeoPoint<T>) -> P2<T> {
        let x = normalize_signed_deg(p.lon - self.origin.lon) * self.meters_per_deg * self.cos_lat;
        let y = (p.lat - self.origin.lat) * self.meters_per_deg;
        [x, y]
    }
}

/// Signed shoelace area; positive for counter-clockwise winding.
fn signed_area<T: Real>(poly: &[P2<T>]) -> T {
    if poly.len() < 3 {
        return T::zero();
    }
    let mut acc = T::zero();
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        acc += a[0] * b[1] - b[0] * a[1];
    }
    acc / T::of(2.0)
}

fn cross_edge<T: Real>(a: P2<T>, b: P2<T>, p: P2<T>) -> T {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Clips `subject` against the left half-plane of directed edge a -> b
/// (Sutherland-Hodgman step).
fn clip_halfplane<T: Real>(subject: &[P2<T>], a: P2<T>, b: P2<T>) -> Vec<P2<T>> {
    let mut out = Vec::with_capacity(subject.len() + 1);
    let n = subject.len();
    for i in 0..n {
        let s = subject[i];
        let e = subject[(i + 1) % n];
        let sc = cross_edge(a, b, s);
        let ec = cross_edge(a, b, e);
        let s_in = sc >= T::zero();
        let e_in = ec >= T::zero();
        match (s_in, e_in) {
            (true, true) => out.push(e),
            (true, false) | (false, true) => {
                let denom = sc - ec;
                if denom.abs() > T::of(1e-30) {
                    let t = sc / denom;
                    out.push([s[0] + (e[0] - s[0]) * t, s[1] + (e[1] - s[1]) * t]);
                }
                if e_in {
                    out.push(e);
                }
            }
            (false, false) => {}
        }
    }
    out
}

/// Intersection of a convex subject with a counter-clockwise convex clip
/// polygon via iterated half-plane clipping.
fn clip_convex<T: Real>(subject: &[P2<T>], clip: &[P2<T>]) -> Vec<P2<T>> {
    let mut result = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if result.len() < 3 {
            return Vec::new();
        }
        result = clip_halfplane(&result, clip[i], clip[(i + 1) % n]);
    }
    result
}

fn oriented_ccw<T: Real>(mut tri: Vec<P2<T>>) -> Vec<P2<T>> {
    if signed_area(&tri) < T::zero() {
        tri.reverse();
    }
    tri
}

/// Fraction of the smaller triangle covered by the other, in `[0, 1]`.
///
/// A small FOV entirely inside a large one therefore counts as full
/// duplication. Degenerate (zero-area) triangles never overlap anything.
pub fn triangle_overlap_ratio<T: Real>(t1: &FovTriangle<T>, t2: &FovTriangle<T>) -> T {
    let vertices = [t1.apex, t1.left, t1.right, t2.apex, t2.left, t2.right];
    let frame = LocalFrame::about(&vertices);
    let p1 = oriented_ccw(vec![
        frame.project(t1.apex),
        frame.project(t1.left),
        frame.project(t1.right),
    ]);
    let p2 = oriented_ccw(vec![
        frame.project(t2.apex),
        frame.project(t2.left),
        frame.project(t2.right),
    ]);
    let a1 = signed_area(&p1);
    let a2 = signed_area(&p2);
    let smaller = a1.min(a2);
    if smaller <= T::zero() {
        return T::zero();
    }
    let inter = signed_area(&clip_convex(&p1, &p2)).abs();
    (inter / smaller).min(T::one()).max(T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::{fov_triangle, Coverage, ServiceTime, SocSenService};
    use crate::geo::destination_point;

    /// Builds a triangle from planar offsets (meters east/north) around a
    /// base point near the equator, where the projection is essentially
    /// exact at this scale.
    fn tri_from_meters(offsets: [[f64; 2]; 3]) -> FovTriangle<f64> {
        let base = GeoPoint::new(0.0_f64, 0.0).unwrap();
        let mut pts = offsets.iter().map(|[x, y]| {
            let north = destination_point(base, 0.0, y.abs()).unwrap();
            let north = if *y < 0.0 {
                destination_point(base, 180.0, y.abs()).unwrap()
            } else {
                north
            };
            let bearing = if *x >= 0.0 { 90.0 } else { 270.0 };
            destination_point(north, bearing, x.abs()).unwrap()
        });
        FovTriangle {
            apex: pts.next().unwrap(),
            left: pts.next().unwrap(),
            right: pts.next().unwrap(),
        }
    }

    #[test]
    fn identical_triangles_fully_overlap() {
        let s = SocSenService::new(
            "s",
            GeoPoint::new(-37.8_f64, 144.96).unwrap(),
            ServiceTime::instant(0.0).unwrap(),
            Coverage::new(10.0, 60.0, 500.0).unwrap(),
        );
        let t = fov_triangle(&s);
        assert!((triangle_overlap_ratio(&t, &t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_triangles_do_not_overlap() {
        let t1 = tri_from_meters([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]]);
        let t2 = tri_from_meters([[100.0, 100.0], [110.0, 100.0], [100.0, 110.0]]);
        assert_eq!(triangle_overlap_ratio(&t1, &t2), 0.0);
    }

    #[test]
    fn right_triangles_share_half_their_area() {
        // Two axis-aligned right triangles on a shared base; the exact
        // intersection is half of either area (Monte-Carlo verified).
        let t1 = tri_from_meters([[0.0, 0.0], [100.0, 0.0], [0.0, 100.0]]);
        let t2 = tri_from_meters([[0.0, 0.0], [100.0, 0.0], [100.0, 100.0]]);
        let r = triangle_overlap_ratio(&t1, &t2);
        assert!((r - 0.5).abs() < 1e-3, "ratio {r}");
    }

    #[test]
    fn zero_area_triangle_yields_zero() {
        let sliver = tri_from_meters([[0.0, 0.0], [10.0, 0.0], [20.0, 0.0]]);
        let t = tri_from_meters([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]]);
        assert_eq!(triangle_overlap_ratio(&sliver, &t), 0.0);
    }

    #[test]
    fn contained_triangle_counts_as_full_duplication() {
        let big = tri_from_meters([[-100.0, -50.0], [100.0, -50.0], [0.0, 120.0]]);
        let small = tri_from_meters([[-10.0, -5.0], [10.0, -5.0], [0.0, 12.0]]);
        let r = triangle_overlap_ratio(&big, &small);
        assert!((r - 1.0).abs() < 1e-6, "ratio {r}");
    }

    #[test]
    fn monte_carlo_oracle_agrees_on_right_triangles() {
        // Point-sampling oracle over the bounding box, independent of the
        // clipping path.
        let in_t1 = |x: f64, y: f64| x >= 0.0 && y >= 0.0 && x + y <= 100.0;
        let in_t2 = |x: f64, y: f64| y >= 0.0 && x <= 100.0 && y <= x;
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            // xorshift64*; plenty for area sampling.
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            (state.wrapping_mul(0x2545F4914F6CDD1D) >> 11) as f64 / (1u64 << 53) as f64
        };
        let n = 1_000_000;
        let (mut c1, mut c2, mut cb) = (0u64, 0u64, 0u64);
        for _ in 0..n {
            let x = next() * 100.0;
            let y = next() * 100.0;
            let a = in_t1(x, y);
            let b = in_t2(x, y);
            c1 += a as u64;
            c2 += b as u64;
            cb += (a && b) as u64;
        }
        let mc_ratio = cb as f64 / c1.min(c2) as f64;
        let t1 = tri_from_meters([[0.0, 0.0], [100.0, 0.0], [0.0, 100.0]]);
        let t2 = tri_from_meters([[0.0, 0.0], [100.0, 0.0], [100.0, 100.0]]);
        let r = triangle_overlap_ratio(&t1, &t2);
        assert!((r - mc_ratio).abs() < 5e-3, "impl {r} vs monte-carlo {mc_ratio}");
    }
}
