//! Seeded synthetic scenes with geometric ground truth.
//!
//! Each scene drops an incident point into a query region and surrounds it
//! with cameras: an arc of witnesses aimed at the incident, near-miss and
//! turned-away distractors, wanderers, and a few near-duplicate clones.
//! Pair labels and the per-query selected-service truth come from the
//! [`oracle`] module, which works in straight-line planar geometry and is
//! deliberately independent of the library's spherical pipeline code
//! (placement uses the library; labeling never does).
//!
//! Ground truth semantics:
//! - a pair is composable iff both FOV triangles contain the incident, the
//!   capture times lie within the window of each other, and the triangles do
//!   not duplicate each other's coverage (overlap below the bound);
//! - the selected-service truth of a query is every incident-covering,
//!   in-window service minus redundant duplicates (for each duplicated pair
//!   the member farther from the region center).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mosaic_core::coverage::{Coverage, ServiceId, ServiceTime};
use mosaic_core::geo::{destination_point, geodesic_distance, initial_bearing, GeoPoint, SceneQuery};
use mosaic_core::SocSenService;

use crate::record::GroundTruthLabels;

/// One-scene generator settings.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    /// Mandatory seed; every byte of the output is a function of it.
    pub seed: u64,
    /// Scene region and time window; cameras are placed inside it.
    pub region: SceneQuery<f64>,
    pub n_relevant: usize,
    pub n_distractor: usize,
    /// Position jitter, standard deviation in meters.
    pub position_jitter_m: f64,
    /// Heading noise, standard deviation in degrees.
    pub heading_noise_deg: f64,
    /// Capture times spread uniformly over this many seconds inside the
    /// window (clamped to the window length).
    pub time_jitter_s: f64,
    /// Overlap ratio at or above which coverage counts as duplicated.
    ///
    /// Distinct cameras aimed at one incident share most of their far field
    /// in this coverage model (pairwise ratios of 0.5-0.85 are the norm),
    /// while near-identical shots sit at 0.95 and above; the default of 0.9
    /// separates the two populations. Pipeline runs against generated data
    /// should pass the same value as their de-duplication threshold.
    pub oracle_overlap_bound: f64,
    /// Width of the arc the witnesses stand on, degrees.
    pub sector_deg: f64,
    /// Witness distance from the incident, as fractions of the smaller
    /// region half-extent.
    pub ring_radius_range: (f64, f64),
    /// Space witnesses evenly over the arc instead of sampling bearings.
    pub evenly_spaced: bool,
    /// Fraction of witnesses that get a near-duplicate clone.
    pub duplicate_fraction: f64,
}

impl SynthConfig {
    /// A scene with every knob that introduces classification difficulty
    /// turned off: a narrow arc (every witness pair agrees in heading),
    /// even spacing at one radius (no accidental near-duplicates), no
    /// noise, no clones.
    pub fn zero_noise(seed: u64, region: SceneQuery<f64>) -> Self {
        Self {
            seed,
            region,
            n_relevant: 6,
            n_distractor: 4,
            position_jitter_m: 0.0,
            heading_noise_deg: 0.0,
            time_jitter_s: 0.5 * region.window_s(),
            oracle_overlap_bound: 0.9,
            sector_deg: 70.0,
            ring_radius_range: (0.5, 0.5),
            evenly_spaced: true,
            duplicate_fraction: 0.0,
        }
    }
}

/// A generated scene: services, pair labels, and the selected-service truth.
#[derive(Debug, Clone)]
pub struct SceneData {
    pub services: Vec<SocSenService<f64>>,
    pub labels: GroundTruthLabels,
    pub truth: Vec<ServiceId>,
    pub incident: GeoPoint<f64>,
}

/// Suite generator settings: many scenes scattered over a city extent with
/// disjoint time windows, plus background services that no query ever sees.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub scene: SynthConfig,
    pub n_queries: usize,
    pub city_center: GeoPoint<f64>,
    pub city_extent_m: f64,
    pub n_background: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        let center = GeoPoint::new(-37.8136, 144.9631).expect("static center");
        let region = SceneQuery::new(center, 150.0, 150.0, 1_600_000_000.0, 1_600_001_800.0)
            .expect("static region");
        Self {
            scene: SynthConfig {
                seed: 0,
                region,
                n_relevant: 9,
                n_distractor: 12,
                position_jitter_m: 6.0,
                heading_noise_deg: 8.0,
                time_jitter_s: 1500.0,
                oracle_overlap_bound: 0.9,
                sector_deg: 140.0,
                ring_radius_range: (0.3, 0.65),
                evenly_spaced: false,
                duplicate_fraction: 0.25,
            },
            n_queries: 70,
            city_center: center,
            city_extent_m: 4000.0,
            n_background: 600,
        }
    }
}

/// A full evaluation dataset: one query per scene.
#[derive(Debug, Clone)]
pub struct SyntheticSuite {
    pub services: Vec<SocSenService<f64>>,
    pub labels: GroundTruthLabels,
    pub queries: Vec<SceneQuery<f64>>,
    /// Selected-service truth per query, parallel to `queries`.
    pub truth: Vec<Vec<ServiceId>>,
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(1e-12..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

#[derive(Clone, Copy)]
enum DistractorKind {
    NearMiss,
    Away,
    Wanderer,
}

/// Generates one scene with its labels and selected-service truth.
pub fn generate_synthetic(cfg: &SynthConfig) -> SceneData {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let region = &cfg.region;
    let half_min = region.half_length_m.min(region.half_width_m);
    let window = region.window_s();
    let time_spread = cfg.time_jitter_s.clamp(0.0, window);

    // Incident near the region center.
    let incident = {
        let bearing = rng.random_range(0.0..360.0);
        let dist = rng.random_range(0.0..0.15 * half_min);
        destination_point(region.center, bearing, dist).expect("incident placement")
    };
    let arc_center = rng.random_range(0.0..360.0);

    let mut services: Vec<SocSenService<f64>> = Vec::new();
    let (r_lo, r_hi) = cfg.ring_radius_range;
    let place_on_arc = |rng: &mut ChaCha8Rng, slot: Option<(usize, usize)>| -> GeoPoint<f64> {
        let offset = match slot {
            // Even spacing over the arc for witness slot i of n.
            Some((i, n)) if cfg.evenly_spaced && n > 1 => {
                -cfg.sector_deg / 2.0 + cfg.sector_deg * i as f64 / (n - 1) as f64
            }
            _ => rng.random_range(-cfg.sector_deg / 2.0..=cfg.sector_deg / 2.0),
        };
        let radius = if r_hi > r_lo {
            rng.random_range(r_lo..r_hi) * half_min
        } else {
            r_lo * half_min
        };
        let mut p =
            destination_point(incident, arc_center + offset, radius).expect("arc placement");
        if cfg.position_jitter_m > 0.0 {
            let jitter = (gauss(rng) * cfg.position_jitter_m).abs().min(0.2 * half_min);
            let dir = rng.random_range(0.0..360.0);
            p = destination_point(p, dir, jitter).expect("jitter");
        }
        p
    };

    let capture_time = |rng: &mut ChaCha8Rng| -> f64 {
        let lo = region.t_start_s + 0.5 * (window - time_spread);
        lo + rng.random_range(0.0..=time_spread.max(1e-9))
    };

    // Witnesses: on the arc, aimed at the incident, seeing past it.
    for i in 0..cfg.n_relevant {
        let location = place_on_arc(&mut rng, Some((i, cfg.n_relevant)));
        let alpha = rng.random_range(35.0..75.0);
        let heading = initial_bearing(location, incident)
            + gauss(&mut rng) * cfg.heading_noise_deg;
        let dist = geodesic_distance(location, incident);
        let visd = (dist * rng.random_range(1.25..1.9) / (alpha / 2.0_f64).to_radians().cos())
            .min(3.0 * half_min);
        services.push(SocSenService::new(
            format!("r{i:03}"),
            location,
            ServiceTime::instant(capture_time(&mut rng)).expect("time"),
            Coverage::new(heading, alpha, visd).expect("coverage"),
        ));
    }

    // Near-duplicate clones of the first witnesses; the jitter is small
    // enough to keep clone overlap well above the duplication bound.
    let n_dups = (cfg.duplicate_fraction * cfg.n_relevant as f64).round() as usize;
    for i in 0..n_dups.min(cfg.n_relevant) {
        let original = services[i].clone();
        let location = destination_point(
            original.location,
            rng.random_range(0.0..360.0),
            rng.random_range(0.2..1.0),
        )
        .expect("clone placement");
        let heading = original.coverage.dir_deg + rng.random_range(-1.0..1.0);
        let visd = original.coverage.visd_m * rng.random_range(0.99..1.01);
        let t = (original.time.mid() + rng.random_range(-60.0..60.0))
            .clamp(region.t_start_s, region.t_end_s);
        services.push(SocSenService::new(
            format!("{}-dup", original.id),
            location,
            ServiceTime::instant(t).expect("time"),
            Coverage::new(heading, original.coverage.alpha_deg, visd).expect("coverage"),
        ));
    }

    // Distractors.
    for i in 0..cfg.n_distractor {
        let kind = match i % 10 {
            0..=4 => DistractorKind::NearMiss,
            5..=7 => DistractorKind::Away,
            _ => DistractorKind::Wanderer,
        };
        let alpha = rng.random_range(35.0..75.0);
        let (location, heading, visd, t) = match kind {
            DistractorKind::NearMiss => {
                let location = place_on_arc(&mut rng, None);
                let side = if rng.random_range(0.0..1.0) < 0.5 { -1.0 } else { 1.0 };
                let miss = side * (alpha / 2.0) * rng.random_range(1.1..1.9);
                let heading = initial_bearing(location, incident)
                    + miss
                    + gauss(&mut rng) * cfg.heading_noise_deg;
                let dist = geodesic_distance(location, incident);
                let visd = (dist * rng.random_range(1.25..1.9)
                    / (alpha / 2.0_f64).to_radians().cos())
                .min(3.0 * half_min);
                (location, heading, visd, capture_time(&mut rng))
            }
            DistractorKind::Away => {
                let location = place_on_arc(&mut rng, None);
                let heading = initial_bearing(location, incident)
                    + 180.0
                    + gauss(&mut rng) * 30.0;
                let dist = geodesic_distance(location, incident);
                let visd = (dist * rng.random_range(1.25..1.9)
                    / (alpha / 2.0_f64).to_radians().cos())
                .min(3.0 * half_min);
                (location, heading, visd, capture_time(&mut rng))
            }
            DistractorKind::Wanderer => {
                let dx = rng.random_range(-0.8..0.8) * region.half_length_m;
                let dy = rng.random_range(-0.8..0.8) * region.half_width_m;
                let east = destination_point(region.center, 90.0, dx.abs()).expect("east");
                let east = if dx < 0.0 {
                    destination_point(region.center, 270.0, dx.abs()).expect("west")
                } else {
                    east
                };
                let location = destination_point(east, if dy >= 0.0 { 0.0 } else { 180.0 }, dy.abs())
                    .expect("north");
                let heading = rng.random_range(0.0..360.0);
                let visd = rng.random_range(0.3..1.5) * half_min;
                // Some wanderers fall outside the window and only ever
                // exercise the spatio-temporal filter.
                let t = if rng.random_range(0.0..1.0) < 0.7 {
                    capture_time(&mut rng)
                } else {
                    region.t_end_s + 3.0 * window + rng.random_range(0.0..window)
                };
                (location, heading, visd, t)
            }
        };
        services.push(SocSenService::new(
            format!("d{i:03}"),
            location,
            ServiceTime::instant(t).expect("time"),
            Coverage::new(heading, alpha, visd).expect("coverage"),
        ));
    }

    let (labels, truth) = label_scene(&services, region, incident, cfg.oracle_overlap_bound);
    SceneData {
        services,
        labels,
        truth,
        incident,
    }
}

/// Labels every candidate pair of the scene and derives the selected-service
/// truth, all in planar geometry (straight-line oracle, no pipeline code).
fn label_scene(
    services: &[SocSenService<f64>],
    region: &SceneQuery<f64>,
    incident: GeoPoint<f64>,
    overlap_bound: f64,
) -> (GroundTruthLabels, Vec<ServiceId>) {
    let frame = oracle::Frame::new(region.center.lat, region.center.lon);
    let window = region.window_s();

    struct Cand<'a> {
        id: &'a ServiceId,
        tri: oracle::Triangle,
        t: f64,
        covers: bool,
        dist_center: f64,
    }
    let incident_xy = frame.project(incident.lat, incident.lon);
    let candidates: Vec<Cand> = services
        .iter()
        .filter_map(|s| {
            let xy = frame.project(s.location.lat, s.location.lon);
            let inside_box = xy[0].abs() <= region.half_length_m
                && xy[1].abs() <= region.half_width_m;
            let t = s.time.mid();
            let in_window = t >= region.t_start_s && t <= region.t_end_s;
            if !inside_box || !in_window {
                return None;
            }
            let tri = oracle::camera_triangle(
                xy,
                s.coverage.dir_deg,
                s.coverage.alpha_deg,
                s.coverage.visd_m,
            );
            Some(Cand {
                id: &s.id,
                covers: oracle::contains(&tri, incident_xy),
                dist_center: (xy[0] * xy[0] + xy[1] * xy[1]).sqrt(),
                tri,
                t,
            })
        })
        .collect();

    let mut labels = GroundTruthLabels::default();
    let mut redundant: std::collections::HashSet<&ServiceId> = std::collections::HashSet::new();
    for i in 0..candidates.len() {
        for j in (i + 1)..candidates.len() {
            let (a, b) = (&candidates[i], &candidates[j]);
            let time_close = (a.t - b.t).abs() <= window;
            let overlap = oracle::overlap_ratio(&a.tri, &b.tri);
            let duplicated = overlap >= overlap_bound;
            let composable = a.covers && b.covers && time_close && !duplicated;
            labels.insert(a.id, b.id, composable);
            if a.covers && b.covers && time_close && duplicated {
                // The farther (ties: lexicographically larger) member is
                // redundant coverage.
                let drop = match a
                    .dist_center
                    .partial_cmp(&b.dist_center)
                    .unwrap_or(std::cmp::Ordering::Equal)
                {
                    std::cmp::Ordering::Greater => a.id,
                    std::cmp::Ordering::Less => b.id,
                    std::cmp::Ordering::Equal => a.id.max(b.id),
                };
                redundant.insert(drop);
            }
        }
    }
    let truth: Vec<ServiceId> = candidates
        .iter()
        .filter(|c| c.covers && !redundant.contains(c.id))
        .map(|c| c.id.clone())
        .collect();
    (labels, truth)
}

/// Generates the query suite: `n_queries` scenes with pairwise disjoint time
/// windows scattered over the city extent, plus background services that are
/// never spatio-temporally eligible.
pub fn generate_suite(cfg: &SuiteConfig) -> SyntheticSuite {
    let mut services = Vec::new();
    let mut labels = GroundTruthLabels::default();
    let mut queries = Vec::new();
    let mut truth = Vec::new();
    let window = cfg.scene.region.window_s();
    let base_t = cfg.scene.region.t_start_s;

    for q in 0..cfg.n_queries {
        let scene_seed = splitmix(cfg.seed_for_scene(q));
        let mut rng = ChaCha8Rng::seed_from_u64(scene_seed);
        let bearing = rng.random_range(0.0..360.0);
        let dist = rng.random_range(0.0..cfg.city_extent_m);
        let center = destination_point(cfg.city_center, bearing, dist).expect("scene center");
        let t0 = base_t + q as f64 * 10.0 * window;
        let region = SceneQuery::new(
            center,
            cfg.scene.region.half_length_m,
            cfg.scene.region.half_width_m,
            t0,
            t0 + window,
        )
        .expect("scene region");
        let scene_cfg = SynthConfig {
            seed: scene_seed,
            region,
            ..cfg.scene.clone()
        };
        let mut scene = generate_synthetic(&scene_cfg);
        // Prefix ids with the scene index to keep them unique suite-wide.
        let prefix = format!("s{q:02}-");
        for s in &mut scene.services {
            s.id = ServiceId(format!("{prefix}{}", s.id));
        }
        for ((a, b), &composable) in scene.labels.iter() {
            labels.insert(
                &ServiceId(format!("{prefix}{a}")),
                &ServiceId(format!("{prefix}{b}")),
                composable,
            );
        }
        truth.push(
            scene
                .truth
                .iter()
                .map(|id| ServiceId(format!("{prefix}{id}")))
                .collect(),
        );
        services.extend(scene.services);
        queries.push(region);
    }

    // Background: spread over the city, timed in the dead zones between
    // scene windows.
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(cfg.scene.seed ^ 0xbac_c0de));
    for i in 0..cfg.n_background {
        let bearing = rng.random_range(0.0..360.0);
        let dist = rng.random_range(0.0..1.2 * cfg.city_extent_m);
        let location = destination_point(cfg.city_center, bearing, dist).expect("background");
        let block = rng.random_range(0..cfg.n_queries.max(1)) as f64;
        let t = base_t + (block * 10.0 + 5.0) * window + rng.random_range(0.0..window);
        services.push(SocSenService::new(
            format!("bg-{i:04}"),
            location,
            ServiceTime::instant(t).expect("time"),
            Coverage::new(
                rng.random_range(0.0..360.0),
                rng.random_range(35.0..75.0),
                rng.random_range(20.0..300.0),
            )
            .expect("coverage"),
        ));
    }

    SyntheticSuite {
        services,
        labels,
        queries,
        truth,
    }
}

impl SuiteConfig {
    fn seed_for_scene(&self, q: usize) -> u64 {
        self.scene.seed ^ (q as u64).wrapping_mul(0x9E3779B97F4A7C15)
    }
}

/// Straight-line planar geometry used exclusively for ground-truth
/// labeling. Independent of the library's spherical code on purpose: the
/// oracle must not share a code path with the pipeline it judges.
pub mod oracle {
    const EARTH_RADIUS_M: f64 = 6_371_000.0;

    /// Equirectangular frame around a reference point; x east, y north.
    pub struct Frame {
        lat0: f64,
        lon0: f64,
        m_per_deg: f64,
        cos0: f64,
    }

    impl Frame {
        pub fn new(lat0: f64, lon0: f64) -> Self {
            Self {
                lat0,
                lon0,
                m_per_deg: EARTH_RADIUS_M * std::f64::consts::PI / 180.0,
                cos0: lat0.to_radians().cos(),
            }
        }

        pub fn project(&self, lat: f64, lon: f64) -> [f64; 2] {
            let mut dlon = lon - self.lon0;
            if dlon > 180.0 {
                dlon -= 360.0;
            } else if dlon < -180.0 {
                dlon += 360.0;
            }
            [
                dlon * self.m_per_deg * self.cos0,
                (lat - self.lat0) * self.m_per_deg,
            ]
        }
    }

    pub struct Triangle(pub [[f64; 2]; 3]);

    /// Planar FOV triangle: apex plus two corners `visd` out along the
    /// bearings `dir -/+ alpha/2` (compass bearings: x = sin, y = cos).
    pub fn camera_triangle(apex: [f64; 2], dir_deg: f64, alpha_deg: f64, visd_m: f64) -> Triangle {
        let leg = |bearing: f64| {
            let r = bearing.to_radians();
            [apex[0] + visd_m * r.sin(), apex[1] + visd_m * r.cos()]
        };
        Triangle([
            apex,
            leg(dir_deg - alpha_deg / 2.0),
            leg(dir_deg + alpha_deg / 2.0),
        ])
    }

    fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    }

    /// Point-in-triangle by consistent edge signs (boundary counts as in).
    pub fn contains(tri: &Triangle, p: [f64; 2]) -> bool {
        let [a, b, c] = tri.0;
        let d1 = cross(a, b, p);
        let d2 = cross(b, c, p);
        let d3 = cross(c, a, p);
        let has_neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
        let has_pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
        !(has_neg && has_pos)
    }

    fn area(poly: &[[f64; 2]]) -> f64 {
        if poly.len() < 3 {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..poly.len() {
            let a = poly[i];
            let b = poly[(i + 1) % poly.len()];
            acc += a[0] * b[1] - b[0] * a[1];
        }
        acc.abs() / 2.0
    }

    fn ccw(tri: &Triangle) -> Vec<[f64; 2]> {
        let [a, b, c] = tri.0;
        if cross(a, b, c) >= 0.0 {
            vec![a, b, c]
        } else {
            vec![c, b, a]
        }
    }

    /// Intersection area over the smaller triangle's area.
    pub fn overlap_ratio(t1: &Triangle, t2: &Triangle) -> f64 {
        let p1 = ccw(t1);
        let p2 = ccw(t2);
        let (a1, a2) = (area(&p1), area(&p2));
        let smaller = a1.min(a2);
        if smaller <= 0.0 {
            return 0.0;
        }
        // Clip p1 against each edge of p2.
        let mut clipped = p1;
        for i in 0..3 {
            let e1 = p2[i];
            let e2 = p2[(i + 1) % 3];
            let mut next = Vec::with_capacity(clipped.len() + 1);
            for k in 0..clipped.len() {
                let s = clipped[k];
                let e = clipped[(k + 1) % clipped.len()];
                let sc = cross(e1, e2, s);
                let ec = cross(e1, e2, e);
                let s_in = sc >= 0.0;
                let e_in = ec >= 0.0;
                if s_in && e_in {
                    next.push(e);
                } else if s_in != e_in {
                    let t = sc / (sc - ec);
                    next.push([s[0] + (e[0] - s[0]) * t, s[1] + (e[1] - s[1]) * t]);
                    if e_in {
                        next.push(e);
                    }
                }
            }
            clipped = next;
            if clipped.len() < 3 {
                return 0.0;
            }
        }
        (area(&clipped) / smaller).clamp(0.0, 1.0)
    }
}
