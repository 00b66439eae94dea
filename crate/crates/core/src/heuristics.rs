//! Rank-based pair selection: score pairs by directional relevance, keep
//! the positively relevant ones, rank by position relevance and drop
//! redundant coverage before classification.

use std::collections::{HashMap, HashSet};

use crate::coverage::{fov_triangle, ServiceId, SocSenService};
use crate::error::{Error, Result};
use crate::geo::{
    cos_deg, geodesic_distance, geodesic_midpoint, initial_bearing, mean_bearing,
    normalize_signed_deg, GeoPoint, SceneQuery,
};
use crate::overlap::triangle_overlap_ratio;
use crate::relevance::{RelevanceScale, COINCIDENT_TOL_DEG};
use crate::scalar::Real;

/// One scored unordered pair; `id_a < id_b` lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair<T> {
    pub id_a: ServiceId,
    pub id_b: ServiceId,
    /// Geodesic distance between the two service locations, meters.
    pub distance_m: T,
    /// Directional relevance in `[-1, 1]`.
    pub relevance: T,
    /// Position-relevance score; refreshed by [`rank_by_position`] once the
    /// query scale is known.
    pub position_relevance: T,
    /// Angle in `[0, 180]` between the pair's mean heading and the bearing
    /// from the pair midpoint to the query center.
    pub pair_direction_deg: T,
    /// Geodesic distance from the pair midpoint to the query center, meters.
    pub pair_distance_to_center_m: T,
}

/// Tuning knobs of the selection pipeline.
#[derive(Debug, Clone, Copy)]
pub struct HeuristicsConfig<T> {
    /// Overlap ratio at or above which a pair counts as duplicated coverage.
    pub overlap_threshold: T,
    /// Keep only the K best-ranked pairs before de-duplication (None = all).
    pub top_k: Option<usize>,
    /// Identity pass-through when false (every service and scored pair
    /// survives), for ablation runs.
    pub enabled: bool,
}

impl<T: Real> Default for HeuristicsConfig<T> {
    fn default() -> Self {
        Self {
            overlap_threshold: T::of(0.5),
            top_k: None,
            enabled: true,
        }
    }
}

/// Pipeline result: surviving services plus the surviving ranked pairs.
#[derive(Debug, Clone)]
pub struct HeuristicOutput<T> {
    pub services: Vec<SocSenService<T>>,
    pub pairs: Vec<ScoredPair<T>>,
}

/// Scores every unordered pair and ranks from highest to lowest relevance.
/// Needs at least two services.
pub fn score_pairs<T: Real>(
    services: &[SocSenService<T>],
    p: GeoPoint<T>,
) -> Result<Vec<ScoredPair<T>>> {
    if services.len() < 2 {
        return Err(Error::InsufficientCandidates {
            found: services.len(),
        });
    }
    let scale = RelevanceScale::from_services(services)?;
    let mut pairs = Vec::with_capacity(services.len() * (services.len() - 1) / 2);
    for i in 0..services.len() {
        for j in (i + 1)..services.len() {
            let (a, b) = if services[i].id <= services[j].id {
                (&services[i], &services[j])
            } else {
                (&services[j], &services[i])
            };
            let midpoint = geodesic_midpoint(a.location, b.location);
            let heading = mean_bearing(a.coverage.dir_deg, b.coverage.dir_deg);
            let coincident = midpoint.coincident(&p, T::of(COINCIDENT_TOL_DEG));
            let pair_direction_deg = if coincident {
                T::zero()
            } else {
                normalize_signed_deg(heading - initial_bearing(midpoint, p)).abs()
            };
            let pair_distance_to_center_m = geodesic_distance(midpoint, p);
            pairs.push(ScoredPair {
                id_a: a.id.clone(),
                id_b: b.id.clone(),
                distance_m: geodesic_distance(a.location, b.location),
                relevance: scale.pair_relevance(a, b),
                position_relevance: cos_deg(pair_direction_deg),
                pair_direction_deg,
                pair_distance_to_center_m,
            });
        }
    }
    pairs.sort_by(|x, y| {
        y.relevance
            .partial_cmp(&x.relevance)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| x.id_a.cmp(&y.id_a))
            .then_with(|| x.id_b.cmp(&y.id_b))
    });
    Ok(pairs)
}

/// Keeps exactly the pairs with relevance strictly above zero.
pub fn filter_relevant<T: Real>(pairs: Vec<ScoredPair<T>>) -> Vec<ScoredPair<T>> {
    pairs
        .into_iter()
        .filter(|p| p.relevance > T::zero())
        .collect()
}

/// Position relevance of a pair: alignment toward the center damped by the
/// midpoint's distance, `cos(direction) / (1 + distance / scale)`.
pub fn position_relevance<T: Real>(
    pair_direction_deg: T,
    dist_mid_to_center_m: T,
    scale_m: T,
) -> T {
    cos_deg(pair_direction_deg) / (T::one() + dist_mid_to_center_m / scale_m)
}

/// Recomputes position relevance with the query's diagonal scale and ranks
/// pairs from highest to lowest, ids breaking ties.
pub fn rank_by_position<T: Real>(pairs: &mut [ScoredPair<T>], scale_m: T) {
    for pair in pairs.iter_mut() {
        pair.position_relevance =
            position_relevance(pair.pair_direction_deg, pair.pair_distance_to_center_m, scale_m);
    }
    pairs.sort_by(|x, y| {
        y.position_relevance
            .partial_cmp(&x.position_relevance)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| x.id_a.cmp(&y.id_a))
            .then_with(|| x.id_b.cmp(&y.id_b))
    });
}

/// Removes duplicated coverage: for every pair whose FOV triangles overlap at
/// or above `threshold` and whose capture times differ by at most `window_s`,
/// the member geodesically farther from `p` is redundant and drops out of all
/// pairs (ties fall on the larger id). Candidate pairs are processed by
/// descending overlap, ids breaking ties.
///
/// Returns the surviving services and the surviving pairs, preserving the
/// incoming pair order.
pub fn dedupe_overlap<T: Real>(
    pairs: Vec<ScoredPair<T>>,
    services: &[SocSenService<T>],
    p: GeoPoint<T>,
    window_s: T,
    threshold: T,
) -> (Vec<SocSenService<T>>, Vec<ScoredPair<T>>) {
    let by_id: HashMap<&ServiceId, &SocSenService<T>> =
        services.iter().map(|s| (&s.id, s)).collect();
    let triangles: HashMap<&ServiceId, _> = services
        .iter()
        .map(|s| (&s.id, fov_triangle(s)))
        .collect();

    let mut candidates: Vec<(T, &ServiceId, &ServiceId)> = pairs
        .iter()
        .filter_map(|pair| {
            let (a, b) = (by_id.get(&pair.id_a)?, by_id.get(&pair.id_b)?);
            let dt = (a.time.mid() - b.time.mid()).abs();
            if dt > window_s {
                return None;
            }
            let ratio = triangle_overlap_ratio(&triangles[&pair.id_a], &triangles[&pair.id_b]);
            (ratio >= threshold).then_some((ratio, &pair.id_a, &pair.id_b))
        })
        .collect();
    candidates.sort_by(|x, y| {
        y.0.partial_cmp(&x.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| x.1.cmp(y.1))
            .then_with(|| x.2.cmp(y.2))
    });

    let mut removed: HashSet<ServiceId> = HashSet::new();
    for (_, id_a, id_b) in candidates {
        let da = geodesic_distance(by_id[id_a].location, p);
        let db = geodesic_distance(by_id[id_b].location, p);
        let redundant = if da > db {
            id_a
        } else if db > da {
            id_b
        } else {
            id_a.max(id_b)
        };
        removed.insert(redundant.clone());
    }

    let surviving_pairs: Vec<ScoredPair<T>> = pairs
        .into_iter()
        .filter(|pair| !removed.contains(&pair.id_a) && !removed.contains(&pair.id_b))
        .collect();
    let surviving_services: Vec<SocSenService<T>> = services
        .iter()
        .filter(|s| !removed.contains(&s.id))
        .cloned()
        .collect();
    (surviving_services, surviving_pairs)
}

/// Full selection pipeline over spatio-temporally filtered candidates:
/// score, keep positive relevance, rank by position relevance, de-duplicate
/// coverage, and drop services that survive in no pair. An empty survivor
/// set is a valid outcome.
pub fn run_heuristics<T: Real>(
    services: &[SocSenService<T>],
    query: &SceneQuery<T>,
    config: &HeuristicsConfig<T>,
) -> Result<HeuristicOutput<T>> {
    let mut pairs = score_pairs(services, query.center)?;
    if !config.enabled {
        return Ok(HeuristicOutput {
            services: services.to_vec(),
            pairs,
        });
    }
    pairs = filter_relevant(pairs);
    rank_by_position(&mut pairs, query.diagonal_scale_m());
    if let Some(k) = config.top_k {
        pairs.truncate(k);
    }
    let (survivors, pairs) = dedupe_overlap(
        pairs,
        services,
        query.center,
        query.window_s(),
        config.overlap_threshold,
    );
    // Services that compose with nothing are non-relevant.
    let paired: HashSet<&ServiceId> = pairs
        .iter()
        .flat_map(|p| [&p.id_a, &p.id_b])
        .collect();
    let services = survivors
        .into_iter()
        .filter(|s| paired.contains(&s.id))
        .collect();
    Ok(HeuristicOutput { services, pairs })
}
