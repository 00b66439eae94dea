//! Pairwise feature rows fed to the composability classifiers, plus the
//! seeded train/validation/test split.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coverage::{angular_overlap, fov_triangle, ServiceId, SocSenService};
use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::heuristics::ScoredPair;
use crate::overlap::triangle_overlap_ratio;
use crate::relevance::direction_to_point;
use crate::scalar::Real;

/// Number of features per pair row.
pub const NUM_FEATURES: usize = 12;

/// Canonical feature order; the model files pin a hash of this list.
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "dist_m",
    "dt_s",
    "alpha_overlap_deg",
    "overlap_ratio",
    "relevance",
    "dir_a_to_p_deg",
    "dir_b_to_p_deg",
    "visd_a_m",
    "visd_b_m",
    "alpha_a_deg",
    "alpha_b_deg",
    "dist_mid_to_p_m",
];

/// FNV-1a hash of the feature order, hex-encoded; stored in model files so a
/// reloaded model can refuse rows built under a different layout.
pub fn feature_order_hash() -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for name in FEATURE_NAMES {
        for byte in name.bytes().chain(std::iter::once(b';')) {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    format!("{h:016x}")
}

/// Binary composability judgment for a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Composable,
    NonComposable,
}

impl Label {
    pub fn is_positive(self) -> bool {
        matches!(self, Label::Composable)
    }

    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Label::Composable
        } else {
            Label::NonComposable
        }
    }
}

/// Feature vector of one service pair. Members are ordered by id, which
/// makes the row independent of argument order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFeatureRow<T> {
    pub id_a: ServiceId,
    pub id_b: ServiceId,
    pub dist_m: T,
    pub dt_s: T,
    pub alpha_overlap_deg: T,
    pub overlap_ratio: T,
    pub relevance: T,
    pub dir_a_to_p_deg: T,
    pub dir_b_to_p_deg: T,
    pub visd_a_m: T,
    pub visd_b_m: T,
    pub alpha_a_deg: T,
    pub alpha_b_deg: T,
    pub dist_mid_to_p_m: T,
    pub label: Option<Label>,
}

impl<T: Real> PairFeatureRow<T> {
    /// Features in the canonical [`FEATURE_NAMES`] order.
    pub fn values(&self) -> [T; NUM_FEATURES] {
        [
            self.dist_m,
            self.dt_s,
            self.alpha_overlap_deg,
            self.overlap_ratio,
            self.relevance,
            self.dir_a_to_p_deg,
            self.dir_b_to_p_deg,
            self.visd_a_m,
            self.visd_b_m,
            self.alpha_a_deg,
            self.alpha_b_deg,
            self.dist_mid_to_p_m,
        ]
    }
}

/// Builds the feature row for a scored pair. Both member ids must resolve in
/// `services`.
pub fn build_features<T: Real>(
    pair: &ScoredPair<T>,
    services: &[SocSenService<T>],
    p: GeoPoint<T>,
) -> Result<PairFeatureRow<T>> {
    let by_id: HashMap<&ServiceId, &SocSenService<T>> =
        services.iter().map(|s| (&s.id, s)).collect();
    let a = *by_id
        .get(&pair.id_a)
        .ok_or_else(|| Error::MissingService(pair.id_a.to_string()))?;
    let b = *by_id
        .get(&pair.id_b)
        .ok_or_else(|| Error::MissingService(pair.id_b.to_string()))?;
    Ok(PairFeatureRow {
        id_a: pair.id_a.clone(),
        id_b: pair.id_b.clone(),
        dist_m: pair.distance_m,
        dt_s: (a.time.mid() - b.time.mid()).abs(),
        alpha_overlap_deg: angular_overlap(a, b),
        overlap_ratio: triangle_overlap_ratio(&fov_triangle(a), &fov_triangle(b)),
        relevance: pair.relevance,
        dir_a_to_p_deg: direction_to_point(a, p),
        dir_b_to_p_deg: direction_to_point(b, p),
        visd_a_m: a.coverage.visd_m,
        visd_b_m: b.coverage.visd_m,
        alpha_a_deg: a.coverage.alpha_deg,
        alpha_b_deg: b.coverage.alpha_deg,
        dist_mid_to_p_m: pair.pair_distance_to_center_m,
        label: None,
    })
}

/// Disjoint 70/15/15 index sets over a row collection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Minimum rows a split needs.
pub const MIN_SPLIT_ROWS: usize = 10;

/// Seeded shuffle followed by a 70/15/15 cut; validation and test each take
/// `floor(0.15 n)` rows and the remainder goes to train.
pub fn split_dataset<T>(rows: &[PairFeatureRow<T>], seed: u64) -> Result<DatasetSplit> {
    let n = rows.len();
    if n < MIN_SPLIT_ROWS {
        return Err(Error::InsufficientData {
            found: n,
            required: MIN_SPLIT_ROWS,
        });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let n_val = n * 15 / 100;
    let n_test = n * 15 / 100;
    let n_train = n - n_val - n_test;
    Ok(DatasetSplit {
        train: indices[..n_train].to_vec(),
        validation: indices[n_train..n_train + n_val].to_vec(),
        test: indices[n_train + n_val..].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::{Coverage, ServiceTime};
    use crate::heuristics::score_pairs;

    fn service(id: &str, lat: f64, lon: f64, dir: f64, visd: f64, t: f64) -> SocSenService<f64> {
        SocSenService::new(
            id,
            GeoPoint::new(lat, lon).unwrap(),
            ServiceTime::instant(t).unwrap(),
            Coverage::new(dir, 60.0, visd).unwrap(),
        )
    }

    fn dummy_rows(n: usize) -> Vec<PairFeatureRow<f64>> {
        (0..n)
            .map(|i| PairFeatureRow {
                id_a: format!("a{i}").into(),
                id_b: format!("b{i}").into(),
                dist_m: i as f64,
                dt_s: 0.0,
                alpha_overlap_deg: 0.0,
                overlap_ratio: 0.0,
                relevance: 0.0,
                dir_a_to_p_deg: 0.0,
                dir_b_to_p_deg: 0.0,
                visd_a_m: 0.0,
                visd_b_m: 0.0,
                alpha_a_deg: 0.0,
                alpha_b_deg: 0.0,
                dist_mid_to_p_m: 0.0,
                label: None,
            })
            .collect()
    }

    #[test]
    fn colocated_identical_services_row() {
        let p = GeoPoint::new(0.0, 0.0).unwrap();
        let services = vec![
            service("a", 0.001, 0.0, 180.0, 100.0, 50.0),
            service("b", 0.001, 0.0, 180.0, 100.0, 50.0),
        ];
        let pairs = score_pairs(&services, p).unwrap();
        let row = build_features(&pairs[0], &services, p).unwrap();
        assert_eq!(row.dist_m, 0.0);
        assert_eq!(row.dt_s, 0.0);
        assert_eq!(row.alpha_overlap_deg, 0.0);
        assert!((row.overlap_ratio - 1.0).abs() < 1e-12);
        assert_eq!(row.relevance, 1.0);
    }

    #[test]
    fn rows_are_symmetric_under_argument_order() {
        let p = GeoPoint::new(0.0, 0.0).unwrap();
        let ab = vec![
            service("a", 0.0010, 0.0002, 170.0, 120.0, 10.0),
            service("b", 0.0012, -0.0003, 185.0, 90.0, 60.0),
        ];
        let ba: Vec<_> = ab.iter().rev().cloned().collect();
        let row_ab = build_features(&score_pairs(&ab, p).unwrap()[0], &ab, p).unwrap();
        let row_ba = build_features(&score_pairs(&ba, p).unwrap()[0], &ba, p).unwrap();
        assert_eq!(row_ab, row_ba);
    }

    #[test]
    fn hand_built_pair_matches_hand_computed_features() {
        let p = GeoPoint::new(0.0, 0.0).unwrap();
        // a: 111.19 m north of p (lat 0.001), facing south, visd 200, t=0.
        // b: 88.96 m north of p (lat 0.0008), facing south, visd 100, t=30;
        // its triangle nests fully inside a's (corners at ±50 m, y=+2.4 m,
        // where a's half-width is 62.8 m).
        let services = vec![
            service("a", 0.001, 0.0, 180.0, 200.0, 0.0),
            service("b", 0.0008, 0.0, 180.0, 100.0, 30.0),
        ];
        let pairs = score_pairs(&services, p).unwrap();
        let row = build_features(&pairs[0], &services, p).unwrap();

        let deg_m = 111_194.92664455873;
        assert!((row.dist_m - 0.0002 * deg_m).abs() < 1e-3);
        assert_eq!(row.dt_s, 30.0);
        assert_eq!(row.alpha_overlap_deg, 0.0);
        assert!((row.overlap_ratio - 1.0).abs() < 1e-6); // nested FOV
        assert_eq!(row.relevance, 0.5); // 1.0 * 0.5 * cos(0)
        assert!(row.dir_a_to_p_deg.abs() < 1e-9);
        assert!(row.dir_b_to_p_deg.abs() < 1e-9);
        assert_eq!(row.visd_a_m, 200.0);
        assert_eq!(row.visd_b_m, 100.0);
        assert_eq!(row.alpha_a_deg, 60.0);
        assert_eq!(row.alpha_b_deg, 60.0);
        assert!((row.dist_mid_to_p_m - 0.0009 * deg_m).abs() < 1e-3);
    }

    #[test]
    fn missing_service_is_an_error() {
        let p = GeoPoint::new(0.0, 0.0).unwrap();
        let services = vec![
            service("a", 0.001, 0.0, 180.0, 100.0, 0.0),
            service("b", -0.001, 0.0, 0.0, 100.0, 0.0),
        ];
        let pairs = score_pairs(&services, p).unwrap();
        assert!(matches!(
            build_features(&pairs[0], &services[..1], p),
            Err(Error::MissingService(_))
        ));
    }

    #[test]
    fn split_proportions() {
        let split = split_dataset(&dummy_rows(100), 7).unwrap();
        assert_eq!(split.train.len(), 70);
        assert_eq!(split.validation.len(), 15);
        assert_eq!(split.test.len(), 15);

        // Remainder goes to train.
        let split = split_dataset(&dummy_rows(101), 7).unwrap();
        assert_eq!(split.train.len(), 71);
        assert_eq!(split.validation.len(), 15);
        assert_eq!(split.test.len(), 15);
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let rows = dummy_rows(53);
        let a = split_dataset(&rows, 99).unwrap();
        let b = split_dataset(&rows, 99).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<usize> = a
            .train
            .iter()
            .chain(&a.validation)
            .chain(&a.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..53).collect::<Vec<_>>());
    }

    #[test]
    fn split_rejects_tiny_datasets() {
        assert!(matches!(
            split_dataset(&dummy_rows(9), 7),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn feature_hash_is_stable() {
        assert_eq!(feature_order_hash(), feature_order_hash());
        assert_eq!(feature_order_hash().len(), 16);
    }
}
