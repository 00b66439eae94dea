//! Property tests for the geometric identities and pipeline invariants.

use proptest::prelude::*;

use mosaic_core::composition::{closure, ComposabilityEdge, ComposabilityGraph};
use mosaic_core::coverage::{
    angular_overlap, fov_chord, fov_height, fov_triangle, Coverage, ServiceTime, SocSenService,
};
use mosaic_core::geo::{
    cos_deg, destination_point, geodesic_distance, initial_bearing, normalize_signed_deg,
    GeoPoint, SceneQuery,
};
use mosaic_core::heuristics::{
    dedupe_overlap, filter_relevant, run_heuristics, score_pairs, HeuristicsConfig,
};
use mosaic_core::index::{BoundedRegion, IndexEntry, RTree3D};
use mosaic_core::overlap::triangle_overlap_ratio;
use mosaic_core::relevance::RelevanceScale;

fn service(
    id: &str,
    lat: f64,
    lon: f64,
    dir: f64,
    alpha: f64,
    visd: f64,
    t: f64,
) -> SocSenService<f64> {
    SocSenService::new(
        id,
        GeoPoint::new(lat, lon).unwrap(),
        ServiceTime::instant(t).unwrap(),
        Coverage::new(dir, alpha, visd).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Chord then height recovers `visd * cos(alpha/2)` almost exactly.
    #[test]
    fn chord_height_identity(alpha in 0.1f64..179.0, visd in 0.01f64..100_000.0) {
        let chord = fov_chord(alpha, visd).unwrap();
        let height = fov_height(visd, chord).unwrap();
        let expected = visd * (alpha / 2.0).to_radians().cos();
        prop_assert!((height - expected).abs() <= 1e-9 * expected.abs().max(1e-300));
    }

    /// Both triangle legs measure `visd`, and the included apex angle is
    /// `alpha`, in the small-distance regime.
    #[test]
    fn triangle_leg_and_apex_properties(
        lat in -60.0f64..60.0,
        lon in -180.0f64..180.0,
        dir in 0.0f64..360.0,
        alpha in 1.0f64..179.0,
        visd in 1.0f64..10_000.0,
    ) {
        let s = service("s", lat, lon, dir, alpha, visd, 0.0);
        let t = fov_triangle(&s);
        let leg_l = geodesic_distance(t.apex, t.left);
        let leg_r = geodesic_distance(t.apex, t.right);
        prop_assert!((leg_l - visd).abs() <= 1e-6 * visd);
        prop_assert!((leg_r - visd).abs() <= 1e-6 * visd);

        let b_l = initial_bearing(t.apex, t.left);
        let b_r = initial_bearing(t.apex, t.right);
        let included = normalize_signed_deg(b_r - b_l).abs();
        prop_assert!((included - alpha).abs() <= 1e-6, "included {included} vs {alpha}");
    }

    /// Heading differences are antisymmetric and invariant under full turns.
    #[test]
    fn angular_overlap_antisymmetry(
        dir_a in 0.0f64..360.0,
        dir_b in 0.0f64..360.0,
        turns_a in -3i32..3,
        turns_b in -3i32..3,
    ) {
        let a = service("a", 0.0, 0.0, dir_a, 60.0, 10.0, 0.0);
        let b = service("b", 0.0, 0.1, dir_b, 60.0, 10.0, 0.0);
        let ab = angular_overlap(&a, &b);
        let ba = angular_overlap(&b, &a);
        if ab.abs() < 180.0 {
            prop_assert!((ab + ba).abs() < 1e-9);
        }
        let a_turned = service(
            "a",
            0.0,
            0.0,
            dir_a + 360.0 * f64::from(turns_a),
            60.0,
            10.0,
            0.0,
        );
        let b_turned = service(
            "b",
            0.0,
            0.1,
            dir_b + 360.0 * f64::from(turns_b),
            60.0,
            10.0,
            0.0,
        );
        prop_assert!((angular_overlap(&a_turned, &b_turned).abs() - ab.abs()).abs() < 1e-9);
    }

    /// Pair relevance is symmetric and its sign follows the heading cosine.
    #[test]
    fn relevance_symmetry_and_sign(
        dir_a in 0.0f64..360.0,
        dir_b in 0.0f64..360.0,
        visd_a in 1.0f64..1000.0,
        visd_b in 1.0f64..1000.0,
    ) {
        let a = service("a", 0.0, 0.0, dir_a, 60.0, visd_a, 0.0);
        let b = service("b", 0.0, 0.1, dir_b, 60.0, visd_b, 0.0);
        let scale = RelevanceScale::from_services(&[a.clone(), b.clone()]).unwrap();
        let ab = scale.pair_relevance(&a, &b);
        let ba = scale.pair_relevance(&b, &a);
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&ab));
        let c = cos_deg(angular_overlap(&a, &b));
        prop_assert_eq!(ab == 0.0, c == 0.0);
        if c != 0.0 {
            prop_assert_eq!(ab.signum(), c.signum());
        }
    }

    /// The initial bearing toward a destination equals the travel bearing.
    #[test]
    fn destination_bearing_inverse(
        lat in -75.0f64..75.0,
        lon in -180.0f64..180.0,
        bearing in 0.0f64..360.0,
        distance in 1.0f64..100_000.0,
    ) {
        let origin = GeoPoint::new(lat, lon).unwrap();
        let dest = destination_point(origin, bearing, distance).unwrap();
        let measured = initial_bearing(origin, dest);
        let diff = normalize_signed_deg(measured - bearing).abs();
        prop_assert!(diff <= 1e-6, "bearing {measured} vs {bearing}");
    }

    /// Round trip: distance to the destination equals the travel distance
    /// within 0.1% up to 50 km.
    #[test]
    fn destination_distance_round_trip(
        lat in -75.0f64..75.0,
        lon in -180.0f64..180.0,
        bearing in 0.0f64..360.0,
        distance in 1.0f64..50_000.0,
    ) {
        let origin = GeoPoint::new(lat, lon).unwrap();
        let dest = destination_point(origin, bearing, distance).unwrap();
        let back = geodesic_distance(origin, dest);
        prop_assert!((back - distance).abs() <= 1e-3 * distance);
    }

    /// Overlap ratio stays in [0, 1] and never grows as one triangle is
    /// translated away from its twin along a fixed bearing.
    #[test]
    fn overlap_ratio_bounds_and_separation_monotonicity(
        dir in 0.0f64..360.0,
        alpha in 20.0f64..120.0,
        visd in 50.0f64..2000.0,
        away in 0.0f64..360.0,
    ) {
        let base = service("s", 10.0, 20.0, dir, alpha, visd, 0.0);
        let t0 = fov_triangle(&base);
        let mut prev = triangle_overlap_ratio(&t0, &t0);
        prop_assert!((prev - 1.0).abs() < 1e-9);
        for step in 1..=8 {
            let d = visd * 0.4 * f64::from(step);
            let moved_loc = destination_point(base.location, away, d).unwrap();
            let moved = SocSenService::new("m", moved_loc, base.time, base.coverage);
            let ratio = triangle_overlap_ratio(&t0, &fov_triangle(&moved));
            prop_assert!((0.0..=1.0).contains(&ratio));
            prop_assert!(ratio <= prev + 1e-9, "ratio grew while separating");
            prev = ratio;
        }
    }

    /// Range queries agree with a linear scan for any box, and the tree
    /// stays structurally sound through incremental growth.
    #[test]
    fn rtree_matches_linear_scan(
        coords in prop::collection::vec((0u32..100, 0u32..100, 0u32..100), 1..120),
        query in (0u32..100, 0u32..100, 0u32..100, 1u32..40, 1u32..40, 1u32..40),
    ) {
        let mut tree = RTree3D::new();
        let mut entries = Vec::new();
        for (i, (x, y, t)) in coords.iter().enumerate() {
            let entry = IndexEntry {
                service_id: format!("s{i}").into(),
                x_m: f64::from(*x),
                y_m: f64::from(*y),
                t_start_s: f64::from(*t),
                t_end_s: f64::from(*t) + 2.0,
            };
            tree.insert(entry.clone()).unwrap();
            entries.push(entry);
        }
        tree.check_invariants().unwrap();

        let (qx, qy, qt, dx, dy, dt) = query;
        let region = BoundedRegion::new(
            f64::from(qx), f64::from(qx + dx),
            f64::from(qy), f64::from(qy + dy),
            f64::from(qt), f64::from(qt + dt),
        ).unwrap();
        let mut got: Vec<String> = tree
            .range_query(&region)
            .into_iter()
            .map(|id| id.to_string())
            .collect();
        got.sort();
        let mut expected: Vec<String> = entries
            .iter()
            .filter(|e| {
                e.x_m >= region.x_min && e.x_m <= region.x_max
                    && e.y_m >= region.y_min && e.y_m <= region.y_max
                    && e.t_start_s <= region.t_max && e.t_end_s >= region.t_min
            })
            .map(|e| e.service_id.to_string())
            .collect();
        expected.sort();
        prop_assert_eq!(got, expected);
    }

    /// filter_relevant returns a subset with strictly positive relevance.
    #[test]
    fn filter_relevant_is_a_positive_subset(
        dirs in prop::collection::vec(0.0f64..360.0, 2..8),
    ) {
        let services: Vec<_> = dirs
            .iter()
            .enumerate()
            .map(|(i, &dir)| {
                service(&format!("s{i}"), 0.001 * i as f64, 0.0005, dir, 60.0, 100.0, 0.0)
            })
            .collect();
        let p = GeoPoint::new(0.0, 0.0).unwrap();
        let pairs = score_pairs(&services, p).unwrap();
        let total = pairs.len();
        let kept = filter_relevant(pairs.clone());
        prop_assert!(kept.len() <= total);
        prop_assert!(kept.iter().all(|p| p.relevance > 0.0));
        for pair in &kept {
            prop_assert!(pairs.iter().any(|q| q.id_a == pair.id_a && q.id_b == pair.id_b));
        }
    }

    /// The full pipeline is input-order independent.
    #[test]
    fn heuristics_are_order_independent(perm_seed in 0u64..1000) {
        let mut services: Vec<_> = (0..7)
            .map(|i| {
                service(
                    &format!("s{i}"),
                    0.0008 + 0.0002 * f64::from(i % 3),
                    0.0005 * f64::from(i),
                    160.0 + 10.0 * f64::from(i),
                    50.0 + f64::from(i),
                    150.0 + 10.0 * f64::from(i),
                    60.0 * f64::from(i),
                )
            })
            .collect::<Vec<_>>();
        let query = SceneQuery::new(
            GeoPoint::new(0.0, 0.0).unwrap(),
            500.0,
            500.0,
            0.0,
            3600.0,
        )
        .unwrap();
        let cfg = HeuristicsConfig::default();
        let baseline = run_heuristics(&services, &query, &cfg).unwrap();

        // Deterministic permutation of the input order.
        let mut seed = perm_seed;
        for i in (1..services.len()).rev() {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let j = (seed >> 33) as usize % (i + 1);
            services.swap(i, j);
        }
        let shuffled = run_heuristics(&services, &query, &cfg).unwrap();

        let ids = |out: &mosaic_core::heuristics::HeuristicOutput<f64>| {
            let mut v: Vec<String> = out.services.iter().map(|s| s.id.to_string()).collect();
            v.sort();
            v
        };
        prop_assert_eq!(ids(&baseline), ids(&shuffled));
        let pair_ids = |out: &mosaic_core::heuristics::HeuristicOutput<f64>| {
            out.pairs
                .iter()
                .map(|p| (p.id_a.to_string(), p.id_b.to_string()))
                .collect::<Vec<_>>()
        };
        prop_assert_eq!(pair_ids(&baseline), pair_ids(&shuffled));
    }

    /// Raising the overlap threshold never shrinks the survivor set.
    #[test]
    fn dedupe_threshold_monotonicity(
        offsets in prop::collection::vec((0i32..60, 0i32..60, 0i32..30), 2..7),
        t_lo in 0.05f64..0.95,
        t_gap in 0.01f64..0.5,
    ) {
        let services: Vec<_> = offsets
            .iter()
            .enumerate()
            .map(|(i, (dx, dy, ddir))| {
                service(
                    &format!("s{i}"),
                    0.0015 + 0.00002 * f64::from(*dy),
                    0.00002 * f64::from(*dx),
                    170.0 + f64::from(*ddir),
                    60.0,
                    250.0,
                    0.0,
                )
            })
            .collect();
        let p = GeoPoint::new(0.0, 0.0).unwrap();
        let pairs = score_pairs(&services, p).unwrap();
        let (low_survivors, _) =
            dedupe_overlap(pairs.clone(), &services, p, 3600.0, t_lo);
        let (high_survivors, _) =
            dedupe_overlap(pairs, &services, p, 3600.0, (t_lo + t_gap).min(1.01));
        prop_assert!(low_survivors.len() <= high_survivors.len());
    }

    /// Connected components are stable under edge-order permutations and
    /// re-running closure over its own induced edges.
    #[test]
    fn closure_idempotent_and_edge_order_independent(
        edge_pairs in prop::collection::vec((0usize..12, 0usize..12), 0..20),
        rot in 0usize..20,
    ) {
        let services: Vec<_> = (0..12)
            .map(|i| service(&format!("n{i:02}"), 0.0001 * i as f64, 0.0, 0.0, 60.0, 10.0, 0.0))
            .collect();
        let nodes: Vec<_> = services.iter().map(|s| s.id.clone()).collect();
        let edges: Vec<ComposabilityEdge<f64>> = edge_pairs
            .iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| ComposabilityEdge {
                a: nodes[*a].clone(),
                b: nodes[*b].clone(),
                score: 1.0,
            })
            .collect();
        let graph = ComposabilityGraph::new(nodes.clone(), edges.clone()).unwrap();
        let composites = closure(&graph, &services).unwrap();

        // Rotate the edge list.
        let mut rotated = edges.clone();
        if !rotated.is_empty() {
            let k = rot % rotated.len();
            rotated.rotate_left(k);
        }
        let graph_rot = ComposabilityGraph::new(nodes.clone(), rotated).unwrap();
        let composites_rot = closure(&graph_rot, &services).unwrap();
        let members = |cs: &[mosaic_core::composition::CompositeService<f64>]| {
            cs.iter().map(|c| c.members.clone()).collect::<Vec<_>>()
        };
        prop_assert_eq!(members(&composites), members(&composites_rot));

        // Idempotence: chain edges induced by the partition reproduce it.
        let induced: Vec<ComposabilityEdge<f64>> = composites
            .iter()
            .flat_map(|c| {
                c.members
                    .windows(2)
                    .map(|w| ComposabilityEdge {
                        a: w[0].clone(),
                        b: w[1].clone(),
                        score: 1.0,
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let graph_induced = ComposabilityGraph::new(nodes, induced).unwrap();
        let composites_again = closure(&graph_induced, &services).unwrap();
        prop_assert_eq!(members(&composites), members(&composites_again));
    }
}
