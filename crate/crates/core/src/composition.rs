//! Composite services via transitive composability, and the mosaic layout.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::coverage::{fov_chord, ServiceId, SocSenService};
use crate::error::{Error, Result};
use crate::geo::{GeoPoint, SceneQuery};
use crate::index::LocalProjection;
use crate::scalar::Real;

/// An undirected composability edge with the classifier's score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposabilityEdge<T> {
    pub a: ServiceId,
    pub b: ServiceId,
    pub score: T,
}

/// Pairwise composability judgments over the surviving services.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposabilityGraph<T> {
    pub nodes: Vec<ServiceId>,
    pub edges: Vec<ComposabilityEdge<T>>,
}

impl<T: Real> ComposabilityGraph<T> {
    /// Validates the structure: no self-loops, endpoints must be nodes.
    pub fn new(nodes: Vec<ServiceId>, edges: Vec<ComposabilityEdge<T>>) -> Result<Self> {
        let set: std::collections::HashSet<&ServiceId> = nodes.iter().collect();
        for edge in &edges {
            if edge.a == edge.b {
                return Err(Error::InvalidGraph(format!("self-loop on `{}`", edge.a)));
            }
            if !set.contains(&edge.a) || !set.contains(&edge.b) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) references a missing node",
                    edge.a, edge.b
                )));
            }
        }
        Ok(Self { nodes, edges })
    }
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]]; // path halving
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Geographic bounding box of a composite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoBox<T> {
    pub lat_min: T,
    pub lat_max: T,
    pub lon_min: T,
    pub lon_max: T,
}

/// A connected component of pairwise-composable services.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeService<T> {
    /// Member ids, sorted.
    pub members: Vec<ServiceId>,
    pub bounding_box: GeoBox<T>,
    pub t_start_s: T,
    pub t_end_s: T,
    /// Mean classifier score of the intra-component edges (0 for singletons).
    pub mean_score: T,
}

/// Connected components of the graph; every node lands in exactly one
/// composite, isolated nodes as singletons. Components are ordered by their
/// smallest member id.
pub fn closure<T: Real>(
    graph: &ComposabilityGraph<T>,
    services: &[SocSenService<T>],
) -> Result<Vec<CompositeService<T>>> {
    let by_id: HashMap<&ServiceId, &SocSenService<T>> =
        services.iter().map(|s| (&s.id, s)).collect();
    let index_of: HashMap<&ServiceId, usize> = graph
        .nodes
        .iter()
        .enumerate()
        .map(|(i, id)| (id, i))
        .collect();

    let mut uf = UnionFind::new(graph.nodes.len());
    for edge in &graph.edges {
        uf.union(index_of[&edge.a], index_of[&edge.b]);
    }

    let mut members: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..graph.nodes.len() {
        members.entry(uf.find(i)).or_default().push(i);
    }
    // Edge scores aggregate per component.
    let mut score_sum: HashMap<usize, (T, usize)> = HashMap::new();
    for edge in &graph.edges {
        let root = uf.find(index_of[&edge.a]);
        let entry = score_sum.entry(root).or_insert((T::zero(), 0));
        entry.0 += edge.score;
        entry.1 += 1;
    }

    let mut composites = Vec::with_capacity(members.len());
    for (root, idxs) in members {
        let mut ids: Vec<ServiceId> = idxs.iter().map(|&i| graph.nodes[i].clone()).collect();
        ids.sort();
        let mut resolved = Vec::with_capacity(ids.len());
        for id in &ids {
            resolved.push(
                *by_id
                    .get(id)
                    .ok_or_else(|| Error::MissingService(id.to_string()))?,
            );
        }
        let first = resolved[0];
        let mut bb = GeoBox {
            lat_min: first.location.lat,
            lat_max: first.location.lat,
            lon_min: first.location.lon,
            lon_max: first.location.lon,
        };
        let mut t_start = first.time.start();
        let mut t_end = first.time.end();
        for s in &resolved[1..] {
            bb.lat_min = bb.lat_min.min(s.location.lat);
            bb.lat_max = bb.lat_max.max(s.location.lat);
            bb.lon_min = bb.lon_min.min(s.location.lon);
            bb.lon_max = bb.lon_max.max(s.location.lon);
            t_start = t_start.min(s.time.start());
            t_end = t_end.max(s.time.end());
        }
        let mean_score = score_sum
            .get(&root)
            .map(|&(sum, n)| sum / T::from_usize(n).expect("edge count"))
            .unwrap_or_else(T::zero);
        composites.push(CompositeService {
            members: ids,
            bounding_box: bb,
            t_start_s: t_start,
            t_end_s: t_end,
            mean_score,
        });
    }
    composites.sort_by(|a, b| a.members[0].cmp(&b.members[0]));
    Ok(composites)
}

/// Area, in square meters, of the intersection between a composite's
/// bounding box and the query rectangle (both projected about the query
/// center).
fn query_overlap_area_m2<T: Real>(composite: &CompositeService<T>, query: &SceneQuery<T>) -> T {
    let projection = LocalProjection::new(query.center);
    let (x1, y1) = projection.to_local(GeoPoint {
        lat: composite.bounding_box.lat_min,
        lon: composite.bounding_box.lon_min,
    });
    let (x2, y2) = projection.to_local(GeoPoint {
        lat: composite.bounding_box.lat_max,
        lon: composite.bounding_box.lon_max,
    });
    let w = (x2.min(query.half_length_m) - x1.max(-query.half_length_m)).max(T::zero());
    let h = (y2.min(query.half_width_m) - y1.max(-query.half_width_m)).max(T::zero());
    w * h
}

/// Picks the composite to present: most members, then largest overlap with
/// the query region, then highest mean score; remaining ties go to the
/// smallest member id.
pub fn select_composite<'a, T: Real>(
    composites: &'a [CompositeService<T>],
    query: &SceneQuery<T>,
) -> Result<&'a CompositeService<T>> {
    composites
        .iter()
        .max_by(|a, b| {
            a.members
                .len()
                .cmp(&b.members.len())
                .then_with(|| {
                    query_overlap_area_m2(a, query)
                        .partial_cmp(&query_overlap_area_m2(b, query))
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .then_with(|| {
                    a.mean_score
                        .partial_cmp(&b.mean_score)
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                // max_by keeps the later of equal elements; order so that the
                // smaller member id wins.
                .then_with(|| b.members[0].cmp(&a.members[0]))
        })
        .ok_or(Error::NoComposition)
}

/// One placed image in the mosaic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tile<T> {
    pub service_id: ServiceId,
    /// Canvas position in `[0, 1]` (east, north), normalized within the
    /// composite's bounding box.
    pub canvas_x: T,
    pub canvas_y: T,
    /// Tile extent in canvas units, proportional to the normalized linear
    /// field of view.
    pub tile_w: T,
    pub tile_h: T,
    /// Stacking order: ascending capture time, later images on top.
    pub z_order: usize,
}

/// Run description attached to every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance<T> {
    pub model_kind: String,
    pub heuristics_enabled: bool,
    pub overlap_threshold: T,
}

/// The composed mosaic: normalized canvas placements of the selected
/// services. Rendering is left to consumers; no pixel data is involved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosaicManifest<T> {
    pub schema_version: u32,
    pub query: SceneQuery<T>,
    pub tiles: Vec<Tile<T>>,
    pub provenance: Provenance<T>,
}

/// Manifest schema version.
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

const TILE_MIN: f64 = 0.05;
const TILE_MAX: f64 = 0.5;

/// Lays the composite's members out on the unit canvas.
///
/// Positions are the min-max-normalized projected (east, north) coordinates
/// within the composite's bounding box; a degenerate axis collapses to 0.5.
/// Tile sizes are the members' chord lengths normalized by the largest one,
/// clamped into `[0.05, 0.5]`. z-order follows capture time.
pub fn layout<T: Real>(
    composite: &CompositeService<T>,
    services: &[SocSenService<T>],
    query: &SceneQuery<T>,
    provenance: Provenance<T>,
) -> Result<MosaicManifest<T>> {
    if composite.members.is_empty() {
        return Err(Error::NoComposition);
    }
    let by_id: HashMap<&ServiceId, &SocSenService<T>> =
        services.iter().map(|s| (&s.id, s)).collect();
    let mut resolved = Vec::with_capacity(composite.members.len());
    for id in &composite.members {
        resolved.push(
            *by_id
                .get(id)
                .ok_or_else(|| Error::MissingService(id.to_string()))?,
        );
    }

    let projection = LocalProjection::new(query.center);
    let locals: Vec<(T, T)> = resolved
        .iter()
        .map(|s| projection.to_local(s.location))
        .collect();
    let (mut x_min, mut x_max) = (locals[0].0, locals[0].0);
    let (mut y_min, mut y_max) = (locals[0].1, locals[0].1);
    for &(x, y) in &locals[1..] {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    let norm = |v: T, lo: T, hi: T| {
        if hi > lo {
            (v - lo) / (hi - lo)
        } else {
            T::of(0.5)
        }
    };

    let chords: Vec<T> = resolved
        .iter()
        .map(|s| fov_chord(s.coverage.alpha_deg, s.coverage.visd_m).expect("validated coverage"))
        .collect();
    let chord_max = chords.iter().copied().fold(T::zero(), T::max);

    // Stacking: earliest capture first, later images on top.
    let mut order: Vec<usize> = (0..resolved.len()).collect();
    order.sort_by(|&i, &j| {
        resolved[i]
            .time
            .mid()
            .partial_cmp(&resolved[j].time.mid())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| resolved[i].id.cmp(&resolved[j].id))
    });

    let mut tiles = Vec::with_capacity(order.len());
    for (z, &i) in order.iter().enumerate() {
        let size = if chord_max > T::zero() {
            (chords[i] / chord_max).min(T::of(TILE_MAX)).max(T::of(TILE_MIN))
        } else {
            T::of(TILE_MIN)
        };
        tiles.push(Tile {
            service_id: resolved[i].id.clone(),
            canvas_x: norm(locals[i].0, x_min, x_max),
            canvas_y: norm(locals[i].1, y_min, y_max),
            tile_w: size,
            tile_h: size,
            z_order: z,
        });
    }
    Ok(MosaicManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        query: *query,
        tiles,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::{Coverage, ServiceTime};

    fn service(id: &str, lat: f64, lon: f64, t: f64) -> SocSenService<f64> {
        SocSenService::new(
            id,
            GeoPoint::new(lat, lon).unwrap(),
            ServiceTime::instant(t).unwrap(),
            Coverage::new(0.0, 60.0, 100.0).unwrap(),
        )
    }

    fn edge(a: &str, b: &str, score: f64) -> ComposabilityEdge<f64> {
        ComposabilityEdge {
            a: a.into(),
            b: b.into(),
            score,
        }
    }

    fn query() -> SceneQuery<f64> {
        SceneQuery::new(GeoPoint::new(0.0, 0.0).unwrap(), 500.0, 500.0, 0.0, 100.0).unwrap()
    }

    #[test]
    fn transitive_pair_chain_forms_one_composite() {
        let services = vec![
            service("a", 0.0001, 0.0, 1.0),
            service("b", 0.0002, 0.0, 2.0),
            service("c", 0.0003, 0.0, 3.0),
        ];
        let graph = ComposabilityGraph::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![edge("a", "b", 0.9), edge("b", "c", 0.8)],
        )
        .unwrap();
        let composites = closure(&graph, &services).unwrap();
        assert_eq!(composites.len(), 1);
        assert_eq!(
            composites[0].members,
            vec!["a".into(), "b".into(), "c".into()] as Vec<ServiceId>
        );
        assert!((composites[0].mean_score - 0.85).abs() < 1e-12);
        assert_eq!(composites[0].t_start_s, 1.0);
        assert_eq!(composites[0].t_end_s, 3.0);
    }

    #[test]
    fn no_edges_yields_singletons() {
        let services = vec![service("a", 0.0, 0.0, 1.0), service("b", 0.001, 0.0, 2.0)];
        let graph =
            ComposabilityGraph::new(vec!["a".into(), "b".into()], Vec::new()).unwrap();
        let composites = closure(&graph, &services).unwrap();
        assert_eq!(composites.len(), 2);
        assert!(composites.iter().all(|c| c.members.len() == 1));
        assert!(composites.iter().all(|c| c.mean_score == 0.0));
    }

    #[test]
    fn self_loops_are_rejected() {
        assert!(ComposabilityGraph::<f64>::new(
            vec!["a".into()],
            vec![edge("a", "a", 1.0)]
        )
        .is_err());
    }

    #[test]
    fn selection_prefers_size_then_overlap() {
        let services: Vec<_> = (0..8)
            .map(|i| service(&format!("s{i}"), 0.0001 * i as f64, 0.0, i as f64))
            .collect();
        let big = ComposabilityGraph::new(
            services.iter().map(|s| s.id.clone()).collect(),
            vec![
                edge("s0", "s1", 0.9),
                edge("s1", "s2", 0.9),
                edge("s2", "s3", 0.9),
                edge("s3", "s4", 0.9),
                edge("s5", "s6", 0.9),
                edge("s6", "s7", 0.9),
            ],
        )
        .unwrap();
        let composites = closure(&big, &services).unwrap();
        let selected = select_composite(&composites, &query()).unwrap();
        assert_eq!(selected.members.len(), 5);
        assert_eq!(selected.members[0], "s0".into());
    }

    #[test]
    fn selection_breaks_size_ties_by_query_overlap() {
        // Two 2-member composites; the one inside the query region wins.
        let services = vec![
            service("in1", 0.0001, 0.0001, 1.0),
            service("in2", -0.0001, -0.0001, 2.0),
            service("out1", 0.5, 0.5, 1.0),
            service("out2", 0.5001, 0.5001, 2.0),
        ];
        let graph = ComposabilityGraph::new(
            services.iter().map(|s| s.id.clone()).collect(),
            vec![edge("in1", "in2", 0.5), edge("out1", "out2", 0.9)],
        )
        .unwrap();
        let composites = closure(&graph, &services).unwrap();
        let selected = select_composite(&composites, &query()).unwrap();
        assert_eq!(selected.members[0], "in1".into());
    }

    #[test]
    fn empty_selection_is_an_error() {
        assert!(matches!(
            select_composite::<f64>(&[], &query()),
            Err(Error::NoComposition)
        ));
    }

    #[test]
    fn single_member_layout_centers_the_tile() {
        let services = vec![service("a", 0.0001, 0.0001, 1.0)];
        let graph = ComposabilityGraph::new(vec!["a".into()], Vec::new()).unwrap();
        let composites = closure(&graph, &services).unwrap();
        let manifest = layout(
            &composites[0],
            &services,
            &query(),
            Provenance {
                model_kind: "tree".into(),
                heuristics_enabled: true,
                overlap_threshold: 0.5,
            },
        )
        .unwrap();
        assert_eq!(manifest.tiles.len(), 1);
        assert_eq!(manifest.tiles[0].canvas_x, 0.5);
        assert_eq!(manifest.tiles[0].canvas_y, 0.5);
        assert_eq!(manifest.tiles[0].z_order, 0);
    }

    #[test]
    fn east_west_members_span_the_canvas() {
        let services = vec![
            service("west", 0.0, -0.0005, 1.0),
            service("east", 0.0, 0.0005, 2.0),
        ];
        let graph = ComposabilityGraph::new(
            vec!["east".into(), "west".into()],
            vec![edge("east", "west", 1.0)],
        )
        .unwrap();
        let composites = closure(&graph, &services).unwrap();
        let manifest = layout(
            &composites[0],
            &services,
            &query(),
            Provenance {
                model_kind: "tree".into(),
                heuristics_enabled: true,
                overlap_threshold: 0.5,
            },
        )
        .unwrap();
        let west = manifest
            .tiles
            .iter()
            .find(|t| t.service_id == "west".into())
            .unwrap();
        let east = manifest
            .tiles
            .iter()
            .find(|t| t.service_id == "east".into())
            .unwrap();
        assert_eq!(west.canvas_x, 0.0);
        assert_eq!(east.canvas_x, 1.0);
        assert_eq!(west.canvas_y, 0.5);
        assert_eq!(east.canvas_y, 0.5);
        // Later capture stacks on top.
        assert_eq!(west.z_order, 0);
        assert_eq!(east.z_order, 1);
    }

    #[test]
    fn five_member_positions_match_hand_normalization() {
        // Grid positions in degrees; canvas coordinates reduce to min-max
        // normalized lat/lon fractions.
        let services = vec![
            service("p0", 0.0000, 0.0000, 0.0),
            service("p1", 0.0004, 0.0001, 1.0),
            service("p2", 0.0008, 0.0002, 2.0),
            service("p3", 0.0002, 0.0004, 3.0),
            service("p4", 0.0006, 0.0003, 4.0),
        ];
        let ids: Vec<ServiceId> = services.iter().map(|s| s.id.clone()).collect();
        let edges = vec![
            edge("p0", "p1", 1.0),
            edge("p1", "p2", 1.0),
            edge("p2", "p3", 1.0),
            edge("p3", "p4", 1.0),
        ];
        let graph = ComposabilityGraph::new(ids, edges).unwrap();
        let composites = closure(&graph, &services).unwrap();
        let manifest = layout(
            &composites[0],
            &services,
            &query(),
            Provenance {
                model_kind: "mlp".into(),
                heuristics_enabled: false,
                overlap_threshold: 0.5,
            },
        )
        .unwrap();
        let expected = [
            ("p0", 0.0, 0.0),
            ("p1", 0.25, 0.5),
            ("p2", 0.5, 1.0),
            ("p3", 1.0, 0.25),
            ("p4", 0.75, 0.75),
        ];
        for (id, ex, ey) in expected {
            let tile = manifest
                .tiles
                .iter()
                .find(|t| t.service_id == id.into())
                .unwrap();
            assert!(
                (tile.canvas_x - ex).abs() < 1e-9 && (tile.canvas_y - ey).abs() < 1e-9,
                "{id}: ({}, {}) vs ({ex}, {ey})",
                tile.canvas_x,
                tile.canvas_y
            );
        }
        // z-order is a permutation.
        let mut zs: Vec<usize> = manifest.tiles.iter().map(|t| t.z_order).collect();
        zs.sort_unstable();
        assert_eq!(zs, (0..5).collect::<Vec<_>>());
    }
}
