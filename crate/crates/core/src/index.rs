//! 3D R-tree over (east, north, time) for spatio-temporal service lookup.
//!
//! Services are projected into a single dataset-wide equirectangular frame
//! about an anchor point, which keeps the tree metric Euclidean at city
//! scale. Nodes hold between [`MIN_FILL`] and [`NODE_CAPACITY`] entries and
//! split with Guttman's quadratic strategy.

use std::collections::HashSet;

use crate::coverage::{ServiceId, SocSenService};
use crate::error::{Error, Result};
use crate::geo::{earth_radius, normalize_signed_deg, GeoPoint, SceneQuery};
use crate::scalar::Real;

/// Maximum entries per node (M).
pub const NODE_CAPACITY: usize = 8;
/// Minimum entries per non-root node (m).
pub const MIN_FILL: usize = 3;

/// Equirectangular projection about a fixed anchor; x is meters east,
/// y meters north.
#[derive(Debug, Clone, Copy)]
pub struct LocalProjection<T> {
    pub anchor: GeoPoint<T>,
    meters_per_deg: T,
    cos_lat: T,
}

impl<T: Real> LocalProjection<T> {
    pub fn new(anchor: GeoPoint<T>) -> Self {
        Self {
            anchor,
            meters_per_deg: earth_radius::<T>() * T::of(std::f64::consts::PI / 180.0),
            cos_lat: anchor.lat.to_radians().cos(),
        }
    }

    pub fn to_local(&self, p: GeoPoint<T>) -> (T, T) {
        let x = normalize_signed_deg(p.lon - self.anchor.lon) * self.meters_per_deg * self.cos_lat;
        let y = (p.lat - self.anchor.lat) * self.meters_per_deg;
        (x, y)
    }
}

/// Centroid of the service locations, the usual anchor for a dataset-wide
/// projection.
pub fn dataset_anchor<T: Real>(services: &[SocSenService<T>]) -> Result<GeoPoint<T>> {
    if services.is_empty() {
        return Err(Error::EmptyIndex);
    }
    let n = T::from_usize(services.len()).expect("service count");
    let lat = services.iter().map(|s| s.location.lat).sum::<T>() / n;
    let base = services[0].location.lon;
    let lon = base
        + services
            .iter()
            .map(|s| normalize_signed_deg(s.location.lon - base))
            .sum::<T>()
            / n;
    GeoPoint::new(lat, lon)
}

/// One indexed service: projected position plus its time extent
/// (point-timed services have `t_start_s == t_end_s`).
#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry<T> {
    pub service_id: ServiceId,
    pub x_m: T,
    pub y_m: T,
    pub t_start_s: T,
    pub t_end_s: T,
}

impl<T: Real> IndexEntry<T> {
    pub fn from_service(service: &SocSenService<T>, projection: &LocalProjection<T>) -> Self {
        let (x_m, y_m) = projection.to_local(service.location);
        Self {
            service_id: service.id.clone(),
            x_m,
            y_m,
            t_start_s: service.time.start(),
            t_end_s: service.time.end(),
        }
    }

    fn mbr(&self) -> Mbr<T> {
        Mbr {
            min: [self.x_m, self.y_m, self.t_start_s],
            max: [self.x_m, self.y_m, self.t_end_s],
        }
    }
}

/// Axis-aligned box over projected space and time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedRegion<T> {
    pub x_min: T,
    pub x_max: T,
    pub y_min: T,
    pub y_max: T,
    pub t_min: T,
    pub t_max: T,
}

impl<T: Real> BoundedRegion<T> {
    pub fn new(x_min: T, x_max: T, y_min: T, y_max: T, t_min: T, t_max: T) -> Result<Self> {
        if x_min > x_max || y_min > y_max || t_min > t_max {
            return Err(Error::InvalidRegion(
                "min exceeds max on some axis".to_owned(),
            ));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
            t_min,
            t_max,
        })
    }

    fn to_mbr(self) -> Mbr<T> {
        Mbr {
            min: [self.x_min, self.y_min, self.t_min],
            max: [self.x_max, self.y_max, self.t_max],
        }
    }
}

/// The query's bounded region: projected center plus/minus the half extents
/// (length east-west, width north-south) and the raw time window.
pub fn bounded_region<T: Real>(query: &SceneQuery<T>, anchor: GeoPoint<T>) -> BoundedRegion<T> {
    let projection = LocalProjection::new(anchor);
    let (cx, cy) = projection.to_local(query.center);
    BoundedRegion {
        x_min: cx - query.half_length_m,
        x_max: cx + query.half_length_m,
        y_min: cy - query.half_width_m,
        y_max: cy + query.half_width_m,
        t_min: query.t_start_s,
        t_max: query.t_end_s,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Mbr<T> {
    min: [T; 3],
    max: [T; 3],
}

impl<T: Real> Mbr<T> {
    fn union(&self, other: &Mbr<T>) -> Mbr<T> {
        let mut min = self.min;
        let mut max = self.max;
        for axis in 0..3 {
            min[axis] = min[axis].min(other.min[axis]);
            max[axis] = max[axis].max(other.max[axis]);
        }
        Mbr { min, max }
    }

    fn intersects(&self, other: &Mbr<T>) -> bool {
        (0..3).all(|a| self.min[a] <= other.max[a] && other.min[a] <= self.max[a])
    }

    fn contains(&self, other: &Mbr<T>) -> bool {
        (0..3).all(|a| self.min[a] <= other.min[a] && other.max[a] <= self.max[a])
    }

    fn volume(&self) -> T {
        (0..3)
            .map(|a| self.max[a] - self.min[a])
            .fold(T::one(), |acc, e| acc * e)
    }

    fn enlargement(&self, other: &Mbr<T>) -> T {
        self.union(other).volume() - self.volume()
    }
}

#[derive(Debug, Clone)]
enum Node<T> {
    Leaf(Vec<IndexEntry<T>>),
    Branch(Vec<(Mbr<T>, Node<T>)>),
}

impl<T: Real> Node<T> {
    fn mbr(&self) -> Mbr<T> {
        match self {
            Node::Leaf(entries) => {
                let mut it = entries.iter().map(IndexEntry::mbr);
                let first = it.next().expect("leaf never empty after insert");
                it.fold(first, |acc, m| acc.union(&m))
            }
            Node::Branch(children) => {
                let mut it = children.iter().map(|(m, _)| *m);
                let first = it.next().expect("branch never empty");
                it.fold(first, |acc, m| acc.union(&m))
            }
        }
    }

    fn len(&self) -> usize {
        match self {
            Node::Leaf(entries) => entries.len(),
            Node::Branch(children) => children.len(),
        }
    }
}

/// 3D R-tree; immutable once populated, freely shareable for queries.
#[derive(Debug, Clone)]
pub struct RTree3D<T> {
    root: Node<T>,
    ids: HashSet<ServiceId>,
    height: usize,
}

impl<T: Real> Default for RTree3D<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> RTree3D<T> {
    pub fn new() -> Self {
        Self {
            root: Node::Leaf(Vec::new()),
            ids: HashSet::new(),
            height: 1,
        }
    }

    /// Indexes every service, projecting locations about `anchor`.
    pub fn build(services: &[SocSenService<T>], anchor: GeoPoint<T>) -> Result<Self> {
        if services.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let projection = LocalProjection::new(anchor);
        let mut tree = Self::new();
        for service in services {
            tree.insert(IndexEntry::from_service(service, &projection))?;
        }
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn insert(&mut self, entry: IndexEntry<T>) -> Result<()> {
        if !self.ids.insert(entry.service_id.clone()) {
            return Err(Error::DuplicateId(entry.service_id.to_string()));
        }
        if let Some(sibling) = insert_rec(&mut self.root, entry) {
            let old = std::mem::replace(&mut self.root, Node::Leaf(Vec::new()));
            let old_mbr = old.mbr();
            let sib_mbr = sibling.mbr();
            self.root = Node::Branch(vec![(old_mbr, old), (sib_mbr, sibling)]);
            self.height += 1;
        }
        Ok(())
    }

    /// Ids of all entries whose position/time extent intersects the region.
    /// Order is unspecified.
    pub fn range_query(&self, region: &BoundedRegion<T>) -> Vec<ServiceId> {
        let mut hits = Vec::new();
        let query = region.to_mbr();
        collect(&self.root, &query, &mut hits);
        hits
    }

    /// Verifies fill factors, MBR tightness/containment and uniform leaf
    /// depth; used by the test suites after structural mutations.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        fn walk<T: Real>(
            node: &Node<T>,
            is_root: bool,
            depth: usize,
        ) -> std::result::Result<usize, String> {
            match node {
                Node::Leaf(entries) => {
                    if !is_root && (entries.len() < MIN_FILL || entries.len() > NODE_CAPACITY) {
                        return Err(format!(
                            "leaf fill {} outside [{MIN_FILL}, {NODE_CAPACITY}]",
                            entries.len()
                        ));
                    }
                    if entries.len() > NODE_CAPACITY {
                        return Err(format!("root leaf overflow: {}", entries.len()));
                    }
                    Ok(depth)
                }
                Node::Branch(children) => {
                    let lo = if is_root { 2 } else { MIN_FILL };
                    if children.len() < lo || children.len() > NODE_CAPACITY {
                        return Err(format!(
                            "branch fill {} outside [{lo}, {NODE_CAPACITY}]",
                            children.len()
                        ));
                    }
                    let mut leaf_depth = None;
                    for (mbr, child) in children {
                        if child.len() == 0 {
                            return Err("empty child node".to_owned());
                        }
                        let actual = child.mbr();
                        if actual != *mbr {
                            return Err("stored child MBR is not tight".to_owned());
                        }
                        if !mbr.contains(&actual) {
                            return Err("child MBR escapes parent".to_owned());
                        }
                        let d = walk(child, false, depth + 1)?;
                        if let Some(prev) = leaf_depth {
                            if prev != d {
                                return Err("leaves at unequal depth".to_owned());
                            }
                        }
                        leaf_depth = Some(d);
                    }
                    Ok(leaf_depth.expect("non-empty branch"))
                }
            }
        }
        walk(&self.root, true, 1).map(|_| ())
    }
}

fn collect<T: Real>(node: &Node<T>, query: &Mbr<T>, hits: &mut Vec<ServiceId>) {
    match node {
        Node::Leaf(entries) => {
            for entry in entries {
                if query.intersects(&entry.mbr()) {
                    hits.push(entry.service_id.clone());
                }
            }
        }
        Node::Branch(children) => {
            for (mbr, child) in children {
                if query.intersects(mbr) {
                    collect(child, query, hits);
                }
            }
        }
    }
}

/// Recursive insert; returns a split-off sibling when the node overflowed.
fn insert_rec<T: Real>(node: &mut Node<T>, entry: IndexEntry<T>) -> Option<Node<T>> {
    match node {
        Node::Leaf(entries) => {
            entries.push(entry);
            if entries.len() <= NODE_CAPACITY {
                return None;
            }
            let moved = std::mem::take(entries);
            let (left, right) = quadratic_split(moved, |e| e.mbr());
            *entries = left;
            Some(Node::Leaf(right))
        }
        Node::Branch(children) => {
            let target = entry.mbr();
            let chosen = choose_subtree(children, &target);
            let (_, child) = &mut children[chosen];
            let split = insert_rec(child, entry);
            children[chosen].0 = children[chosen].1.mbr();
            if let Some(sibling) = split {
                let mbr = sibling.mbr();
                children.push((mbr, sibling));
            }
            if children.len() <= NODE_CAPACITY {
                return None;
            }
            let moved = std::mem::take(children);
            let (left, right) = quadratic_split(moved, |(m, _)| *m);
            *children = left;
            Some(Node::Branch(right))
        }
    }
}

/// Least-enlargement child; ties resolve to the smaller box, then to the
/// earlier child, keeping insertion deterministic.
fn choose_subtree<T: Real>(children: &[(Mbr<T>, Node<T>)], target: &Mbr<T>) -> usize {
    let mut best = 0;
    let mut best_enlargement = children[0].0.enlargement(target);
    let mut best_volume = children[0].0.volume();
    for (i, (mbr, _)) in children.iter().enumerate().skip(1) {
        let e = mbr.enlargement(target);
        let v = mbr.volume();
        if e < best_enlargement || (e == best_enlargement && v < best_volume) {
            best = i;
            best_enlargement = e;
            best_volume = v;
        }
    }
    best
}

/// Guttman's quadratic split: seed with the pair wasting the most volume,
/// then assign each remaining item to the group whose MBR grows least.
fn quadratic_split<T: Real, E>(items: Vec<E>, mbr_of: impl Fn(&E) -> Mbr<T>) -> (Vec<E>, Vec<E>) {
    debug_assert!(items.len() > NODE_CAPACITY);
    let boxes: Vec<Mbr<T>> = items.iter().map(&mbr_of).collect();

    let (mut seed_a, mut seed_b) = (0, 1);
    let mut worst = T::neg_infinity();
    for i in 0..boxes.len() {
        for j in (i + 1)..boxes.len() {
            let waste = boxes[i].union(&boxes[j]).volume() - boxes[i].volume() - boxes[j].volume();
            if waste > worst {
                worst = waste;
                seed_a = i;
                seed_b = j;
            }
        }
    }

    let mut group_a: Vec<usize> = vec![seed_a];
    let mut group_b: Vec<usize> = vec![seed_b];
    let mut mbr_a = boxes[seed_a];
    let mut mbr_b = boxes[seed_b];
    let mut remaining: Vec<usize> = (0..boxes.len())
        .filter(|&i| i != seed_a && i != seed_b)
        .collect();

    while !remaining.is_empty() {
        // Force-assign when one group needs every remaining item to reach
        // the minimum fill.
        if group_a.len() + remaining.len() == MIN_FILL {
            group_a.extend(remaining.drain(..));
            break;
        }
        if group_b.len() + remaining.len() == MIN_FILL {
            group_b.extend(remaining.drain(..));
            break;
        }
        // Pick the item with the strongest preference.
        let mut pick = 0;
        let mut pick_diff = T::neg_infinity();
        for (k, &i) in remaining.iter().enumerate() {
            let da = mbr_a.enlargement(&boxes[i]);
            let db = mbr_b.enlargement(&boxes[i]);
            let diff = (da - db).abs();
            if diff > pick_diff {
                pick_diff = diff;
                pick = k;
            }
        }
        let i = remaining.remove(pick);
        let da = mbr_a.enlargement(&boxes[i]);
        let db = mbr_b.enlargement(&boxes[i]);
        let to_a = match da.partial_cmp(&db) {
            Some(std::cmp::Ordering::Less) => true,
            Some(std::cmp::Ordering::Greater) => false,
            _ => match mbr_a.volume().partial_cmp(&mbr_b.volume()) {
                Some(std::cmp::Ordering::Less) => true,
                Some(std::cmp::Ordering::Greater) => false,
                _ => group_a.len() <= group_b.len(),
            },
        };
        if to_a {
            mbr_a = mbr_a.union(&boxes[i]);
            group_a.push(i);
        } else {
            mbr_b = mbr_b.union(&boxes[i]);
            group_b.push(i);
        }
    }

    let in_a: HashSet<usize> = group_a.into_iter().collect();
    let mut left = Vec::with_capacity(in_a.len());
    let mut right = Vec::with_capacity(boxes.len() - in_a.len());
    for (i, item) in items.into_iter().enumerate() {
        if in_a.contains(&i) {
            left.push(item);
        } else {
            right.push(item);
        }
    }
    (left, right)
}
