//! Exact nearest-neighbour search in 3-space.
//!
//! A small k-d tree used by scan registration (closest-point matching) and
//! by the route planner's tree growth. Queries are exact — no approximation
//! factor — and deterministic: ties on distance always resolve to the lowest
//! point index, regardless of tree layout.
//!
//! [`KdTree`] is static; [`DynamicNn`] layers incremental insertion on top
//! using the logarithmic method (a forest of doubling-size trees, merged
//! like a binary counter), keeping queries sub-linear without rebalancing.

use nalgebra::Vector3;

#[derive(Debug, Clone)]
struct Entry {
    point: Vector3<f64>,
    id: usize,
}

/// Static k-d tree over a fixed set of points.
///
/// The tree is stored implicitly: the root of any index range sits at its
/// midpoint and splits on `depth % 3`, so no per-node bookkeeping is needed.
#[derive(Debug, Clone)]
pub struct KdTree {
    entries: Vec<Entry>,
}

impl KdTree {
    /// Build from a point slice; `nearest` reports indices into this slice.
    pub fn build(points: &[Vector3<f64>]) -> Self {
        let mut entries: Vec<Entry> =
            points.iter().enumerate().map(|(id, &point)| Entry { point, id }).collect();
        if !entries.is_empty() {
            build_range(&mut entries, 0);
        }
        KdTree { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Index and squared distance of the point closest to `query`; exact,
    /// with distance ties broken toward the lowest index.
    pub fn nearest(&self, query: &Vector3<f64>) -> Option<(usize, f64)> {
        if self.entries.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0..self.entries.len(), 0, query, &mut best);
        Some(best)
    }

    fn search(
        &self,
        range: std::ops::Range<usize>,
        depth: usize,
        query: &Vector3<f64>,
        best: &mut (usize, f64),
    ) {
        if range.is_empty() {
            return;
        }
        let mid = range.start + range.len() / 2;
        let entry = &self.entries[mid];
        let d2 = (entry.point - query).norm_squared();
        if d2 < best.1 || (d2 == best.1 && entry.id < best.0) {
            *best = (entry.id, d2);
        }
        let axis = depth % 3;
        let offset = query[axis] - entry.point[axis];
        let (near, far) = if offset < 0.0 {
            (range.start..mid, mid + 1..range.end)
        } else {
            (mid + 1..range.end, range.start..mid)
        };
        self.search(near, depth + 1, query, best);
        // The far half-space can still hold the winner (or an equal-distance
        // point with a lower id) while the splitting plane is within reach.
        if offset * offset <= best.1 {
            self.search(far, depth + 1, query, best);
        }
    }
}

fn build_range(entries: &mut [Entry], depth: usize) {
    if entries.len() <= 1 {
        return;
    }
    let axis = depth % 3;
    let mid = entries.len() / 2;
    entries.select_nth_unstable_by(mid, |a, b| {
        a.point[axis].total_cmp(&b.point[axis]).then(a.id.cmp(&b.id))
    });
    let (left, rest) = entries.split_at_mut(mid);
    build_range(left, depth + 1);
    build_range(&mut rest[1..], depth + 1);
}

/// Incremental nearest-neighbour index: points are appended over time and
/// identified by insertion order.
///
/// Internally a forest of k-d trees whose sizes follow the binary digits of
/// the point count; each insertion merges equal-size trees like a carry
/// chain, so total construction work stays `O(n log² n)` and queries visit
/// `O(log n)` trees.
#[derive(Debug, Clone, Default)]
pub struct DynamicNn {
    points: Vec<Vector3<f64>>,
    /// `(first_id, tree)`; tree-local indices are offsets from `first_id`.
    trees: Vec<(usize, KdTree)>,
}

impl DynamicNn {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, id: usize) -> &Vector3<f64> {
        &self.points[id]
    }

    /// Append a point, returning its id (insertion order, starting at 0).
    pub fn insert(&mut self, point: Vector3<f64>) -> usize {
        let id = self.points.len();
        self.points.push(point);
        let mut start = id;
        // Merge while the youngest two trees have equal size; ranges stay
        // contiguous because merges always involve neighbours in time.
        loop {
            match self.trees.last() {
                Some((prev_start, prev_tree))
                    if prev_tree.len() == self.points.len() - start =>
                {
                    start = *prev_start;
                    self.trees.pop();
                }
                _ => break,
            }
        }
        self.trees.push((start, KdTree::build(&self.points[start..])));
        id
    }

    /// Id and squared distance of the nearest inserted point; ties resolve
    /// to the earliest insertion.
    pub fn nearest(&self, query: &Vector3<f64>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (start, tree) in &self.trees {
            if let Some((local, d2)) = tree.nearest(query) {
                let id = start + local;
                let better = match best {
                    None => true,
                    Some((bid, bd2)) => d2 < bd2 || (d2 == bd2 && id < bid),
                };
                if better {
                    best = Some((id, d2));
                }
            }
        }
        best
    }
}
