//! Bounding-volume hierarchy over mesh facets.
//!
//! A static binary AABB tree built once per shape model, used for nearest-hit
//! ray casting and closest-point queries. Median split on the longest axis of
//! the facet-centroid bounds keeps construction deterministic, which matters
//! because downstream consumers promise bit-reproducible outputs.

use nalgebra::Vector3;

use super::tri;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
struct Node {
    min: Vector3<f64>,
    max: Vector3<f64>,
    kind: NodeKind,
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: usize, count: usize },
    Inner { left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub(crate) struct Bvh {
    nodes: Vec<Node>,
    /// Facet indices permuted so every leaf owns a contiguous run.
    order: Vec<usize>,
}

fn facet_aabb(vertices: &[Vector3<f64>], facet: &[usize; 3]) -> (Vector3<f64>, Vector3<f64>) {
    let a = vertices[facet[0]];
    let b = vertices[facet[1]];
    let c = vertices[facet[2]];
    (a.inf(&b).inf(&c), a.sup(&b).sup(&c))
}

impl Bvh {
    pub fn build(vertices: &[Vector3<f64>], facets: &[[usize; 3]]) -> Self {
        let centroids: Vec<Vector3<f64>> = facets
            .iter()
            .map(|f| (vertices[f[0]] + vertices[f[1]] + vertices[f[2]]) / 3.0)
            .collect();
        let mut order: Vec<usize> = (0..facets.len()).collect();
        let mut nodes = Vec::with_capacity(2 * facets.len().max(1));
        if !facets.is_empty() {
            Self::build_node(vertices, facets, &centroids, &mut order, 0, &mut nodes);
        }
        Bvh { nodes, order }
    }

    fn build_node(
        vertices: &[Vector3<f64>],
        facets: &[[usize; 3]],
        centroids: &[Vector3<f64>],
        order: &mut [usize],
        offset: usize,
        nodes: &mut Vec<Node>,
    ) -> usize {
        let mut min = Vector3::repeat(f64::INFINITY);
        let mut max = Vector3::repeat(f64::NEG_INFINITY);
        let mut cmin = min;
        let mut cmax = max;
        for &f in order.iter() {
            let (lo, hi) = facet_aabb(vertices, &facets[f]);
            min = min.inf(&lo);
            max = max.sup(&hi);
            cmin = cmin.inf(&centroids[f]);
            cmax = cmax.sup(&centroids[f]);
        }

        let index = nodes.len();
        nodes.push(Node {
            min,
            max,
            kind: NodeKind::Leaf { start: offset, count: order.len() },
        });

        let extent = cmax - cmin;
        let degenerate = extent.max() <= 0.0;
        if order.len() <= LEAF_SIZE || degenerate {
            return index;
        }

        let axis = extent.imax();
        let mid = order.len() / 2;
        order.select_nth_unstable_by(mid, |&a, &b| {
            centroids[a][axis]
                .total_cmp(&centroids[b][axis])
                .then(a.cmp(&b))
        });
        let (lo, hi) = order.split_at_mut(mid);
        let left = Self::build_node(vertices, facets, centroids, lo, offset, nodes);
        let right = Self::build_node(vertices, facets, centroids, hi, offset + mid, nodes);
        nodes[index].kind = NodeKind::Inner { left, right };
        index
    }

    /// Nearest ray hit as `(t, facet)`, with `t` in units of `|dir|`.
    ///
    /// Exact distance ties (a ray through a shared edge or vertex) resolve to
    /// the lowest facet id, so such rays report exactly one hit.
    pub fn ray_nearest(
        &self,
        vertices: &[Vector3<f64>],
        facets: &[[usize; 3]],
        origin: &Vector3<f64>,
        dir: &Vector3<f64>,
    ) -> Option<(f64, usize)> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = Vector3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best: Option<(f64, usize)> = None;
        let mut stack = vec![0usize];
        while let Some(node_id) = stack.pop() {
            let node = &self.nodes[node_id];
            let Some(entry) = slab_entry(&node.min, &node.max, origin, &inv) else {
                continue;
            };
            if let Some((bt, _)) = best {
                if entry > bt {
                    continue;
                }
            }
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    for &f in &self.order[start..start + count] {
                        let [ia, ib, ic] = facets[f];
                        if let Some(t) = tri::ray_triangle(
                            origin,
                            dir,
                            &vertices[ia],
                            &vertices[ib],
                            &vertices[ic],
                        ) {
                            let better = match best {
                                None => true,
                                Some((bt, bf)) => t < bt || (t == bt && f < bf),
                            };
                            if better {
                                best = Some((t, f));
                            }
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    // Visit the nearer child first so pruning bites sooner.
                    let el = slab_entry(&self.nodes[left].min, &self.nodes[left].max, origin, &inv);
                    let er =
                        slab_entry(&self.nodes[right].min, &self.nodes[right].max, origin, &inv);
                    match (el, er) {
                        (Some(a), Some(b)) if a <= b => {
                            stack.push(right);
                            stack.push(left);
                        }
                        (Some(_), Some(_)) => {
                            stack.push(left);
                            stack.push(right);
                        }
                        (Some(_), None) => stack.push(left),
                        (None, Some(_)) => stack.push(right),
                        (None, None) => {}
                    }
                }
            }
        }
        best
    }

    /// Closest surface point to `p` as `(dist2, facet, point, barycentric)`.
    ///
    /// Exact distance ties resolve to the lowest facet id.
    pub fn closest_point(
        &self,
        vertices: &[Vector3<f64>],
        facets: &[[usize; 3]],
        p: &Vector3<f64>,
    ) -> (f64, usize, Vector3<f64>, [f64; 3]) {
        assert!(!self.nodes.is_empty(), "closest_point on empty BVH");
        let mut best = (f64::INFINITY, usize::MAX, Vector3::zeros(), [0.0; 3]);
        self.closest_rec(0, vertices, facets, p, &mut best);
        best
    }

    fn closest_rec(
        &self,
        node_id: usize,
        vertices: &[Vector3<f64>],
        facets: &[[usize; 3]],
        p: &Vector3<f64>,
        best: &mut (f64, usize, Vector3<f64>, [f64; 3]),
    ) {
        let node = &self.nodes[node_id];
        // Strict comparison: an equal lower bound may still hide an exact tie
        // with a lower facet id.
        if aabb_dist2(&node.min, &node.max, p) > best.0 {
            return;
        }
        match node.kind {
            NodeKind::Leaf { start, count } => {
                for &f in &self.order[start..start + count] {
                    let [ia, ib, ic] = facets[f];
                    let (q, w) = tri::closest_point_triangle(
                        p,
                        &vertices[ia],
                        &vertices[ib],
                        &vertices[ic],
                    );
                    let d2 = (p - q).norm_squared();
                    if d2 < best.0 || (d2 == best.0 && f < best.1) {
                        *best = (d2, f, q, w);
                    }
                }
            }
            NodeKind::Inner { left, right } => {
                let dl = aabb_dist2(&self.nodes[left].min, &self.nodes[left].max, p);
                let dr = aabb_dist2(&self.nodes[right].min, &self.nodes[right].max, p);
                if dl <= dr {
                    self.closest_rec(left, vertices, facets, p, best);
                    self.closest_rec(right, vertices, facets, p, best);
                } else {
                    self.closest_rec(right, vertices, facets, p, best);
                    self.closest_rec(left, vertices, facets, p, best);
                }
            }
        }
    }
}

/// Slab-test entry distance of a ray into an AABB, or `None` on a miss.
/// Returns `0.0` for origins already inside the box.
fn slab_entry(
    min: &Vector3<f64>,
    max: &Vector3<f64>,
    origin: &Vector3<f64>,
    inv_dir: &Vector3<f64>,
) -> Option<f64> {
    let mut tmin: f64 = 0.0;
    let mut tmax = f64::INFINITY;
    for axis in 0..3 {
        let t1 = (min[axis] - origin[axis]) * inv_dir[axis];
        let t2 = (max[axis] - origin[axis]) * inv_dir[axis];
        // f64::min/max drop NaNs arising from 0 * inf on boundary-parallel rays.
        tmin = tmin.max(t1.min(t2));
        tmax = tmax.min(t1.max(t2));
    }
    (tmin <= tmax).then_some(tmin)
}

fn aabb_dist2(min: &Vector3<f64>, max: &Vector3<f64>, p: &Vector3<f64>) -> f64 {
    let mut d2 = 0.0;
    for axis in 0..3 {
        let lo = min[axis] - p[axis];
        let hi = p[axis] - max[axis];
        let d = lo.max(hi).max(0.0);
        d2 += d * d;
    }
    d2
}
