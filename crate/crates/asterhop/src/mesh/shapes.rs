//! Synthetic watertight test bodies.
//!
//! Scenario files reference shape models on disk, but tests, examples, and
//! benchmarks want bodies with known analytic properties. These generators
//! produce them directly (already validated); pair with
//! [`write_obj`](super::write_obj) when a file is needed.

use std::collections::HashMap;

use nalgebra::Vector3;

use super::ShapeModel;

/// Regular tetrahedron with vertices at `(±s, ±s, ±s)` (even sign
/// combinations), hence edge length `2·s·√2` and volume `8·s³/3`.
pub fn tetrahedron(s: f64) -> ShapeModel {
    let vertices = vec![
        Vector3::new(s, s, s),
        Vector3::new(s, -s, -s),
        Vector3::new(-s, s, -s),
        Vector3::new(-s, -s, s),
    ];
    let facets = vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]];
    ShapeModel::from_parts(vertices, facets).expect("tetrahedron is watertight by construction")
}

/// Axis-aligned box with the given full side lengths, centred at the origin,
/// triangulated into 12 facets.
pub fn cuboid(lx: f64, ly: f64, lz: f64) -> ShapeModel {
    let (x, y, z) = (lx / 2.0, ly / 2.0, lz / 2.0);
    let vertices = vec![
        Vector3::new(-x, -y, -z),
        Vector3::new(x, -y, -z),
        Vector3::new(x, y, -z),
        Vector3::new(-x, y, -z),
        Vector3::new(-x, -y, z),
        Vector3::new(x, -y, z),
        Vector3::new(x, y, z),
        Vector3::new(-x, y, z),
    ];
    let facets = vec![
        [0, 3, 2], [0, 2, 1], // bottom, -z
        [4, 5, 6], [4, 6, 7], // top, +z
        [0, 1, 5], [0, 5, 4], // -y
        [2, 3, 7], [2, 7, 6], // +y
        [0, 4, 7], [0, 7, 3], // -x
        [1, 2, 6], [1, 6, 5], // +x
    ];
    ShapeModel::from_parts(vertices, facets).expect("cuboid is watertight by construction")
}

/// Geodesic sphere: regular icosahedron subdivided `subdivisions` times with
/// every vertex pushed onto the sphere of the given radius. Facet count is
/// `20 · 4^subdivisions`.
pub fn icosphere(radius: f64, subdivisions: u32) -> ShapeModel {
    ellipsoid(radius, radius, radius, subdivisions)
}

/// Triaxial ellipsoid with semi-axes `(a, b, c)`: a unit icosphere scaled
/// per axis, so every vertex lies exactly on the ellipsoid.
pub fn ellipsoid(a: f64, b: f64, c: f64, subdivisions: u32) -> ShapeModel {
    let (mut vertices, mut facets) = icosahedron_unit();
    for _ in 0..subdivisions {
        (vertices, facets) = subdivide_on_sphere(vertices, facets);
    }
    for v in &mut vertices {
        v.x *= a;
        v.y *= b;
        v.z *= c;
    }
    ShapeModel::from_parts(vertices, facets).expect("ellipsoid is watertight by construction")
}

/// Unit-radius regular icosahedron with outward winding.
fn icosahedron_unit() -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let vertices = raw
        .iter()
        .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
        .collect();
    let facets = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    (vertices, facets)
}

/// One 4-to-1 subdivision pass with midpoints re-projected onto the unit
/// sphere.
fn subdivide_on_sphere(
    mut vertices: Vec<Vector3<f64>>,
    facets: Vec<[usize; 3]>,
) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let mut midpoint_cache: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |i: usize, j: usize, vertices: &mut Vec<Vector3<f64>>| -> usize {
        let key = (i.min(j), i.max(j));
        *midpoint_cache.entry(key).or_insert_with(|| {
            let m = (vertices[i] + vertices[j]).normalize();
            vertices.push(m);
            vertices.len() - 1
        })
    };
    let mut out = Vec::with_capacity(4 * facets.len());
    for [a, b, c] in facets {
        let ab = midpoint(a, b, &mut vertices);
        let bc = midpoint(b, c, &mut vertices);
        let ca = midpoint(c, a, &mut vertices);
        out.push([a, ab, ca]);
        out.push([b, bc, ab]);
        out.push([c, ca, bc]);
        out.push([ab, bc, ca]);
    }
    (vertices, out)
}
