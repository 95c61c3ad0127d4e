//! Shape-model ingest, validation, and geometric queries.
//!
//! Every other module consumes the triangle mesh through [`ShapeModel`]: the
//! gravity model sums over its facets and edges, the propagator asks it for
//! containment, the scan simulator casts rays at it, and the planner samples
//! and projects onto it. Construction therefore refuses anything that is not
//! a closed, consistently wound, non-degenerate triangle surface — downstream
//! code gets to assume watertightness instead of re-checking it.

mod bvh;
mod obj;
pub mod shapes;
pub(crate) mod tri;

use std::collections::HashMap;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use bvh::Bvh;

pub use obj::write_obj;

/// Facet areas below this (m²) fail validation: they contribute nothing to
/// the gravity sums but produce garbage normals.
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Centre-of-mass offsets beyond this fraction of the bounding radius trigger
/// a warning, since the dynamics treat the mesh frame origin as the rotation
/// centre.
const COM_OFFSET_WARN_FRACTION: f64 = 0.01;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("failed to read shape model: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported shape format {extension:?}; only OBJ is supported")]
    UnsupportedFormat { extension: String },
    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("line {line}: face with {count} vertices; only triangles are supported")]
    NonTriangularFace { line: usize, count: usize },
    #[error("facet {facet} references vertex {vertex}, but only {count} vertices exist")]
    IndexOutOfRange { facet: usize, vertex: usize, count: usize },
    #[error("mesh is not watertight: edge ({v0}, {v1}) bounds {count} facet(s) instead of 2")]
    OpenMesh { v0: usize, v1: usize, count: usize },
    #[error("inconsistent facet winding across edge ({v0}, {v1})")]
    InconsistentWinding { v0: usize, v1: usize },
    #[error("mesh is inside out: enclosed volume is {volume:.6e} m^3")]
    InsideOut { volume: f64 },
    #[error("facet {facet} is degenerate (area {area:.3e} m^2)")]
    DegenerateFacet { facet: usize, area: f64 },
    #[error("mesh has no facets")]
    Empty,
}

/// How to treat a shape file on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Uniform scale applied to every vertex (e.g. `1000.0` for a model
    /// authored in kilometres).
    pub scale: f64,
    /// Translate the mesh so its constant-density centre of mass sits at the
    /// origin. Off by default; a large offset only warns.
    pub recenter: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { scale: 1.0, recenter: false }
    }
}

/// Classification of a point relative to the closed surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Containment {
    Inside,
    Outside,
    /// Within the surface tolerance (default `1e-6 ×` bounding radius) of the
    /// mesh.
    OnSurface,
}

/// A point attached to the surface: position plus the facet and barycentric
/// coordinates that generated it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub position: Vector3<f64>,
    pub facet: usize,
    /// Barycentric weights over the facet's three vertices; non-negative,
    /// summing to 1.
    pub barycentric: [f64; 3],
}

/// Nearest intersection of a ray with the surface.
#[derive(Debug, Clone, Copy)]
pub struct RayHit {
    /// Distance from the origin in units of the (normalised) direction.
    pub distance: f64,
    pub facet: usize,
    pub point: Vector3<f64>,
}

/// An undirected mesh edge in canonical form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    /// Vertex indices with `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    /// Adjacent facets: `facets[0]` traverses the edge `vertices[0] →
    /// vertices[1]` in its winding order, `facets[1]` traverses it the other
    /// way.
    pub facets: [usize; 2],
}

/// A validated, watertight triangle mesh with derived bulk properties and
/// acceleration structures.
///
/// Invariants established at construction:
/// * every edge is shared by exactly two facets with opposite traversal
///   directions (closed, consistently wound, outward-facing surface);
/// * every facet area is at least [`DEGENERATE_AREA`];
/// * the enclosed volume is positive.
#[derive(Debug, Clone)]
pub struct ShapeModel {
    vertices: Vec<Vector3<f64>>,
    facets: Vec<[usize; 3]>,
    normals: Vec<Vector3<f64>>,
    areas: Vec<f64>,
    edges: Vec<Edge>,
    volume: f64,
    center_of_mass: Vector3<f64>,
    bounding_radius: f64,
    total_area: f64,
    euler_characteristic: i64,
    ignored_records: usize,
    /// Cumulative facet areas for area-weighted surface sampling.
    area_cdf: Vec<f64>,
    bvh: Bvh,
}

impl ShapeModel {
    /// Load a shape model from disk. The format is chosen by file extension;
    /// only `.obj` is recognised.
    pub fn load(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Self, MeshError> {
        let path = path.as_ref();
        let extension = path
            .extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase())
            .unwrap_or_default();
        if extension != "obj" {
            return Err(MeshError::UnsupportedFormat { extension });
        }
        let text = std::fs::read_to_string(path)?;
        Self::from_obj_str(&text, options)
    }

    /// Parse an OBJ document from memory. Accepts `v` and `f` records,
    /// ignores comments, and counts any other record type as ignored.
    pub fn from_obj_str(text: &str, options: &LoadOptions) -> Result<Self, MeshError> {
        let parsed = obj::parse(text)?;
        if parsed.ignored > 0 {
            log::warn!("shape model: ignored {} unsupported OBJ record(s)", parsed.ignored);
        }
        Self::build(parsed.vertices, parsed.facets, parsed.ignored, options)
    }

    /// Build a model from raw vertex and facet arrays (facet indices
    /// 0-based). Runs the full validation pipeline.
    pub fn from_parts(
        vertices: Vec<Vector3<f64>>,
        facets: Vec<[usize; 3]>,
    ) -> Result<Self, MeshError> {
        Self::build(vertices, facets, 0, &LoadOptions::default())
    }

    fn build(
        mut vertices: Vec<Vector3<f64>>,
        facets: Vec<[usize; 3]>,
        ignored_records: usize,
        options: &LoadOptions,
    ) -> Result<Self, MeshError> {
        if facets.is_empty() || vertices.is_empty() {
            return Err(MeshError::Empty);
        }
        if options.scale != 1.0 {
            for v in &mut vertices {
                *v *= options.scale;
            }
        }
        for (fi, f) in facets.iter().enumerate() {
            for &vi in f {
                if vi >= vertices.len() {
                    return Err(MeshError::IndexOutOfRange {
                        facet: fi,
                        vertex: vi,
                        count: vertices.len(),
                    });
                }
            }
        }

        // Per-facet geometry; degenerate facets (including repeated vertex
        // indices) are rejected here.
        let mut normals = Vec::with_capacity(facets.len());
        let mut areas = Vec::with_capacity(facets.len());
        for (fi, f) in facets.iter().enumerate() {
            let [a, b, c] = [vertices[f[0]], vertices[f[1]], vertices[f[2]]];
            let cross = (b - a).cross(&(c - a));
            let area = 0.5 * cross.norm();
            if area < DEGENERATE_AREA {
                return Err(MeshError::DegenerateFacet { facet: fi, area });
            }
            normals.push(cross / (2.0 * area));
            areas.push(area);
        }

        let edges = collect_edges(&facets)?;

        // With consistent winding established, a negative enclosed volume can
        // only mean the whole surface faces inward.
        let (volume, center_of_mass) = {
            let (v, com) = volume_and_com(&vertices, &facets)?;
            if options.recenter {
                for vertex in &mut vertices {
                    *vertex -= com;
                }
                volume_and_com(&vertices, &facets)?
            } else {
                (v, com)
            }
        };

        let euler_characteristic =
            vertices.len() as i64 - edges.len() as i64 + facets.len() as i64;
        if euler_characteristic != 2 {
            log::warn!(
                "shape model: Euler characteristic {} (genus {}); continuing",
                euler_characteristic,
                (2 - euler_characteristic) / 2
            );
        }

        let bounding_radius = vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let com_fraction = center_of_mass.norm() / bounding_radius;
        if com_fraction > COM_OFFSET_WARN_FRACTION {
            log::warn!(
                "shape model: centre of mass is offset {:.2}% of the bounding radius from \
                 the origin; consider recentering",
                100.0 * com_fraction
            );
        }

        let mut area_cdf = Vec::with_capacity(areas.len());
        let mut acc = 0.0;
        for &a in &areas {
            acc += a;
            area_cdf.push(acc);
        }
        let total_area = acc;

        let bvh = Bvh::build(&vertices, &facets);

        Ok(ShapeModel {
            vertices,
            facets,
            normals,
            areas,
            edges,
            volume,
            center_of_mass,
            bounding_radius,
            total_area,
            euler_characteristic,
            ignored_records,
            area_cdf,
            bvh,
        })
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[[usize; 3]] {
        &self.facets
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn facet_vertices(&self, facet: usize) -> [Vector3<f64>; 3] {
        let [a, b, c] = self.facets[facet];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unit outward normal of a facet.
    pub fn facet_normal(&self, facet: usize) -> Vector3<f64> {
        self.normals[facet]
    }

    pub fn facet_area(&self, facet: usize) -> f64 {
        self.areas[facet]
    }

    pub fn facet_centroid(&self, facet: usize) -> Vector3<f64> {
        let [a, b, c] = self.facet_vertices(facet);
        (a + b + c) / 3.0
    }

    /// Enclosed volume (m³), from the divergence theorem.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    /// Constant-density centre of mass in the mesh frame.
    pub fn center_of_mass(&self) -> Vector3<f64> {
        self.center_of_mass
    }

    /// Largest vertex distance from the mesh-frame origin. Scales the surface
    /// tolerance, singularity guards, and the escape radius.
    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    /// Axis-aligned bounds of the vertex set.
    pub fn bounds(&self) -> (Vector3<f64>, Vector3<f64>) {
        let mut min = Vector3::repeat(f64::INFINITY);
        let mut max = Vector3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            min = min.inf(v);
            max = max.sup(v);
        }
        (min, max)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.euler_characteristic
    }

    /// Number of unsupported records skipped while parsing the source file.
    pub fn ignored_records(&self) -> usize {
        self.ignored_records
    }

    /// Distance below which a point counts as on the surface.
    pub fn surface_tolerance(&self) -> f64 {
        1e-6 * self.bounding_radius
    }

    /// Shortest distance from `p` to the surface.
    pub fn surface_distance(&self, p: &Vector3<f64>) -> f64 {
        self.bvh.closest_point(&self.vertices, &self.facets, p).0.sqrt()
    }

    /// Generalised winding number of `p`: summed signed solid angles over all
    /// facets divided by 4π. Approximately 1 inside, 0 outside.
    pub fn winding_number(&self, p: &Vector3<f64>) -> f64 {
        let mut total = 0.0;
        for f in &self.facets {
            total += tri::solid_angle(p, &self.vertices[f[0]], &self.vertices[f[1]], &self.vertices[f[2]]);
        }
        total / (4.0 * std::f64::consts::PI)
    }

    /// Classify `p` with the default surface tolerance.
    pub fn contains(&self, p: &Vector3<f64>) -> Containment {
        self.contains_with_tolerance(p, self.surface_tolerance())
    }

    /// Classify `p`, treating anything within `tolerance` of the surface as
    /// [`Containment::OnSurface`].
    pub fn contains_with_tolerance(&self, p: &Vector3<f64>, tolerance: f64) -> Containment {
        if self.surface_distance(p) <= tolerance {
            return Containment::OnSurface;
        }
        if self.winding_number(p) > 0.5 {
            Containment::Inside
        } else {
            Containment::Outside
        }
    }

    /// Draw a point uniformly over the surface by area: facet by the area
    /// CDF, position by uniform barycentric folding. Identical seeds produce
    /// identical samples.
    pub fn sample_surface(&self, rng: &mut impl rand::Rng) -> SurfacePoint {
        let target = rng.random_range(0.0..self.total_area);
        let facet = self.area_cdf.partition_point(|&acc| acc <= target).min(self.facets.len() - 1);
        let mut u: f64 = rng.random_range(0.0..1.0);
        let mut v: f64 = rng.random_range(0.0..1.0);
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        self.surface_point(facet, [1.0 - u - v, u, v])
    }

    /// Rebuild a [`SurfacePoint`] from a facet id and barycentric weights.
    pub fn surface_point(&self, facet: usize, barycentric: [f64; 3]) -> SurfacePoint {
        let [a, b, c] = self.facet_vertices(facet);
        SurfacePoint {
            position: a * barycentric[0] + b * barycentric[1] + c * barycentric[2],
            facet,
            barycentric,
        }
    }

    /// Nearest point on the surface to `p`. Exact distance ties resolve to
    /// the lowest facet id.
    pub fn project_to_surface(&self, p: &Vector3<f64>) -> SurfacePoint {
        let (_, facet, point, barycentric) =
            self.bvh.closest_point(&self.vertices, &self.facets, p);
        SurfacePoint { position: point, facet, barycentric }
    }

    /// Nearest intersection of the ray `origin + t·dir` with the surface.
    /// Rays through shared edges or vertices report exactly one hit (lowest
    /// facet id). `dir` need not be normalised; `distance` is returned in
    /// units of `|dir|`.
    pub fn ray_intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<RayHit> {
        let (distance, facet) =
            self.bvh.ray_nearest(&self.vertices, &self.facets, origin, dir)?;
        Some(RayHit { distance, facet, point: origin + dir * distance })
    }
}

/// Signed volume and constant-density centre of mass via tetrahedral
/// decomposition about the origin. Errors if the enclosed volume is not
/// positive.
fn volume_and_com(
    vertices: &[Vector3<f64>],
    facets: &[[usize; 3]],
) -> Result<(f64, Vector3<f64>), MeshError> {
    let mut volume = 0.0;
    let mut weighted = Vector3::zeros();
    for f in facets {
        let [a, b, c] = [vertices[f[0]], vertices[f[1]], vertices[f[2]]];
        let v = a.cross(&b).dot(&c) / 6.0;
        volume += v;
        weighted += (a + b + c) / 4.0 * v;
    }
    if volume <= 0.0 {
        return Err(MeshError::InsideOut { volume });
    }
    Ok((volume, weighted / volume))
}

/// Canonicalise edges and enforce the watertightness and winding rules.
fn collect_edges(facets: &[[usize; 3]]) -> Result<Vec<Edge>, MeshError> {
    // Slots: [facet traversing lo→hi, facet traversing hi→lo].
    let mut map: HashMap<(usize, usize), [Option<usize>; 2]> = HashMap::new();
    for (fi, f) in facets.iter().enumerate() {
        for k in 0..3 {
            let a = f[k];
            let b = f[(k + 1) % 3];
            let (key, slot) = if a < b { ((a, b), 0) } else { ((b, a), 1) };
            let entry = map.entry(key).or_default();
            if entry[slot].is_some() {
                return Err(MeshError::InconsistentWinding { v0: key.0, v1: key.1 });
            }
            entry[slot] = Some(fi);
        }
    }
    let mut edges = Vec::with_capacity(map.len());
    for (&(v0, v1), &slots) in &map {
        match slots {
            [Some(fwd), Some(bwd)] => {
                edges.push(Edge { vertices: [v0, v1], facets: [fwd, bwd] })
            }
            _ => {
                let count = slots.iter().flatten().count();
                return Err(MeshError::OpenMesh { v0, v1, count });
            }
        }
    }
    // The hash map iterates in arbitrary order; sort so everything derived
    // from the edge list (notably the gravity sums) is bit-reproducible.
    edges.sort_unstable_by_key(|e| e.vertices);
    Ok(edges)
}
