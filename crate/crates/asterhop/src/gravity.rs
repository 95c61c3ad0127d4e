//! Constant-density polyhedral gravity.
//!
//! The field of a homogeneous polyhedron has a closed form: summing one
//! logarithmic wire term per edge and one solid-angle term per face yields
//! the exact potential, acceleration, gradient matrix, and Laplacian of the
//! meshed body — no spherical-harmonic truncation, valid from far field all
//! the way down to (and below) the surface. That exactness is what makes the
//! model trustworthy for hops that skim the terrain.
//!
//! Conventions: the potential is positive in the exterior with far field
//! `U → μ/r`, and the acceleration is `g = +∇U`, pointing toward the body.
//! The Laplacian is `0` outside the mass and `−4πGρ` inside, which doubles
//! as a cheap interior test during propagation.

use std::cell::RefCell;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::mesh::ShapeModel;
use crate::GRAVITATIONAL_CONSTANT;

/// Evaluations closer than this fraction of the bounding radius to an edge
/// or vertex are rejected: the wire term's logarithm blows up on the edge
/// network itself.
pub const SINGULAR_GUARD_FRACTION: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GravityError {
    #[error("density must be positive, got {0} kg/m^3")]
    NonPositiveDensity(f64),
    #[error("gravitational constant must be positive, got {0}")]
    NonPositiveConstant(f64),
    #[error(
        "field evaluation at ({x:.6e}, {y:.6e}, {z:.6e}) lies within {guard:.3e} m of a mesh \
         edge or vertex, where the edge term is singular"
    )]
    SingularEvaluation { x: f64, y: f64, z: f64, guard: f64 },
}

/// Full field evaluation at a point.
#[derive(Debug, Clone, Copy)]
pub struct FieldSample {
    /// Potential `U` (m²/s²); positive outside, `→ μ/r` in the far field.
    pub potential: f64,
    /// Acceleration `∇U` (m/s²), pointing toward the body.
    pub acceleration: Vector3<f64>,
    /// Gradient matrix `∇∇U` (1/s²); symmetric.
    pub gradient: Matrix3<f64>,
    /// `∇²U`: `0` outside the mass, `−4πGρ` inside.
    pub laplacian: f64,
}

/// Cheap evaluation for propagation loops: everything except the gradient
/// matrix.
#[derive(Debug, Clone, Copy)]
pub struct AccelSample {
    pub potential: f64,
    pub acceleration: Vector3<f64>,
    /// Interior indicator (see [`FieldSample::laplacian`]); a free by-product
    /// of the face sum that the propagator uses for impact detection.
    pub laplacian: f64,
}

struct EdgeTerm {
    dyad: Matrix3<f64>,
    v0: usize,
    v1: usize,
    length: f64,
}

struct FaceTerm {
    dyad: Matrix3<f64>,
    verts: [usize; 3],
}

/// The polyhedral gravity model of one shape at one density.
///
/// Construction precomputes the per-face and per-edge dyads; evaluation
/// afterwards performs no heap allocation (a thread-local distance buffer is
/// reused across calls).
pub struct GravityField<'a> {
    shape: &'a ShapeModel,
    density: f64,
    g_constant: f64,
    /// `G · ρ · volume` — the body's standard gravitational parameter.
    mu: f64,
    faces: Vec<FaceTerm>,
    edges: Vec<EdgeTerm>,
    singular_guard: f64,
}

impl<'a> GravityField<'a> {
    /// Build the field with the standard gravitational constant.
    pub fn new(shape: &'a ShapeModel, density: f64) -> Result<Self, GravityError> {
        Self::with_constant(shape, density, GRAVITATIONAL_CONSTANT)
    }

    /// Build the field with an explicit gravitational constant (useful for
    /// scaled systems and for tests that want round numbers).
    pub fn with_constant(
        shape: &'a ShapeModel,
        density: f64,
        g_constant: f64,
    ) -> Result<Self, GravityError> {
        if !(density > 0.0) {
            return Err(GravityError::NonPositiveDensity(density));
        }
        if !(g_constant > 0.0) {
            return Err(GravityError::NonPositiveConstant(g_constant));
        }

        let faces = (0..shape.facets().len())
            .map(|fi| {
                let n = shape.facet_normal(fi);
                FaceTerm { dyad: n * n.transpose(), verts: shape.facets()[fi] }
            })
            .collect();

        let vertices = shape.vertices();
        let edges = shape
            .edges()
            .iter()
            .map(|edge| {
                let [lo, hi] = edge.vertices;
                let along = vertices[hi] - vertices[lo];
                let length = along.norm();
                let tangent = along / length;
                // In-plane outward edge normals of the two adjacent facets;
                // `facets[0]` traverses lo→hi, `facets[1]` the reverse.
                let n_a = shape.facet_normal(edge.facets[0]);
                let n_b = shape.facet_normal(edge.facets[1]);
                let edge_normal_a = tangent.cross(&n_a);
                let edge_normal_b = (-tangent).cross(&n_b);
                let dyad = n_a * edge_normal_a.transpose() + n_b * edge_normal_b.transpose();
                // The edge dyad is symmetric for a consistently wound closed
                // mesh even though neither outer product is; a failure here
                // means the adjacency bookkeeping is wrong.
                let asym = (dyad - dyad.transpose()).abs().max();
                assert!(
                    asym <= 1e-12,
                    "edge dyad asymmetry {asym:.3e} on edge ({lo}, {hi})"
                );
                EdgeTerm { dyad, v0: lo, v1: hi, length }
            })
            .collect();

        let mu = g_constant * density * shape.volume();
        Ok(GravityField {
            shape,
            density,
            g_constant,
            mu,
            faces,
            edges,
            singular_guard: SINGULAR_GUARD_FRACTION * shape.bounding_radius(),
        })
    }

    pub fn shape(&self) -> &'a ShapeModel {
        self.shape
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn gravitational_constant(&self) -> f64 {
        self.g_constant
    }

    /// Standard gravitational parameter `G·M` (m³/s²).
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn total_mass(&self) -> f64 {
        self.density * self.shape.volume()
    }

    /// Full evaluation: potential, acceleration, gradient matrix, Laplacian.
    pub fn evaluate(&self, r: &Vector3<f64>) -> Result<FieldSample, GravityError> {
        self.accumulate::<true>(r)
    }

    /// Propagation fast path: potential, acceleration, and Laplacian only
    /// (skips the gradient-matrix accumulation, roughly a quarter of the
    /// arithmetic).
    pub fn acceleration(&self, r: &Vector3<f64>) -> Result<AccelSample, GravityError> {
        let s = self.accumulate::<false>(r)?;
        Ok(AccelSample {
            potential: s.potential,
            acceleration: s.acceleration,
            laplacian: s.laplacian,
        })
    }

    /// Local two-body escape speed `√(2U)`. The spin vector is accepted for
    /// interface stability but does not enter the estimate: launches are
    /// scored conservatively in the non-rotating limit.
    pub fn escape_speed(&self, r: &Vector3<f64>, _omega: &Vector3<f64>) -> Result<f64, GravityError> {
        let sample = self.acceleration(r)?;
        Ok((2.0 * sample.potential.max(0.0)).sqrt())
    }

    fn accumulate<const GRADIENT: bool>(
        &self,
        r: &Vector3<f64>,
    ) -> Result<FieldSample, GravityError> {
        thread_local! {
            static DISTANCES: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
        }
        DISTANCES.with(|cell| {
            let mut distances = cell.borrow_mut();
            let vertices = self.shape.vertices();
            distances.clear();
            distances.extend(vertices.iter().map(|v| (v - r).norm()));

            let mut u_edges = 0.0;
            let mut g_edges = Vector3::zeros();
            let mut h_edges = Matrix3::zeros();
            for e in &self.edges {
                let a = distances[e.v0];
                let b = distances[e.v1];
                let denom = a + b - e.length;
                if denom <= 0.0 || a <= self.singular_guard || b <= self.singular_guard {
                    return Err(self.singular(r));
                }
                if denom < 1e-8 * e.length {
                    // Cheap test fired; confirm with the exact edge distance
                    // before rejecting.
                    let (p0, p1) = (vertices[e.v0], vertices[e.v1]);
                    let t = ((r - p0).dot(&(p1 - p0)) / (e.length * e.length)).clamp(0.0, 1.0);
                    if (r - (p0 + (p1 - p0) * t)).norm() <= self.singular_guard {
                        return Err(self.singular(r));
                    }
                }
                let wire = ((a + b + e.length) / denom).ln();
                let r_e = vertices[e.v0] - r;
                let dyad_r = e.dyad * r_e;
                u_edges += r_e.dot(&dyad_r) * wire;
                g_edges += dyad_r * wire;
                if GRADIENT {
                    h_edges += e.dyad * wire;
                }
            }

            let mut u_faces = 0.0;
            let mut g_faces = Vector3::zeros();
            let mut h_faces = Matrix3::zeros();
            let mut omega_sum = 0.0;
            for f in &self.faces {
                let [i0, i1, i2] = f.verts;
                let v0 = vertices[i0] - r;
                let v1 = vertices[i1] - r;
                let v2 = vertices[i2] - r;
                let (r0, r1, r2) = (distances[i0], distances[i1], distances[i2]);
                let num = v0.dot(&v1.cross(&v2));
                let den = r0 * r1 * r2 + r2 * v0.dot(&v1) + r1 * v0.dot(&v2) + r0 * v1.dot(&v2);
                let omega = 2.0 * num.atan2(den);
                omega_sum += omega;

                let dyad_r = f.dyad * v0;
                u_faces += v0.dot(&dyad_r) * omega;
                g_faces += dyad_r * omega;
                if GRADIENT {
                    h_faces += f.dyad * omega;
                }
            }

            let g_rho = self.g_constant * self.density;
            Ok(FieldSample {
                potential: 0.5 * g_rho * (u_edges - u_faces),
                acceleration: g_rho * (g_faces - g_edges),
                gradient: if GRADIENT {
                    g_rho * (h_edges - h_faces)
                } else {
                    Matrix3::zeros()
                },
                laplacian: -g_rho * omega_sum,
            })
        })
    }

    fn singular(&self, r: &Vector3<f64>) -> GravityError {
        GravityError::SingularEvaluation { x: r.x, y: r.y, z: r.z, guard: self.singular_guard }
    }
}
