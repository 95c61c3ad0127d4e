//! Scalar triangle primitives shared by the mesh queries.

use nalgebra::Vector3;

/// Ray/triangle intersection (Möller–Trumbore) with inclusive barycentric
/// bounds, so a ray passing exactly through a shared edge or vertex registers
/// on every adjacent facet rather than slipping between them. Callers that
/// need a single hit de-duplicate by distance and facet id.
///
/// Returns `Some(t)` with `t >= 0` in units of `|dir|`, or `None` when the
/// ray misses or lies parallel to the triangle plane.
pub fn ray_triangle(
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    // Parallel rays are treated as misses; crossings through an edge are still
    // caught by the (non-parallel) adjacent facet.
    if det.abs() < f64::EPSILON * e1.norm() * e2.norm() * dir.norm() {
        return None;
    }
    let inv_det = 1.0 / det;
    let s = origin - a;
    let u = s.dot(&p) * inv_det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv_det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv_det;
    (t >= 0.0).then_some(t)
}

/// Closest point on triangle `abc` to `p` (Ericson's region walk).
///
/// Returns the point and its barycentric coordinates `(w_a, w_b, w_c)`.
pub fn closest_point_triangle(
    p: &Vector3<f64>,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
) -> (Vector3<f64>, [f64; 3]) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;

    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, [1.0, 0.0, 0.0]); // vertex region A
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, [0.0, 1.0, 0.0]); // vertex region B
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [1.0 - v, v, 0.0]); // edge region AB
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, [0.0, 0.0, 1.0]); // vertex region C
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [1.0 - w, 0.0, w]); // edge region AC
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [0.0, 1.0 - w, w]); // edge region BC
    }

    // interior
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w])
}

/// Signed solid angle of triangle `abc` seen from `p` (van Oosterom &
/// Strackee). With the mesh's outward winding the angle is positive when `p`
/// is on the interior side, so summing over a closed mesh yields `4π` inside
/// and `0` outside.
pub fn solid_angle(
    p: &Vector3<f64>,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
) -> f64 {
    let va = a - p;
    let vb = b - p;
    let vc = c - p;
    let ra = va.norm();
    let rb = vb.norm();
    let rc = vc.norm();
    let num = va.dot(&vb.cross(&vc));
    let den = ra * rb * rc + rc * va.dot(&vb) + rb * va.dot(&vc) + ra * vb.dot(&vc);
    2.0 * num.atan2(den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ray_hits_triangle_face() {
        let a = Vector3::new(0.0, 0.0, 0.0);
        let b = Vector3::new(1.0, 0.0, 0.0);
        let c = Vector3::new(0.0, 1.0, 0.0);
        let t = ray_triangle(
            &Vector3::new(0.25, 0.25, 1.0),
            &Vector3::new(0.0, 0.0, -1.0),
            &a,
            &b,
            &c,
        )
        .unwrap();
        assert_relative_eq!(t, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn ray_through_edge_registers() {
        let a = Vector3::new(0.0, 0.0, 0.0);
        let b = Vector3::new(1.0, 0.0, 0.0);
        let c = Vector3::new(0.0, 1.0, 0.0);
        // Straight down through the midpoint of edge AB.
        let t = ray_triangle(
            &Vector3::new(0.5, 0.0, 2.0),
            &Vector3::new(0.0, 0.0, -1.0),
            &a,
            &b,
            &c,
        );
        assert!(t.is_some());
    }

    #[test]
    fn closest_point_regions() {
        let a = Vector3::new(0.0, 0.0, 0.0);
        let b = Vector3::new(2.0, 0.0, 0.0);
        let c = Vector3::new(0.0, 2.0, 0.0);
        // Interior projection.
        let (q, w) = closest_point_triangle(&Vector3::new(0.5, 0.5, 3.0), &a, &b, &c);
        assert_relative_eq!((q - Vector3::new(0.5, 0.5, 0.0)).norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(w[0] + w[1] + w[2], 1.0, epsilon = 1e-14);
        // Vertex region.
        let (q, _) = closest_point_triangle(&Vector3::new(-1.0, -1.0, 0.0), &a, &b, &c);
        assert_eq!(q, a);
        // Edge region.
        let (q, w) = closest_point_triangle(&Vector3::new(1.0, -5.0, 0.0), &a, &b, &c);
        assert_relative_eq!((q - Vector3::new(1.0, 0.0, 0.0)).norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(w[2], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn solid_angle_of_cube_face_triangle() {
        // From the centre of a cube each square face subtends 4π/6, so each
        // of its two triangles subtends 4π/12.
        let p = Vector3::zeros();
        let a = Vector3::new(1.0, 1.0, 1.0);
        let b = Vector3::new(-1.0, 1.0, 1.0);
        let c = Vector3::new(-1.0, -1.0, 1.0);
        let w = solid_angle(&p, &a, &b, &c);
        assert_relative_eq!(w, 4.0 * std::f64::consts::PI / 12.0, max_relative = 1e-12);
        // Flipping the winding flips the sign.
        let w_flipped = solid_angle(&p, &c, &b, &a);
        assert_relative_eq!(w + w_flipped, 0.0, epsilon = 1e-14);
    }
}
