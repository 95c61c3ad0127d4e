//! Rotating-frame hop dynamics and propagation.
//!
//! Rovers hop in the asteroid's body-fixed frame, which rotates with the
//! body at a constant spin vector `ω`. The translational equation of motion
//! is
//!
//! ```text
//! r̈ = g(r) + d + u − 2ω×ṙ − ω×(ω×r)
//! ```
//!
//! with `g` the polyhedral gravity attraction, `d` a constant disturbance
//! acceleration, and `u` a constant control acceleration (both default
//! zero). Propagation is classic fixed-step RK4; the step cost is four field
//! evaluations because the containment test rides along for free — the
//! field's Laplacian equals `−4πGρ` times the winding number of the surface
//! around the point, so thresholding it at `−2πGρ` *is* the inside test and
//! costs nothing beyond the acceleration we already need.

use nalgebra::Vector3;
use thiserror::Error;

use crate::gravity::{AccelSample, GravityError, GravityField};
use crate::mesh::{ShapeModel, SurfacePoint};

/// Landed positions are refined until the integrated state lies within this
/// distance of the mesh (m).
pub const IMPACT_TOLERANCE: f64 = 1e-4;

/// A trajectory is declared escaped beyond this multiple of the bounding
/// radius, provided the radial velocity points outward.
pub const ESCAPE_RADIUS_FACTOR: f64 = 10.0;

/// Launch cone angles are only reported when the initial position is closer
/// to the surface than this fraction of the bounding radius.
const LAUNCH_PROXIMITY_FRACTION: f64 = 0.01;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("field evaluation failed at t = {t:.6} s: {source}")]
    Field { t: f64, source: GravityError },
    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("cone angles are undefined for zero velocity")]
    ZeroVelocity,
    #[error("facet index {facet} out of range for a mesh with {count} facets")]
    InvalidFacet { facet: usize, count: usize },
}

/// Everything the equations of motion need besides the rover state.
///
/// The spin vector is constant: the body is treated as a uniform rotator, so
/// the Euler term `ω̇ × r` vanishes identically.
#[derive(Clone, Copy)]
pub struct Environment<'a> {
    pub field: &'a GravityField<'a>,
    /// Body spin vector (rad/s), expressed in the body frame.
    pub omega: Vector3<f64>,
    /// Constant disturbance acceleration (m/s²).
    pub disturbance: Vector3<f64>,
    /// Constant control acceleration (m/s²).
    pub control: Vector3<f64>,
}

impl<'a> Environment<'a> {
    /// Environment with no spin, no disturbance, and no control input.
    pub fn new(field: &'a GravityField<'a>) -> Self {
        Environment {
            field,
            omega: Vector3::zeros(),
            disturbance: Vector3::zeros(),
            control: Vector3::zeros(),
        }
    }

    /// Same, but with the given spin vector.
    pub fn with_spin(field: &'a GravityField<'a>, omega: Vector3<f64>) -> Self {
        Environment { omega, ..Environment::new(field) }
    }

    pub fn shape(&self) -> &'a ShapeModel {
        self.field.shape()
    }
}

/// Translational state in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoverState {
    /// Position (m).
    pub r: Vector3<f64>,
    /// Velocity (m/s).
    pub v: Vector3<f64>,
    /// Time (s).
    pub t: f64,
}

impl RoverState {
    pub fn new(r: Vector3<f64>, v: Vector3<f64>, t: f64) -> Self {
        RoverState { r, v, t }
    }
}

/// How a propagation ended.
#[derive(Debug, Clone)]
pub enum HopOutcome {
    /// The trajectory crossed the surface; `impact` is the integrated state
    /// at the refined impact time and `site` its projection onto the mesh.
    Landed { site: SurfacePoint, impact: RoverState },
    /// The rover passed the escape radius moving outward.
    Escaped { radius: f64 },
    /// The time budget ran out with the rover still in flight.
    TimedOut,
}

/// A propagated hop with its landing/launch geometry.
#[derive(Debug, Clone)]
pub struct HopTrajectory {
    pub launch: RoverState,
    /// Time-ordered states at the requested recording cadence; always
    /// includes the launch state and the final state.
    pub samples: Vec<RoverState>,
    pub outcome: HopOutcome,
    /// Elapsed flight time (s).
    pub elapsed: f64,
    /// Launch speed (m/s).
    pub v0_mag: f64,
    /// Final speed (m/s) — impact speed when landed.
    pub vf_mag: f64,
    /// Angle between the launch velocity and the local outward surface
    /// normal, degrees. `None` when the launch is not surface-proximate or
    /// starts from rest.
    pub theta_launch_deg: Option<f64>,
    /// Angle between the reversed arrival velocity and the landing facet's
    /// outward normal, degrees. `None` unless the hop landed.
    pub theta_land_deg: Option<f64>,
    /// True when any intermediate integrator state (strictly between launch
    /// and the final state) was inside the mesh. Only possible with impact
    /// detection disabled; the planner rejects such hops.
    pub subsurface: bool,
}

impl HopTrajectory {
    pub fn landed(&self) -> bool {
        matches!(self.outcome, HopOutcome::Landed { .. })
    }

    pub fn final_state(&self) -> &RoverState {
        self.samples.last().expect("trajectory always has at least the launch sample")
    }

    /// Landing site, if the hop landed.
    pub fn landing_site(&self) -> Option<&SurfacePoint> {
        match &self.outcome {
            HopOutcome::Landed { site, .. } => Some(site),
            _ => None,
        }
    }
}

/// Which integrator states to keep in [`HopTrajectory::samples`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Keep every n-th step (n ≥ 1) plus the final state.
    Every(usize),
    /// Keep only the launch and final states.
    EndpointOnly,
}

#[derive(Debug, Clone, Copy)]
pub struct PropagateOptions {
    /// Stop at the first surface crossing (on by default). Shooting
    /// iterations turn this off so intermediate guesses that dip below the
    /// terrain still produce a smooth endpoint error.
    pub detect_impact: bool,
    pub sampling: Sampling,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        PropagateOptions { detect_impact: true, sampling: Sampling::Every(1) }
    }
}

/// Default integrator step for a hop of duration `tau`: `tau / 2000`, capped
/// at half a second.
pub fn suggested_step(tau: f64) -> f64 {
    (tau / 2000.0).min(0.5)
}

/// Right-hand side of the equation of motion.
pub fn acceleration(env: &Environment, state: &RoverState) -> Result<Vector3<f64>, DynamicsError> {
    let sample = env
        .field
        .acceleration(&state.r)
        .map_err(|source| DynamicsError::Field { t: state.t, source })?;
    Ok(eom(env, &state.r, &state.v, &sample.acceleration))
}

fn eom(env: &Environment, r: &Vector3<f64>, v: &Vector3<f64>, g: &Vector3<f64>) -> Vector3<f64> {
    g + env.disturbance + env.control
        - 2.0 * env.omega.cross(v)
        - env.omega.cross(&env.omega.cross(r))
}

/// Specific mechanical energy `½|v|² − U` (m²/s²). Conserved along
/// propagation when the frame does not rotate and `d = u = 0`.
pub fn specific_energy(env: &Environment, state: &RoverState) -> Result<f64, DynamicsError> {
    let sample = env
        .field
        .acceleration(&state.r)
        .map_err(|source| DynamicsError::Field { t: state.t, source })?;
    Ok(0.5 * state.v.norm_squared() - sample.potential)
}

/// Jacobi-like constant `½|v|² − U − ½|ω×r|²` (m²/s²). Conserved in the
/// rotating frame when `d = u = 0`.
pub fn jacobi_constant(env: &Environment, state: &RoverState) -> Result<f64, DynamicsError> {
    let sample = env
        .field
        .acceleration(&state.r)
        .map_err(|source| DynamicsError::Field { t: state.t, source })?;
    let rot = env.omega.cross(&state.r);
    Ok(0.5 * state.v.norm_squared() - sample.potential - 0.5 * rot.norm_squared())
}

/// Launch and landing cone angles in degrees.
///
/// Both cones open along the local outward facet normal: the launch angle is
/// measured between the departure velocity and the launch facet's normal,
/// the landing angle between the *reversed* arrival velocity and the landing
/// facet's normal, so a perpendicular lift-off and a perpendicular
/// touch-down both score 0°.
pub fn cone_angles(
    model: &ShapeModel,
    launch_facet: usize,
    v0: &Vector3<f64>,
    landing_facet: usize,
    vf: &Vector3<f64>,
) -> Result<(f64, f64), DynamicsError> {
    let count = model.facets().len();
    for facet in [launch_facet, landing_facet] {
        if facet >= count {
            return Err(DynamicsError::InvalidFacet { facet, count });
        }
    }
    if v0.norm() == 0.0 || vf.norm() == 0.0 {
        return Err(DynamicsError::ZeroVelocity);
    }
    let theta1 = angle_deg(v0, &model.facet_normal(launch_facet));
    let theta2 = angle_deg(&-vf, &model.facet_normal(landing_facet));
    Ok((theta1, theta2))
}

fn angle_deg(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let cos = (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0);
    cos.acos().to_degrees()
}

/// Propagate with default options: impact detection on, every step recorded.
pub fn propagate(
    env: &Environment,
    s0: &RoverState,
    tau_max: f64,
    dt: f64,
) -> Result<HopTrajectory, DynamicsError> {
    propagate_with(env, s0, tau_max, dt, &PropagateOptions::default())
}

/// Fixed-step RK4 propagation of a single hop.
///
/// Runs until the first surface crossing (when detection is enabled), until
/// the rover passes the escape radius moving outward, or until `tau_max`
/// elapses. On a crossing, the impact time is refined by bisection over the
/// offending step until the state lies within [`IMPACT_TOLERANCE`] of the
/// mesh. Identical inputs produce bit-identical trajectories.
pub fn propagate_with(
    env: &Environment,
    s0: &RoverState,
    tau_max: f64,
    dt: f64,
    options: &PropagateOptions,
) -> Result<HopTrajectory, DynamicsError> {
    if !(dt > 0.0) {
        return Err(DynamicsError::NonPositiveStep(dt));
    }
    let stride = match options.sampling {
        Sampling::Every(n) => n.max(1),
        Sampling::EndpointOnly => usize::MAX,
    };

    let shape = env.shape();
    let escape_radius = ESCAPE_RADIUS_FACTOR * shape.bounding_radius();
    let t_end = s0.t + tau_max;

    let mut samples = vec![*s0];
    let mut cur = *s0;
    let mut cur_field = field_at(env, &cur)?;
    let mut subsurface = false;

    let outcome = 'flight: loop {
        // Launching from inside the body counts as an immediate impact.
        if options.detect_impact && is_inside(env, &cur_field) {
            break 'flight finish_landing(env, cur, &mut samples);
        }

        let remaining = t_end - cur.t;
        // The second bound guards against a residual step too small to
        // advance `t` in floating point.
        if remaining <= 0.0 || remaining <= 4.0 * f64::EPSILON * t_end.abs().max(dt) {
            break 'flight HopOutcome::TimedOut;
        }
        let h = dt.min(remaining);
        let next = rk4_step(env, &cur, &cur_field.acceleration, h)?;
        let next_field = field_at(env, &next)?;

        if is_inside(env, &next_field) {
            if options.detect_impact {
                let impact = refine_impact(env, &cur, &cur_field.acceleration, h)?;
                break 'flight finish_landing(env, impact, &mut samples);
            }
            if next.t < t_end {
                subsurface = true;
            }
        } else if next.r.norm() > escape_radius && next.r.dot(&next.v) > 0.0 {
            push_final(&mut samples, next);
            break 'flight HopOutcome::Escaped { radius: next.r.norm() };
        }

        cur = next;
        cur_field = next_field;
        let steps_taken = ((cur.t - s0.t) / dt).round() as usize;
        if cur.t >= t_end - 4.0 * f64::EPSILON * t_end.abs().max(dt) {
            push_final(&mut samples, cur);
        } else if stride != usize::MAX && steps_taken % stride == 0 {
            samples.push(cur);
        }
    };

    let final_state = *samples.last().expect("samples never empty");
    let theta_land_deg = match &outcome {
        HopOutcome::Landed { site, impact } => {
            cone_angles(shape, site.facet, &Vector3::x(), site.facet, &impact.v)
                .ok()
                .map(|(_, theta2)| theta2)
        }
        _ => None,
    };

    Ok(HopTrajectory {
        launch: *s0,
        samples,
        elapsed: final_state.t - s0.t,
        v0_mag: s0.v.norm(),
        vf_mag: final_state.v.norm(),
        theta_launch_deg: launch_angle(shape, s0),
        theta_land_deg,
        subsurface,
        outcome,
    })
}

fn field_at(env: &Environment, state: &RoverState) -> Result<AccelSample, DynamicsError> {
    env.field
        .acceleration(&state.r)
        .map_err(|source| DynamicsError::Field { t: state.t, source })
}

/// Interior test from the Laplacian by-product: inside the mass the
/// Laplacian sits at `−4πGρ`, outside at `0`; the midpoint separates them
/// with a huge margin.
fn is_inside(env: &Environment, sample: &AccelSample) -> bool {
    let interior =
        -4.0 * std::f64::consts::PI * env.field.gravitational_constant() * env.field.density();
    sample.laplacian < 0.5 * interior
}

fn rk4_step(
    env: &Environment,
    s: &RoverState,
    g0: &Vector3<f64>,
    h: f64,
) -> Result<RoverState, DynamicsError> {
    let grav = |r: &Vector3<f64>| -> Result<Vector3<f64>, DynamicsError> {
        env.field
            .acceleration(r)
            .map(|s| s.acceleration)
            .map_err(|source| DynamicsError::Field { t: s.t, source })
    };

    let a1 = eom(env, &s.r, &s.v, g0);
    let r2 = s.r + 0.5 * h * s.v;
    let v2 = s.v + 0.5 * h * a1;
    let a2 = eom(env, &r2, &v2, &grav(&r2)?);
    let r3 = s.r + 0.5 * h * v2;
    let v3 = s.v + 0.5 * h * a2;
    let a3 = eom(env, &r3, &v3, &grav(&r3)?);
    let r4 = s.r + h * v3;
    let v4 = s.v + h * a3;
    let a4 = eom(env, &r4, &v4, &grav(&r4)?);

    Ok(RoverState {
        r: s.r + (h / 6.0) * (s.v + 2.0 * v2 + 2.0 * v3 + v4),
        v: s.v + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
        t: s.t + h,
    })
}

/// Bisect the crossing step until the integrated state sits within
/// [`IMPACT_TOLERANCE`] of the surface. `from` is the last state outside the
/// body; a full step of `h` from it crossed the surface.
fn refine_impact(
    env: &Environment,
    from: &RoverState,
    g_from: &Vector3<f64>,
    h: f64,
) -> Result<RoverState, DynamicsError> {
    let shape = env.shape();
    let (mut lo, mut hi) = (0.0, h);
    let mut best = rk4_step(env, from, g_from, h)?;
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        let state = rk4_step(env, from, g_from, mid)?;
        if shape.surface_distance(&state.r) < IMPACT_TOLERANCE {
            return Ok(state);
        }
        if is_inside(env, &field_at(env, &state)?) {
            hi = mid;
            best = state;
        } else {
            lo = mid;
        }
    }
    Ok(best)
}

fn finish_landing(env: &Environment, impact: RoverState, samples: &mut Vec<RoverState>) -> HopOutcome {
    push_final(samples, impact);
    let site = env.shape().project_to_surface(&impact.r);
    HopOutcome::Landed { site, impact }
}

/// Append the final state, replacing the last sample when the time would not
/// strictly increase (e.g. an impact refined to the very start of a step).
fn push_final(samples: &mut Vec<RoverState>, state: RoverState) {
    match samples.last() {
        Some(last) if state.t <= last.t => *samples.last_mut().unwrap() = state,
        _ => samples.push(state),
    }
}

fn launch_angle(shape: &ShapeModel, s0: &RoverState) -> Option<f64> {
    if s0.v.norm() == 0.0 {
        return None;
    }
    if shape.surface_distance(&s0.r) > LAUNCH_PROXIMITY_FRACTION * shape.bounding_radius() {
        return None;
    }
    let site = shape.project_to_surface(&s0.r);
    Some(angle_deg(&s0.v, &shape.facet_normal(site.facet)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gravity::GravityField;
    use crate::mesh::shapes::{cuboid, icosphere};
    use approx::assert_relative_eq;

    /// Density so small that gravity is numerically irrelevant while the
    /// interior Laplacian test still works (it scales with density on both
    /// sides of the comparison).
    const FEATHER: f64 = 1e-20;

    fn unit_mu_field(shape: &ShapeModel) -> GravityField<'_> {
        GravityField::with_constant(shape, 1.0, 1.0 / shape.volume()).unwrap()
    }

    #[test]
    fn eom_reduces_to_gravity_without_spin() {
        let shape = icosphere(1.0, 2);
        let field = unit_mu_field(&shape);
        let env = Environment::new(&field);
        let state = RoverState::new(Vector3::new(3.0, 0.5, -0.2), Vector3::new(0.1, 0.0, 0.0), 0.0);
        let a = acceleration(&env, &state).unwrap();
        let g = field.acceleration(&state.r).unwrap().acceleration;
        assert_relative_eq!((a - g).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn centrifugal_and_coriolis_terms() {
        let shape = icosphere(1.0, 1);
        let field = GravityField::new(&shape, FEATHER).unwrap();
        let omega = 2e-4;
        let mut env = Environment::with_spin(&field, Vector3::new(0.0, 0.0, omega));

        // Pure centrifugal: at rest on the x-axis the rotating frame flings
        // the rover outward along +x.
        let r = Vector3::new(5.0, 0.0, 0.0);
        let a = acceleration(&env, &RoverState::new(r, Vector3::zeros(), 0.0)).unwrap();
        assert_relative_eq!(a.x, omega * omega * 5.0, max_relative = 1e-12);
        assert_relative_eq!(a.y, 0.0, epsilon = 1e-18);
        assert_relative_eq!(a.z, 0.0, epsilon = 1e-18);

        // Coriolis against the cross-product oracle, and the full assembly
        // with disturbance and control terms included.
        let v = Vector3::new(0.03, -0.01, 0.02);
        env.disturbance = Vector3::new(1e-7, 0.0, -2e-7);
        env.control = Vector3::new(0.0, 3e-7, 0.0);
        let state = RoverState::new(Vector3::new(2.0, -1.0, 4.0), v, 0.0);
        let a = acceleration(&env, &state).unwrap();
        let expected = env.disturbance + env.control
            - 2.0 * env.omega.cross(&v)
            - env.omega.cross(&env.omega.cross(&state.r));
        assert_relative_eq!((a - expected).norm(), 0.0, epsilon = 1e-18);
    }

    #[test]
    fn free_motion_lands_on_ray_intersection() {
        let shape = cuboid(4.0, 4.0, 4.0);
        let field = GravityField::new(&shape, FEATHER).unwrap();
        let env = Environment::new(&field);
        let r0 = Vector3::new(10.0, 0.3, 0.4);
        let v0 = Vector3::new(-0.05, 0.001, -0.002);
        let hit = shape.ray_intersect(&r0, &v0).unwrap();

        let traj = propagate(&env, &RoverState::new(r0, v0, 0.0), 400.0, 0.25).unwrap();
        let HopOutcome::Landed { site, impact } = &traj.outcome else {
            panic!("expected landing, got {:?}", traj.outcome);
        };
        assert_eq!(site.facet, hit.facet);
        assert!((impact.r - hit.point).norm() < 5e-3);
        assert!(shape.surface_distance(&impact.r) < IMPACT_TOLERANCE);
        // Straight-line kinematics fix the impact time: with `dir = v0` the
        // ray parameter is the flight time itself.
        assert_relative_eq!(impact.t, hit.distance, max_relative = 1e-3);
        assert_relative_eq!(traj.vf_mag, v0.norm(), max_relative = 1e-12);
    }

    #[test]
    fn fast_radial_launch_escapes() {
        let shape = icosphere(1.0, 2);
        let field = unit_mu_field(&shape);
        let env = Environment::new(&field);
        let r0 = Vector3::new(1.05, 0.0, 0.0);
        let u = field.acceleration(&r0).unwrap().potential;
        let v_escape = (2.0 * u).sqrt();

        let fast = RoverState::new(r0, Vector3::new(1.3 * v_escape, 0.0, 0.0), 0.0);
        let traj = propagate(&env, &fast, 500.0, 0.05).unwrap();
        assert!(matches!(traj.outcome, HopOutcome::Escaped { radius } if radius > 10.0));

        let slow = RoverState::new(r0, Vector3::new(0.7 * v_escape, 0.0, 0.0), 0.0);
        let traj = propagate(&env, &slow, 500.0, 0.05).unwrap();
        assert!(!matches!(traj.outcome, HopOutcome::Escaped { .. }));
    }

    #[test]
    fn integrator_order_is_fourth() {
        let shape = icosphere(1.0, 2);
        let field = unit_mu_field(&shape);
        let env = Environment::new(&field);
        // A smooth arc: this orbit's periapsis sits at r ≈ 1.5, well clear
        // of the surface, so the right-hand side stays C^∞ along the whole
        // window and the full fourth order is observable.
        let s0 = RoverState::new(Vector3::new(2.0, 0.0, 0.0), Vector3::new(0.0, 0.65, 0.1), 0.0);
        let options = PropagateOptions { detect_impact: false, sampling: Sampling::EndpointOnly };
        let run = |dt: f64| {
            propagate_with(&env, &s0, 6.0, dt, &options).unwrap().final_state().r
        };
        let e1 = (run(0.2) - run(0.1)).norm();
        let e2 = (run(0.1) - run(0.05)).norm();
        let order = (e1 / e2).log2();
        assert!(order >= 3.7, "observed convergence order {order:.2} (e1 = {e1:.3e}, e2 = {e2:.3e})");
    }

    #[test]
    fn energy_and_jacobi_are_conserved() {
        let shape = icosphere(1.0, 2);
        let field = unit_mu_field(&shape);

        // Non-rotating: mechanical energy. The orbit's periapsis stays well
        // clear of the surface so no facet-plane kink is crossed.
        let env = Environment::new(&field);
        let s0 = RoverState::new(Vector3::new(2.0, 0.0, 0.0), Vector3::new(0.0, 0.65, 0.1), 0.0);
        let traj = propagate_with(
            &env,
            &s0,
            8.0,
            8.0 / 2000.0,
            &PropagateOptions { detect_impact: false, sampling: Sampling::Every(100) },
        )
        .unwrap();
        let e0 = specific_energy(&env, &s0).unwrap();
        for s in &traj.samples {
            let e = specific_energy(&env, s).unwrap();
            assert!(((e - e0) / e0).abs() < 1e-6, "energy drift {:e}", (e - e0) / e0);
        }

        // Rotating: Jacobi-like constant.
        let env = Environment::with_spin(&field, Vector3::new(0.0, 0.0, 0.3));
        let traj = propagate_with(
            &env,
            &s0,
            8.0,
            8.0 / 2000.0,
            &PropagateOptions { detect_impact: false, sampling: Sampling::Every(100) },
        )
        .unwrap();
        let c0 = jacobi_constant(&env, &s0).unwrap();
        for s in &traj.samples {
            let c = jacobi_constant(&env, s).unwrap();
            assert!(((c - c0) / c0).abs() < 1e-6, "Jacobi drift {:e}", (c - c0) / c0);
        }
    }

    #[test]
    fn subsurface_passage_is_flagged_not_fatal() {
        let shape = icosphere(1.0, 2);
        let field = unit_mu_field(&shape);
        let env = Environment::new(&field);
        // Aim straight through the body with detection off.
        let s0 = RoverState::new(Vector3::new(2.0, 0.01, 0.0), Vector3::new(-0.9, 0.0, 0.0), 0.0);
        let options = PropagateOptions { detect_impact: false, sampling: Sampling::EndpointOnly };
        let traj = propagate_with(&env, &s0, 4.4, 0.02, &options).unwrap();
        assert!(traj.subsurface);
        assert_eq!(traj.samples.len(), 2);

        // Same launch with detection on lands instead.
        let traj = propagate(&env, &s0, 4.4, 0.02).unwrap();
        assert!(traj.landed());
        assert!(!traj.subsurface);
    }

    #[test]
    fn sampling_modes_agree_on_the_final_state() {
        let shape = icosphere(1.0, 2);
        let field = unit_mu_field(&shape);
        let env = Environment::with_spin(&field, Vector3::new(0.0, 0.0, 0.2));
        let s0 = RoverState::new(Vector3::new(1.8, 0.2, 0.1), Vector3::new(0.0, 0.5, 0.15), 0.0);
        let every = propagate_with(&env, &s0, 5.0, 0.01, &PropagateOptions::default()).unwrap();
        let sparse = propagate_with(
            &env,
            &s0,
            5.0,
            0.01,
            &PropagateOptions { detect_impact: true, sampling: Sampling::EndpointOnly },
        )
        .unwrap();
        assert_eq!(every.final_state(), sparse.final_state());
        assert_eq!(sparse.samples.len(), 2);
        for pair in every.samples.windows(2) {
            assert!(pair[1].t > pair[0].t);
        }
    }

    #[test]
    fn determinism_bitwise() {
        let shape = icosphere(1.0, 2);
        let field = GravityField::new(&shape, 1900.0).unwrap();
        let env = Environment::with_spin(&field, Vector3::new(1e-5, 2e-5, 3e-4));
        let s0 = RoverState::new(Vector3::new(1.2, -0.3, 0.5), Vector3::new(1e-4, 3e-4, -1e-4), 0.0);
        let a = propagate(&env, &s0, 2000.0, 0.5).unwrap();
        let b = propagate(&env, &s0, 2000.0, 0.5).unwrap();
        assert_eq!(a.samples.len(), b.samples.len());
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn cone_angle_geometry() {
        let shape = cuboid(2.0, 2.0, 2.0);
        // Facet 0 of the cuboid lies on the -x face; find a +z facet for the
        // landing side by scanning normals.
        let up = (0..shape.facets().len())
            .find(|&f| shape.facet_normal(f).z > 0.9)
            .unwrap();
        let n_up = shape.facet_normal(up);

        // Launch along the normal: 0°; in-plane: 90°; landing along -normal: 0°.
        let (t1, t2) = cone_angles(&shape, up, &n_up, up, &(-n_up)).unwrap();
        assert_relative_eq!(t1, 0.0, epsilon = 1e-12);
        assert_relative_eq!(t2, 0.0, epsilon = 1e-12);
        let in_plane = Vector3::new(1.0, 0.0, 0.0);
        let (t1, _) = cone_angles(&shape, up, &in_plane, up, &(-n_up)).unwrap();
        assert_relative_eq!(t1, 90.0, epsilon = 1e-12);
        let tilted = Vector3::new(0.0, 1.0, 1.0);
        let (t1, _) = cone_angles(&shape, up, &tilted, up, &(-n_up)).unwrap();
        assert_relative_eq!(t1, 45.0, epsilon = 1e-12);

        assert!(matches!(
            cone_angles(&shape, up, &Vector3::zeros(), up, &n_up),
            Err(DynamicsError::ZeroVelocity)
        ));
        assert!(matches!(
            cone_angles(&shape, 999, &n_up, up, &n_up),
            Err(DynamicsError::InvalidFacet { .. })
        ));
    }

    #[test]
    fn launch_angle_recorded_for_surface_proximate_starts() {
        let shape = icosphere(1.0, 2);
        let field = GravityField::new(&shape, 1900.0).unwrap();
        let env = Environment::new(&field);
        let site = shape.surface_point(0, [0.4, 0.3, 0.3]);
        let n = shape.facet_normal(0);
        let s0 = RoverState::new(site.position + 1e-3 * n, 0.05 * n, 0.0);
        let traj = propagate(&env, &s0, 10.0, 0.01).unwrap();
        let theta = traj.theta_launch_deg.expect("surface-proximate launch");
        assert!(theta < 1.0, "near-normal launch, got {theta}°");

        // Far from the surface the angle is meaningless and omitted.
        let far = RoverState::new(Vector3::new(5.0, 0.0, 0.0), Vector3::new(0.1, 0.0, 0.0), 0.0);
        let traj = propagate_with(
            &env,
            &far,
            1.0,
            0.1,
            &PropagateOptions { detect_impact: false, sampling: Sampling::EndpointOnly },
        )
        .unwrap();
        assert!(traj.theta_launch_deg.is_none());
    }
}
