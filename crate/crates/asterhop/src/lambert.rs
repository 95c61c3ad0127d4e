//! Hop targeting: the ballistic boundary-value problem.
//!
//! Given a launch site, a landing site, and a prescribed flight time `τ`,
//! find the launch velocity `v₀` whose coasting arc arrives on target. A
//! two-body Lambert solution for an equivalent point mass seeds the search;
//! a shooting loop then absorbs everything the point-mass model ignores —
//! the irregular polyhedral field, frame rotation, disturbances — by
//! correcting `v₀` with a Newton step `Δv = Φ⁻¹ Δr`, where `Φ = ∂r(τ)/∂v₀`
//! is the position-versus-launch-velocity sensitivity block of the state
//! transition matrix.
//!
//! The flight time is an input throughout: the loop adjusts only `v₀`.
//! Varying `τ` is the trajectory planner's job.

use nalgebra::{Matrix3, Vector3};
use std::f64::consts::PI;
use thiserror::Error;

use crate::dynamics::{
    self, DynamicsError, Environment, HopOutcome, HopTrajectory, PropagateOptions, RoverState,
    Sampling,
};
use crate::mesh::SurfacePoint;

/// Offset applied along the launch facet's outward normal so the first
/// integration step starts strictly outside the surface (m).
pub const LAUNCH_NUDGE: f64 = 1e-3;

/// Condition-number threshold above which the sensitivity matrix is treated
/// as singular.
pub const STM_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Error)]
pub enum ShootingError {
    #[error("propagation failed while shooting: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error(
        "sensitivity matrix is numerically singular (condition number {condition:.3e}); \
         perturbing the transfer time usually resolves this"
    )]
    SingularStm { condition: f64 },
    #[error("transfer time must be positive, got {0}")]
    NonPositiveTau(f64),
    #[error("launch and target sites coincide")]
    CoincidentEndpoints,
}

/// How the sensitivity matrix `Φ` is obtained each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StmMode {
    /// Central finite differences over the launch velocity: six extra
    /// propagations per iteration, the reference scheme.
    FiniteDifference,
    /// Start from the free-motion sensitivity `τ·I` and improve it with
    /// rank-one secant updates from the iterates themselves: one propagation
    /// per iteration. Falls back to finite differences when progress stalls.
    /// Much cheaper inside evolutionary searches that solve thousands of
    /// hops.
    Secant,
}

#[derive(Debug, Clone, Copy)]
pub struct ShootingConfig {
    /// Final position error bound (m).
    pub tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Base finite-difference perturbation (m/s); the applied step is
    /// `fd_step · max(1, |v₀|)`.
    pub fd_step: f64,
    /// Scale in (0, 1] applied to a Newton step that increased the error;
    /// tried once per iteration.
    pub damping: f64,
    /// Integrator step override; `None` uses [`dynamics::suggested_step`].
    pub dt: Option<f64>,
    pub stm: StmMode,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            tol: 1e-3,
            max_iter: 25,
            fd_step: 1e-6,
            damping: 0.5,
            dt: None,
            stm: StmMode::FiniteDifference,
        }
    }
}

/// Outcome of a shooting solve.
#[derive(Debug, Clone)]
pub struct ShootingResult {
    /// Launch velocity (m/s) of the best iterate.
    pub v0: Vector3<f64>,
    /// Re-propagation of the best iterate with impact detection enabled and
    /// a 10% time margin, carrying landing geometry for the planner.
    pub trajectory: HopTrajectory,
    /// Newton iterations consumed (zero when the seed already met `tol`).
    pub iterations: usize,
    /// Endpoint position error |r(τ) − r_target| of the best iterate (m).
    pub final_error: f64,
    pub converged: bool,
    /// Endpoint error after the seed and after each iteration.
    pub error_history: Vec<f64>,
}

fn stumpff_c(z: f64) -> f64 {
    if z > 1e-6 {
        (1.0 - z.sqrt().cos()) / z
    } else if z < -1e-6 {
        ((-z).sqrt().cosh() - 1.0) / (-z)
    } else {
        0.5 - z / 24.0 + z * z / 720.0
    }
}

fn stumpff_s(z: f64) -> f64 {
    if z > 1e-6 {
        let s = z.sqrt();
        (s - s.sin()) / (s * s * s)
    } else if z < -1e-6 {
        let s = (-z).sqrt();
        (s.sinh() - s) / (s * s * s)
    } else {
        1.0 / 6.0 - z / 120.0 + z * z / 5040.0
    }
}

/// Zero-revolution, short-way Lambert solution for a point mass `mu` at the
/// origin: the launch velocity taking `r0` to `rf` in time `tau` under pure
/// inverse-square gravity. Frame rotation is deliberately ignored — the
/// shooting loop absorbs it.
///
/// Degenerate geometries (coincident directions, transfers within a hair of
/// 180°, or an unbracketable flight time) fall back to the straight-line
/// guess `(rf − r0)/tau` with a warning; the fallback is also the exact
/// answer in the force-free limit `mu → 0`.
pub fn two_body_guess(mu: f64, r0: &Vector3<f64>, rf: &Vector3<f64>, tau: f64) -> Vector3<f64> {
    let straight_line = (rf - r0) / tau;
    if mu <= 0.0 {
        return straight_line;
    }
    let r1 = r0.norm();
    let r2 = rf.norm();
    if r1 == 0.0 || r2 == 0.0 {
        log::warn!("two-body guess: endpoint at the origin; using straight-line seed");
        return straight_line;
    }
    let cos_dnu = (r0.dot(rf) / (r1 * r2)).clamp(-1.0, 1.0);
    let sin_dnu = (1.0 - cos_dnu * cos_dnu).sqrt();
    if sin_dnu < 1e-8 {
        log::warn!(
            "two-body guess: transfer angle {:.2e} rad from 0/π is degenerate; \
             using straight-line seed",
            sin_dnu
        );
        return straight_line;
    }
    let a_coef = sin_dnu * (r1 * r2 / (1.0 - cos_dnu)).sqrt();

    // Chord/arc geometry fixed, solve for the universal anomaly parameter z
    // whose flight time matches tau. The y < 0 region below the valid
    // branch reads as "faster than any physical transfer".
    let y_of = |z: f64| r1 + r2 + a_coef * (z * stumpff_s(z) - 1.0) / stumpff_c(z).sqrt();
    let tof = |z: f64| -> Option<f64> {
        let y = y_of(z);
        if y <= 0.0 {
            return None;
        }
        let c = stumpff_c(z);
        Some(((y / c).powf(1.5) * stumpff_s(z) + a_coef * y.sqrt()) / mu.sqrt())
    };

    let mut hi = 4.0 * PI * PI * (1.0 - 1e-9);
    let mut lo = -4.0 * PI * PI;
    let mut doublings = 0;
    while tof(lo).is_some_and(|t| t > tau) {
        lo *= 2.0;
        doublings += 1;
        if doublings > 200 {
            log::warn!("two-body guess: flight time bracket failed; using straight-line seed");
            return straight_line;
        }
    }
    if tof(hi).is_none_or(|t| t < tau) {
        log::warn!("two-body guess: flight time out of range; using straight-line seed");
        return straight_line;
    }

    let mut z = 0.0;
    for _ in 0..200 {
        z = 0.5 * (lo + hi);
        match tof(z) {
            Some(t) if (t - tau).abs() <= 1e-13 * tau => break,
            Some(t) if t < tau => lo = z,
            Some(_) => hi = z,
            None => lo = z,
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    let y = y_of(z);
    // A solution hugging the y → 0 edge means the requested transfer is far
    // faster than the field: gravity barely bends the arc, and the chord
    // parameter is below what the bisection can resolve. The straight line
    // is then both the numerically safe and the physically correct limit.
    if y <= 1e-10 * (r1 + r2) {
        return straight_line;
    }
    let f = 1.0 - y / r1;
    let g = a_coef * (y / mu).sqrt();
    let v0 = (rf - f * r0) / g;
    if v0.iter().all(|c| c.is_finite()) {
        v0
    } else {
        log::warn!("two-body guess: non-finite solution; using straight-line seed");
        straight_line
    }
}

/// Sensitivity of the arrival position to the launch velocity,
/// `Φ = ∂r(tau)/∂v0`, by central finite differences: column `j` compares
/// propagations with `v0 ± fd_step·eⱼ`. Impact detection stays off so the
/// map remains smooth across guesses that graze the terrain.
pub fn stm_columns(
    env: &Environment,
    r0: &Vector3<f64>,
    v0: &Vector3<f64>,
    tau: f64,
    fd_step: f64,
    dt: f64,
) -> Result<Matrix3<f64>, DynamicsError> {
    let options = PropagateOptions { detect_impact: false, sampling: Sampling::EndpointOnly };
    let endpoint = |v: Vector3<f64>| -> Result<Vector3<f64>, DynamicsError> {
        let s0 = RoverState::new(*r0, v, 0.0);
        Ok(dynamics::propagate_with(env, &s0, tau, dt, &options)?.final_state().r)
    };
    let mut phi = Matrix3::zeros();
    for j in 0..3 {
        let mut dv = Vector3::zeros();
        dv[j] = fd_step;
        let plus = endpoint(v0 + dv)?;
        let minus = endpoint(v0 - dv)?;
        phi.set_column(j, &((plus - minus) / (2.0 * fd_step)));
    }
    Ok(phi)
}

/// Solve the hop boundary-value problem from `r0` to `rf` with flight time
/// `tau` in the full rotating-frame field.
///
/// The launch position is nudged [`LAUNCH_NUDGE`] along the launch facet's
/// outward normal; the two-body seed is then refined by Newton iterations
/// `v₀ ← v₀ + Φ⁻¹(r_target − r(τ))` until the arrival error drops below
/// `cfg.tol` or the iteration cap is hit. An unconverged solve still returns
/// the best iterate (flagged `converged = false`); a singular sensitivity
/// matrix is an error the caller can clear by perturbing `tau`.
pub fn solve_hop(
    env: &Environment,
    r0: &SurfacePoint,
    rf: &SurfacePoint,
    tau: f64,
    cfg: &ShootingConfig,
) -> Result<ShootingResult, ShootingError> {
    solve_hop_seeded(env, r0, rf, tau, cfg, None)
}

/// [`solve_hop`] with an explicit starting velocity.
///
/// Callers that re-solve a slightly perturbed boundary-value problem (the
/// route optimizer re-evaluating a mutated hop) can pass the previous
/// solution and typically converge in one or two iterations. A `None` or
/// non-finite seed falls back to the two-body construction.
pub fn solve_hop_seeded(
    env: &Environment,
    r0: &SurfacePoint,
    rf: &SurfacePoint,
    tau: f64,
    cfg: &ShootingConfig,
    seed: Option<Vector3<f64>>,
) -> Result<ShootingResult, ShootingError> {
    if !(tau > 0.0) {
        return Err(ShootingError::NonPositiveTau(tau));
    }
    let shape = env.shape();
    if (rf.position - r0.position).norm() < 1e-9 {
        return Err(ShootingError::CoincidentEndpoints);
    }
    let launch = r0.position + LAUNCH_NUDGE * shape.facet_normal(r0.facet);
    let target = rf.position;
    let dt = cfg.dt.unwrap_or_else(|| dynamics::suggested_step(tau));
    let options = PropagateOptions { detect_impact: false, sampling: Sampling::EndpointOnly };
    let endpoint = |v: Vector3<f64>| -> Result<Vector3<f64>, ShootingError> {
        let s0 = RoverState::new(launch, v, 0.0);
        Ok(dynamics::propagate_with(env, &s0, tau, dt, &options)?.final_state().r)
    };

    let mut v = match seed {
        Some(s) if s.iter().all(|c| c.is_finite()) => s,
        _ => two_body_guess(env.field.mu(), &launch, &target, tau),
    };
    let mut end = endpoint(v)?;
    let mut err_vec = target - end;
    let mut err = err_vec.norm();
    let mut best = (v, err);
    let mut history = vec![err];

    // Secant mode keeps a running Φ estimate; `None` means finite
    // differences from here on.
    let mut phi_estimate = match cfg.stm {
        StmMode::Secant => Some(tau * Matrix3::identity()),
        StmMode::FiniteDifference => None,
    };
    let mut iterations = 0;

    while err > cfg.tol && iterations < cfg.max_iter {
        iterations += 1;
        let phi = match phi_estimate {
            Some(m) => m,
            None => {
                let delta = cfg.fd_step * v.norm().max(1.0);
                stm_columns(env, &launch, &v, tau, delta, dt)?
            }
        };
        let svd = phi.svd(false, false);
        let (s_max, s_min) = (svd.singular_values.max(), svd.singular_values.min());
        if !(s_min > 0.0) || s_max / s_min > STM_CONDITION_LIMIT {
            if phi_estimate.is_some() {
                // A degraded secant estimate is recoverable: refresh once.
                phi_estimate = None;
                iterations -= 1;
                continue;
            }
            return Err(ShootingError::SingularStm {
                condition: if s_min > 0.0 { s_max / s_min } else { f64::INFINITY },
            });
        }

        let full_step = phi.lu().solve(&err_vec).expect("conditioned matrix solves");
        let mut dv = full_step;
        let mut v_new = v + dv;
        let mut end_new = endpoint(v_new)?;
        let mut err_new = (target - end_new).norm();
        if err_new > err {
            let damped_v = v + cfg.damping * full_step;
            let damped_end = endpoint(damped_v)?;
            let damped_err = (target - damped_end).norm();
            if damped_err < err_new {
                dv = cfg.damping * full_step;
                v_new = damped_v;
                end_new = damped_end;
                err_new = damped_err;
            }
        }

        if let Some(m) = phi_estimate.as_mut() {
            let observed = end_new - end;
            let denom = dv.norm_squared();
            if denom > 0.0 {
                *m += (observed - *m * dv) * dv.transpose() / denom;
            }
            if err_new > 0.9 * err {
                // Stalled: the cheap estimate is not paying off.
                phi_estimate = None;
            }
        }

        v = v_new;
        end = end_new;
        err_vec = target - end;
        err = err_new;
        history.push(err);
        if err < best.1 {
            best = (v, err);
        }
    }

    let (v0, final_error) = best;
    let converged = final_error <= cfg.tol;

    // Report the best iterate flown with detection on and a 10% margin so
    // the landing geometry (site, cone angles) is available.
    let s0 = RoverState::new(launch, v0, 0.0);
    let mut trajectory = dynamics::propagate_with(
        env,
        &s0,
        1.1 * tau,
        dt,
        &PropagateOptions { detect_impact: true, sampling: Sampling::Every(1) },
    )?;
    // Striking the terrain clearly before the prescribed arrival means the
    // transfer arc passes through the body; mark it like any other
    // subsurface excursion.
    if let HopOutcome::Landed { impact, .. } = &trajectory.outcome {
        let grace = (2.0 * dt).max(0.01 * tau);
        if impact.t - s0.t < tau - grace {
            trajectory.subsurface = true;
        }
    }

    Ok(ShootingResult { v0, trajectory, iterations, final_error, converged, error_history: history })
}
