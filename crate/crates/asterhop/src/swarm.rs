//! Multi-rover dispersion over the surface.
//!
//! A swarm of hopping rovers spreads out from its deployment site under
//! virtual pairwise forces while trying to keep every rover connected to
//! at least `min_degree` neighbours within communication range:
//!
//! * every pair repels with magnitude `1/‖r_ij‖` directed apart
//!   (`f_r = (r_i − r_j)/‖r_ij‖²`), which drives exploration;
//! * a rover whose communication degree is below the minimum is attracted
//!   toward every other rover with a force growing linearly in distance
//!   (`f_a = r_j − r_i`), which restores connectivity before links are
//!   lost. The attraction as originally printed points away from the
//!   neighbour — `f_a = r_i − r_j` — which repels; since its stated
//!   purpose is to attract, the sign is reversed here.
//!
//! Rovers move synchronously: all forces are computed from the same state,
//! then every rover is displaced by `gain × force`, clamped to its hop
//! capability and projected back onto the surface. The net force is read
//! as a displacement from the current position, not an absolute target —
//! the literal absolute reading would collapse the swarm to a single point
//! instead of spreading it.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::Environment;
use crate::lambert::{self, ShootingConfig};
use crate::mesh::{ShapeModel, SurfacePoint};

/// Rover pairs closer than this are considered coincident (m); the force
/// law diverges there.
pub const COINCIDENCE_LIMIT: f64 = 1e-6;
/// Displacements shorter than this skip the ballistic feasibility solve
/// (m): a stationary rover has no hop to verify.
const STATIONARY_LIMIT: f64 = 1e-9;
/// Salt mixed into the seed for the coverage estimator's private stream.
const COVERAGE_SALT: u64 = 0x636f76_65726167;

#[derive(Debug, Error)]
pub enum SwarmError {
    #[error("swarm configuration invalid: {0}")]
    InvalidConfig(String),
    #[error("rovers {i} and {j} are {distance:.3e} m apart, below the {COINCIDENCE_LIMIT:.0e} m coincidence limit")]
    CoincidentRovers { i: usize, j: usize, distance: f64 },
    #[error("explicit placement has {got} rovers, config expects {expected}")]
    PlacementSize { expected: usize, got: usize },
}

/// Swarm-level tuning.
#[derive(Debug, Clone)]
pub struct SwarmConfig {
    /// Rover count (≥ 2).
    pub rovers: usize,
    /// Communication range (m): two rovers are linked iff within it.
    pub comm_range: f64,
    /// Sensing range (m), used by the coverage metric only.
    pub sensing_range: f64,
    /// Minimum communication degree the attraction force defends.
    pub min_degree: usize,
    /// Force-to-displacement gain. The default moves a lone pair at half
    /// the communication range by a third of the hop capability per step.
    pub gain: f64,
    /// Hop capability (m): displacement magnitude cap per step.
    pub max_hop: f64,
    /// Steps per simulation run.
    pub iterations: usize,
    /// Seed for random placement; the coverage estimator derives its own
    /// stream from it.
    pub seed: u64,
    /// Transfer time assumed when verifying displacements ballistically (s).
    pub hop_time: f64,
    /// Boundary-value solver settings for ballistic verification.
    pub shooting: ShootingConfig,
    /// Sample count for the Monte-Carlo coverage estimate.
    pub coverage_samples: usize,
}

impl SwarmConfig {
    pub fn new(rovers: usize, comm_range: f64, max_hop: f64) -> Self {
        SwarmConfig {
            rovers,
            comm_range,
            sensing_range: 0.5 * comm_range,
            min_degree: 2,
            gain: max_hop * comm_range / 6.0,
            max_hop,
            iterations: 15,
            seed: 0,
            hop_time: 60.0,
            shooting: ShootingConfig::default(),
            coverage_samples: 2000,
        }
    }

    pub fn validate(&self) -> Result<(), SwarmError> {
        let fail = |msg: String| Err(SwarmError::InvalidConfig(msg));
        if self.rovers < 2 {
            return fail(format!("need at least 2 rovers, got {}", self.rovers));
        }
        if !(self.comm_range > 0.0) {
            return fail(format!("communication range must be positive, got {}", self.comm_range));
        }
        if self.min_degree > self.rovers - 1 {
            return fail(format!(
                "minimum degree {} impossible with {} rovers",
                self.min_degree, self.rovers
            ));
        }
        if !(self.max_hop > 0.0) {
            return fail(format!("hop capability must be positive, got {}", self.max_hop));
        }
        if !(self.gain > 0.0) {
            return fail(format!("gain must be positive, got {}", self.gain));
        }
        if self.sensing_range < 0.0 {
            return fail(format!("sensing range must be non-negative, got {}", self.sensing_range));
        }
        if !(self.hop_time > 0.0) {
            return fail(format!("hop time must be positive, got {}", self.hop_time));
        }
        if self.coverage_samples == 0 {
            return fail("coverage estimate needs at least 1 sample".into());
        }
        Ok(())
    }
}

/// How displacements are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    /// Move straight to the projected target.
    Kinematic,
    /// Additionally verify each displacement as a ballistic hop; rovers
    /// whose hop cannot be solved move kinematically and are flagged.
    Ballistic,
}

/// Where the swarm starts.
#[derive(Debug, Clone)]
pub enum Placement {
    /// Sample rover positions uniformly (by area) over the surface, using
    /// the config seed.
    SeededRandom,
    /// Caller-provided sites; the count must match the config.
    Explicit(Vec<SurfacePoint>),
}

/// One synchronous snapshot of the swarm.
#[derive(Debug, Clone)]
pub struct SwarmState {
    pub positions: Vec<SurfacePoint>,
    /// Symmetric link matrix with a zero diagonal: `adjacency[i][j]` iff
    /// rovers `i` and `j` are within communication range.
    pub adjacency: Vec<Vec<bool>>,
    /// Row sums of the adjacency.
    pub degrees: Vec<usize>,
    /// Net virtual force on each rover in this state.
    pub forces: Vec<Vector3<f64>>,
    /// Rovers whose last displacement failed ballistic verification and
    /// fell back to a kinematic move.
    pub degraded: Vec<bool>,
}

impl SwarmState {
    /// Assemble a state from positions: build adjacency and degrees, then
    /// the net forces.
    pub fn new(positions: Vec<SurfacePoint>, cfg: &SwarmConfig) -> Result<Self, SwarmError> {
        let n = positions.len();
        let mut adjacency = vec![vec![false; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let distance = (positions[i].position - positions[j].position).norm();
                if distance < COINCIDENCE_LIMIT {
                    return Err(SwarmError::CoincidentRovers { i, j, distance });
                }
                let linked = distance <= cfg.comm_range;
                adjacency[i][j] = linked;
                adjacency[j][i] = linked;
            }
        }
        let degrees: Vec<usize> =
            adjacency.iter().map(|row| row.iter().filter(|&&l| l).count()).collect();
        let mut state = SwarmState {
            positions,
            adjacency,
            degrees,
            forces: Vec::new(),
            degraded: vec![false; n],
        };
        state.forces = forces(&state, cfg)?;
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Number of connected components of the communication graph.
    pub fn component_count(&self) -> usize {
        let n = self.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if self.adjacency[i][j] {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri] = rj;
                    }
                }
            }
        }
        (0..n).filter(|&i| find(&mut parent, i) == i).count()
    }
}

/// Net virtual force on every rover: each pair repels inversely with
/// distance, and a rover short of the minimum degree is additionally
/// attracted toward every other rover linearly in distance. The degree
/// test reads the state's current adjacency, so all forces describe the
/// same synchronous instant.
pub fn forces(state: &SwarmState, cfg: &SwarmConfig) -> Result<Vec<Vector3<f64>>, SwarmError> {
    let n = state.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let distance = (state.positions[i].position - state.positions[j].position).norm();
            if distance < COINCIDENCE_LIMIT {
                return Err(SwarmError::CoincidentRovers { i, j, distance });
            }
        }
    }
    let result = (0..n)
        .into_par_iter()
        .map(|i| {
            let r_i = state.positions[i].position;
            let needs_links = state.degrees[i] < cfg.min_degree;
            let mut f = Vector3::zeros();
            for j in 0..n {
                if j == i {
                    continue;
                }
                let r_j = state.positions[j].position;
                let separation = r_i - r_j;
                f += separation / separation.norm_squared();
                if needs_links {
                    f -= separation;
                }
            }
            f
        })
        .collect();
    Ok(result)
}

/// Advance the swarm one synchronous step: displace every rover by
/// `gain × force`, clamped to the hop capability, and project the target
/// back onto the surface. In ballistic mode each non-trivial displacement
/// is additionally solved as a hop of duration `hop_time`; a rover whose
/// solve fails or misses tolerance still moves, but is flagged as
/// degraded.
pub fn step(
    env: &Environment,
    state: &SwarmState,
    cfg: &SwarmConfig,
    mode: StepMode,
) -> Result<SwarmState, SwarmError> {
    let shape = env.shape();
    let targets: Vec<SurfacePoint> = state
        .positions
        .iter()
        .zip(&state.forces)
        .map(|(site, force)| {
            let mut displacement = cfg.gain * force;
            let magnitude = displacement.norm();
            if magnitude > cfg.max_hop {
                displacement *= cfg.max_hop / magnitude;
            }
            shape.project_to_surface(&(site.position + displacement))
        })
        .collect();

    let degraded: Vec<bool> = match mode {
        StepMode::Kinematic => vec![false; state.len()],
        StepMode::Ballistic => state
            .positions
            .par_iter()
            .zip(&targets)
            .map(|(from, to)| {
                if (to.position - from.position).norm() < STATIONARY_LIMIT {
                    return false;
                }
                match lambert::solve_hop(env, from, to, cfg.hop_time, &cfg.shooting) {
                    Ok(result) => !result.converged,
                    Err(_) => true,
                }
            })
            .collect(),
    };

    let mut next = SwarmState::new(targets, cfg)?;
    next.degraded = degraded;
    Ok(next)
}

/// Per-state summary recorded by [`simulate`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SwarmMetrics {
    /// Smallest rover-to-rover distance (m).
    pub min_pairwise: f64,
    /// Mean over all rover pairs (m).
    pub mean_pairwise: f64,
    /// Smallest communication degree.
    pub min_degree: usize,
    /// Connected components of the communication graph.
    pub components: usize,
    /// Monte-Carlo estimate of the surface area within sensing range of
    /// at least one rover (m²).
    pub covered_area: f64,
}

/// Compute the metrics for one state; `stream` seeds the coverage
/// estimator.
fn measure(model: &ShapeModel, state: &SwarmState, cfg: &SwarmConfig, stream: u64) -> SwarmMetrics {
    let n = state.len();
    let mut min_pairwise = f64::INFINITY;
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (state.positions[i].position - state.positions[j].position).norm();
            min_pairwise = min_pairwise.min(d);
            sum += d;
            pairs += 1;
        }
    }
    let mean_pairwise = sum / pairs.max(1) as f64;
    let min_degree = state.degrees.iter().copied().min().unwrap_or(0);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ COVERAGE_SALT ^ stream);
    let r2 = cfg.sensing_range * cfg.sensing_range;
    let mut hits = 0usize;
    for _ in 0..cfg.coverage_samples {
        let probe = model.sample_surface(&mut rng).position;
        if state
            .positions
            .iter()
            .any(|site| (site.position - probe).norm_squared() <= r2)
        {
            hits += 1;
        }
    }
    let covered_area = model.total_area() * hits as f64 / cfg.coverage_samples as f64;

    SwarmMetrics {
        min_pairwise,
        mean_pairwise,
        min_degree,
        components: state.component_count(),
        covered_area,
    }
}

/// Run a full dispersion: place the swarm, then advance `iterations`
/// synchronous steps, recording every state (initial included) and its
/// metrics. The run is a pure function of the config and placement; the
/// coverage estimator consumes a private stream derived from the seed.
pub fn simulate(
    env: &Environment,
    cfg: &SwarmConfig,
    placement: &Placement,
    mode: StepMode,
) -> Result<(Vec<SwarmState>, Vec<SwarmMetrics>), SwarmError> {
    cfg.validate()?;
    let shape = env.shape();
    let positions = match placement {
        Placement::SeededRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            (0..cfg.rovers).map(|_| shape.sample_surface(&mut rng)).collect()
        }
        Placement::Explicit(sites) => {
            if sites.len() != cfg.rovers {
                return Err(SwarmError::PlacementSize {
                    expected: cfg.rovers,
                    got: sites.len(),
                });
            }
            sites.clone()
        }
    };

    let mut states = vec![SwarmState::new(positions, cfg)?];
    for _ in 0..cfg.iterations {
        let next = step(env, states.last().expect("non-empty history"), cfg, mode)?;
        states.push(next);
    }
    let metrics = states
        .iter()
        .enumerate()
        .map(|(k, state)| measure(shape, state, cfg, k as u64))
        .collect();
    Ok((states, metrics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gravity::GravityField;
    use crate::mesh::shapes::{cuboid, ellipsoid, icosphere};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    /// Wide flat slab: projection of above-deck targets is a pure
    /// flattening, which keeps displacement geometry exact.
    fn slab_env() -> (ShapeModel, f64) {
        (cuboid(200.0, 200.0, 1.0), 1e-20)
    }

    fn deck_point(model: &ShapeModel, x: f64, y: f64) -> SurfacePoint {
        model.project_to_surface(&Vector3::new(x, y, 0.5))
    }

    fn basic_cfg(rovers: usize) -> SwarmConfig {
        let mut cfg = SwarmConfig::new(rovers, 4.0, 0.5);
        cfg.sensing_range = 2.0;
        cfg.min_degree = 0;
        cfg.iterations = 5;
        cfg
    }

    #[test]
    fn pair_repulsion_matches_closed_form() {
        let (shape, density) = slab_env();
        let cfg = basic_cfg(2);
        let positions = vec![deck_point(&shape, 1.0, 0.0), deck_point(&shape, 0.0, 0.0)];
        let state = SwarmState::new(positions, &cfg).unwrap();
        // Unit separation: repulsion magnitude 1/d = 1, directed apart.
        assert_relative_eq!(
            (state.forces[0] - Vector3::new(1.0, 0.0, 0.0)).norm(),
            0.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            (state.forces[1] - Vector3::new(-1.0, 0.0, 0.0)).norm(),
            0.0,
            epsilon = 1e-15
        );
        let _ = density;
    }

    #[test]
    fn attraction_activates_below_min_degree_and_closes_distance() {
        let (shape, density) = slab_env();
        let field = GravityField::with_constant(&shape, density, 1.0).unwrap();
        let env = Environment::new(&field);
        let mut cfg = basic_cfg(2);
        cfg.comm_range = 4.0;
        cfg.min_degree = 1;
        // 6 m apart: beyond communication range, so both rovers are short
        // of links and the linear attraction dominates the 1/d repulsion.
        let positions = vec![deck_point(&shape, -3.0, 0.0), deck_point(&shape, 3.0, 0.0)];
        let state = SwarmState::new(positions, &cfg).unwrap();
        assert_eq!(state.degrees, vec![0, 0]);
        assert!(state.forces[0].x > 0.0, "leftmost rover is pulled right");
        assert!(state.forces[1].x < 0.0);
        let next = step(&env, &state, &cfg, StepMode::Kinematic).unwrap();
        let before = 6.0;
        let after = (next.positions[0].position - next.positions[1].position).norm();
        assert!(after < before, "attraction closes the gap: {after} < {before}");
    }

    #[test]
    fn forces_match_brute_force_reference() {
        let shape = ellipsoid(30.0, 20.0, 15.0, 1);
        let mut cfg = SwarmConfig::new(15, 25.0, 5.0);
        cfg.min_degree = 3;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let positions: Vec<SurfacePoint> =
            (0..15).map(|_| shape.sample_surface(&mut rng)).collect();
        let state = SwarmState::new(positions, &cfg).unwrap();

        // O(N²) double loop, same accumulation order as the library.
        for i in 0..state.len() {
            let mut expected = Vector3::zeros();
            let needs_links = state.degrees[i] < cfg.min_degree;
            for j in 0..state.len() {
                if j == i {
                    continue;
                }
                let separation = state.positions[i].position - state.positions[j].position;
                expected += separation / separation.norm_squared();
                if needs_links {
                    expected -= separation;
                }
            }
            assert_eq!(state.forces[i], expected, "rover {i}");
        }
    }

    #[test]
    fn coincident_rovers_are_rejected() {
        let (shape, _) = slab_env();
        let cfg = basic_cfg(2);
        let p = deck_point(&shape, 0.0, 0.0);
        let result = SwarmState::new(vec![p, p], &cfg);
        assert!(matches!(result, Err(SwarmError::CoincidentRovers { .. })));
    }

    #[test]
    fn displacements_respect_hop_capability() {
        let (shape, density) = slab_env();
        let field = GravityField::with_constant(&shape, density, 1.0).unwrap();
        let env = Environment::new(&field);
        // Tight cluster: strong repulsion guarantees clamping kicks in.
        for seed in 0..10 {
            let mut cfg = basic_cfg(8);
            cfg.seed = seed;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let positions: Vec<SurfacePoint> = (0..8)
                .map(|_| {
                    deck_point(&shape, rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
                })
                .collect();
            let mut state = SwarmState::new(positions, &cfg).unwrap();
            for _ in 0..10 {
                let next = step(&env, &state, &cfg, StepMode::Kinematic).unwrap();
                for (before, after) in state.positions.iter().zip(&next.positions) {
                    let moved = (after.position - before.position).norm();
                    assert!(
                        moved <= cfg.max_hop + 1e-9,
                        "seed {seed}: rover moved {moved} > {}",
                        cfg.max_hop
                    );
                }
                state = next;
            }
        }
    }

    #[test]
    fn radially_symmetric_swarm_is_stationary() {
        // Rovers on the twelve vertices of an icosahedral sphere: net
        // forces point radially outward by symmetry, and the outward
        // target projects straight back onto the vertex, so the step is a
        // fixed point.
        let shape = icosphere(1.0, 0);
        let field = GravityField::with_constant(&shape, 1e-20, 1.0).unwrap();
        let env = Environment::new(&field);
        let mut cfg = SwarmConfig::new(12, 4.0, 0.5);
        cfg.min_degree = 0;
        let positions: Vec<SurfacePoint> =
            shape.vertices().iter().map(|v| shape.project_to_surface(v)).collect();
        let state = SwarmState::new(positions, &cfg).unwrap();
        let next = step(&env, &state, &cfg, StepMode::Kinematic).unwrap();
        for (before, after) in state.positions.iter().zip(&next.positions) {
            assert_relative_eq!(
                (after.position - before.position).norm(),
                0.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn repelling_pair_spreads_monotonically() {
        let (shape, density) = slab_env();
        let field = GravityField::with_constant(&shape, density, 1.0).unwrap();
        let env = Environment::new(&field);
        let cfg = basic_cfg(2);
        let positions = vec![deck_point(&shape, -0.5, 0.0), deck_point(&shape, 0.5, 0.0)];
        let mut state = SwarmState::new(positions, &cfg).unwrap();
        let mut previous = 1.0;
        for _ in 0..20 {
            state = step(&env, &state, &cfg, StepMode::Kinematic).unwrap();
            let distance = (state.positions[0].position - state.positions[1].position).norm();
            assert!(
                distance >= previous - 1e-12,
                "repulsion never closes the gap: {distance} < {previous}"
            );
            previous = distance;
        }
    }

    #[test]
    fn ballistic_mode_moves_like_kinematic_and_flags_failures() {
        // Unit sphere with unit gravitational parameter so hops are real.
        let shape = icosphere(1.0, 1);
        let g = 1.0 / shape.volume();
        let field = GravityField::with_constant(&shape, 1.0, g).unwrap();
        let env = Environment::new(&field);
        let mut cfg = SwarmConfig::new(4, 1.0, 0.3);
        cfg.min_degree = 0;
        cfg.hop_time = 0.8;
        cfg.shooting.tol = 0.05;
        cfg.shooting.dt = Some(0.01);
        let positions: Vec<SurfacePoint> = [
            [1.0, 0.05, 0.0],
            [0.05, 1.0, 0.0],
            [0.0, 0.05, 1.0],
            [-1.0, 0.0, 0.05],
        ]
        .iter()
        .map(|p| shape.project_to_surface(&Vector3::new(p[0], p[1], p[2])))
        .collect();
        let state = SwarmState::new(positions, &cfg).unwrap();

        let kinematic = step(&env, &state, &cfg, StepMode::Kinematic).unwrap();
        let ballistic = step(&env, &state, &cfg, StepMode::Ballistic).unwrap();
        // The displacement rule is mode-independent; ballistic mode only
        // verifies it.
        for (a, b) in kinematic.positions.iter().zip(&ballistic.positions) {
            assert_eq!(a.position, b.position);
        }
        assert!(
            ballistic.degraded.iter().all(|&d| !d),
            "modest hops on a smooth body verify cleanly"
        );

        // An impossible solver budget degrades every moving rover.
        let mut strict = cfg.clone();
        strict.shooting.tol = 1e-12;
        strict.shooting.max_iter = 1;
        let flagged = step(&env, &state, &strict, StepMode::Ballistic).unwrap();
        let moved: Vec<bool> = state
            .positions
            .iter()
            .zip(&flagged.positions)
            .map(|(a, b)| (a.position - b.position).norm() >= 1e-9)
            .collect();
        for (rover, did_move) in moved.iter().enumerate() {
            assert_eq!(
                flagged.degraded[rover], *did_move,
                "every moving rover fails the impossible tolerance"
            );
        }
        assert!(moved.iter().any(|&m| m));
    }

    #[test]
    fn adjacency_bookkeeping_holds_after_steps() {
        let shape = ellipsoid(30.0, 20.0, 15.0, 1);
        let field = GravityField::with_constant(&shape, 1e-20, 1.0).unwrap();
        let env = Environment::new(&field);
        let mut cfg = SwarmConfig::new(10, 18.0, 4.0);
        cfg.min_degree = 2;
        cfg.seed = 11;
        cfg.iterations = 6;
        let (states, _) = simulate(&env, &cfg, &Placement::SeededRandom, StepMode::Kinematic).unwrap();
        assert_eq!(states.len(), 7);
        for state in &states {
            for i in 0..state.len() {
                assert!(!state.adjacency[i][i], "no self links");
                let mut degree = 0;
                for j in 0..state.len() {
                    assert_eq!(state.adjacency[i][j], state.adjacency[j][i]);
                    let d = (state.positions[i].position - state.positions[j].position).norm();
                    if i != j {
                        assert_eq!(state.adjacency[i][j], d <= cfg.comm_range);
                    }
                    degree += state.adjacency[i][j] as usize;
                }
                assert_eq!(state.degrees[i], degree);
                // Every rover stays on the surface.
                assert!(shape.surface_distance(&state.positions[i].position) < 1e-9);
            }
        }
    }

    #[test]
    fn simulation_metrics_and_determinism() {
        let (shape, density) = slab_env();
        let field = GravityField::with_constant(&shape, density, 1.0).unwrap();
        let env = Environment::new(&field);
        let mut cfg = SwarmConfig::new(8, 10.0, 2.0);
        cfg.min_degree = 0;
        cfg.sensing_range = 10.0;
        cfg.iterations = 4;
        cfg.coverage_samples = 4000;
        // Two clusters far apart: two components, and coverage close to
        // two disjoint disk unions.
        let sites: Vec<SurfacePoint> = [
            (-60.0, -60.0),
            (-58.0, -60.0),
            (-60.0, -58.0),
            (-58.0, -58.0),
            (60.0, 60.0),
            (62.0, 60.0),
            (60.0, 62.0),
            (62.0, 62.0),
        ]
        .iter()
        .map(|&(x, y)| deck_point(&shape, x, y))
        .collect();
        let placement = Placement::Explicit(sites);
        let (states, metrics) = simulate(&env, &cfg, &placement, StepMode::Kinematic).unwrap();
        assert_eq!(metrics.len(), states.len());
        assert_eq!(metrics[0].components, 2);
        assert_eq!(metrics[0].min_degree, 3);
        assert!(metrics[0].min_pairwise >= 2.0 - 1e-9);
        assert!(metrics[0].mean_pairwise > 90.0, "cross-cluster pairs dominate the mean");
        // Each cluster's sensing union is close to the 2 m × 2 m rover
        // square dilated by the sensing radius — on the top face directly,
        // and on the bottom face with the radius foreshortened by the 1 m
        // slab thickness. Clusters sit far from the rim, so side faces
        // contribute nothing.
        let dilated = |r: f64| 4.0 + 8.0 * r + std::f64::consts::PI * r * r;
        let expected = 2.0 * (dilated(10.0) + dilated((100.0f64 - 1.0).sqrt()));
        assert_relative_eq!(metrics[0].covered_area, expected, max_relative = 0.3);

        let (_, again) = simulate(&env, &cfg, &placement, StepMode::Kinematic).unwrap();
        for (a, b) in metrics.iter().zip(&again) {
            assert_eq!(a.covered_area, b.covered_area);
            assert_eq!(a.mean_pairwise, b.mean_pairwise);
        }
    }

    #[test]
    fn clustered_deployment_spreads_and_stays_connected() {
        // Mission-scale scenario: rovers dropped in one tight patch on a
        // large ellipsoid spread while defending a minimum degree of 2.
        let shape = ellipsoid(275.0, 150.0, 125.0, 2);
        let field = GravityField::with_constant(&shape, 1e-20, 1.0).unwrap();
        let env = Environment::new(&field);
        let mut cfg = SwarmConfig::new(15, 100.0, 30.0);
        cfg.min_degree = 2;
        // The default gain moves every rover at full hop capability during
        // the spreading phase; the synchronous update then overshoots the
        // communication range faster than the attraction can react and
        // links break. A tenth of it spreads more patiently and keeps the
        // degree floor intact with margin.
        cfg.gain = 50.0;
        cfg.iterations = 15;
        cfg.sensing_range = 50.0;
        cfg.seed = 4;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let sites: Vec<SurfacePoint> = (0..15)
            .map(|_| {
                let dx = rng.random_range(-40.0..40.0);
                let dy = rng.random_range(-40.0..40.0);
                shape.project_to_surface(&Vector3::new(270.0, dx, dy))
            })
            .collect();
        let (_, metrics) =
            simulate(&env, &cfg, &Placement::Explicit(sites), StepMode::Kinematic).unwrap();
        for window in metrics.windows(2).take(10) {
            assert!(
                window[1].mean_pairwise > window[0].mean_pairwise,
                "spreading phase grows the mean distance"
            );
        }
        for m in &metrics[1..] {
            assert!(m.min_degree >= 2, "connectivity is defended, got {}", m.min_degree);
            assert_eq!(m.components, 1);
        }
        let first = metrics.first().unwrap().covered_area;
        let last = metrics.last().unwrap().covered_area;
        assert!(last > 1.5 * first, "coverage grows with spreading: {first} → {last}");
    }

    #[test]
    fn invalid_configs_and_placements_are_rejected() {
        let (shape, density) = slab_env();
        let field = GravityField::with_constant(&shape, density, 1.0).unwrap();
        let env = Environment::new(&field);
        for bad in [
            {
                let mut c = basic_cfg(1);
                c.rovers = 1;
                c
            },
            {
                let mut c = basic_cfg(4);
                c.comm_range = 0.0;
                c
            },
            {
                let mut c = basic_cfg(4);
                c.min_degree = 4;
                c
            },
            {
                let mut c = basic_cfg(4);
                c.max_hop = -1.0;
                c
            },
        ] {
            assert!(matches!(
                simulate(&env, &bad, &Placement::SeededRandom, StepMode::Kinematic),
                Err(SwarmError::InvalidConfig(_))
            ));
        }
        let cfg = basic_cfg(4);
        let sites = vec![deck_point(&shape, 0.0, 0.0); 3];
        assert!(matches!(
            simulate(&env, &cfg, &Placement::Explicit(sites), StepMode::Kinematic),
            Err(SwarmError::PlacementSize { expected: 4, got: 3 })
        ));
    }
}
