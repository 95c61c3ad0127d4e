//! The five subcommand pipelines. Each loads the shape, builds the field,
//! drives one library module, and writes its artifacts; see the crate docs
//! for the exit-code and determinism contract.

use std::path::Path;

use nalgebra::{UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use asterhop::dynamics::{Environment, HopOutcome};
use asterhop::gravity::{GravityError, GravityField};
use asterhop::lambert::{self, ShootingError, ShootingResult};
use asterhop::localization::{self, IcpConfig, RigidTransform};
use asterhop::mesh::ShapeModel;
use asterhop::planner::{self, GenerationStats, HopPlan, PlannerError};
use asterhop::swarm::{self, SwarmError, SwarmMetrics};

use crate::report::{write_json, CsvWriter};
use crate::scenario::Scenario;
use crate::{CliError, GravityArgs, HopArgs, LocalizeArgs, PlanArgs, SwarmArgs};

fn vec3(a: &[f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

fn arr3(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn build_field<'a>(scenario: &Scenario, shape: &'a ShapeModel) -> Result<GravityField<'a>, CliError> {
    let result = match scenario.gravitational_constant {
        Some(g) => GravityField::with_constant(shape, scenario.density, g),
        None => GravityField::new(shape, scenario.density),
    };
    result.map_err(|e| match e {
        GravityError::NonPositiveDensity(_) | GravityError::NonPositiveConstant(_) => {
            CliError::Config(e.to_string())
        }
        GravityError::SingularEvaluation { .. } => CliError::Numerical(e.to_string()),
    })
}

// ---------------------------------------------------------------------------
// gravity

#[derive(Serialize)]
struct GravitySummary {
    scenario: Scenario,
    mass: f64,
    mu: f64,
    volume: f64,
    center_of_mass: [f64; 3],
    center_of_mass_offset: f64,
    evaluated_points: usize,
    outputs: Vec<&'static str>,
}

pub fn gravity(scenario: &Scenario, out: &Path, args: &GravityArgs) -> Result<(), CliError> {
    let shape = scenario.load_shape()?;
    let field = build_field(scenario, &shape)?;

    let mut points: Vec<Vector3<f64>> = args.points.iter().map(vec3).collect();
    if let Some(n) = args.grid {
        if n < 2 {
            return Err(CliError::Config(format!("--grid needs at least 2 nodes per axis, got {n}")));
        }
        if !(args.margin > 0.0) {
            return Err(CliError::Config(format!("--margin must be positive, got {}", args.margin)));
        }
        let (lo, hi) = shape.bounds();
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * args.margin * (hi - lo);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let f = |idx: usize| 2.0 * idx as f64 / (n - 1) as f64 - 1.0;
                    points
                        .push(mid + Vector3::new(f(i) * half.x, f(j) * half.y, f(k) * half.z));
                }
            }
        }
    }
    if points.is_empty() {
        return Err(CliError::Config("nothing to evaluate: pass --grid and/or --point".into()));
    }

    let mut csv =
        CsvWriter::create(out, "field.csv", &["x", "y", "z", "U", "gx", "gy", "gz", "laplacian"])?;
    for p in &points {
        let sample = field.evaluate(p).map_err(|e| CliError::Numerical(e.to_string()))?;
        csv.row(&[
            p.x.into(),
            p.y.into(),
            p.z.into(),
            sample.potential.into(),
            sample.acceleration.x.into(),
            sample.acceleration.y.into(),
            sample.acceleration.z.into(),
            sample.laplacian.into(),
        ])?;
    }
    csv.finish()?;

    let com = shape.center_of_mass();
    write_json(
        out,
        "summary.json",
        &GravitySummary {
            scenario: scenario.clone(),
            mass: field.total_mass(),
            mu: field.mu(),
            volume: shape.volume(),
            center_of_mass: arr3(&com),
            center_of_mass_offset: com.norm(),
            evaluated_points: points.len(),
            outputs: vec!["field.csv", "summary.json"],
        },
    )
}

// ---------------------------------------------------------------------------
// hop

#[derive(Serialize)]
struct HopReport {
    scenario: Scenario,
    from: [f64; 3],
    to: [f64; 3],
    tau: f64,
    v0: [f64; 3],
    v0_mag: f64,
    vf_mag: f64,
    iterations: usize,
    final_error: f64,
    converged: bool,
    error_history: Vec<f64>,
    outcome: &'static str,
    elapsed: f64,
    theta_launch_deg: Option<f64>,
    theta_land_deg: Option<f64>,
    subsurface: bool,
    landing_site: Option<[f64; 3]>,
    landing_miss: Option<f64>,
    outputs: Vec<&'static str>,
}

fn write_trajectory(
    out: &Path,
    name: &str,
    samples: &[asterhop::dynamics::RoverState],
    t_offset: f64,
) -> Result<(), CliError> {
    let mut csv = CsvWriter::create(out, name, &["t", "x", "y", "z", "vx", "vy", "vz"])?;
    for s in samples {
        csv.row(&[
            (t_offset + s.t).into(),
            s.r.x.into(),
            s.r.y.into(),
            s.r.z.into(),
            s.v.x.into(),
            s.v.y.into(),
            s.v.z.into(),
        ])?;
    }
    csv.finish()
}

fn map_shooting_error(e: ShootingError) -> CliError {
    match e {
        ShootingError::NonPositiveTau(_) | ShootingError::CoincidentEndpoints => {
            CliError::Config(e.to_string())
        }
        _ => CliError::Numerical(e.to_string()),
    }
}

pub fn hop(scenario: &Scenario, out: &Path, args: &HopArgs) -> Result<(), CliError> {
    let shape = scenario.load_shape()?;
    let field = build_field(scenario, &shape)?;
    let env = Environment::with_spin(&field, scenario.omega_vector());
    let from = shape.project_to_surface(&vec3(&args.from));
    let to = shape.project_to_surface(&vec3(&args.to));
    let shooting = scenario.shooting_spec();

    let result: ShootingResult =
        lambert::solve_hop(&env, &from, &to, args.tau, &shooting.to_config())
            .map_err(map_shooting_error)?;

    write_trajectory(out, "trajectory.csv", &result.trajectory.samples, 0.0)?;

    let landing = result.trajectory.landing_site();
    let landed = landing.is_some();
    let report = HopReport {
        scenario: scenario.clone(),
        from: arr3(&from.position),
        to: arr3(&to.position),
        tau: args.tau,
        v0: arr3(&result.v0),
        v0_mag: result.v0.norm(),
        vf_mag: result.trajectory.vf_mag,
        iterations: result.iterations,
        final_error: result.final_error,
        converged: result.converged,
        error_history: result.error_history.clone(),
        outcome: match result.trajectory.outcome {
            HopOutcome::Landed { .. } => "landed",
            HopOutcome::Escaped { .. } => "escaped",
            HopOutcome::TimedOut => "timed-out",
        },
        elapsed: result.trajectory.elapsed,
        theta_launch_deg: result.trajectory.theta_launch_deg,
        theta_land_deg: result.trajectory.theta_land_deg,
        subsurface: result.trajectory.subsurface,
        landing_site: landing.map(|s| arr3(&s.position)),
        landing_miss: landing.map(|s| (s.position - to.position).norm()),
        outputs: vec!["trajectory.csv", "hop.json"],
    };
    write_json(out, "hop.json", &report)?;

    // Artifacts are written even for dirty hops; only the exit code
    // distinguishes them.
    if !result.converged {
        return Err(CliError::Numerical(format!(
            "solver stopped at error {:.3e} m after {} iteration(s)",
            result.final_error, result.iterations
        )));
    }
    if result.trajectory.subsurface || !landed {
        return Err(CliError::Numerical(format!(
            "hop converged but is infeasible (outcome {}, subsurface {})",
            report.outcome, result.trajectory.subsurface
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// plan

#[derive(Serialize)]
struct PlanReport {
    scenario: Scenario,
    plan: HopPlan,
    hop_count: usize,
    all_converged: bool,
    all_feasible: bool,
    segment_final_best: Vec<f64>,
    outputs: Vec<String>,
}

fn map_planner_error(e: PlannerError) -> CliError {
    match e {
        PlannerError::InvalidConfig(_) | PlannerError::TooFewSites(_) => {
            CliError::Config(e.to_string())
        }
        PlannerError::Segment { ref source, .. } => match **source {
            PlannerError::InvalidConfig(_) | PlannerError::TooFewSites(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        },
        PlannerError::GoalUnreached { .. } => CliError::Numerical(e.to_string()),
    }
}

pub fn plan(scenario: &Scenario, out: &Path, args: &PlanArgs) -> Result<(), CliError> {
    let spec = scenario
        .planner
        .as_ref()
        .ok_or_else(|| CliError::Config("the plan command needs a `planner` block".into()))?;
    let cfg = spec.to_config(&scenario.shooting_spec());
    let shape = scenario.load_shape()?;
    let field = build_field(scenario, &shape)?;
    let env = Environment::with_spin(&field, scenario.omega_vector());

    let mut route = Vec::with_capacity(args.waypoints.len() + 2);
    route.push(shape.project_to_surface(&vec3(&args.from)));
    route.extend(args.waypoints.iter().map(|w| shape.project_to_surface(&vec3(w))));
    route.push(shape.project_to_surface(&vec3(&args.to)));

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let (plan, stats): (HopPlan, Vec<Vec<GenerationStats>>) = if route.len() == 2 {
        let (plan, stats) = planner::optimize(&env, &shape, &route[0], &route[1], &cfg, &mut rng)
            .map_err(map_planner_error)?;
        (plan, vec![stats])
    } else {
        planner::plan_with_waypoints(&env, &shape, &route, &cfg, &mut rng)
            .map_err(map_planner_error)?
    };

    let mut csv =
        CsvWriter::create(out, "generations.csv", &["segment", "generation", "best", "mean", "std"])?;
    for (segment, rows) in stats.iter().enumerate() {
        for (generation, s) in rows.iter().enumerate() {
            csv.row(&[
                segment.into(),
                generation.into(),
                s.best_cost.into(),
                s.mean_cost.into(),
                s.std_cost.into(),
            ])?;
        }
    }
    csv.finish()?;

    let mut outputs = vec!["plan.json".to_string(), "generations.csv".to_string()];
    let mut t_offset = 0.0;
    for (i, window) in plan.sites.windows(2).enumerate() {
        let name = format!("hop_{i:03}.csv");
        match lambert::solve_hop(&env, &window[0], &window[1], plan.times[i], &cfg.shooting) {
            Ok(result) => {
                write_trajectory(out, &name, &result.trajectory.samples, t_offset)?;
                outputs.push(name);
            }
            Err(e) => log::warn!("hop {i}: no trajectory exported ({e})"),
        }
        t_offset += plan.times[i];
    }

    let all_converged = plan.diagnostics.iter().all(|d| d.converged);
    let all_feasible = all_converged
        && plan.diagnostics.iter().all(|d| {
            !d.subsurface
                && d.launch_speed < d.escape_speed
                && d.launch_angle_deg.is_some_and(|a| a <= planner::CONE_LIMIT_DEG)
                && d.landing_angle_deg.is_some_and(|a| a <= planner::CONE_LIMIT_DEG)
        });
    let report = PlanReport {
        scenario: scenario.clone(),
        hop_count: plan.hop_count(),
        all_converged,
        all_feasible,
        segment_final_best: stats
            .iter()
            .map(|rows| rows.last().map(|s| s.best_cost).unwrap_or(f64::NAN))
            .collect(),
        plan,
        outputs,
    };
    write_json(out, "plan.json", &report)
}

// ---------------------------------------------------------------------------
// swarm

#[derive(Serialize)]
struct SwarmReport {
    scenario: Scenario,
    rovers: usize,
    iterations: usize,
    initial_metrics: SwarmMetrics,
    final_metrics: SwarmMetrics,
    degraded_hops: usize,
    outputs: Vec<&'static str>,
}

fn map_swarm_error(e: SwarmError) -> CliError {
    match e {
        SwarmError::InvalidConfig(_) | SwarmError::PlacementSize { .. } => {
            CliError::Config(e.to_string())
        }
        SwarmError::CoincidentRovers { .. } => CliError::Numerical(e.to_string()),
    }
}

pub fn swarm(scenario: &Scenario, out: &Path, args: &SwarmArgs) -> Result<(), CliError> {
    let _ = args;
    let spec = scenario
        .swarm
        .as_ref()
        .ok_or_else(|| CliError::Config("the swarm command needs a `swarm` block".into()))?;
    let cfg = spec.to_config(scenario.seed, &scenario.shooting_spec());
    let shape = scenario.load_shape()?;
    let field = build_field(scenario, &shape)?;
    let env = Environment::with_spin(&field, scenario.omega_vector());
    let placement = spec.placement(&shape);

    let (states, metrics) =
        swarm::simulate(&env, &cfg, &placement, spec.mode()).map_err(map_swarm_error)?;

    let mut rovers_csv =
        CsvWriter::create(out, "swarm.csv", &["iter", "rover", "x", "y", "z", "degree"])?;
    let mut links_csv = CsvWriter::create(out, "links.csv", &["iter", "i", "j"])?;
    for (iter, state) in states.iter().enumerate() {
        for (rover, site) in state.positions.iter().enumerate() {
            rovers_csv.row(&[
                iter.into(),
                rover.into(),
                site.position.x.into(),
                site.position.y.into(),
                site.position.z.into(),
                state.degrees[rover].into(),
            ])?;
        }
        for i in 0..state.len() {
            for j in (i + 1)..state.len() {
                if state.adjacency[i][j] {
                    links_csv.row(&[iter.into(), i.into(), j.into()])?;
                }
            }
        }
    }
    rovers_csv.finish()?;
    links_csv.finish()?;

    let mut metrics_csv = CsvWriter::create(
        out,
        "metrics.csv",
        &["iter", "min_pairwise", "mean_pairwise", "min_degree", "components", "covered_area"],
    )?;
    for (iter, m) in metrics.iter().enumerate() {
        metrics_csv.row(&[
            iter.into(),
            m.min_pairwise.into(),
            m.mean_pairwise.into(),
            m.min_degree.into(),
            m.components.into(),
            m.covered_area.into(),
        ])?;
    }
    metrics_csv.finish()?;

    write_json(
        out,
        "swarm.json",
        &SwarmReport {
            scenario: scenario.clone(),
            rovers: cfg.rovers,
            iterations: cfg.iterations,
            initial_metrics: metrics[0],
            final_metrics: *metrics.last().expect("at least the initial state"),
            degraded_hops: states
                .iter()
                .map(|s| s.degraded.iter().filter(|&&d| d).count())
                .sum(),
            outputs: vec!["swarm.csv", "links.csv", "metrics.csv", "swarm.json"],
        },
    )
}

// ---------------------------------------------------------------------------
// localize

#[derive(Serialize)]
struct LocalizeReport {
    scenario: Scenario,
    scans_used: usize,
    rows_skipped: usize,
    path_length: f64,
    terminal_error: f64,
    terminal_error_fraction: f64,
    max_error: f64,
    mean_error: f64,
    outputs: Vec<&'static str>,
}

/// Parse `t,x,y,z[,...]` rows; a non-numeric first line is treated as a
/// header.
fn read_truth(path: &Path) -> Result<Vec<(f64, Vector3<f64>)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read truth file {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if line_no == 0 && fields[0].parse::<f64>().is_err() {
            continue;
        }
        if fields.len() < 4 {
            return Err(CliError::Config(format!(
                "{}:{}: expected at least t,x,y,z",
                path.display(),
                line_no + 1
            )));
        }
        let mut v = [0.0; 4];
        for (slot, field) in v.iter_mut().zip(&fields) {
            *slot = field.parse::<f64>().map_err(|e| {
                CliError::Config(format!("{}:{}: {field:?}: {e}", path.display(), line_no + 1))
            })?;
        }
        rows.push((v[0], Vector3::new(v[1], v[2], v[3])));
    }
    if rows.len() < 2 {
        return Err(CliError::Config(format!(
            "truth file {} has {} usable row(s); need at least 2",
            path.display(),
            rows.len()
        )));
    }
    Ok(rows)
}

pub fn localize(scenario: &Scenario, out: &Path, args: &LocalizeArgs) -> Result<(), CliError> {
    let shape = scenario.load_shape()?;
    let scan_spec = scenario.scan_spec();
    let scan_cfg = scan_spec.to_config();
    let truth = read_truth(&args.truth)?;

    // Resample the (possibly dense) truth trajectory at the scan rate and
    // drop poses that are not strictly outside the body (launch and
    // touchdown rows sit on the surface, where no scan exists).
    let period = 1.0 / scan_cfg.frequency;
    let mut schedule: Vec<(f64, Vector3<f64>)> = Vec::new();
    let mut skipped = 0usize;
    let mut next_t = f64::NEG_INFINITY;
    for &(t, p) in &truth {
        if t < next_t {
            continue;
        }
        if shape.contains(&p) == asterhop::mesh::Containment::Outside {
            schedule.push((t, p));
            next_t = t + period - 1e-9;
        } else {
            skipped += 1;
        }
    }
    if schedule.len() < 2 {
        return Err(CliError::Numerical(format!(
            "only {} scannable pose(s) on the truth trajectory at {} Hz",
            schedule.len(),
            scan_cfg.frequency
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut scans = Vec::with_capacity(schedule.len());
    for (_, p) in &schedule {
        let pose = RigidTransform::new(nalgebra::Rotation3::identity(), *p);
        let cloud = localization::simulate_scan(&shape, &pose, &scan_cfg, &mut rng)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        scans.push(cloud);
    }

    let init = RigidTransform::new(nalgebra::Rotation3::identity(), schedule[0].1);
    let poses = localization::chain_poses(&scans, &init, &IcpConfig::default())
        .map_err(|e| CliError::Numerical(e.to_string()))?;

    let mut csv =
        CsvWriter::create(out, "poses.csv", &["t", "tx", "ty", "tz", "qw", "qx", "qy", "qz"])?;
    for ((t, _), pose) in schedule.iter().zip(&poses) {
        let q = UnitQuaternion::from_rotation_matrix(&pose.rotation);
        csv.row(&[
            (*t).into(),
            pose.translation.x.into(),
            pose.translation.y.into(),
            pose.translation.z.into(),
            q.w.into(),
            q.i.into(),
            q.j.into(),
            q.k.into(),
        ])?;
    }
    csv.finish()?;

    let path_length: f64 =
        schedule.windows(2).map(|w| (w[1].1 - w[0].1).norm()).sum();
    let errors: Vec<f64> = schedule
        .iter()
        .zip(&poses)
        .map(|((_, p), pose)| (pose.translation - p).norm())
        .collect();
    let terminal_error = *errors.last().expect("at least two poses");
    let report = LocalizeReport {
        scenario: scenario.clone(),
        scans_used: schedule.len(),
        rows_skipped: skipped,
        path_length,
        terminal_error,
        terminal_error_fraction: if path_length > 0.0 { terminal_error / path_length } else { 0.0 },
        max_error: errors.iter().copied().fold(0.0, f64::max),
        mean_error: errors.iter().sum::<f64>() / errors.len() as f64,
        outputs: vec!["poses.csv", "drift.json"],
    };
    write_json(out, "drift.json", &report)
}
