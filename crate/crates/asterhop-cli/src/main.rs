//! `asterhop` — scenario-driven front-end for the small-body hopping
//! toolkit.
//!
//! Every command reads one JSON scenario file, runs a library pipeline, and
//! writes CSV/JSON artifacts into an output directory. A command is a pure
//! function of (scenario file, arguments, seed): rerunning it produces
//! byte-identical outputs, and each summary JSON embeds the fully resolved
//! scenario so results are reproducible from the artifacts alone.
//!
//! Exit codes: 0 success, 2 configuration error, 3 shape-model error,
//! 4 numerical failure. Errors are also reported as a single JSON line on
//! stderr. Set `ASTERHOP_LOG` (e.g. `info`, `debug`) for progress logging.

mod commands;
mod report;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scenario::Scenario;

#[derive(Debug)]
pub enum CliError {
    /// Bad scenario file, arguments, or filesystem trouble (exit 2).
    Config(String),
    /// Shape model failed to load or validate (exit 3).
    Mesh(String),
    /// A solver or simulation failed (exit 4).
    Numerical(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Mesh(_) => "mesh",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Mesh(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Config(m) | CliError::Mesh(m) | CliError::Numerical(m) => m.clone(),
        }
    }
}

/// Arguments shared by every command.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file (JSON, schema version 1).
    #[arg(long, value_name = "FILE")]
    scenario: PathBuf,
    /// Override the scenario's rng seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the scenario's `output_dir`, else the
    /// current directory). Created if missing.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Cap the worker-thread count (default: hardware parallelism).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z — got {} component(s)", parts.len()));
    }
    let mut out = [0.0; 3];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part.trim().parse::<f64>().map_err(|e| format!("{part:?}: {e}"))?;
    }
    Ok(out)
}

#[derive(Debug, Args)]
pub struct GravityArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Evaluate an n×n×n grid over the bounding box inflated by --margin.
    #[arg(long, value_name = "N")]
    grid: Option<usize>,
    /// Bounding-box inflation factor for --grid.
    #[arg(long, default_value_t = 1.5)]
    margin: f64,
    /// Evaluate a single point (repeatable): x,y,z in metres.
    #[arg(long = "point", value_parser = parse_vec3, value_name = "X,Y,Z", allow_hyphen_values = true)]
    points: Vec<[f64; 3]>,
}

#[derive(Debug, Args)]
pub struct HopArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Launch site (projected onto the surface): x,y,z.
    #[arg(long, value_parser = parse_vec3, value_name = "X,Y,Z", allow_hyphen_values = true)]
    from: [f64; 3],
    /// Target site (projected onto the surface): x,y,z.
    #[arg(long, value_parser = parse_vec3, value_name = "X,Y,Z", allow_hyphen_values = true)]
    to: [f64; 3],
    /// Transfer time (seconds).
    #[arg(long)]
    tau: f64,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Route start (projected onto the surface): x,y,z.
    #[arg(long, value_parser = parse_vec3, value_name = "X,Y,Z", allow_hyphen_values = true)]
    from: [f64; 3],
    /// Route goal (projected onto the surface): x,y,z.
    #[arg(long, value_parser = parse_vec3, value_name = "X,Y,Z", allow_hyphen_values = true)]
    to: [f64; 3],
    /// Intermediate waypoint, in visit order (repeatable): x,y,z.
    #[arg(long = "waypoint", value_parser = parse_vec3, value_name = "X,Y,Z", allow_hyphen_values = true)]
    waypoints: Vec<[f64; 3]>,
}

#[derive(Debug, Args)]
pub struct SwarmArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct LocalizeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Ground-truth trajectory CSV with header `t,x,y,z,vx,vy,vz` (or just
    /// `t,x,y,z`); scans are taken along it at the configured scan rate.
    #[arg(long, value_name = "FILE")]
    truth: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the gravity field on a grid or point list.
    Gravity(GravityArgs),
    /// Solve one ballistic hop between two surface sites.
    Hop(HopArgs),
    /// Plan and optimize a multi-hop route.
    Plan(PlanArgs),
    /// Simulate a dispersing rover swarm.
    Swarm(SwarmArgs),
    /// Reconstruct a trajectory from simulated range scans.
    Localize(LocalizeArgs),
}

#[derive(Debug, Parser)]
#[command(
    name = "asterhop",
    version,
    about = "Ballistic hopping over small bodies: gravity, hops, routes, swarms, odometry"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Gravity(a) => &a.common,
            Command::Hop(a) => &a.common,
            Command::Plan(a) => &a.common,
            Command::Swarm(a) => &a.common,
            Command::Localize(a) => &a.common,
        }
    }
}

/// Load the scenario, apply overrides, and prepare the output directory.
fn prepare(common: &CommonArgs) -> Result<(Scenario, PathBuf), CliError> {
    if let Some(threads) = common.threads {
        if threads == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        // Ignore the error when a pool already exists (tests call run()
        // repeatedly in one process).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let mut scenario = Scenario::load(&common.scenario)?;
    if let Some(seed) = common.seed {
        scenario.seed = seed;
    }
    let out = common
        .out
        .clone()
        .or_else(|| scenario.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out.display())))?;
    Ok((scenario, out))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (scenario, out) = prepare(cli.command.common())?;
    match cli.command {
        Command::Gravity(args) => commands::gravity(&scenario, &out, &args),
        Command::Hop(args) => commands::hop(&scenario, &out, &args),
        Command::Plan(args) => commands::plan(&scenario, &out, &args),
        Command::Swarm(args) => commands::swarm(&scenario, &out, &args),
        Command::Localize(args) => commands::localize(&scenario, &out, &args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("ASTERHOP_LOG")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", report::error_json(&err));
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
