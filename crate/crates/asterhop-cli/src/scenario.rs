//! The scenario file: one JSON document that pins everything a run needs —
//! shape model, bulk properties, module configurations, and the seed — so
//! that a run is reproducible from the file alone.
//!
//! Unknown keys are hard errors: a typo in an experiment config must fail
//! loudly, not silently fall back to a default.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use asterhop::lambert::{ShootingConfig, StmMode};
use asterhop::localization::ScanConfig;
use asterhop::mesh::{LoadOptions, ShapeModel};
use asterhop::planner::PlannerConfig;
use asterhop::swarm::{Placement, StepMode, SwarmConfig};

use crate::CliError;

/// The only schema version this binary understands.
pub const SCENARIO_VERSION: u32 = 1;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSpec {
    /// OBJ file, resolved relative to the scenario file's directory.
    pub path: PathBuf,
    /// Uniform scale applied to every vertex (e.g. 1000.0 for a model
    /// authored in kilometres).
    #[serde(default = "one")]
    pub scale: f64,
    /// Translate the model so its centre of mass sits at the origin.
    #[serde(default)]
    pub recenter: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StmSpec {
    FiniteDifference,
    Secant,
}

/// Boundary-value solver settings; defaults mirror the library's.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShootingSpec {
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
    pub damping: f64,
    pub dt: Option<f64>,
    pub stm: StmSpec,
}

impl Default for ShootingSpec {
    fn default() -> Self {
        let lib = ShootingConfig::default();
        ShootingSpec {
            tol: lib.tol,
            max_iter: lib.max_iter,
            fd_step: lib.fd_step,
            damping: lib.damping,
            dt: lib.dt,
            stm: StmSpec::FiniteDifference,
        }
    }
}

impl ShootingSpec {
    pub fn to_config(&self) -> ShootingConfig {
        ShootingConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            fd_step: self.fd_step,
            damping: self.damping,
            dt: self.dt,
            stm: match self.stm {
                StmSpec::FiniteDifference => StmMode::FiniteDifference,
                StmSpec::Secant => StmMode::Secant,
            },
        }
    }
}

/// Range-scanner settings; defaults mirror the library's.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSpec {
    pub azimuth_count: usize,
    pub elevation_count: usize,
    pub max_range: f64,
    pub noise_sigma: f64,
    pub frequency: f64,
}

impl Default for ScanSpec {
    fn default() -> Self {
        let lib = ScanConfig::default();
        ScanSpec {
            azimuth_count: lib.azimuth_count,
            elevation_count: lib.elevation_count,
            max_range: lib.max_range,
            noise_sigma: lib.noise_sigma,
            frequency: lib.frequency,
        }
    }
}

impl ScanSpec {
    pub fn to_config(&self) -> ScanConfig {
        ScanConfig {
            azimuth_count: self.azimuth_count,
            elevation_count: self.elevation_count,
            max_range: self.max_range,
            noise_sigma: self.noise_sigma,
            frequency: self.frequency,
        }
    }
}

/// Route planner settings. `max_hop` and `time_mean` have no sensible
/// universal defaults, so the block is required by the `plan` command;
/// everything else falls back to the library defaults for that pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSpec {
    pub max_hop: f64,
    pub time_mean: f64,
    #[serde(default)]
    pub rrt_iterations: Option<usize>,
    #[serde(default)]
    pub hop_range: Option<[f64; 2]>,
    #[serde(default)]
    pub time_sigma: Option<f64>,
    #[serde(default)]
    pub goal_tolerance: Option<f64>,
    #[serde(default)]
    pub population: Option<usize>,
    #[serde(default)]
    pub generations: Option<usize>,
    #[serde(default)]
    pub mutation_time_sigma: Option<f64>,
    #[serde(default)]
    pub mutation_position_sigma: Option<f64>,
    #[serde(default)]
    pub penalty_weight: Option<f64>,
}

impl PlannerSpec {
    pub fn to_config(&self, shooting: &ShootingSpec) -> PlannerConfig {
        let mut cfg = PlannerConfig::new(self.max_hop, self.time_mean);
        if let Some(v) = self.rrt_iterations {
            cfg.rrt_iterations = v;
        }
        if let Some([low, high]) = self.hop_range {
            cfg.hop_range = (low, high);
        }
        if let Some(v) = self.time_sigma {
            cfg.time_sigma = v;
        }
        if self.goal_tolerance.is_some() {
            cfg.goal_tolerance = self.goal_tolerance;
        }
        if let Some(v) = self.population {
            cfg.population = v;
        }
        if let Some(v) = self.generations {
            cfg.generations = v;
        }
        if let Some(v) = self.mutation_time_sigma {
            cfg.mutation_time_sigma = v;
        }
        if let Some(v) = self.mutation_position_sigma {
            cfg.mutation_position_sigma = v;
        }
        if let Some(v) = self.penalty_weight {
            cfg.penalty_weight = v;
        }
        cfg.shooting = shooting.to_config();
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSpec {
    Kinematic,
    Ballistic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementSpec {
    SeededRandom,
    /// Deployment sites, projected onto the surface at run time.
    Explicit(Vec<[f64; 3]>),
}

/// Dispersion settings. `rovers`, `comm_range`, and `max_hop` are
/// required; the rest falls back to the library defaults for that triple.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwarmSpec {
    pub rovers: usize,
    pub comm_range: f64,
    pub max_hop: f64,
    #[serde(default)]
    pub sensing_range: Option<f64>,
    #[serde(default)]
    pub min_degree: Option<usize>,
    #[serde(default)]
    pub gain: Option<f64>,
    #[serde(default)]
    pub iterations: Option<usize>,
    #[serde(default)]
    pub hop_time: Option<f64>,
    #[serde(default)]
    pub coverage_samples: Option<usize>,
    #[serde(default)]
    pub mode: Option<ModeSpec>,
    #[serde(default)]
    pub placement: Option<PlacementSpec>,
}

impl SwarmSpec {
    pub fn to_config(&self, seed: u64, shooting: &ShootingSpec) -> SwarmConfig {
        let mut cfg = SwarmConfig::new(self.rovers, self.comm_range, self.max_hop);
        if let Some(v) = self.sensing_range {
            cfg.sensing_range = v;
        }
        if let Some(v) = self.min_degree {
            cfg.min_degree = v;
        }
        if let Some(v) = self.gain {
            cfg.gain = v;
        }
        if let Some(v) = self.iterations {
            cfg.iterations = v;
        }
        if let Some(v) = self.hop_time {
            cfg.hop_time = v;
        }
        if let Some(v) = self.coverage_samples {
            cfg.coverage_samples = v;
        }
        cfg.seed = seed;
        cfg.shooting = shooting.to_config();
        cfg
    }

    pub fn mode(&self) -> StepMode {
        match self.mode {
            Some(ModeSpec::Ballistic) => StepMode::Ballistic,
            _ => StepMode::Kinematic,
        }
    }

    pub fn placement(&self, model: &ShapeModel) -> Placement {
        match &self.placement {
            Some(PlacementSpec::Explicit(points)) => Placement::Explicit(
                points
                    .iter()
                    .map(|p| model.project_to_surface(&Vector3::new(p[0], p[1], p[2])))
                    .collect(),
            ),
            _ => Placement::SeededRandom,
        }
    }
}

/// The complete run description. Every command's summary JSON embeds this
/// struct (with any command-line seed override applied), so outputs are
/// reproducible from themselves.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub shape: ShapeSpec,
    /// Bulk density (kg/m³).
    pub density: f64,
    /// Body spin vector (rad/s), body frame.
    #[serde(default)]
    pub omega: [f64; 3],
    /// Override for the gravitational constant (scaled/toy systems).
    #[serde(default)]
    pub gravitational_constant: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Default output directory; `--out` overrides it.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub shooting: Option<ShootingSpec>,
    #[serde(default)]
    pub scan: Option<ScanSpec>,
    #[serde(default)]
    pub planner: Option<PlannerSpec>,
    #[serde(default)]
    pub swarm: Option<SwarmSpec>,
}

impl Scenario {
    /// Read and validate a scenario file. The shape path is rebased onto
    /// the scenario's directory so scenario bundles relocate cleanly.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read scenario {}: {e}", path.display())))?;
        let mut scenario: Scenario = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("scenario {}: {e}", path.display())))?;
        if scenario.version != SCENARIO_VERSION {
            return Err(CliError::Config(format!(
                "scenario version {} unsupported; this binary understands version {SCENARIO_VERSION}",
                scenario.version
            )));
        }
        if !(scenario.density > 0.0) {
            return Err(CliError::Config(format!(
                "density must be positive, got {}",
                scenario.density
            )));
        }
        if !(scenario.shape.scale > 0.0) {
            return Err(CliError::Config(format!(
                "shape scale must be positive, got {}",
                scenario.shape.scale
            )));
        }
        if let Some(g) = scenario.gravitational_constant {
            if !(g > 0.0) {
                return Err(CliError::Config(format!(
                    "gravitational constant override must be positive, got {g}"
                )));
            }
        }
        if scenario.shape.path.is_relative() {
            if let Some(dir) = path.parent() {
                scenario.shape.path = dir.join(&scenario.shape.path);
            }
        }
        Ok(scenario)
    }

    pub fn omega_vector(&self) -> Vector3<f64> {
        Vector3::new(self.omega[0], self.omega[1], self.omega[2])
    }

    pub fn load_shape(&self) -> Result<ShapeModel, CliError> {
        let options = LoadOptions { scale: self.shape.scale, recenter: self.shape.recenter };
        ShapeModel::load(&self.shape.path, &options)
            .map_err(|e| CliError::Mesh(format!("{}: {e}", self.shape.path.display())))
    }

    pub fn shooting_spec(&self) -> ShootingSpec {
        self.shooting.clone().unwrap_or_default()
    }

    pub fn scan_spec(&self) -> ScanSpec {
        self.scan.clone().unwrap_or_default()
    }
}
