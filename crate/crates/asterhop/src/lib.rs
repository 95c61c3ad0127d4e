//! Surface-hopping mobility toolkit for small-body rovers.
//!
//! Wheeled locomotion is impractical on asteroids and small moons: surface
//! gravity is micro-g, so wheels shed traction and any push sends the vehicle
//! tumbling. Hopping — short ballistic arcs launched by reaction wheels or
//! thrusters — is the mobility mode that works, and everything in this crate
//! exists to design, simulate, and monitor hops.
//!
//! The crate is organised as a pipeline over a single shared ingredient, a
//! watertight triangle mesh of the body:
//!
//! * [`mesh`] — shape-model ingest, validation, and the geometric queries
//!   (containment, surface sampling, projection, ray casting) every other
//!   module leans on.
//! * [`gravity`] — the constant-density polyhedral gravity model: exact
//!   potential, acceleration, gradient matrix, and Laplacian of the meshed
//!   body, valid right down to the surface.
//! * [`dynamics`] — ballistic flight in the rotating body frame, with impact
//!   detection and escape bookkeeping.
//! * [`lambert`] — the boundary-value hop solver: find the launch velocity
//!   that lands a rover on a chosen target after a prescribed flight time.
//! * [`localization`] — simulated range scans, point-to-point ICP, and
//!   scan-to-scan odometry for reconstructing where the rover actually went.
//! * [`planner`] — sampling-based hop-sequence generation over the surface
//!   and an evolutionary optimizer that minimises total launch effort under
//!   launch-cone, landing-cone, and escape-speed constraints.
//! * [`swarm`] — virtual-force coverage control for a team of hoppers that
//!   must spread out without breaking their communication links.
//!
//! All positions and velocities are expressed in the body-fixed rotating
//! frame, in SI units (metres, seconds, kilograms, radians).

pub mod dynamics;
pub mod gravity;
pub mod kdtree;
pub mod lambert;
pub mod localization;
pub mod mesh;
pub mod planner;
pub mod swarm;

pub use dynamics::{Environment, HopTrajectory, RoverState};
pub use gravity::GravityField;
pub use mesh::{ShapeModel, SurfacePoint};

/// Newtonian gravitational constant, m^3 kg^-1 s^-2.
pub const GRAVITATIONAL_CONSTANT: f64 = 6.674_30e-11;
