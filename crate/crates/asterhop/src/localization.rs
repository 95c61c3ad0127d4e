//! Scan-to-scan self-localization.
//!
//! A hopping rover has no GPS and no landmarks with surveyed coordinates;
//! what it does have is a ranging sensor and a surface that stays put.
//! This module synthesizes LiDAR-like scans of the shape model from a
//! sensor pose, registers consecutive scans with point-to-point ICP
//! (iterative closest point), and chains the incremental transforms into a
//! trajectory estimate.
//!
//! Registration minimizes the mean squared distance
//! `D_ms = (1/n) Σ ‖mᵢ − R dᵢ − t‖²` between a data cloud `D` and a model
//! cloud `M`, alternating exact nearest-neighbour matching with the
//! closed-form rigid alignment of the matched pairs. Both stages are
//! coordinate-descent steps on the same objective, so `D_ms` never
//! increases.

use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::kdtree::KdTree;
use crate::mesh::{Containment, ShapeModel};

#[derive(Debug, Error)]
pub enum LocalizationError {
    #[error("scan configuration invalid: {0}")]
    InvalidConfig(String),
    #[error("sensor origin lies on or inside the body")]
    SensorInsideBody,
    #[error("point cloud needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("matched geometry is rank-deficient (coincident or collinear points)")]
    DegenerateGeometry,
    #[error("need at least 2 scans to chain, got {0}")]
    NotEnoughScans(usize),
    #[error("registration of scan {index} against its predecessor failed: {source}")]
    ChainStep { index: usize, source: Box<LocalizationError> },
}

/// A rigid pose or displacement: rotation followed by translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform { rotation: Rotation3::identity(), translation: Vector3::zeros() }
    }

    pub fn new(rotation: Rotation3<f64>, translation: Vector3<f64>) -> Self {
        RigidTransform { rotation, translation }
    }

    /// `R p + t`.
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let inv = self.rotation.inverse();
        RigidTransform { rotation: inv, translation: -(inv * self.translation) }
    }

    /// Rotation angle (rad) and translation norm (m) — handy as a distance
    /// to the identity. The trace is clamped so that rotations assembled
    /// from floating-point factors (trace a few ulp above 3) don't produce
    /// NaN.
    pub fn magnitude(&self) -> (f64, f64) {
        let cos = ((self.rotation.matrix().trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        (cos.acos(), self.translation.norm())
    }
}

/// An unordered set of range returns in the sensor frame.
#[derive(Debug, Clone, Default)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>) -> Self {
        PointCloud { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Vector3<f64> {
        self.points.iter().sum::<Vector3<f64>>() / self.points.len().max(1) as f64
    }

    /// The cloud with a rigid transform applied to every point.
    pub fn transformed(&self, t: &RigidTransform) -> PointCloud {
        PointCloud { points: self.points.iter().map(|p| t.apply(p)).collect() }
    }
}

/// Synthetic scanner geometry.
#[derive(Debug, Clone, Copy)]
pub struct ScanConfig {
    /// Rays around the sensor's horizontal circle (cell-centred, wraps).
    pub azimuth_count: usize,
    /// Rays from nadir to zenith inclusive.
    pub elevation_count: usize,
    /// Returns beyond this range are dropped (m).
    pub max_range: f64,
    /// Standard deviation of Gaussian range noise (m); zero disables the
    /// noise path entirely.
    pub noise_sigma: f64,
    /// Scan repetition rate (Hz); consumed by scenario drivers, not by the
    /// single-scan synthesis.
    pub frequency: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            azimuth_count: 180,
            elevation_count: 90,
            max_range: 500.0,
            noise_sigma: 0.0,
            frequency: 0.5,
        }
    }
}

impl ScanConfig {
    fn validate(&self) -> Result<(), LocalizationError> {
        if self.azimuth_count < 2 || self.elevation_count < 2 {
            return Err(LocalizationError::InvalidConfig(format!(
                "angular grid must be at least 2×2, got {}×{}",
                self.azimuth_count, self.elevation_count
            )));
        }
        if !(self.max_range > 0.0) {
            return Err(LocalizationError::InvalidConfig(format!(
                "max range must be positive, got {}",
                self.max_range
            )));
        }
        if self.noise_sigma < 0.0 {
            return Err(LocalizationError::InvalidConfig(format!(
                "noise sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        if !(self.frequency > 0.0) {
            return Err(LocalizationError::InvalidConfig(format!(
                "scan frequency must be positive, got {}",
                self.frequency
            )));
        }
        Ok(())
    }
}

/// Ray direction in the sensor frame for one grid cell: azimuth sweeps the
/// sensor x–y plane, elevation runs from −90° (nadir, −z) to +90°.
fn ray_direction(az: f64, el: f64) -> Vector3<f64> {
    Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin())
}

/// Synthesize one scan of `model` from the sensor pose (sensor-to-body
/// transform). Each grid cell casts a single ray; hits within range become
/// sensor-frame points, optionally perturbed along the ray by Gaussian
/// range noise. The grid order is fixed, so a zero-noise scan is a pure
/// function of pose and config.
pub fn simulate_scan<R: Rng>(
    model: &ShapeModel,
    pose: &RigidTransform,
    cfg: &ScanConfig,
    rng: &mut R,
) -> Result<PointCloud, LocalizationError> {
    cfg.validate()?;
    let origin = pose.translation;
    if model.contains(&origin) != Containment::Outside {
        return Err(LocalizationError::SensorInsideBody);
    }
    let noise = if cfg.noise_sigma > 0.0 {
        Some(Normal::new(0.0, cfg.noise_sigma).expect("validated sigma"))
    } else {
        None
    };

    let mut points = Vec::new();
    for j in 0..cfg.elevation_count {
        let el = -std::f64::consts::FRAC_PI_2
            + std::f64::consts::PI * j as f64 / (cfg.elevation_count - 1) as f64;
        for i in 0..cfg.azimuth_count {
            let az = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / cfg.azimuth_count as f64;
            let dir_sensor = ray_direction(az, el);
            let dir_body = pose.rotation * dir_sensor;
            if let Some(hit) = model.ray_intersect(&origin, &dir_body) {
                if hit.distance <= cfg.max_range {
                    let range = match &noise {
                        Some(n) => hit.distance + n.sample(rng),
                        None => hit.distance,
                    };
                    points.push(dir_sensor * range);
                }
            }
        }
    }
    Ok(PointCloud { points })
}

/// Registration options.
#[derive(Debug, Clone, Copy)]
pub struct IcpConfig {
    pub max_iter: usize,
    /// Stop when `D_ms` improves by less than this between iterations (m²).
    pub tol: f64,
    /// Pairs farther apart than this are dropped from the fit (m); the
    /// default keeps every pair.
    pub max_correspondence: f64,
}

impl Default for IcpConfig {
    fn default() -> Self {
        IcpConfig { max_iter: 60, tol: 1e-10, max_correspondence: f64::INFINITY }
    }
}

/// Result of one registration.
#[derive(Debug, Clone)]
pub struct IcpResult {
    /// Transform taking data-cloud points into the model cloud's frame.
    pub transform: RigidTransform,
    /// Final mean squared correspondence distance (m²).
    pub final_dms: f64,
    pub iterations: usize,
    /// False when the iteration cap was reached before `D_ms` stalled; the
    /// returned transform is still the best iterate.
    pub converged: bool,
    /// `D_ms` after each iteration's refit.
    pub dms_history: Vec<f64>,
}

/// Point-to-point ICP: register data cloud `d` against model cloud `m`,
/// starting from `init`.
///
/// Each iteration matches every transformed data point to its exact nearest
/// neighbour in `m`, then refits the total transform in closed form
/// (cross-covariance SVD with reflection correction). Matching and refit
/// both minimize the same mean-square objective, so `D_ms` is
/// non-increasing whenever no correspondences are dropped by the distance
/// cap.
pub fn icp(
    d: &PointCloud,
    m: &PointCloud,
    init: &RigidTransform,
    cfg: &IcpConfig,
) -> Result<IcpResult, LocalizationError> {
    if d.len() < 3 {
        return Err(LocalizationError::TooFewPoints(d.len()));
    }
    if m.len() < 3 {
        return Err(LocalizationError::TooFewPoints(m.len()));
    }
    let tree = KdTree::build(&m.points);
    let cap2 = cfg.max_correspondence * cfg.max_correspondence;

    let mut transform = *init;
    let mut prev_dms = f64::INFINITY;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iter {
        iterations += 1;
        // Matching stage: exact nearest neighbour for every transformed
        // data point. Parallel map, deterministic order.
        let matches: Vec<Option<usize>> = d
            .points
            .par_iter()
            .with_min_len(512)
            .map(|p| {
                let (idx, dist2) = tree.nearest(&transform.apply(p)).expect("non-empty cloud");
                (dist2 <= cap2).then_some(idx)
            })
            .collect();

        // Transformation stage: closed-form rigid fit of the matched pairs,
        // refitting the *total* transform from the raw data cloud.
        let mut n = 0usize;
        let mut c_d = Vector3::zeros();
        let mut c_m = Vector3::zeros();
        for (p, mi) in d.points.iter().zip(&matches) {
            if let Some(mi) = mi {
                n += 1;
                c_d += p;
                c_m += m.points[*mi];
            }
        }
        if n < 3 {
            return Err(LocalizationError::DegenerateGeometry);
        }
        c_d /= n as f64;
        c_m /= n as f64;
        let mut cross = Matrix3::zeros();
        for (p, mi) in d.points.iter().zip(&matches) {
            if let Some(mi) = mi {
                cross += (m.points[*mi] - c_m) * (p - c_d).transpose();
            }
        }
        let rotation = orthogonal_polar_factor(&cross)?;
        let translation = c_m - rotation * c_d;
        transform = RigidTransform { rotation, translation };

        let mut dms = 0.0;
        for (p, mi) in d.points.iter().zip(&matches) {
            if let Some(mi) = mi {
                dms += (m.points[*mi] - transform.apply(p)).norm_squared();
            }
        }
        dms /= n as f64;
        history.push(dms);

        if (prev_dms - dms).abs() < cfg.tol {
            converged = true;
            prev_dms = dms;
            break;
        }
        prev_dms = dms;
    }

    Ok(IcpResult {
        transform,
        final_dms: prev_dms,
        iterations,
        converged,
        dms_history: history,
    })
}

/// Best rotation aligning a matched pair set, from the SVD of its
/// cross-covariance; a reflection in the orthogonal factor is corrected by
/// flipping the smallest-singular-value axis.
fn orthogonal_polar_factor(cross: &Matrix3<f64>) -> Result<Rotation3<f64>, LocalizationError> {
    let svd = nalgebra::SVD::new(*cross, true, true);
    let u = svd.u.expect("svd with u");
    let v_t = svd.v_t.expect("svd with v_t");
    let sv = svd.singular_values;
    // Coincident points give a zero covariance; collinear points leave a
    // one-dimensional column space. Either way the rotation about the
    // deficient directions is unobservable.
    if !(sv[0] > 0.0) || sv[1] <= 1e-12 * sv[0] {
        return Err(LocalizationError::DegenerateGeometry);
    }
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        // nalgebra orders singular values descending: flip the last axis.
        let mut u_fixed = u;
        let last = u_fixed.column(2) * -1.0;
        u_fixed.set_column(2, &last);
        r = u_fixed * v_t;
    }
    Ok(Rotation3::from_matrix_unchecked(r))
}

/// Chain consecutive-scan registrations into absolute poses.
///
/// `poses[0] = init`; each subsequent pose composes the previous one with
/// the ICP increment between scan `k` and scan `k−1`, seeded with the
/// previous increment (constant-velocity prior, identity for the first
/// pair).
pub fn chain_poses(
    scans: &[PointCloud],
    init: &RigidTransform,
    cfg: &IcpConfig,
) -> Result<Vec<RigidTransform>, LocalizationError> {
    if scans.len() < 2 {
        return Err(LocalizationError::NotEnoughScans(scans.len()));
    }
    let mut poses = Vec::with_capacity(scans.len());
    poses.push(*init);
    let mut increment = RigidTransform::identity();
    for k in 1..scans.len() {
        let result = icp(&scans[k], &scans[k - 1], &increment, cfg)
            .map_err(|source| LocalizationError::ChainStep { index: k, source: Box::new(source) })?;
        increment = result.transform;
        poses.push(poses[k - 1].compose(&increment));
    }
    Ok(poses)
}
