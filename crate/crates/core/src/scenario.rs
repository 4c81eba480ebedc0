//! Ground truth: vehicle trajectory, scatterer layout and RCS draws, plus
//! the deterministic state-evolution model used by the trackers.
//!
//! Truth is propagated with exact Cartesian kinematics. [`evolve_state`] is
//! the tracker's first-order model of the same motion.

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{SimConfig, SPEED_OF_LIGHT};
use crate::error::{IsacError, Result};

/// Kinematic state of a point as seen from the RSU array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    /// Angle relative to the array axis, rad.
    pub phi: f64,
    /// Distance to the array, m.
    pub d: f64,
    /// Speed along the negative x axis, m/s.
    pub v: f64,
}

impl StateVector {
    pub fn new(phi: f64, d: f64, v: f64) -> Result<Self> {
        if !(phi > 0.0 && phi < std::f64::consts::PI) {
            return Err(IsacError::AngleOutOfRange(phi));
        }
        if !(d > 0.0) {
            return Err(IsacError::InvalidConfig(format!("distance must be positive, got {d}")));
        }
        Ok(Self { phi, d, v })
    }

    /// Polar state of a point at `position` relative to the array.
    pub fn from_position(position: [f64; 2], v: f64) -> Self {
        Self {
            phi: position[1].atan2(position[0]),
            d: position[0].hypot(position[1]),
            v,
        }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.phi, self.d, self.v)
    }

    pub fn from_vector(x: &Vector3<f64>) -> Self {
        Self { phi: x[0], d: x[1], v: x[2] }
    }
}

/// One-step state evolution `h(x)` of a point moving parallel to the array.
pub fn evolve_state(x: StateVector, dt: f64) -> StateVector {
    let (sin, cos) = x.phi.sin_cos();
    StateVector {
        phi: x.phi + x.v * dt * sin / x.d,
        d: x.d - x.v * dt * cos,
        v: x.v,
    }
}

/// Scatterer placement inside the vehicle rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// Cell-centred grid whose aspect follows the rectangle.
    Grid,
    /// Independent uniform draws.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleGeometry {
    pub length: f64,
    pub width: f64,
    /// CR position relative to the centroid, m.
    pub cr_offset: [f64; 2],
    /// Scatterer positions relative to the centroid, m.
    pub scatterer_offsets: Vec<[f64; 2]>,
}

impl VehicleGeometry {
    pub fn from_config<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Self {
        let placement = if cfg.random_layout { Placement::Random } else { Placement::Grid };
        Self {
            length: cfg.vehicle_length,
            width: cfg.vehicle_width,
            cr_offset: [cfg.cr_dx, cfg.cr_dy],
            scatterer_offsets: scatterer_layout(
                cfg.vehicle_length,
                cfg.vehicle_width,
                cfg.scatterers,
                placement,
                rng,
            ),
        }
    }
}

/// Grid shape `(columns along the length, rows along the width)` for `k`
/// points, the factor pair whose aspect is closest to `length / width`.
fn grid_shape(k: usize, length: f64, width: f64) -> (usize, usize) {
    let target = (length / width).ln();
    (1..=k)
        .filter(|c| k % c == 0)
        .map(|c| (c, k / c))
        .min_by(|a, b| {
            let ea = ((a.0 as f64 / a.1 as f64).ln() - target).abs();
            let eb = ((b.0 as f64 / b.1 as f64).ln() - target).abs();
            ea.total_cmp(&eb)
        })
        .unwrap_or((k, 1))
}

/// Local scatterer offsets, centred on the vehicle centroid.
///
/// `rng` is only consumed for [`Placement::Random`].
pub fn scatterer_layout<R: Rng + ?Sized>(
    length: f64,
    width: f64,
    k: usize,
    placement: Placement,
    rng: &mut R,
) -> Vec<[f64; 2]> {
    let k = k.max(1);
    match placement {
        Placement::Grid => {
            let (cols, rows) = grid_shape(k, length, width);
            let mut out = Vec::with_capacity(k);
            for i in 0..cols {
                for j in 0..rows {
                    out.push([
                        -length / 2.0 + length * (i as f64 + 0.5) / cols as f64,
                        -width / 2.0 + width * (j as f64 + 0.5) / rows as f64,
                    ]);
                }
            }
            out
        }
        Placement::Random => (0..k)
            .map(|_| {
                [
                    rng.random_range(-length / 2.0..=length / 2.0),
                    rng.random_range(-width / 2.0..=width / 2.0),
                ]
            })
            .collect(),
    }
}

/// Truth for one scatterer at one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScattererTruth {
    /// Position relative to the RSU, m.
    pub position: [f64; 2],
    pub angle: f64,
    pub distance: f64,
    /// Radial Doppler shift, Hz.
    pub doppler: f64,
    /// Complex radar cross section (Swerling I draw).
    pub rcs: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochTruth {
    pub epoch: usize,
    pub time: f64,
    pub centroid: [f64; 2],
    pub cr_position: [f64; 2],
    pub cr: StateVector,
    pub scatterers: Vec<ScattererTruth>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub geometry: VehicleGeometry,
    pub epochs: Vec<EpochTruth>,
}

/// Doppler shift of a point at angle `theta` moving at `speed`, Hz.
pub fn doppler_shift(speed: f64, theta: f64, carrier: f64) -> f64 {
    2.0 * speed * theta.cos() * carrier / SPEED_OF_LIGHT
}

/// Zero-mean, unit-variance circularly symmetric complex Gaussian draw.
pub fn swerling_rcs<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid std");
    Complex64::new(normal.sample(rng), normal.sample(rng))
}

/// Builds the full trajectory. The RNG supplies the layout (when random)
/// and a fresh RCS per scatterer and epoch.
pub fn generate_trajectory<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<GroundTruth> {
    cfg.validate()?;
    let geometry = VehicleGeometry::from_config(cfg, rng);
    generate_with_geometry(cfg, geometry, rng)
}

pub fn generate_with_geometry<R: Rng + ?Sized>(
    cfg: &SimConfig,
    geometry: VehicleGeometry,
    rng: &mut R,
) -> Result<GroundTruth> {
    let n = cfg.epochs();
    let mut epochs = Vec::with_capacity(n);
    for epoch in 0..n {
        let time = epoch as f64 * cfg.epoch;
        let centroid = [cfg.x_0 - cfg.speed * time - cfg.rsu_x, cfg.y_0 - cfg.rsu_y];
        let cr_position = [centroid[0] + geometry.cr_offset[0], centroid[1] + geometry.cr_offset[1]];
        let mut points = Vec::with_capacity(geometry.scatterer_offsets.len() + 1);
        points.push(cr_position);
        let scatterers: Vec<ScattererTruth> = geometry
            .scatterer_offsets
            .iter()
            .map(|off| {
                let position = [centroid[0] + off[0], centroid[1] + off[1]];
                points.push(position);
                let angle = position[1].atan2(position[0]);
                ScattererTruth {
                    position,
                    angle,
                    distance: position[0].hypot(position[1]),
                    doppler: doppler_shift(cfg.speed, angle, cfg.carrier),
                    rcs: swerling_rcs(rng),
                }
            })
            .collect();
        // every point must stay strictly in front of the array
        if points.iter().any(|p| !(p[1] > 0.0)) {
            return Err(IsacError::TrajectoryThroughOrigin { epoch });
        }
        epochs.push(EpochTruth {
            epoch,
            time,
            centroid,
            cr_position,
            cr: StateVector::from_position(cr_position, cfg.speed),
            scatterers,
        });
    }
    Ok(GroundTruth { geometry, epochs })
}
