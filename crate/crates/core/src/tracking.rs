//! Extended Kalman filter over the CR state and the single-beam
//! (dynamic beamwidth) tracking loop.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{antennas_for_coverage, BeamConfig};
use crate::config::SimConfig;
use crate::error::{IsacError, Result};
use crate::metrics::{beam_rate, EpochLog, EpochRecord, Scheme};
use crate::scenario::{evolve_state, generate_trajectory, EpochTruth, GroundTruth, StateVector, VehicleGeometry};
use crate::sensing::{cr_measurement, fuse_centroid, mle_velocity, synthesize_measurements, CrMeasurement};
use crate::uncertainty::cr_variances;

/// Smallest steering angle handed to the array, rad.
const STEER_MARGIN: f64 = 1e-6;

/// Filter estimate and its MSE matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EkfState {
    pub x: Vector3<f64>,
    pub m: Matrix3<f64>,
}

impl EkfState {
    pub fn state(&self) -> StateVector {
        StateVector::from_vector(&self.x)
    }
}

/// Process noise covariance `Q_w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub process: Matrix3<f64>,
}

impl NoiseModel {
    pub fn from_config(cfg: &SimConfig) -> Self {
        let s = [cfg.sigma_phi_bar(), cfg.sigma_d_bar, cfg.sigma_v_bar];
        Self { process: Matrix3::from_diagonal(&Vector3::from(s.map(|x| x * x))) }
    }
}

/// Jacobian of the one-step evolution `h` at `x = (phi, d, v)`.
pub fn jacobian_h(x: &Vector3<f64>, dt: f64) -> Matrix3<f64> {
    let (phi, d, v) = (x[0], x[1], x[2]);
    let (sin, cos) = phi.sin_cos();
    Matrix3::new(
        1.0 + v * dt * cos / d,
        -v * dt * sin / (d * d),
        dt * sin / d,
        v * dt * sin,
        1.0,
        -dt * cos,
        0.0,
        0.0,
        1.0,
    )
}

fn symmetrize(m: Matrix3<f64>) -> Matrix3<f64> {
    (m + m.transpose()) * 0.5
}

pub fn ekf_predict(s: &EkfState, noise: &NoiseModel, dt: f64) -> EkfState {
    let h = jacobian_h(&s.x, dt);
    let x = evolve_state(s.state(), dt).to_vector();
    EkfState { x, m: symmetrize(h * s.m * h.transpose() + noise.process) }
}

/// Measurement update with identity observation. `joseph` selects the
/// Joseph-form covariance update.
pub fn ekf_update(pred: &EkfState, y: &CrMeasurement, joseph: bool) -> Result<EkfState> {
    let qz = Matrix3::from_diagonal(&Vector3::from(y.variances));
    let s = pred.m + qz;
    let s_inv = s.try_inverse().ok_or(IsacError::Singular("innovation covariance"))?;
    let k = pred.m * s_inv;
    let innovation = Vector3::new(y.phi, y.d, y.v) - pred.x;
    let x = pred.x + k * innovation;
    let i_k = Matrix3::identity() - k;
    let m = if joseph {
        i_k * pred.m * i_k.transpose() + k * qz * k.transpose()
    } else {
        i_k * pred.m
    };
    Ok(EkfState { x, m: symmetrize(m) })
}

/// Normalized estimation error squared, NaN when `M` is singular.
pub fn nees(s: &EkfState, truth: StateVector) -> f64 {
    let e = s.x - truth.to_vector();
    match s.m.try_inverse() {
        Some(inv) => (e.transpose() * inv * e)[(0, 0)],
        None => f64::NAN,
    }
}

/// Initial estimate: truth perturbed by `init_error_scale` process-noise
/// standard deviations, with the matching diagonal MSE matrix.
pub fn initial_state<R: Rng + ?Sized>(cfg: &SimConfig, truth: StateVector, rng: &mut R) -> EkfState {
    let s = [cfg.sigma_phi_bar(), cfg.sigma_d_bar, cfg.sigma_v_bar].map(|x| x * cfg.init_error_scale);
    let mut x = truth.to_vector();
    if !cfg.zero_noise {
        for i in 0..3 {
            let z: f64 = StandardNormal.sample(rng);
            x[i] += s[i] * z;
        }
    }
    EkfState { x, m: Matrix3::from_diagonal(&Vector3::from(s.map(|v| v * v))) }
}

/// Clamps a steering direction into the open interval the array accepts.
/// A non-finite direction falls back to broadside.
pub fn steerable(phi: f64) -> f64 {
    if phi.is_finite() {
        phi.clamp(STEER_MARGIN, std::f64::consts::PI - STEER_MARGIN)
    } else {
        std::f64::consts::FRAC_PI_2
    }
}

/// One sensing stage: measure, fuse and attach approximate variances.
///
/// `speed_hint` is the predicted speed, used to linearize the speed
/// variance. Returns `None` when nothing usable was measured, in which case the
/// tracker coasts on its prediction. In zero-noise mode the reported
/// covariance is zero.
pub fn sense_cr<R: Rng + ?Sized>(
    truth: &EpochTruth,
    geometry: &VehicleGeometry,
    beam: &BeamConfig,
    cfg: &SimConfig,
    rho: f64,
    speed_hint: f64,
    rng: &mut R,
) -> Result<Option<CrMeasurement>> {
    let mut attempt = || -> Result<CrMeasurement> {
        let meas = synthesize_measurements(truth, &geometry.scatterer_offsets, beam, cfg, rho, rng)?;
        let centroid = fuse_centroid(&meas)?;
        let v = mle_velocity(&meas, cfg.carrier)?;
        let variances = cr_variances(&meas, geometry.cr_offset, cfg.carrier, cfg.velocity_variance, speed_hint)?;
        cr_measurement(centroid, v, geometry.cr_offset, variances)
    };
    match attempt() {
        // exact measurements carry zero covariance, so the update adopts them
        Ok(y) if cfg.zero_noise => Ok(Some(CrMeasurement { variances: [0.0; 3], ..y })),
        Ok(y) if y.variances.iter().all(|v| v.is_finite() && *v > 0.0) => Ok(Some(y)),
        Ok(_) => Ok(None),
        Err(IsacError::EmptyMeasurementSet | IsacError::DegenerateGeometry(_) | IsacError::Singular(_)) => {
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Applies a measurement when present, otherwise keeps the prediction.
pub fn update_or_coast(pred: &EkfState, y: Option<&CrMeasurement>, cfg: &SimConfig) -> Result<EkfState> {
    match y {
        Some(y) => ekf_update(pred, y, cfg.joseph_update),
        None => Ok(*pred),
    }
}

/// Single-beam tracker on a freshly generated trajectory.
pub fn run_isac_db<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<EpochLog> {
    let truth = generate_trajectory(cfg, rng)?;
    run_isac_db_with_truth(cfg, &truth, rng)
}

/// Single-beam tracker: each epoch the beam is steered at the predicted CR
/// angle with just enough antennas to cover the vehicle, and the same beam
/// carries data at full duty.
pub fn run_isac_db_with_truth<R: Rng + ?Sized>(cfg: &SimConfig, truth: &GroundTruth, rng: &mut R) -> Result<EpochLog> {
    let noise = NoiseModel::from_config(cfg);
    let first = truth.epochs.first().ok_or_else(|| IsacError::InvalidConfig("empty trajectory".into()))?;
    let mut state = initial_state(cfg, first.cr, rng);
    let mut records = Vec::with_capacity(truth.epochs.len().saturating_sub(1));
    for e in &truth.epochs[1..] {
        let pred = ekf_predict(&state, &noise, cfg.epoch);
        let p = pred.state();
        let steer = steerable(p.phi);
        let n = antennas_for_coverage(p.d, steer, cfg.coverage, cfg.n_max);
        let beam = BeamConfig::new(n, steer, cfg.n_max)?;
        let y = sense_cr(e, &truth.geometry, &beam, cfg, 1.0, p.v, rng)?;
        state = update_or_coast(&pred, y.as_ref(), cfg)?;
        let rate = beam_rate(cfg, e.cr.phi, e.cr.d, steer, n);
        let half = crate::array::HALF_HPBW_FACTOR / (n as f64 * steer.sin());
        records.push(EpochRecord {
            epoch: e.epoch,
            time: e.time,
            truth: e.cr,
            predicted: p,
            estimated: state.state(),
            n_antennas: n,
            rho: 1.0,
            rate_wide: rate,
            rate_narrow: 0.0,
            rate_opt: 1.0 * rate + 0.0 * 0.0,
            rate_obj: rate,
            steer_error: steer - e.cr.phi,
            measurement_error: y.map_or(f64::NAN, |y| y.phi - e.cr.phi),
            aligned: (steer - e.cr.phi).abs() < half,
            coasted: y.is_none(),
            nees: nees(&state, e.cr),
        });
    }
    Ok(EpochLog { scheme: Scheme::IsacDb, records })
}
