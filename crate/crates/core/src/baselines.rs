//! Comparison trackers: an EKF locked onto a single scatterer, and a
//! simplified auxiliary-beam-pair (ABP) tracker driven by pilot amplitude
//! comparison.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{beam_gain, BeamConfig, HALF_HPBW_FACTOR};
use crate::config::SimConfig;
use crate::error::{IsacError, Result};
use crate::metrics::{beam_rate, path_gain, EpochLog, EpochRecord, Scheme};
use crate::scenario::{generate_trajectory, EpochTruth, GroundTruth, StateVector, VehicleGeometry};
use crate::tracking::{ekf_predict, initial_state, nees, sense_cr, steerable, update_or_coast, NoiseModel};

/// Bisection steps when inverting the amplitude ratio.
const RATIO_INVERSION_STEPS: usize = 100;

/// Baseline settings drawn from the simulation config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    pub antennas: usize,
    /// Half-width of the ABP search window, rad.
    pub half_range: f64,
    /// Offset of each auxiliary beam from the window centre, in units of
    /// `1/N` in the cosine domain.
    pub pair_offset: f64,
    /// Pilot SNR multiplier relative to one data symbol.
    pub pilot_gain: f64,
}

impl BaselineConfig {
    pub fn from_config(cfg: &SimConfig) -> Result<Self> {
        if !(cfg.abp_half_range > 0.0) {
            return Err(IsacError::InvalidConfig("abp_half_range must be positive".into()));
        }
        if !(cfg.abp_pair_offset > 0.0 && cfg.abp_pair_offset < 2.0) {
            return Err(IsacError::InvalidConfig("abp_pair_offset must lie in (0, 2)".into()));
        }
        Ok(Self {
            antennas: cfg.baseline_antennas,
            half_range: cfg.abp_half_range,
            pair_offset: cfg.abp_pair_offset,
            pilot_gain: cfg.abp_pilot_gain,
        })
    }
}

/// Point-target tracker on a freshly generated trajectory.
pub fn run_ekf_point<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<EpochLog> {
    let truth = generate_trajectory(cfg, rng)?;
    run_ekf_point_with_truth(cfg, &truth, rng)
}

/// Tracks one randomly chosen scatterer as if it were a point target, with
/// a fixed full-aperture beam. The data beam follows the scatterer, so the
/// CR is served off-axis.
pub fn run_ekf_point_with_truth<R: Rng + ?Sized>(
    cfg: &SimConfig,
    truth: &GroundTruth,
    rng: &mut R,
) -> Result<EpochLog> {
    let k = truth.geometry.scatterer_offsets.len();
    if k < 2 {
        return Err(IsacError::InvalidConfig("point-target baseline needs at least two scatterers".into()));
    }
    let base = BaselineConfig::from_config(cfg)?;
    let target = rng.random_range(0..k);
    let point = VehicleGeometry {
        length: 0.0,
        width: 0.0,
        cr_offset: [0.0, 0.0],
        scatterer_offsets: vec![[0.0, 0.0]],
    };
    let single = |e: &EpochTruth| -> (EpochTruth, StateVector) {
        let s = e.scatterers[target].clone();
        let state = StateVector::from_position(s.position, e.cr.v);
        let epoch = EpochTruth {
            epoch: e.epoch,
            time: e.time,
            centroid: s.position,
            cr_position: s.position,
            cr: state,
            scatterers: vec![s],
        };
        (epoch, state)
    };

    let noise = NoiseModel::from_config(cfg);
    let (_, first) = single(&truth.epochs[0]);
    let mut state = initial_state(cfg, first, rng);
    let mut records = Vec::with_capacity(truth.epochs.len().saturating_sub(1));
    for e in &truth.epochs[1..] {
        let (point_truth, point_state) = single(e);
        let pred = ekf_predict(&state, &noise, cfg.epoch);
        let p = pred.state();
        let steer = steerable(p.phi);
        let beam = BeamConfig::new(base.antennas, steer, base.antennas.max(cfg.n_max))?;
        let y = sense_cr(&point_truth, &point, &beam, cfg, 1.0, p.v, rng)?;
        state = update_or_coast(&pred, y.as_ref(), cfg)?;
        let rate = beam_rate(cfg, e.cr.phi, e.cr.d, steer, base.antennas);
        let half = HALF_HPBW_FACTOR / (base.antennas as f64 * steer.sin());
        records.push(EpochRecord {
            epoch: e.epoch,
            time: e.time,
            truth: e.cr,
            predicted: p,
            estimated: state.state(),
            n_antennas: base.antennas,
            rho: 1.0,
            rate_wide: rate,
            rate_narrow: 0.0,
            rate_opt: 1.0 * rate + 0.0 * 0.0,
            rate_obj: rate,
            steer_error: steer - e.cr.phi,
            measurement_error: y.map_or(f64::NAN, |y| y.phi - point_state.phi),
            aligned: (steer - e.cr.phi).abs() < half,
            coasted: y.is_none(),
            nees: nees(&state, point_state),
        });
    }
    Ok(EpochLog { scheme: Scheme::EkfPoint, records })
}

/// Noise-free amplitude-comparison ratio `(|A|² - |B|²) / (|A|² + |B|²)`
/// for a cosine-domain offset `x` of the target from the pair centre.
pub fn abp_ratio(x: f64, pair_offset: f64, n: usize) -> f64 {
    let o = pair_offset / n as f64;
    let a = dirichlet_power(x - o, n);
    let b = dirichlet_power(x + o, n);
    let total = a + b;
    if total > 0.0 {
        (a - b) / total
    } else {
        0.0
    }
}

fn dirichlet_power(x: f64, n: usize) -> f64 {
    // gain magnitude depends on the cosine difference only
    beam_gain((x.clamp(-1.0, 1.0)).acos(), PI / 2.0, n).norm_sqr()
}

/// Half-width of the cosine-domain region where [`abp_ratio`] is
/// monotonic: the far beam's first null.
pub fn abp_monotonic_limit(pair_offset: f64, n: usize) -> f64 {
    (2.0 - pair_offset) / n as f64
}

/// Inverts [`abp_ratio`] on its monotonic region by bisection; ratios
/// beyond the region's end values saturate at its edges.
pub fn invert_abp_ratio(ratio: f64, pair_offset: f64, n: usize) -> f64 {
    let limit = abp_monotonic_limit(pair_offset, n);
    let mut lo = -limit;
    let mut hi = limit;
    if ratio <= abp_ratio(lo, pair_offset, n) {
        return lo;
    }
    if ratio >= abp_ratio(hi, pair_offset, n) {
        return hi;
    }
    for _ in 0..RATIO_INVERSION_STEPS {
        let mid = 0.5 * (lo + hi);
        if abp_ratio(mid, pair_offset, n) < ratio {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One noisy pilot observation of the CR through a beam steered at `steer`.
fn pilot_power<R: Rng + ?Sized>(
    cfg: &SimConfig,
    base: &BaselineConfig,
    cr: StateVector,
    steer: f64,
    rng: &mut R,
) -> f64 {
    let alpha = path_gain(cfg, cr.d);
    let amplitude = (cfg.power * base.pilot_gain * base.antennas as f64).sqrt() * alpha;
    let signal = beam_gain(cr.phi, steer, base.antennas) * amplitude;
    let s = (cfg.sigma2_comm / 2.0).sqrt();
    let (zr, zi): (f64, f64) = if cfg.zero_noise {
        (0.0, 0.0)
    } else {
        (StandardNormal.sample(rng), StandardNormal.sample(rng))
    };
    (signal + num_complex::Complex64::new(s * zr, s * zi)).norm_sqr()
}

/// Auxiliary-beam-pair update: returns the new angle estimate, always inside
/// the window `[centre - half_range, centre + half_range]`.
pub fn abp_step<R: Rng + ?Sized>(
    cfg: &SimConfig,
    base: &BaselineConfig,
    centre: f64,
    cr: StateVector,
    rng: &mut R,
) -> f64 {
    let n = base.antennas as f64;
    let o = base.pair_offset / n;
    let c = centre.cos();
    let steer_a = (c + o).clamp(-1.0, 1.0).acos();
    let steer_b = (c - o).clamp(-1.0, 1.0).acos();
    // |A| peaks when cos(phi) = cos(centre) + o, i.e. at positive x
    let pa = pilot_power(cfg, base, cr, steer_a, rng);
    let pb = pilot_power(cfg, base, cr, steer_b, rng);
    let ratio = if pa + pb > 0.0 { (pa - pb) / (pa + pb) } else { 0.0 };
    let x = invert_abp_ratio(ratio, base.pair_offset, base.antennas);
    let estimate = (c + x).clamp(-1.0, 1.0).acos();
    let lo = (centre - base.half_range).max(0.0);
    let hi = (centre + base.half_range).min(PI);
    estimate.clamp(lo, hi)
}

/// ABP tracker on a freshly generated trajectory.
pub fn run_abp<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<EpochLog> {
    let truth = generate_trajectory(cfg, rng)?;
    run_abp_with_truth(cfg, &truth, rng)
}

/// Communication-only beam tracking: each epoch a pilot beam pair around
/// the previous estimate yields a new estimate, fed back without delay, and
/// the full-aperture data beam is steered there.
pub fn run_abp_with_truth<R: Rng + ?Sized>(cfg: &SimConfig, truth: &GroundTruth, rng: &mut R) -> Result<EpochLog> {
    let base = BaselineConfig::from_config(cfg)?;
    let first = truth.epochs.first().ok_or_else(|| IsacError::InvalidConfig("empty trajectory".into()))?;
    let mut estimate = initial_state(cfg, first.cr, rng).x[0];
    let mut records = Vec::with_capacity(truth.epochs.len().saturating_sub(1));
    for e in &truth.epochs[1..] {
        let centre = estimate;
        estimate = abp_step(cfg, &base, centre, e.cr, rng);
        let steer = steerable(estimate);
        let rate = beam_rate(cfg, e.cr.phi, e.cr.d, steer, base.antennas);
        let half = HALF_HPBW_FACTOR / (base.antennas as f64 * steer.sin());
        let unknown = |phi: f64| StateVector { phi, d: f64::NAN, v: f64::NAN };
        records.push(EpochRecord {
            epoch: e.epoch,
            time: e.time,
            truth: e.cr,
            predicted: unknown(centre),
            estimated: unknown(estimate),
            n_antennas: base.antennas,
            rho: 1.0,
            rate_wide: rate,
            rate_narrow: 0.0,
            rate_opt: 1.0 * rate + 0.0 * 0.0,
            rate_obj: rate,
            steer_error: steer - e.cr.phi,
            measurement_error: estimate - e.cr.phi,
            aligned: (steer - e.cr.phi).abs() < half,
            coasted: false,
            nees: f64::NAN,
        });
    }
    Ok(EpochLog { scheme: Scheme::Abp, records })
}
