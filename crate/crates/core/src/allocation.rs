//! Two-stage beam allocation: each epoch is split into a wide-beam sensing
//! stage of duty `rho` and a narrow-beam data stage of duty `1 - rho`.
//!
//! `rho` maximizes the expected rate
//! `f(rho) = rho u + (1 - rho) erf(sqrt(rho) v) w`, which is strictly
//! concave on `(0, 1]`, so the optimum is either `rho = 1` or the unique
//! root of `f'`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use libm::erf;

use crate::array::{antennas_for_coverage, BeamConfig, HALF_HPBW_FACTOR};
use crate::config::{RhoVarianceSource, SimConfig};
use crate::error::{IsacError, Result};
use crate::metrics::{achievable_rate, beam_rate, path_gain, EpochLog, EpochRecord, Scheme};
use crate::scenario::{generate_trajectory, GroundTruth, VehicleGeometry};
use crate::sensing::expected_measurements;
use crate::tracking::{ekf_predict, initial_state, nees, sense_cr, steerable, update_or_coast, EkfState, NoiseModel};
use crate::uncertainty::{angle_variance_approx, cr_variances, ScattererStack};

/// Stop bisecting once `|f'|` falls below this.
const DERIVATIVE_TOL: f64 = 1e-10;
/// Stop bisecting once the bracket is narrower than this.
const BRACKET_TOL: f64 = 1e-12;

/// Coefficients of the duty-cycle objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoProblem {
    /// Wide-beam rate, bits/s/Hz.
    pub u: f64,
    /// `delta / (sqrt(2) sigma_phi)`.
    pub v: f64,
    /// Narrow-beam rate, bits/s/Hz.
    pub w: f64,
}

impl RhoProblem {
    pub fn new(u: f64, v: f64, w: f64) -> Result<Self> {
        for (name, x) in [("u", u), ("v", v), ("w", w)] {
            if !(x.is_finite() && x > 0.0) {
                return Err(IsacError::InvalidRateProblem(format!("{name} = {x} must be finite and positive")));
            }
        }
        Ok(Self { u, v, w })
    }
}

/// Half-beamwidth of the narrow beam, `0.89 / (N sin(phi))`.
pub fn narrow_halfbeamwidth(n_narrow: usize, phi_pred: f64) -> Result<f64> {
    let s = phi_pred.sin();
    if !(phi_pred > 0.0 && phi_pred < PI) || s <= 0.0 {
        return Err(IsacError::AngleOutOfRange(phi_pred));
    }
    Ok(HALF_HPBW_FACTOR / (n_narrow as f64 * s))
}

/// Probability that the estimated angle lands within `delta` of the truth
/// when the sensing stage runs at duty `rho`.
pub fn alignment_probability(delta: f64, sigma_phi: f64, rho: f64) -> f64 {
    erf((rho / 2.0).sqrt() * delta / sigma_phi)
}

pub fn objective(rho: f64, p: &RhoProblem) -> f64 {
    rho * p.u + (1.0 - rho) * erf(rho.sqrt() * p.v) * p.w
}

pub fn objective_derivative(rho: f64, p: &RhoProblem) -> f64 {
    let sr = rho.sqrt();
    p.u + p.w * p.v / PI.sqrt() * (1.0 / sr - sr) * (-rho * p.v * p.v).exp() - p.w * erf(sr * p.v)
}

/// Maximizer of [`objective`] on `(0, 1]`.
pub fn optimize_rho(p: &RhoProblem) -> f64 {
    if objective_derivative(1.0, p) >= 0.0 {
        return 1.0;
    }
    // f' -> +inf as rho -> 0 and f'(1) < 0, so [0, 1] brackets the root
    let mut lo = 0.0;
    let mut hi = 1.0;
    loop {
        let mid = 0.5 * (lo + hi);
        let d = objective_derivative(mid, p);
        if d.abs() < DERIVATIVE_TOL || hi - lo < BRACKET_TOL {
            return mid;
        }
        if d > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Standard deviation of the CR angle at full sensing duty, forecast from
/// the prediction.
pub fn forecast_angle_std(
    pred: &EkfState,
    beam: &BeamConfig,
    geometry: &VehicleGeometry,
    cfg: &SimConfig,
) -> Result<f64> {
    let p = pred.state();
    let meas = match expected_measurements(p, geometry, beam, cfg, 1.0) {
        Ok(m) => m,
        Err(IsacError::EmptyMeasurementSet) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    let var = match cfg.rho_variance {
        RhoVarianceSource::Measurement => {
            angle_variance_approx(&ScattererStack::from_measurements(&meas), geometry.cr_offset)?
        }
        RhoVarianceSource::Posterior => {
            let qz = match cr_variances(&meas, geometry.cr_offset, cfg.carrier, cfg.velocity_variance, p.v) {
                Ok(q) => q,
                Err(IsacError::DegenerateGeometry(_) | IsacError::Singular(_)) => return Ok(f64::INFINITY),
                Err(e) => return Err(e),
            };
            let s = pred.m + Matrix3::from_diagonal(&Vector3::from(qz));
            let s_inv = s.try_inverse().ok_or(IsacError::Singular("innovation covariance"))?;
            let post = pred.m - pred.m * s_inv * pred.m;
            post[(0, 0)]
        }
    };
    Ok(var.max(0.0).sqrt())
}

/// Two-stage tracker on a freshly generated trajectory.
pub fn run_isac_ab<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<EpochLog> {
    let truth = generate_trajectory(cfg, rng)?;
    run_isac_ab_with_truth(cfg, &truth, rng)
}

/// Two-stage tracker: each epoch solves for the sensing duty, senses with
/// the wide beam, updates the filter and serves data on a narrow beam
/// steered at the fresh estimate.
pub fn run_isac_ab_with_truth<R: Rng + ?Sized>(cfg: &SimConfig, truth: &GroundTruth, rng: &mut R) -> Result<EpochLog> {
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

        let delta = narrow_halfbeamwidth(cfg.n_narrow, steer)?;
        let sigma_phi = forecast_angle_std(&pred, &beam, &truth.geometry, cfg)?;
        let alpha = path_gain(cfg, p.d);
        let snr_unit = cfg.power * alpha * alpha / cfg.sigma2_comm;
        let v = (delta / (SQRT_2 * sigma_phi)).max(f64::MIN_POSITIVE);
        let problem = RhoProblem::new(
            achievable_rate(snr_unit * n as f64),
            if v.is_finite() { v } else { f64::MAX },
            achievable_rate(snr_unit * cfg.n_narrow as f64),
        )?;
        let rho = optimize_rho(&problem);

        let y = sense_cr(e, &truth.geometry, &beam, cfg, rho, p.v, rng)?;
        state = update_or_coast(&pred, y.as_ref(), cfg)?;
        let est = state.state();
        let narrow_steer = steerable(est.phi);
        let aligned = (est.phi - e.cr.phi).abs() < delta;
        let rate_wide = beam_rate(cfg, e.cr.phi, e.cr.d, steer, n);
        let rate_narrow = if aligned {
            beam_rate(cfg, e.cr.phi, e.cr.d, narrow_steer, cfg.n_narrow)
        } else {
            0.0
        };
        records.push(EpochRecord {
            epoch: e.epoch,
            time: e.time,
            truth: e.cr,
            predicted: p,
            estimated: est,
            n_antennas: n,
            rho,
            rate_wide,
            rate_narrow,
            rate_opt: rho * rate_wide + (1.0 - rho) * rate_narrow,
            rate_obj: objective(rho, &problem),
            steer_error: narrow_steer - e.cr.phi,
            measurement_error: y.map_or(f64::NAN, |y| y.phi - e.cr.phi),
            aligned,
            coasted: y.is_none(),
            nees: nees(&state, e.cr),
        });
    }
    Ok(EpochLog { scheme: Scheme::IsacAb, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn halfbeamwidth_values() {
        assert!((narrow_halfbeamwidth(128, PI / 2.0).unwrap() - 0.006953125).abs() < 1e-15);
        let a = narrow_halfbeamwidth(64, 1.0).unwrap();
        let b = narrow_halfbeamwidth(128, 1.0).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        let c = narrow_halfbeamwidth(128, PI / 6.0).unwrap();
        assert!((c / 0.006953125 - 2.0).abs() < 1e-12);
        assert!(narrow_halfbeamwidth(128, 0.0).is_err());
        assert!(narrow_halfbeamwidth(128, PI).is_err());
    }

    #[test]
    fn alignment_probability_values() {
        assert!((alignment_probability(1e3, 1e-3, 1.0) - 1.0).abs() < 1e-15);
        let pa = alignment_probability(2f64.sqrt(), 1.0, 1.0);
        assert!((pa - 0.8427007929497149).abs() < 1e-12, "{pa}");
        assert!(alignment_probability(0.01, 0.01, 1e-12) < 1e-5);
        assert!(alignment_probability(0.01, 0.01, 0.5) > alignment_probability(0.01, 0.01, 0.4));
    }

    #[test]
    fn objective_edges() {
        let p = RhoProblem { u: 0.5, v: 2.0, w: 0.0 };
        assert!((objective(0.3, &p) - 0.15).abs() < 1e-15);
        assert_eq!(objective_derivative(0.3, &p), 0.5);
        assert_eq!(optimize_rho(&p), 1.0);
        let p = RhoProblem::new(0.5, 2.0, 3.0).unwrap();
        assert_eq!(objective(1.0, &p), 0.5);
        assert!((objective_derivative(1.0, &p) - (0.5 - 3.0 * erf(2.0))).abs() < 1e-15);
        assert!(RhoProblem::new(0.0, 1.0, 1.0).is_err());
        assert!(RhoProblem::new(1.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = RhoProblem::new(0.7, 3.0, 4.0).unwrap();
        let h = 1e-6;
        let fd = (objective(0.5 + h, &p) - objective(0.5 - h, &p)) / (2.0 * h);
        let d = objective_derivative(0.5, &p);
        assert!((fd - d).abs() / d.abs() < 1e-6);
    }

    #[test]
    fn wide_beam_dominance_gives_full_duty() {
        let p = RhoProblem::new(2.0, 0.3, 1.5).unwrap();
        assert_eq!(optimize_rho(&p), 1.0);
    }

    #[test]
    fn optimum_beats_a_grid() {
        let p = RhoProblem::new(0.02, 1.5, 0.045).unwrap();
        let rho = optimize_rho(&p);
        assert!(rho > 0.0 && rho < 1.0);
        let best = objective(rho, &p);
        for i in 1..=10_000 {
            let r = i as f64 / 10_000.0;
            assert!(best >= objective(r, &p) - 1e-9);
        }
        assert!(objective_derivative(rho, &p).abs() < 1e-8);
    }

    #[test]
    fn ab_run_satisfies_rate_identity() {
        let cfg = SimConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let log = run_isac_ab(&cfg, &mut rng).unwrap();
        for r in &log.records {
            assert!(r.rho > 0.0 && r.rho <= 1.0);
            assert_eq!(r.rate_opt, r.rho * r.rate_wide + (1.0 - r.rho) * r.rate_narrow);
            assert!(r.rate_wide >= 0.0 && r.rate_narrow >= 0.0 && r.rate_obj >= 0.0);
            if !r.aligned {
                assert_eq!(r.rate_narrow, 0.0);
            }
        }
    }
}
