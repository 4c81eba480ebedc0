//! Post-matched-filter measurement synthesis and fusion into a CR-level
//! measurement.
//!
//! Measurements are drawn directly at the estimator output: each resolved
//! scatterer yields an angle, a distance and a Doppler shift with Gaussian
//! errors whose variances scale with the inverse receive SNR.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{BeamConfig, HALF_HPBW_FACTOR};
use crate::config::{SimConfig, SPEED_OF_LIGHT};
use crate::error::{IsacError, Result};
use crate::scenario::{doppler_shift, EpochTruth, ScattererTruth, StateVector, VehicleGeometry};

/// Beam gains below this magnitude are treated as nulls.
pub const BEAM_NULL_FLOOR: f64 = 1e-6;

/// One resolved (possibly merged) scatterer.
#[derive(Debug, Clone, PartialEq)]
pub struct ScattererMeasurement {
    /// Indices of the true scatterers merged into this one.
    pub members: Vec<usize>,
    /// Known layout offset from the centroid, m.
    pub offset: [f64; 2],
    /// Measured angle, rad.
    pub angle: f64,
    /// Measured distance, m.
    pub distance: f64,
    /// Measured Doppler shift, Hz.
    pub doppler: f64,
    /// Angle (rad²), distance (m²) and Doppler (Hz²) variances.
    pub variances: [f64; 3],
    /// Reflection coefficient magnitude `|rcs| / (2d)²`.
    pub reflection: f64,
    /// Transmit beam gain magnitude towards the scatterer.
    pub beam_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScattererMeasurementSet {
    pub scatterers: Vec<ScattererMeasurement>,
}

impl ScattererMeasurementSet {
    pub fn len(&self) -> usize {
        self.scatterers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scatterers.is_empty()
    }
}

/// Fused CR measurement with its diagonal covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrMeasurement {
    pub phi: f64,
    pub d: f64,
    pub v: f64,
    /// `(sigma²_phi, sigma²_d, sigma²_v)`.
    pub variances: [f64; 3],
}

/// Receive SNR of one scatterer, `p (rho G) N_t N_r |rcs|² |gain|² / (2d)⁴`.
fn receive_snr(truth: &ScattererTruth, beam: &BeamConfig, cfg: &SimConfig, rho: f64, gain: f64) -> f64 {
    let kappa2 = (beam.n_antennas * cfg.n_rx) as f64;
    let beta2 = truth.rcs.norm_sqr() / (2.0 * truth.distance).powi(4);
    cfg.power * rho * cfg.mf_gain * kappa2 * beta2 * gain * gain
}

/// Angle, distance and Doppler variances of one scatterer.
///
/// `sigma²(i) = a_i² sigma² / SNR`, with the matched-filter gain scaled by
/// the sensing duty `rho`.
pub fn measurement_variances(
    truth: &ScattererTruth,
    beam: &BeamConfig,
    cfg: &SimConfig,
    rho: f64,
) -> Result<[f64; 3]> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(IsacError::InvalidConfig(format!("sensing duty {rho} outside (0, 1]")));
    }
    let gain = beam.gain_towards(truth.angle).norm();
    if gain < BEAM_NULL_FLOOR {
        return Err(IsacError::BeamNull { gain });
    }
    let snr = receive_snr(truth, beam, cfg, rho, gain);
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(IsacError::BeamNull { gain });
    }
    let a = cfg.accuracy_constants();
    Ok(a.map(|ai| ai * ai * cfg.sigma2 / snr))
}

/// Whether a scatterer lies inside the half-power beam around the steering
/// direction.
pub fn illuminated(theta: f64, beam: &BeamConfig) -> bool {
    let half = HALF_HPBW_FACTOR / (beam.n_antennas as f64 * beam.steer_angle.sin());
    (theta - beam.steer_angle).abs() <= half
}

/// Two scatterers are separable when they differ by more than one
/// resolution cell in distance or in Doppler.
pub fn separable(a: (f64, f64), b: (f64, f64), range_res: f64, doppler_res: f64) -> bool {
    (a.0 - b.0).abs() > range_res || (a.1 - b.1).abs() > doppler_res
}

fn power_weight(t: &ScattererTruth) -> f64 {
    t.rcs.norm_sqr() / t.distance.powi(4)
}

/// Power-weighted `(distance, doppler)` of a group.
fn group_cell(truths: &[ScattererTruth], group: &[usize]) -> (f64, f64) {
    let weights: Vec<f64> = group.iter().map(|&i| power_weight(&truths[i])).collect();
    let total: f64 = weights.iter().sum();
    let uniform = !(total > 0.0);
    let mut cell = (0.0, 0.0);
    for (&i, &w) in group.iter().zip(&weights) {
        let w = if uniform { 1.0 / group.len() as f64 } else { w / total };
        cell.0 += w * truths[i].distance;
        cell.1 += w * truths[i].doppler;
    }
    cell
}

/// Partitions scatterers into resolution groups.
///
/// Inseparable pairs are merged and the merged cells re-checked until every
/// pair of groups is separable. Groups are sorted by their first member.
pub fn check_separability(truths: &[ScattererTruth], range_res: f64, doppler_res: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = (0..truths.len()).map(|i| vec![i]).collect();
    loop {
        let cells: Vec<(f64, f64)> = groups.iter().map(|g| group_cell(truths, g)).collect();
        let mut merge = None;
        'search: for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                if !separable(cells[i], cells[j], range_res, doppler_res) {
                    merge = Some((i, j));
                    break 'search;
                }
            }
        }
        match merge {
            Some((i, j)) => {
                let absorbed = groups.remove(j);
                groups[i].extend(absorbed);
                groups[i].sort_unstable();
            }
            None => return groups,
        }
    }
}

/// Noise-free resolved scatterers of one epoch, after illumination,
/// separability merging and beam-null dropping.
///
/// `offsets[k]` is the layout offset of `truth.scatterers[k]`.
pub fn resolve_scatterers(
    truth: &EpochTruth,
    offsets: &[[f64; 2]],
    beam: &BeamConfig,
    cfg: &SimConfig,
    rho: f64,
) -> Result<Vec<ScattererMeasurement>> {
    let lit: Vec<usize> = (0..truth.scatterers.len())
        .filter(|&k| illuminated(truth.scatterers[k].angle, beam))
        .collect();
    let lit_truths: Vec<ScattererTruth> = lit.iter().map(|&k| truth.scatterers[k].clone()).collect();
    let range_res = cfg.range_resolution().unwrap_or(0.0);
    let groups = check_separability(&lit_truths, range_res, cfg.doppler_resolution());

    let mut out = Vec::with_capacity(groups.len());
    for group in groups {
        let mut info = [0.0; 3];
        let mut weight = 0.0;
        let mut position = [0.0; 2];
        let mut offset = [0.0; 2];
        let mut reflection2 = 0.0;
        let mut gain_weighted = 0.0;
        let mut members = Vec::with_capacity(group.len());
        for &local in &group {
            let t = &lit_truths[local];
            let var = match measurement_variances(t, beam, cfg, rho) {
                Ok(v) => v,
                Err(IsacError::BeamNull { .. }) => continue,
                Err(e) => return Err(e),
            };
            let k = lit[local];
            members.push(k);
            for i in 0..3 {
                info[i] += 1.0 / var[i];
            }
            let w = power_weight(t).max(f64::MIN_POSITIVE);
            weight += w;
            for i in 0..2 {
                position[i] += w * t.position[i];
                offset[i] += w * offsets[k][i];
            }
            reflection2 += t.rcs.norm_sqr() / (2.0 * t.distance).powi(4);
            gain_weighted += w * beam.gain_towards(t.angle).norm();
        }
        if members.is_empty() {
            continue;
        }
        let position = position.map(|p| p / weight);
        let angle = position[1].atan2(position[0]);
        out.push(ScattererMeasurement {
            members,
            offset: offset.map(|o| o / weight),
            angle,
            distance: position[0].hypot(position[1]),
            doppler: doppler_shift(truth.cr.v, angle, cfg.carrier),
            variances: info.map(|s| 1.0 / s),
            reflection: reflection2.sqrt(),
            beam_gain: gain_weighted / weight,
        });
    }
    Ok(out)
}

/// Synthesizes the measurement set for one epoch.
///
/// In zero-noise mode the Gaussian draws are skipped but variances are
/// still reported.
pub fn synthesize_measurements<R: Rng + ?Sized>(
    truth: &EpochTruth,
    offsets: &[[f64; 2]],
    beam: &BeamConfig,
    cfg: &SimConfig,
    rho: f64,
    rng: &mut R,
) -> Result<ScattererMeasurementSet> {
    let mut scatterers = resolve_scatterers(truth, offsets, beam, cfg, rho)?;
    if scatterers.is_empty() {
        return Err(IsacError::EmptyMeasurementSet);
    }
    if !cfg.zero_noise {
        for m in &mut scatterers {
            let z: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(rng));
            m.angle += z[0] * m.variances[0].sqrt();
            m.distance += z[1] * m.variances[1].sqrt();
            m.doppler += z[2] * m.variances[2].sqrt();
        }
    }
    Ok(ScattererMeasurementSet { scatterers })
}

/// Noise-free measurements of a unit-RCS vehicle whose CR sits at `state`.
///
/// Used to forecast measurement quality from a predicted state.
pub fn expected_measurements(
    state: StateVector,
    geometry: &VehicleGeometry,
    beam: &BeamConfig,
    cfg: &SimConfig,
    rho: f64,
) -> Result<ScattererMeasurementSet> {
    let truth = unit_rcs_epoch(state, geometry, cfg);
    let scatterers = resolve_scatterers(&truth, &geometry.scatterer_offsets, beam, cfg, rho)?;
    if scatterers.is_empty() {
        return Err(IsacError::EmptyMeasurementSet);
    }
    Ok(ScattererMeasurementSet { scatterers })
}

/// Epoch truth for a unit-RCS vehicle whose CR sits at `state`.
pub fn unit_rcs_epoch(state: StateVector, geometry: &VehicleGeometry, cfg: &SimConfig) -> EpochTruth {
    let (sin, cos) = state.phi.sin_cos();
    let cr_position = [state.d * cos, state.d * sin];
    let centroid = [cr_position[0] - geometry.cr_offset[0], cr_position[1] - geometry.cr_offset[1]];
    let scatterers = geometry
        .scatterer_offsets
        .iter()
        .map(|off| {
            let position = [centroid[0] + off[0], centroid[1] + off[1]];
            let angle = position[1].atan2(position[0]);
            ScattererTruth {
                position,
                angle,
                distance: position[0].hypot(position[1]),
                doppler: doppler_shift(state.v, angle, cfg.carrier),
                rcs: Complex64::new(1.0, 0.0),
            }
        })
        .collect();
    EpochTruth { epoch: 0, time: 0.0, centroid, cr_position, cr: state, scatterers }
}

/// Centroid estimate from the measured scatterers.
///
/// Each scatterer's known layout offset is removed before averaging, so
/// the estimate stays unbiased when scatterers are dropped or merged. For a
/// full layout whose offsets sum to zero this is the plain polar average.
pub fn fuse_centroid(meas: &ScattererMeasurementSet) -> Result<[f64; 2]> {
    if meas.is_empty() {
        return Err(IsacError::EmptyMeasurementSet);
    }
    let k = meas.len() as f64;
    let mut c = [0.0; 2];
    for s in &meas.scatterers {
        let (sin, cos) = s.angle.sin_cos();
        c[0] += s.distance * cos - s.offset[0];
        c[1] += s.distance * sin - s.offset[1];
    }
    Ok(c.map(|x| x / k))
}

/// Weighted least-squares (maximum likelihood) speed from Doppler shifts,
/// using measured angles.
pub fn mle_velocity(meas: &ScattererMeasurementSet, carrier: f64) -> Result<f64> {
    if meas.is_empty() {
        return Err(IsacError::EmptyMeasurementSet);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for s in &meas.scatterers {
        let cos = s.angle.cos();
        num += s.doppler * cos / s.variances[2];
        den += cos * cos / s.variances[2];
    }
    if !(den >= 1e-12) {
        return Err(IsacError::DegenerateGeometry(den));
    }
    Ok(SPEED_OF_LIGHT / (2.0 * carrier) * num / den)
}

/// CR angle and distance from a centroid estimate.
///
/// The angle is `atan(y / x)` moved to `(pi/2, pi)` when `x < 0`.
pub fn cr_measurement(
    centroid: [f64; 2],
    v_hat: f64,
    offset: [f64; 2],
    variances: [f64; 3],
) -> Result<CrMeasurement> {
    let x = centroid[0] + offset[0];
    let y = centroid[1] + offset[1];
    if x == 0.0 && y == 0.0 {
        return Err(IsacError::Singular("CR estimate at the array origin"));
    }
    let phi = if x == 0.0 {
        PI / 2.0 * y.signum()
    } else if x < 0.0 {
        (y / x).atan() + PI
    } else {
        (y / x).atan()
    };
    Ok(CrMeasurement { phi, d: x.hypot(y), v: v_hat, variances })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::generate_trajectory;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn point(position: [f64; 2], speed: f64, rcs: Complex64) -> ScattererTruth {
        let angle = position[1].atan2(position[0]);
        ScattererTruth {
            position,
            angle,
            distance: position[0].hypot(position[1]),
            doppler: doppler_shift(speed, angle, 30e9),
            rcs,
        }
    }

    fn unit() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn variance_matches_arithmetic_oracle() {
        let cfg = SimConfig::default();
        let d = 64.83;
        let theta: f64 = 0.5;
        let t = point([d * theta.cos(), d * theta.sin()], 20.0, unit());
        let beam = BeamConfig::new(60, theta, 128).unwrap();
        let var = measurement_variances(&t, &beam, &cfg, 1.0).unwrap();
        let kappa_beta = 7680f64.sqrt() / (2.0 * d).powi(2);
        let expected = 1.05e-2f64.powi(2) * 0.15 / (10.0 * kappa_beta * kappa_beta);
        assert!((var[0] / expected - 1.0).abs() < 1e-9);
        let expected_d = 3.5e-2f64.powi(2) * 0.15 / (10.0 * kappa_beta * kappa_beta);
        assert!((var[1] / expected_d - 1.0).abs() < 1e-9);
        assert!((var[2] / var[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn variance_scales_inversely_with_power_and_duty() {
        let mut cfg = SimConfig::default();
        let t = point([30.0, 20.0], 20.0, unit());
        let beam = BeamConfig::new(40, t.angle, 128).unwrap();
        let base = measurement_variances(&t, &beam, &cfg, 1.0).unwrap();
        let half_duty = measurement_variances(&t, &beam, &cfg, 0.5).unwrap();
        cfg.power = 2.0;
        let doubled = measurement_variances(&t, &beam, &cfg, 1.0).unwrap();
        for i in 0..3 {
            assert!((doubled[i] * 2.0 / base[i] - 1.0).abs() < 1e-12);
            assert!((half_duty[i] / (2.0 * base[i]) - 1.0).abs() < 1e-12);
        }
        assert!(measurement_variances(&t, &beam, &cfg, 0.0).is_err());
        assert!(measurement_variances(&t, &beam, &cfg, 1.5).is_err());
    }

    #[test]
    fn beam_null_is_reported() {
        let cfg = SimConfig::default();
        let steer: f64 = 1.2;
        let theta = (steer.cos() + 2.0 / 128.0).acos();
        let t = point([30.0 * theta.cos(), 30.0 * theta.sin()], 20.0, unit());
        let beam = BeamConfig::new(128, steer, 128).unwrap();
        assert!(matches!(
            measurement_variances(&t, &beam, &cfg, 1.0),
            Err(IsacError::BeamNull { .. })
        ));
    }

    #[test]
    fn separability_examples() {
        let truths: Vec<_> = [58.0, 63.0, 65.0]
            .iter()
            .map(|&d| point([d * 0.9f64.cos(), d * 0.9f64.sin()], 20.0, unit()))
            .collect();
        assert_eq!(check_separability(&truths, 0.3, 100.0), vec![vec![0], vec![1], vec![2]]);

        let a = point([40.0, 20.0], 0.0, unit());
        let d = a.distance + 0.1;
        let b = point([d * a.angle.cos(), d * a.angle.sin()], 0.0, unit());
        let groups = check_separability(&[a.clone(), b], 0.3, 100.0);
        assert_eq!(groups, vec![vec![0, 1]]);

        assert_eq!(check_separability(&[a], 0.3, 100.0), vec![vec![0]]);
    }

    #[test]
    fn separated_by_doppler_alone() {
        let a = point([10.0, 20.0], 20.0, unit());
        let mut b = a.clone();
        b.doppler += 150.0;
        assert_eq!(check_separability(&[a, b], 0.3, 100.0).len(), 2);
    }

    #[test]
    fn merged_groups_are_pairwise_separable_and_stable() {
        // chain of points 0.2 m apart: pairwise merges cascade
        let truths: Vec<_> = (0..6)
            .map(|i| {
                let d = 40.0 + 0.2 * i as f64;
                point([d * 0.7f64.cos(), d * 0.7f64.sin()], 0.0, unit())
            })
            .collect();
        let groups = check_separability(&truths, 0.3, 100.0);
        let cells: Vec<_> = groups.iter().map(|g| group_cell(&truths, g)).collect();
        for i in 0..cells.len() {
            for j in i + 1..cells.len() {
                assert!(separable(cells[i], cells[j], 0.3, 100.0));
            }
        }
        let mut seen: Vec<usize> = groups.iter().flatten().copied().collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn full_layout_yields_every_scatterer_at_start() {
        let cfg = SimConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let truth = generate_trajectory(&cfg, &mut rng).unwrap();
        let e = &truth.epochs[0];
        let beam = BeamConfig::new(60, e.cr.phi, 128).unwrap();
        let meas =
            synthesize_measurements(e, &truth.geometry.scatterer_offsets, &beam, &cfg, 1.0, &mut rng).unwrap();
        assert_eq!(meas.len(), 8);
        for s in &meas.scatterers {
            assert!(s.variances.iter().all(|v| v.is_finite() && *v > 0.0));
        }
    }

    #[test]
    fn zero_noise_chain_reproduces_truth() {
        let mut cfg = SimConfig::default();
        cfg.zero_noise = true;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth = generate_trajectory(&cfg, &mut rng).unwrap();
        for e in truth.epochs.iter().step_by(37) {
            let n = crate::array::antennas_for_coverage(e.cr.d, e.cr.phi, cfg.coverage, cfg.n_max);
            let beam = BeamConfig::new(n, e.cr.phi, cfg.n_max).unwrap();
            let meas =
                synthesize_measurements(e, &truth.geometry.scatterer_offsets, &beam, &cfg, 1.0, &mut rng).unwrap();
            let c = fuse_centroid(&meas).unwrap();
            let v = mle_velocity(&meas, cfg.carrier).unwrap();
            let y = cr_measurement(c, v, truth.geometry.cr_offset, [1.0; 3]).unwrap();
            assert!((y.phi - e.cr.phi).abs() < 1e-9, "epoch {}", e.epoch);
            assert!((y.d - e.cr.d).abs() < 1e-9);
            assert!((y.v - e.cr.v).abs() < 1e-9);
        }
    }

    #[test]
    fn empirical_angle_variance_matches() {
        let cfg = SimConfig::default();
        let t = point([30.0, 20.0], 20.0, unit());
        let beam = BeamConfig::new(60, t.angle, 128).unwrap();
        let e = EpochTruth {
            epoch: 0,
            time: 0.0,
            centroid: t.position,
            cr_position: t.position,
            cr: crate::scenario::StateVector::from_position(t.position, 20.0),
            scatterers: vec![t.clone()],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| synthesize_measurements(&e, &[[0.0, 0.0]], &beam, &cfg, 1.0, &mut rng).unwrap().scatterers[0].angle)
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let expected = measurement_variances(&t, &beam, &cfg, 1.0).unwrap()[0];
        assert!((var / expected - 1.0).abs() < 0.05, "{var} vs {expected}");
    }

    fn meas(angle: f64, distance: f64, doppler: f64, var3: f64) -> ScattererMeasurement {
        ScattererMeasurement {
            members: vec![0],
            offset: [0.0, 0.0],
            angle,
            distance,
            doppler,
            variances: [1.0, 1.0, var3],
            reflection: 1.0,
            beam_gain: 1.0,
        }
    }

    #[test]
    fn fuse_single_broadside() {
        let set = ScattererMeasurementSet { scatterers: vec![meas(PI / 2.0, 10.0, 0.0, 1.0)] };
        let c = fuse_centroid(&set).unwrap();
        assert!(c[0].abs() < 1e-12 && (c[1] - 10.0).abs() < 1e-12);
        assert!(fuse_centroid(&ScattererMeasurementSet::default()).is_err());
    }

    #[test]
    fn fuse_matches_direct_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let scatterers: Vec<_> = (0..8)
            .map(|_| {
                let mut m = meas(rng.random_range(0.2..2.9), rng.random_range(10.0..80.0), 0.0, 1.0);
                m.offset = [rng.random_range(-2.5..2.5), rng.random_range(-1.0..1.0)];
                m
            })
            .collect();
        let set = ScattererMeasurementSet { scatterers: scatterers.clone() };
        let c = fuse_centroid(&set).unwrap();
        let x: f64 = scatterers.iter().map(|s| s.distance * s.angle.cos() - s.offset[0]).sum::<f64>() / 8.0;
        let y: f64 = scatterers.iter().map(|s| s.distance * s.angle.sin() - s.offset[1]).sum::<f64>() / 8.0;
        assert!((c[0] - x).abs() < 1e-12 && (c[1] - y).abs() < 1e-12);
    }

    #[test]
    fn velocity_single_and_pair() {
        let fc = 30e9;
        let set = ScattererMeasurementSet { scatterers: vec![meas(0.4, 30.0, 3000.0, 2.0)] };
        let v = mle_velocity(&set, fc).unwrap();
        assert!((v - SPEED_OF_LIGHT * 3000.0 / (2.0 * fc * 0.4f64.cos())).abs() < 1e-9);

        let set = ScattererMeasurementSet {
            scatterers: vec![meas(0.4, 30.0, 3000.0, 1.0), meas(0.6, 30.0, 2900.0, 1.0)],
        };
        let (c1, c2) = (0.4f64.cos(), 0.6f64.cos());
        let expected = SPEED_OF_LIGHT / (2.0 * fc) * (3000.0 * c1 + 2900.0 * c2) / (c1 * c1 + c2 * c2);
        assert!((mle_velocity(&set, fc).unwrap() - expected).abs() < 1e-9);

        let set = ScattererMeasurementSet { scatterers: vec![meas(PI / 2.0, 30.0, 0.0, 1.0)] };
        assert!(matches!(mle_velocity(&set, fc), Err(IsacError::DegenerateGeometry(_))));
    }

    #[test]
    fn cr_measurement_examples() {
        let y = cr_measurement([60.0, 20.0], 20.0, [1.5, 0.5], [1.0; 3]).unwrap();
        assert!((y.phi - 0.32175).abs() < 1e-5);
        assert!((y.d - 64.826).abs() < 1e-3);

        let y = cr_measurement([-30.0, 20.0], 20.0, [1.5, 0.5], [1.0; 3]).unwrap();
        assert!(y.phi > PI / 2.0 && y.phi < PI);
        assert!((y.phi - 20.5f64.atan2(-28.5)).abs() < 1e-12);

        let y = cr_measurement([3.0, 4.0], 1.0, [0.0, 0.0], [1.0; 3]).unwrap();
        assert!((y.phi - 4f64.atan2(3.0)).abs() < 1e-12 && (y.d - 5.0).abs() < 1e-12);

        assert!(cr_measurement([-1.5, -0.5], 0.0, [1.5, 0.5], [1.0; 3]).is_err());
    }
}
