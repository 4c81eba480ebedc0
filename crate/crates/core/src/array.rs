//! Half-wavelength ULA: steering vectors, beam gain and beamwidth-driven
//! antenna allocation.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{IsacError, Result};

/// Half-power beamwidth constant for half-wavelength spacing.
pub const HPBW_FACTOR: f64 = 1.78;
/// Half of [`HPBW_FACTOR`].
pub const HALF_HPBW_FACTOR: f64 = 0.89;

/// Transmit beam: active antenna count and steering direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamConfig {
    pub n_antennas: usize,
    pub steer_angle: f64,
}

impl BeamConfig {
    pub fn new(n_antennas: usize, steer_angle: f64, n_max: usize) -> Result<Self> {
        if n_antennas == 0 || n_antennas > n_max {
            return Err(IsacError::InvalidConfig(format!(
                "antenna count {n_antennas} outside 1..={n_max}"
            )));
        }
        if !(steer_angle > 0.0 && steer_angle < PI) {
            return Err(IsacError::AngleOutOfRange(steer_angle));
        }
        Ok(Self { n_antennas, steer_angle })
    }

    /// Radar array gain factor `sqrt(N_t N_r)`.
    pub fn radar_gain_factor(&self, n_rx: usize) -> f64 {
        ((self.n_antennas * n_rx) as f64).sqrt()
    }

    /// Communication array gain factor `sqrt(N_t)`.
    pub fn comm_gain_factor(&self) -> f64 {
        (self.n_antennas as f64).sqrt()
    }

    /// Normalized gain towards a point at `theta`.
    pub fn gain_towards(&self, theta: f64) -> Complex64 {
        beam_gain(theta, self.steer_angle, self.n_antennas)
    }
}

/// Unit-norm steering vector, element `m` is `exp(-j pi m cos(theta)) / sqrt(N)`.
pub fn steering_vector(theta: f64, n: usize) -> Vec<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    let phase = -PI * theta.cos();
    (0..n)
        .map(|m| Complex64::from_polar(scale, phase * m as f64))
        .collect()
}

/// `a(theta)^H a(phi)` in closed form.
///
/// With `x = cos(theta) - cos(phi)` the sum is a Dirichlet kernel,
/// `exp(j pi (N-1) x / 2) sin(pi N x / 2) / (N sin(pi x / 2))`, whose first
/// null sits at `|x| = 2 / N`.
pub fn beam_gain(theta: f64, phi: f64, n: usize) -> Complex64 {
    let nf = n as f64;
    let x = theta.cos() - phi.cos();
    let half = 0.5 * PI * x;
    let den = nf * half.sin();
    let modulus = if den.abs() < 1e-12 {
        // limit of the kernel near x = 0 (mod 2), sign from cos(N half) / cos(half)
        (nf * half).cos() / half.cos()
    } else {
        (nf * half).sin() / den
    };
    Complex64::from_polar(1.0, (nf - 1.0) * half) * modulus
}

fn check_sin(phi: f64) -> Result<f64> {
    let s = phi.sin();
    if !(phi > 0.0 && phi < PI) || s <= 0.0 {
        return Err(IsacError::AngleOutOfRange(phi));
    }
    Ok(s)
}

/// Half-power beamwidth `1.78 / (N sin(phi))`, rad.
pub fn half_power_beamwidth(n: usize, phi: f64) -> Result<f64> {
    let s = check_sin(phi)?;
    Ok(HPBW_FACTOR / (n as f64 * s))
}

/// Width covered by the half-power beam at distance `d`, m.
pub fn coverage_width(d: f64, phi: f64, n: usize) -> Result<f64> {
    let s = check_sin(phi)?;
    Ok(2.0 * d * (HALF_HPBW_FACTOR / (n as f64 * s)).tan())
}

/// Antennas needed so the beam covers `coverage` metres at the predicted
/// position, clamped to `1..=n_max`.
pub fn antennas_for_coverage(d_pred: f64, phi_pred: f64, coverage: f64, n_max: usize) -> usize {
    let denom = (coverage / (2.0 * d_pred)).atan() * phi_pred.sin();
    let raw = HALF_HPBW_FACTOR / denom;
    if !(raw > 0.0) || raw.is_nan() {
        // predicted angle outside (0, pi): fall back to the widest aperture
        return n_max;
    }
    let floor = raw.floor();
    if floor >= n_max as f64 {
        n_max
    } else {
        (floor as usize).max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inner(theta: f64, phi: f64, n: usize) -> Complex64 {
        steering_vector(theta, n)
            .iter()
            .zip(steering_vector(phi, n))
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    #[test]
    fn single_element_and_broadside_vectors() {
        let v = steering_vector(1.1, 1);
        assert_eq!(v.len(), 1);
        assert!((v[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        let v = steering_vector(PI / 2.0, 16);
        for e in v {
            assert!((e - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn four_element_vector_at_sixty_degrees() {
        let v = steering_vector(PI / 3.0, 4);
        for (m, e) in v.iter().enumerate() {
            let expected = Complex64::from_polar(0.5, -PI * m as f64 / 2.0);
            assert!((e - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn matched_gain_has_unit_modulus() {
        for &theta in &[0.1, 0.7, PI / 2.0, 2.9] {
            for &n in &[1usize, 7, 60, 128] {
                assert!((beam_gain(theta, theta, n).norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dirichlet_null_at_two_over_n() {
        let n = 128;
        let phi: f64 = 1.2;
        let theta = (phi.cos() + 2.0 / n as f64).acos();
        assert!(beam_gain(theta, phi, n).norm() < 1e-12);
        assert!(inner(theta, phi, n).norm() < 1e-12);
        // 1/N is inside the main lobe for this steering convention
        let theta = (phi.cos() + 1.0 / n as f64).acos();
        assert!((beam_gain(theta, phi, n).norm() - 2.0 / PI).abs() < 1e-3);
    }

    #[test]
    fn two_element_hand_value() {
        let theta = PI / 2.0;
        let phi = 0.5f64.acos();
        let g = beam_gain(theta, phi, 2);
        assert!((g.norm() - 2f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((g - inner(theta, phi, 2)).norm() < 1e-12);
    }

    #[test]
    fn beamwidth_values() {
        assert!((half_power_beamwidth(128, PI / 2.0).unwrap() - 0.01390625).abs() < 1e-15);
        let full = half_power_beamwidth(64, 1.0).unwrap();
        let half = half_power_beamwidth(128, 1.0).unwrap();
        assert!((full / half - 2.0).abs() < 1e-12);
        let r = half_power_beamwidth(60, PI / 6.0).unwrap() / half_power_beamwidth(60, PI / 2.0).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        assert!(half_power_beamwidth(10, 0.0).is_err());
        assert!(half_power_beamwidth(10, PI).is_err());
    }

    #[test]
    fn coverage_width_scaling() {
        let w1 = coverage_width(30.0, 1.0, 20).unwrap();
        let w2 = coverage_width(60.0, 1.0, 20).unwrap();
        assert!((w2 / w1 - 2.0).abs() < 1e-12);
        assert!(coverage_width(30.0, 1.0, 1_000_000).unwrap() < 1e-4);
        assert!(coverage_width(30.0, 0.0, 8).is_err());
    }

    #[test]
    fn antenna_count_for_the_initial_geometry() {
        let n = antennas_for_coverage(64.83, 0.32175, 6.0, 128);
        assert_eq!(n, 60);
        let w = coverage_width(64.83, 0.32175, n).unwrap();
        assert!(w >= 6.0 && w < 6.2, "coverage {w}");
    }

    #[test]
    fn antenna_count_clamps() {
        assert_eq!(antennas_for_coverage(1e6, 1.0, 6.0, 128), 128);
        assert_eq!(antennas_for_coverage(20.0, 1.0, 1e9, 128), 1);
        assert_eq!(antennas_for_coverage(20.0, -0.1, 6.0, 128), 128);
    }

    #[test]
    fn beam_config_bounds() {
        assert!(BeamConfig::new(0, 1.0, 128).is_err());
        assert!(BeamConfig::new(129, 1.0, 128).is_err());
        assert!(BeamConfig::new(8, 0.0, 128).is_err());
        let b = BeamConfig::new(60, 1.0, 128).unwrap();
        assert!((b.radar_gain_factor(128) - 7680f64.sqrt()).abs() < 1e-12);
        assert!((b.comm_gain_factor() - 60f64.sqrt()).abs() < 1e-12);
    }
}
