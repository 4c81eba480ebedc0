//! First-order variance approximations for the fused CR measurement.
//!
//! The CR angle and distance are smooth functions of the stacked scatterer
//! angles and distances `q = [theta_1..theta_K, d_1..d_K]`. Linearizing them
//! at the measured stack gives `sigma² ~= J Sigma Jᵀ` with diagonal `Sigma`.

use crate::config::{VelocityVarianceModel, SPEED_OF_LIGHT};
use crate::error::{IsacError, Result};
use crate::sensing::ScattererMeasurementSet;

/// Measured scatterer angles and distances with their variances.
#[derive(Debug, Clone, PartialEq)]
pub struct ScattererStack {
    pub angles: Vec<f64>,
    pub distances: Vec<f64>,
    /// Known layout offsets, removed before fusion.
    pub offsets: Vec<[f64; 2]>,
    pub angle_vars: Vec<f64>,
    pub distance_vars: Vec<f64>,
}

impl ScattererStack {
    pub fn from_measurements(meas: &ScattererMeasurementSet) -> Self {
        let s = &meas.scatterers;
        Self {
            angles: s.iter().map(|m| m.angle).collect(),
            distances: s.iter().map(|m| m.distance).collect(),
            offsets: s.iter().map(|m| m.offset).collect(),
            angle_vars: s.iter().map(|m| m.variances[0]).collect(),
            distance_vars: s.iter().map(|m| m.variances[1]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// `(Delta X, Delta Y)`: K times the CR position estimate.
    pub fn cr_sums(&self, cr_offset: [f64; 2]) -> (f64, f64) {
        let k = self.len() as f64;
        let mut sx = k * cr_offset[0];
        let mut sy = k * cr_offset[1];
        for ((&t, &d), o) in self.angles.iter().zip(&self.distances).zip(&self.offsets) {
            let (sin, cos) = t.sin_cos();
            sx += d * cos - o[0];
            sy += d * sin - o[1];
        }
        (sx, sy)
    }

    /// Gradient of the CR angle with respect to `[theta.., d..]`.
    pub fn angle_gradient(&self, cr_offset: [f64; 2]) -> Result<Vec<f64>> {
        let (dx, dy) = self.cr_sums(cr_offset);
        let r2 = dx * dx + dy * dy;
        if !(r2 > 0.0) {
            return Err(IsacError::Singular("CR estimate at the array origin"));
        }
        let k = self.len();
        let mut g = vec![0.0; 2 * k];
        for i in 0..k {
            let (sin, cos) = self.angles[i].sin_cos();
            let d = self.distances[i];
            g[i] = (d * cos * dx + d * sin * dy) / r2;
            g[k + i] = (sin * dx - cos * dy) / r2;
        }
        Ok(g)
    }

    /// Gradient of the CR distance with respect to `[theta.., d..]`.
    pub fn distance_gradient(&self, cr_offset: [f64; 2]) -> Result<Vec<f64>> {
        let (dx, dy) = self.cr_sums(cr_offset);
        let r = dx.hypot(dy);
        if !(r > 0.0) {
            return Err(IsacError::Singular("CR estimate at the array origin"));
        }
        let k = self.len();
        let kr = k as f64 * r;
        let mut g = vec![0.0; 2 * k];
        for i in 0..k {
            let (sin, cos) = self.angles[i].sin_cos();
            let d = self.distances[i];
            g[i] = (-d * sin * dx + d * cos * dy) / kr;
            g[k + i] = (cos * dx + sin * dy) / kr;
        }
        Ok(g)
    }

    fn quadratic_form(&self, g: &[f64]) -> f64 {
        let k = self.len();
        (0..k)
            .map(|i| g[i] * g[i] * self.angle_vars[i] + g[k + i] * g[k + i] * self.distance_vars[i])
            .sum()
    }
}

/// Approximate variance of the fused CR angle, rad².
pub fn angle_variance_approx(stack: &ScattererStack, cr_offset: [f64; 2]) -> Result<f64> {
    let g = stack.angle_gradient(cr_offset)?;
    Ok(stack.quadratic_form(&g))
}

/// Approximate variance of the fused CR distance, m².
pub fn distance_variance_approx(stack: &ScattererStack, cr_offset: [f64; 2]) -> Result<f64> {
    let g = stack.distance_gradient(cr_offset)?;
    Ok(stack.quadratic_form(&g))
}

/// Coarse speed variance `(Aᵀ Q⁻¹ A)⁻¹` with `A_k = 2 f_c cos(theta_k) / c`,
/// ignoring the angle errors inside `A`.
pub fn velocity_variance_approx(angles: &[f64], doppler_vars: &[f64], carrier: f64) -> Result<f64> {
    let scale = 2.0 * carrier / SPEED_OF_LIGHT;
    let mut info = 0.0;
    let mut geometry = 0.0;
    for (&t, &var) in angles.iter().zip(doppler_vars) {
        let cos = t.cos();
        geometry += cos * cos / var;
        info += (scale * cos).powi(2) / var;
    }
    if !(geometry >= 1e-12) {
        return Err(IsacError::DegenerateGeometry(geometry));
    }
    Ok(1.0 / info)
}

/// Speed variance including first-order propagation of the angle noise
/// through the weighted least-squares speed estimate.
///
/// The Doppler part equals [`velocity_variance_approx`]. The angle part is
/// `sum_k (dv/dtheta_k)² sigma²_k(1)`, linearized at Doppler shifts
/// consistent with `speed`. Linearizing at the measured shifts instead
/// collapses near broadside, where the estimate itself is biased to zero.
pub fn velocity_variance_linearized(
    angles: &[f64],
    angle_vars: &[f64],
    doppler_vars: &[f64],
    speed: f64,
    carrier: f64,
) -> Result<f64> {
    let coarse = velocity_variance_approx(angles, doppler_vars, carrier)?;
    let s2: f64 = angles.iter().zip(doppler_vars).map(|(t, var)| t.cos().powi(2) / var).sum();
    let angle_part: f64 = angles
        .iter()
        .zip(doppler_vars)
        .zip(angle_vars)
        .map(|((&t, &var), &avar)| {
            let (sin, cos) = t.sin_cos();
            let grad = speed * sin * cos / (var * s2);
            grad * grad * avar
        })
        .sum();
    Ok(coarse + angle_part)
}

/// Variances `(sigma²_phi, sigma²_d, sigma²_v)` for a measurement set.
///
/// `speed` is the linearization point of the linearized speed variance and
/// is ignored by the coarse model.
pub fn cr_variances(
    meas: &ScattererMeasurementSet,
    cr_offset: [f64; 2],
    carrier: f64,
    model: VelocityVarianceModel,
    speed: f64,
) -> Result<[f64; 3]> {
    let stack = ScattererStack::from_measurements(meas);
    let dvars: Vec<f64> = meas.scatterers.iter().map(|m| m.variances[2]).collect();
    let sigma_v = match model {
        VelocityVarianceModel::Coarse => velocity_variance_approx(&stack.angles, &dvars, carrier)?,
        VelocityVarianceModel::Linearized => {
            velocity_variance_linearized(&stack.angles, &stack.angle_vars, &dvars, speed, carrier)?
        }
    };
    Ok([
        angle_variance_approx(&stack, cr_offset)?,
        distance_variance_approx(&stack, cr_offset)?,
        sigma_v,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// CR angle and distance by direct fusion of a stacked vector.
    fn fused(q: &[f64], offsets: &[[f64; 2]], cr: [f64; 2]) -> (f64, f64) {
        let k = offsets.len();
        let mut x = 0.0;
        let mut y = 0.0;
        for i in 0..k {
            x += q[k + i] * q[i].cos() - offsets[i][0];
            y += q[k + i] * q[i].sin() - offsets[i][1];
        }
        let x = x / k as f64 + cr[0];
        let y = y / k as f64 + cr[1];
        (y.atan2(x), x.hypot(y))
    }

    fn random_stack(rng: &mut ChaCha8Rng, k: usize) -> ScattererStack {
        ScattererStack {
            angles: (0..k).map(|_| rng.random_range(0.3..2.8)).collect(),
            distances: (0..k).map(|_| rng.random_range(15.0..80.0)).collect(),
            offsets: (0..k).map(|_| [rng.random_range(-2.5..2.5), rng.random_range(-1.0..1.0)]).collect(),
            angle_vars: (0..k).map(|_| rng.random_range(1e-4..1e-2)).collect(),
            distance_vars: (0..k).map(|_| rng.random_range(1e-3..1e-1)).collect(),
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = 1e-6;
        for _ in 0..50 {
            let k = rng.random_range(1..9);
            let s = random_stack(&mut rng, k);
            let cr = [rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0)];
            let q: Vec<f64> = s.angles.iter().chain(&s.distances).copied().collect();
            let ga = s.angle_gradient(cr).unwrap();
            let gd = s.distance_gradient(cr).unwrap();
            let scale_a = ga.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let scale_d = gd.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for j in 0..2 * k {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[j] += h;
                qm[j] -= h;
                let (ap, dp) = fused(&qp, &s.offsets, cr);
                let (am, dm) = fused(&qm, &s.offsets, cr);
                let fa = (ap - am) / (2.0 * h);
                let fd = (dp - dm) / (2.0 * h);
                assert!((fa - ga[j]).abs() <= 1e-5 * scale_a, "angle grad {j}: {fa} vs {}", ga[j]);
                assert!((fd - gd[j]).abs() <= 1e-5 * scale_d, "distance grad {j}: {fd} vs {}", gd[j]);
            }
        }
    }

    #[test]
    fn single_scatterer_passes_through() {
        let s = ScattererStack {
            angles: vec![0.8],
            distances: vec![30.0],
            offsets: vec![[0.0, 0.0]],
            angle_vars: vec![2e-4],
            distance_vars: vec![3e-2],
        };
        let ga = s.angle_gradient([0.0, 0.0]).unwrap();
        let gd = s.distance_gradient([0.0, 0.0]).unwrap();
        assert!((ga[0] - 1.0).abs() < 1e-12 && ga[1].abs() < 1e-12);
        assert!(gd[0].abs() < 1e-12 && (gd[1] - 1.0).abs() < 1e-12);
        assert!((angle_variance_approx(&s, [0.0, 0.0]).unwrap() - 2e-4).abs() < 1e-15);
        assert!((distance_variance_approx(&s, [0.0, 0.0]).unwrap() - 3e-2).abs() < 1e-14);
    }

    #[test]
    fn variances_scale_linearly_and_vanish_with_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random_stack(&mut rng, 8);
        let cr = [1.5, 0.5];
        let a = angle_variance_approx(&s, cr).unwrap();
        let d = distance_variance_approx(&s, cr).unwrap();
        assert!(a > 0.0 && d > 0.0);
        let mut scaled = s.clone();
        scaled.angle_vars.iter_mut().for_each(|v| *v *= 3.0);
        scaled.distance_vars.iter_mut().for_each(|v| *v *= 3.0);
        assert!((angle_variance_approx(&scaled, cr).unwrap() / a - 3.0).abs() < 1e-12);
        assert!((distance_variance_approx(&scaled, cr).unwrap() / d - 3.0).abs() < 1e-12);
        let mut zero = s;
        zero.angle_vars.iter_mut().for_each(|v| *v = 0.0);
        zero.distance_vars.iter_mut().for_each(|v| *v = 0.0);
        assert_eq!(angle_variance_approx(&zero, cr).unwrap(), 0.0);
        assert_eq!(distance_variance_approx(&zero, cr).unwrap(), 0.0);
    }

    #[test]
    fn singular_at_origin() {
        let s = ScattererStack {
            angles: vec![0.5],
            distances: vec![0.0],
            offsets: vec![[0.0, 0.0]],
            angle_vars: vec![1.0],
            distance_vars: vec![1.0],
        };
        assert!(angle_variance_approx(&s, [0.0, 0.0]).is_err());
        assert!(distance_variance_approx(&s, [0.0, 0.0]).is_err());
    }

    #[test]
    fn velocity_variance_reductions() {
        let fc = 30e9;
        let v1 = velocity_variance_approx(&[0.4], &[2.0], fc).unwrap();
        let expected = 2.0 * SPEED_OF_LIGHT.powi(2) / (2.0 * fc * 0.4f64.cos()).powi(2);
        assert!((v1 / expected - 1.0).abs() < 1e-12);

        let angles = [0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65];
        let vars = [0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08];
        let v = velocity_variance_approx(&angles, &vars, fc).unwrap();
        let doubled: Vec<f64> = vars.iter().map(|x| 2.0 * x).collect();
        assert!((velocity_variance_approx(&angles, &doubled, fc).unwrap() / v - 2.0).abs() < 1e-12);

        let a = DMatrix::from_iterator(8, 1, angles.iter().map(|t| 2.0 * fc * t.cos() / SPEED_OF_LIGHT));
        let qinv = DMatrix::from_diagonal(&DVector::from_iterator(8, vars.iter().map(|x| 1.0 / x)));
        let m = (a.transpose() * qinv * a).try_inverse().unwrap();
        assert!((m[(0, 0)] / v - 1.0).abs() < 1e-12);

        assert!(velocity_variance_approx(&[std::f64::consts::FRAC_PI_2], &[1.0], fc).is_err());
    }

    #[test]
    fn linearized_velocity_variance_matches_finite_differences() {
        let fc = 30e9;
        let scale = SPEED_OF_LIGHT / (2.0 * fc);
        let speed = 20.0;
        let angles = [0.3, 0.34, 0.37, 0.41];
        let dopplers = angles.map(|t: f64| 2.0 * speed * t.cos() / scale / 2.0);
        let avars = [0.06, 0.05, 0.07, 0.06];
        let dvars = [0.06, 0.05, 0.07, 0.06];
        let estimate = |t: &[f64]| {
            let s1: f64 = (0..4).map(|k| dopplers[k] * t[k].cos() / dvars[k]).sum();
            let s2: f64 = (0..4).map(|k| t[k].cos().powi(2) / dvars[k]).sum();
            scale * s1 / s2
        };
        assert!((estimate(&angles) - speed).abs() < 1e-9);
        let mut angle_part = 0.0;
        for k in 0..4 {
            let mut p = angles;
            let mut m = angles;
            p[k] += 1e-6;
            m[k] -= 1e-6;
            let g = (estimate(&p) - estimate(&m)) / 2e-6;
            angle_part += g * g * avars[k];
        }
        let coarse = velocity_variance_approx(&angles, &dvars, fc).unwrap();
        let lin = velocity_variance_linearized(&angles, &avars, &dvars, speed, fc).unwrap();
        assert!(((lin - coarse) / angle_part - 1.0).abs() < 1e-5);
        let still = velocity_variance_linearized(&angles, &avars, &dvars, 0.0, fc).unwrap();
        assert_eq!(still, coarse);
    }
}
