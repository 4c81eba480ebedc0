//! Simulation configuration.
//!
//! The configuration file is flat TOML (`key = value` per line, `#` comments).
//! Keys follow the symbols of the reference parameter table in ASCII, e.g.
//! `delta_T`, `N_t_max`, `sigma_phi_bar_deg`. Every key is optional; missing
//! keys take the reference defaults listed in [`SimConfig::default`].

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{IsacError, Result};

/// Propagation speed used throughout, m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Which angle variance feeds the time-splitting optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoVarianceSource {
    /// Variance of the filtered angle estimate after a full-duty (rho = 1)
    /// measurement update, predicted from the current MSE matrix.
    Posterior,
    /// First-order approximation of the raw CR angle measurement variance at
    /// rho = 1, evaluated on the predicted geometry.
    Measurement,
}

/// Variance attached to the Doppler speed estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityVarianceModel {
    /// Doppler noise only, angles treated as exact.
    Coarse,
    /// Doppler noise plus first-order propagation of the angle noise.
    Linearized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Observation horizon, s.
    #[serde(rename = "T")]
    pub duration: f64,
    /// Epoch length, s.
    #[serde(rename = "delta_T")]
    pub epoch: f64,
    /// Carrier frequency, Hz.
    #[serde(rename = "f_c")]
    pub carrier: f64,
    /// Transmit power (linear).
    #[serde(rename = "p_n")]
    pub power: f64,
    /// Required beam coverage width at the vehicle, m.
    #[serde(rename = "delta_d")]
    pub coverage: f64,
    /// Vehicle speed along the negative x axis, m/s.
    #[serde(rename = "v")]
    pub speed: f64,
    /// CR offset from the vehicle centroid, m.
    #[serde(rename = "delta_x")]
    pub cr_dx: f64,
    #[serde(rename = "delta_y")]
    pub cr_dy: f64,
    /// Antennas of the fixed narrow communication beam.
    #[serde(rename = "N_t_narrow")]
    pub n_narrow: usize,
    /// Maximum number of transmit antennas.
    #[serde(rename = "N_t_max")]
    pub n_max: usize,
    /// Measurement-accuracy constants for angle, distance and Doppler.
    pub a_1: f64,
    pub a_2: f64,
    pub a_3: f64,
    /// Receive antennas.
    #[serde(rename = "N_r")]
    pub n_rx: usize,
    /// Resolvable scatterers on the vehicle.
    #[serde(rename = "K")]
    pub scatterers: usize,
    /// Process-noise standard deviations (angle in degrees).
    pub sigma_phi_bar_deg: f64,
    pub sigma_d_bar: f64,
    pub sigma_v_bar: f64,
    /// Radar receiver noise variance.
    pub sigma2: f64,
    /// Communication receiver noise variance.
    #[serde(rename = "sigma2_C")]
    pub sigma2_comm: f64,
    /// Matched-filtering gain (symbols per block).
    #[serde(rename = "G")]
    pub mf_gain: f64,
    /// Path loss at 1 m reference distance.
    pub alpha_ref: f64,

    /// RSU position, m.
    pub rsu_x: f64,
    pub rsu_y: f64,
    /// Initial vehicle centroid, m.
    pub x_0: f64,
    pub y_0: f64,
    /// Vehicle footprint, m.
    pub vehicle_length: f64,
    pub vehicle_width: f64,
    /// Place scatterers uniformly at random instead of on a grid.
    pub random_layout: bool,
    /// Signal bandwidth, Hz. Sets the range resolution c / (2B).
    #[serde(rename = "B")]
    pub bandwidth: Option<f64>,
    /// Doppler resolution, Hz. Defaults to 1 / delta_T.
    pub doppler_resolution: Option<f64>,

    /// Outage threshold, bit/s/Hz.
    pub gamma: f64,
    pub runs: usize,
    pub seed: u64,
    /// Disable all random perturbations (measurement noise and initial error);
    /// fused measurements then carry zero covariance.
    pub zero_noise: bool,

    /// Initial estimate error, in multiples of the process-noise deviations.
    pub init_error_scale: f64,
    /// Use the Joseph-form covariance update.
    pub joseph_update: bool,
    pub rho_variance: RhoVarianceSource,
    pub velocity_variance: VelocityVarianceModel,

    /// Fixed antenna count of the point-target and ABP baselines.
    pub baseline_antennas: usize,
    /// ABP half search range, rad.
    pub abp_half_range: f64,
    /// ABP beam-pair offset in the direction-cosine domain, in units of 1/N.
    pub abp_pair_offset: f64,
    /// ABP pilot processing gain.
    pub abp_pilot_gain: f64,

    /// Track length used by velocity sweeps, m (duration = length / speed).
    pub sweep_track_length: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            duration: 8.0,
            epoch: 0.01,
            carrier: 30e9,
            power: 1.0,
            coverage: 6.0,
            speed: 20.0,
            cr_dx: 1.5,
            cr_dy: 0.5,
            n_narrow: 128,
            n_max: 128,
            a_1: 1.05e-2,
            a_2: 3.5e-2,
            a_3: 1.05e-2,
            n_rx: 128,
            scatterers: 8,
            sigma_phi_bar_deg: 0.01,
            sigma_d_bar: 0.1,
            sigma_v_bar: 0.25,
            sigma2: 0.15,
            sigma2_comm: 1.0,
            mf_gain: 10.0,
            alpha_ref: 1.0,
            rsu_x: 0.0,
            rsu_y: 0.0,
            x_0: 60.0,
            y_0: 20.0,
            vehicle_length: 5.0,
            vehicle_width: 2.0,
            random_layout: false,
            bandwidth: Some(500e6),
            doppler_resolution: None,
            gamma: 0.02,
            runs: 500,
            seed: 2022,
            zero_noise: false,
            init_error_scale: 10.0,
            joseph_update: false,
            rho_variance: RhoVarianceSource::Measurement,
            velocity_variance: VelocityVarianceModel::Linearized,
            baseline_antennas: 128,
            abp_half_range: PI / 32.0,
            abp_pair_offset: 1.0,
            abp_pilot_gain: 1000.0,
            sweep_track_length: 160.0,
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Number of epochs, `floor(T / delta_T)`.
    pub fn epochs(&self) -> usize {
        (self.duration / self.epoch + 1e-9).floor() as usize
    }

    pub fn sigma_phi_bar(&self) -> f64 {
        self.sigma_phi_bar_deg.to_radians()
    }

    pub fn accuracy_constants(&self) -> [f64; 3] {
        [self.a_1, self.a_2, self.a_3]
    }

    pub fn range_resolution(&self) -> Option<f64> {
        self.bandwidth.map(|b| SPEED_OF_LIGHT / (2.0 * b))
    }

    pub fn doppler_resolution(&self) -> f64 {
        self.doppler_resolution.unwrap_or(1.0 / self.epoch)
    }

    /// Copy of this configuration at another speed, with the duration set
    /// so the vehicle covers `sweep_track_length`.
    pub fn at_speed(&self, speed: f64) -> Self {
        let mut cfg = self.clone();
        cfg.speed = speed;
        if speed > 0.0 {
            cfg.duration = self.sweep_track_length / speed;
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("T", self.duration),
            ("delta_T", self.epoch),
            ("f_c", self.carrier),
            ("p_n", self.power),
            ("delta_d", self.coverage),
            ("a_1", self.a_1),
            ("a_2", self.a_2),
            ("a_3", self.a_3),
            ("sigma_phi_bar_deg", self.sigma_phi_bar_deg),
            ("sigma_d_bar", self.sigma_d_bar),
            ("sigma_v_bar", self.sigma_v_bar),
            ("sigma2", self.sigma2),
            ("sigma2_C", self.sigma2_comm),
            ("G", self.mf_gain),
            ("alpha_ref", self.alpha_ref),
            ("vehicle_length", self.vehicle_length),
            ("vehicle_width", self.vehicle_width),
            ("abp_half_range", self.abp_half_range),
            ("abp_pair_offset", self.abp_pair_offset),
            ("abp_pilot_gain", self.abp_pilot_gain),
            ("sweep_track_length", self.sweep_track_length),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(IsacError::InvalidConfig(format!(
                    "{name} must be finite and strictly positive, got {value}"
                )));
            }
        }
        if !(self.speed.is_finite() && self.speed >= 0.0) {
            return Err(IsacError::InvalidConfig(format!(
                "v must be finite and nonnegative, got {}",
                self.speed
            )));
        }
        if !(self.init_error_scale.is_finite() && self.init_error_scale >= 0.0) {
            return Err(IsacError::InvalidConfig(
                "init_error_scale must be nonnegative".into(),
            ));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(IsacError::InvalidConfig("gamma must be nonnegative".into()));
        }
        for (name, value) in [
            ("N_t_max", self.n_max),
            ("N_t_narrow", self.n_narrow),
            ("N_r", self.n_rx),
            ("K", self.scatterers),
            ("runs", self.runs),
            ("baseline_antennas", self.baseline_antennas),
        ] {
            if value == 0 {
                return Err(IsacError::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if self.epochs() < 2 {
            return Err(IsacError::InvalidConfig(
                "T / delta_T must give at least two epochs".into(),
            ));
        }
        if let Some(b) = self.bandwidth {
            if !(b.is_finite() && b > 0.0) {
                return Err(IsacError::InvalidConfig(format!("B must be positive, got {b}")));
            }
            // stop-go: no range migration within one epoch
            let resolution = SPEED_OF_LIGHT / (2.0 * b);
            if self.speed * self.epoch > resolution * (1.0 + 1e-12) {
                return Err(IsacError::InvalidConfig(format!(
                    "range migration: v * delta_T = {:.4} m exceeds c/(2B) = {:.4} m",
                    self.speed * self.epoch,
                    resolution
                )));
            }
        }
        if let Some(r) = self.doppler_resolution {
            if !(r.is_finite() && r > 0.0) {
                return Err(IsacError::InvalidConfig(
                    "doppler_resolution must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}
