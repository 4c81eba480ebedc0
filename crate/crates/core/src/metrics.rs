//! Achievable rates, per-epoch logs and Monte Carlo statistics.

use std::fmt;

use crate::array::beam_gain;
use crate::config::SimConfig;
use crate::scenario::StateVector;

/// Tracking scheme identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    IsacDb,
    IsacAb,
    EkfPoint,
    Abp,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::IsacDb, Scheme::IsacAb, Scheme::EkfPoint, Scheme::Abp];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::IsacDb => "isac-db",
            Scheme::IsacAb => "isac-ab",
            Scheme::EkfPoint => "ekf-point",
            Scheme::Abp => "abp",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything logged for one epoch of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub time: f64,
    /// True CR state.
    pub truth: StateVector,
    pub predicted: StateVector,
    pub estimated: StateVector,
    /// Antennas of the sensing (wide) beam.
    pub n_antennas: usize,
    /// Sensing duty, 1 for single-beam schemes.
    pub rho: f64,
    pub rate_wide: f64,
    pub rate_narrow: f64,
    pub rate_opt: f64,
    pub rate_obj: f64,
    /// Data beam direction minus the true CR angle, rad.
    pub steer_error: f64,
    /// Raw CR angle measurement minus truth, NaN when coasting.
    pub measurement_error: f64,
    /// Whether the data beam covers the CR.
    pub aligned: bool,
    /// Whether the update was skipped for lack of measurements.
    pub coasted: bool,
    /// Normalized estimation error squared, NaN when undefined.
    pub nees: f64,
}

impl EpochRecord {
    /// Estimate minus truth for `(phi, d, v)`.
    pub fn estimation_errors(&self) -> [f64; 3] {
        [
            self.estimated.phi - self.truth.phi,
            self.estimated.d - self.truth.d,
            self.estimated.v - self.truth.v,
        ]
    }

    /// Prediction minus truth for `(phi, d, v)`.
    pub fn prediction_errors(&self) -> [f64; 3] {
        [
            self.predicted.phi - self.truth.phi,
            self.predicted.d - self.truth.d,
            self.predicted.v - self.truth.v,
        ]
    }

    /// The rate delivered in this epoch.
    pub fn rate(&self) -> f64 {
        self.rate_opt
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub scheme: Scheme,
    pub records: Vec<EpochRecord>,
}

/// `log2(1 + snr)`, bits/s/Hz.
pub fn achievable_rate(snr: f64) -> f64 {
    (1.0 + snr.max(0.0)).log2()
}

/// Channel amplitude at distance `d`.
pub fn path_gain(cfg: &SimConfig, d: f64) -> f64 {
    cfg.alpha_ref / d
}

/// Rate of an `n`-antenna beam steered at `steer` towards a CR at
/// `(phi, d)`.
pub fn beam_rate(cfg: &SimConfig, phi: f64, d: f64, steer: f64, n: usize) -> f64 {
    let alpha = path_gain(cfg, d);
    let g = beam_gain(phi, steer, n).norm_sqr();
    achievable_rate(cfg.power * alpha * alpha * n as f64 * g / cfg.sigma2_comm)
}

/// `(R_wide, R_narrow)` for a wide beam of `n_wide` antennas at
/// `steer_wide` and an aligned narrow beam at `steer_narrow`.
pub fn rate_components(
    cfg: &SimConfig,
    truth: StateVector,
    steer_wide: f64,
    n_wide: usize,
    steer_narrow: f64,
) -> (f64, f64) {
    (
        beam_rate(cfg, truth.phi, truth.d, steer_wide, n_wide),
        beam_rate(cfg, truth.phi, truth.d, steer_narrow, cfg.n_narrow),
    )
}

/// Per-epoch RMSE over runs. `errors[run][epoch]`.
pub fn rmse(errors: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = errors.first() else {
        return Vec::new();
    };
    let runs = errors.len() as f64;
    (0..first.len())
        .map(|n| (errors.iter().map(|e| e[n] * e[n]).sum::<f64>() / runs).sqrt())
        .collect()
}

/// RMSE over every sample.
pub fn overall_rmse(errors: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for e in errors {
        sum += e * e;
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}

/// Empirical CDF as `(value, P[X <= value])` pairs; NaNs are dropped.
pub fn error_cdf(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted: Vec<f64> = samples.iter().copied().filter(|x| !x.is_nan()).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
    for (i, x) in sorted.into_iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = p,
            _ => out.push((x, p)),
        }
    }
    out
}

/// Fraction of `(run, epoch)` rates at or below `gamma`.
pub fn outage_probability(rates: &[Vec<f64>], gamma: f64) -> f64 {
    let total: usize = rates.iter().map(Vec::len).sum();
    if total == 0 {
        return 0.0;
    }
    let below = rates.iter().flatten().filter(|&&r| r <= gamma).count();
    below as f64 / total as f64
}
