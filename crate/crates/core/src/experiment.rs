//! Parallel Monte Carlo runner and CSV emission.
//!
//! Every run draws from its own ChaCha stream keyed by `(seed, run, slot)`,
//! and per-run results are folded into accumulators in run order, so outputs
//! do not depend on thread scheduling.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::allocation::run_isac_ab_with_truth;
use crate::baselines::{run_abp_with_truth, run_ekf_point_with_truth};
use crate::config::SimConfig;
use crate::error::{IsacError, Result};
use crate::metrics::{error_cdf, EpochLog, Scheme};
use crate::scenario::{generate_trajectory, GroundTruth};
use crate::tracking::run_isac_db_with_truth;

/// Runs simulated concurrently before folding into the accumulators.
const CHUNK_RUNS: usize = 64;
/// Upper bound on rows written to `cdf.csv`.
const CDF_ROWS: usize = 1000;
/// Odd constant separating the seeds of RNG slots.
const SLOT_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

pub const TRACE_HEADER: [&str; 17] = [
    "epoch",
    "time_s",
    "truth_phi_rad",
    "truth_d_m",
    "truth_v_mps",
    "pred_phi_rad",
    "pred_d_m",
    "pred_v_mps",
    "est_phi_rad",
    "est_d_m",
    "est_v_mps",
    "n_antennas",
    "rho_opt",
    "rate_wide_bpshz",
    "rate_narrow_bpshz",
    "rate_opt_bpshz",
    "rate_obj_bpshz",
];
pub const RMSE_HEADER: [&str; 6] = ["epoch", "time_s", "phi_rmse_rad", "d_rmse_m", "v_rmse_mps", "steer_rmse_rad"];
pub const CDF_HEADER: [&str; 2] = ["abs_phi_error_rad", "probability"];
pub const OUTAGE_HEADER: [&str; 4] = ["velocity_mps", "outage_probability", "phi_rmse_rad", "mean_rate_bpshz"];

/// What to simulate and where to write it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub schemes: Vec<Scheme>,
    pub runs: usize,
    pub seed: u64,
    /// Speeds for the outage sweep; empty means the configured speed only.
    pub velocity_sweep: Vec<f64>,
    /// Outage threshold, bits/s/Hz.
    pub gamma: f64,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(IsacError::InvalidConfig("runs must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(IsacError::InvalidConfig("no scheme selected".into()));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(IsacError::InvalidConfig(format!("gamma must be finite and nonnegative, got {}", self.gamma)));
        }
        if let Some(v) = self.velocity_sweep.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(IsacError::InvalidConfig(format!("sweep velocity must be positive, got {v}")));
        }
        Ok(())
    }
}

/// Independent generator for `(seed, run, slot)`; slot 0 draws the ground
/// truth, slot `1 + i` drives the i-th scheme.
pub fn run_rng(seed: u64, run: usize, slot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(slot.wrapping_mul(SLOT_STRIDE)));
    rng.set_stream(run as u64);
    rng
}

fn scheme_slot(scheme: Scheme) -> u64 {
    1 + Scheme::ALL.iter().position(|&s| s == scheme).unwrap_or(0) as u64
}

pub fn run_scheme_with_truth(
    scheme: Scheme,
    cfg: &SimConfig,
    truth: &GroundTruth,
    rng: &mut ChaCha8Rng,
) -> Result<EpochLog> {
    match scheme {
        Scheme::IsacDb => run_isac_db_with_truth(cfg, truth, rng),
        Scheme::IsacAb => run_isac_ab_with_truth(cfg, truth, rng),
        Scheme::EkfPoint => run_ekf_point_with_truth(cfg, truth, rng),
        Scheme::Abp => run_abp_with_truth(cfg, truth, rng),
    }
}

/// One run of every scheme on a shared trajectory. A scheme's noise does
/// not depend on which other schemes are selected.
pub fn simulate_run(cfg: &SimConfig, schemes: &[Scheme], seed: u64, run: usize) -> Result<Vec<EpochLog>> {
    let truth = generate_trajectory(cfg, &mut run_rng(seed, run, 0))?;
    schemes
        .iter()
        .map(|&s| run_scheme_with_truth(s, cfg, &truth, &mut run_rng(seed, run, scheme_slot(s))))
        .collect()
}

/// Runs `runs` Monte Carlo trials in parallel and hands each run's logs to
/// `fold` in run order.
pub fn for_each_run(
    cfg: &SimConfig,
    schemes: &[Scheme],
    runs: usize,
    seed: u64,
    mut fold: impl FnMut(usize, Vec<EpochLog>) -> Result<()>,
) -> Result<()> {
    cfg.validate()?;
    let mut start = 0;
    while start < runs {
        let end = (start + CHUNK_RUNS).min(runs);
        let chunk: Vec<Result<Vec<EpochLog>>> =
            (start..end).into_par_iter().map(|run| simulate_run(cfg, schemes, seed, run)).collect();
        for (offset, logs) in chunk.into_iter().enumerate() {
            fold(start + offset, logs?)?;
        }
        start = end;
    }
    Ok(())
}

/// Running sums for one scheme over runs.
#[derive(Debug, Clone, Default)]
pub struct SchemeAccumulator {
    pub runs: usize,
    /// Per epoch, summed in [`TRACE_HEADER`] column order from `time_s`.
    sums: Vec<[f64; 16]>,
    /// Per epoch squared errors of `(phi, d, v, steer)`.
    squares: Vec<[f64; 4]>,
    epochs: Vec<usize>,
    pub abs_phi_errors: Vec<f64>,
    below_gamma: usize,
    samples: usize,
    rate_sum: f64,
    nees_sum: f64,
    nees_count: usize,
    aligned: usize,
    coasted: usize,
    gamma: f64,
}

impl SchemeAccumulator {
    pub fn new(gamma: f64) -> Self {
        Self { gamma, ..Self::default() }
    }

    pub fn add(&mut self, log: &EpochLog) -> Result<()> {
        if self.runs == 0 {
            self.epochs = log.records.iter().map(|r| r.epoch).collect();
            self.sums = vec![[0.0; 16]; log.records.len()];
            self.squares = vec![[0.0; 4]; log.records.len()];
        } else if log.records.len() != self.epochs.len() {
            return Err(IsacError::InvalidConfig("runs produced logs of different lengths".into()));
        }
        for (i, r) in log.records.iter().enumerate() {
            let row = [
                r.time,
                r.truth.phi,
                r.truth.d,
                r.truth.v,
                r.predicted.phi,
                r.predicted.d,
                r.predicted.v,
                r.estimated.phi,
                r.estimated.d,
                r.estimated.v,
                r.n_antennas as f64,
                r.rho,
                r.rate_wide,
                r.rate_narrow,
                r.rate_opt,
                r.rate_obj,
            ];
            for (s, x) in self.sums[i].iter_mut().zip(row) {
                *s += x;
            }
            let e = r.estimation_errors();
            let sq = [e[0], e[1], e[2], r.steer_error];
            for (s, x) in self.squares[i].iter_mut().zip(sq) {
                *s += x * x;
            }
            self.abs_phi_errors.push(e[0].abs());
            let rate = r.rate();
            self.rate_sum += rate;
            self.samples += 1;
            if rate <= self.gamma {
                self.below_gamma += 1;
            }
            if r.nees.is_finite() {
                self.nees_sum += r.nees;
                self.nees_count += 1;
            }
            self.aligned += r.aligned as usize;
            self.coasted += r.coasted as usize;
        }
        self.runs += 1;
        Ok(())
    }

    pub fn epochs(&self) -> usize {
        self.epochs.len()
    }

    /// Per-epoch means in [`TRACE_HEADER`] order.
    pub fn trace_rows(&self) -> Vec<Vec<f64>> {
        let n = self.runs.max(1) as f64;
        self.epochs
            .iter()
            .zip(&self.sums)
            .map(|(&epoch, s)| std::iter::once(epoch as f64).chain(s.iter().map(|x| x / n)).collect())
            .collect()
    }

    /// Per-epoch RMSE in [`RMSE_HEADER`] order.
    pub fn rmse_rows(&self) -> Vec<Vec<f64>> {
        let n = self.runs.max(1) as f64;
        self.epochs
            .iter()
            .zip(self.sums.iter().zip(&self.squares))
            .map(|(&epoch, (s, q))| {
                let mut row = vec![epoch as f64, s[0] / n];
                row.extend(q.iter().map(|x| (x / n).sqrt()));
                row
            })
            .collect()
    }

    /// Mean rate per epoch.
    pub fn mean_rates(&self) -> Vec<f64> {
        let n = self.runs.max(1) as f64;
        self.sums.iter().map(|s| s[14] / n).collect()
    }

    pub fn outage(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.below_gamma as f64 / self.samples as f64
        }
    }

    /// Angle RMSE over every `(run, epoch)`.
    pub fn phi_rmse(&self) -> f64 {
        let total: f64 = self.squares.iter().map(|q| q[0]).sum();
        (total / self.samples.max(1) as f64).sqrt()
    }

    pub fn mean_rate(&self) -> f64 {
        self.rate_sum / self.samples.max(1) as f64
    }

    /// Time-averaged NEES, NaN for schemes without a covariance.
    pub fn mean_nees(&self) -> f64 {
        if self.nees_count == 0 {
            f64::NAN
        } else {
            self.nees_sum / self.nees_count as f64
        }
    }

    pub fn aligned_fraction(&self) -> f64 {
        self.aligned as f64 / self.samples.max(1) as f64
    }

    pub fn coasted_fraction(&self) -> f64 {
        self.coasted as f64 / self.samples.max(1) as f64
    }

    /// CDF of `|phi error|`, thinned to at most `max_rows` points including
    /// the last.
    pub fn cdf_rows(&self, max_rows: usize) -> Vec<Vec<f64>> {
        let cdf = error_cdf(&self.abs_phi_errors);
        let pick: Vec<usize> = if cdf.len() <= max_rows || max_rows < 2 {
            (0..cdf.len()).collect()
        } else {
            (0..max_rows).map(|i| i * (cdf.len() - 1) / (max_rows - 1)).collect()
        };
        pick.into_iter().map(|i| vec![cdf[i].0, cdf[i].1]).collect()
    }
}

/// Simulates every selected scheme and returns one accumulator per scheme.
pub fn accumulate(cfg: &SimConfig, schemes: &[Scheme], runs: usize, seed: u64, gamma: f64) -> Result<Vec<SchemeAccumulator>> {
    let mut acc = vec![SchemeAccumulator::new(gamma); schemes.len()];
    for_each_run(cfg, schemes, runs, seed, |_, logs| {
        for (a, log) in acc.iter_mut().zip(&logs) {
            a.add(log)?;
        }
        Ok(())
    })?;
    Ok(acc)
}

/// One outage-sweep row per velocity for each scheme, in [`OUTAGE_HEADER`]
/// order.
pub fn velocity_sweep(
    cfg: &SimConfig,
    schemes: &[Scheme],
    velocities: &[f64],
    runs: usize,
    seed: u64,
    gamma: f64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut rows = vec![Vec::with_capacity(velocities.len()); schemes.len()];
    for &v in velocities {
        let acc = accumulate(&cfg.at_speed(v), schemes, runs, seed, gamma)?;
        for (r, a) in rows.iter_mut().zip(&acc) {
            r.push(vec![v, a.outage(), a.phi_rmse(), a.mean_rate()]);
        }
    }
    Ok(rows)
}

/// Writes a comma-separated table; floats use the shortest round-trip form.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        for (i, x) in row.iter().enumerate() {
            if i > 0 {
                text.push(',');
            }
            let _ = write!(text, "{x}");
        }
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

/// Directory holding one scheme's CSVs.
pub fn scheme_dir(out: &Path, scheme: Scheme) -> PathBuf {
    out.join(scheme.name())
}

/// Runs the experiment and writes `<out>/<scheme>/{trace,rmse,cdf,outage}.csv`,
/// `<out>/summary.txt`, and comparison tables when several schemes ran.
pub fn run_experiment(spec: &ExperimentSpec, cfg: &SimConfig) -> Result<()> {
    spec.validate()?;
    cfg.validate()?;
    fs::create_dir_all(&spec.out_dir)?;
    let acc = accumulate(cfg, &spec.schemes, spec.runs, spec.seed, spec.gamma)?;
    let sweep = if spec.velocity_sweep.is_empty() {
        acc.iter()
            .map(|a| vec![vec![cfg.speed, a.outage(), a.phi_rmse(), a.mean_rate()]])
            .collect()
    } else {
        velocity_sweep(cfg, &spec.schemes, &spec.velocity_sweep, spec.runs, spec.seed, spec.gamma)?
    };

    for ((&scheme, a), outage) in spec.schemes.iter().zip(&acc).zip(&sweep) {
        let dir = scheme_dir(&spec.out_dir, scheme);
        fs::create_dir_all(&dir)?;
        write_csv(&dir.join("trace.csv"), &TRACE_HEADER, &a.trace_rows())?;
        write_csv(&dir.join("rmse.csv"), &RMSE_HEADER, &a.rmse_rows())?;
        write_csv(&dir.join("cdf.csv"), &CDF_HEADER, &a.cdf_rows(CDF_ROWS))?;
        write_csv(&dir.join("outage.csv"), &OUTAGE_HEADER, outage)?;
    }

    if spec.schemes.len() > 1 {
        let names: Vec<String> = spec.schemes.iter().map(|s| s.name().replace('-', "_")).collect();
        let mut header = vec!["epoch".to_string(), "time_s".to_string()];
        header.extend(names.iter().map(|n| format!("{n}_rate_bpshz")));
        let trace = acc[0].trace_rows();
        let rates: Vec<Vec<f64>> = acc.iter().map(SchemeAccumulator::mean_rates).collect();
        let rows: Vec<Vec<f64>> = trace
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut row = vec![t[0], t[1]];
                row.extend(rates.iter().map(|r| r[i]));
                row
            })
            .collect();
        let h: Vec<&str> = header.iter().map(String::as_str).collect();
        write_csv(&spec.out_dir.join("comparison_rate.csv"), &h, &rows)?;

        let mut header = vec!["velocity_mps".to_string()];
        header.extend(names.iter().map(|n| format!("{n}_outage_probability")));
        let rows: Vec<Vec<f64>> = (0..sweep[0].len())
            .map(|i| {
                let mut row = vec![sweep[0][i][0]];
                row.extend(sweep.iter().map(|s| s[i][1]));
                row
            })
            .collect();
        let h: Vec<&str> = header.iter().map(String::as_str).collect();
        write_csv(&spec.out_dir.join("comparison_outage.csv"), &h, &rows)?;
    }

    fs::write(spec.out_dir.join("summary.txt"), summary(spec, cfg, &acc))?;
    Ok(())
}

fn summary(spec: &ExperimentSpec, cfg: &SimConfig, acc: &[SchemeAccumulator]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "runs {} seed {} epochs {} speed_mps {}", spec.runs, spec.seed, cfg.epochs(), cfg.speed);
    let _ = writeln!(s, "outage threshold {} bits/s/Hz", spec.gamma);
    for (scheme, a) in spec.schemes.iter().zip(acc) {
        let _ = writeln!(s);
        let _ = writeln!(s, "[{}]", scheme.name());
        let _ = writeln!(s, "mean_rate_bpshz {}", a.mean_rate());
        let _ = writeln!(s, "phi_rmse_rad {}", a.phi_rmse());
        let _ = writeln!(s, "outage_probability {}", a.outage());
        let _ = writeln!(s, "aligned_fraction {}", a.aligned_fraction());
        let _ = writeln!(s, "coasted_fraction {}", a.coasted_fraction());
        let _ = writeln!(s, "mean_nees {}", a.mean_nees());
    }
    s
}
