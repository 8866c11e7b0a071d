//! The harness experiments. Every runner returns records in a fixed sweep
//! order; trials run in parallel and are reduced in trial order, so results
//! do not depend on scheduling.

use std::hint::black_box;
use std::time::Instant;

use otfs_core::{
    array_gain, array_gain_direct,
    estimation::{detect, BranchEstimate},
    make_pattern, Constellation, DdFrame, FrameParams, PatternVariant, C64,
};
use rand::Rng;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{Result, SimError};
use crate::record::{ResultRecord, WilsonInterval};
use crate::trial::{run_trial, trial_rng, TrialOutcome, TrialPoint};

/// Accumulated outcome at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub point: TrialPoint,
    pub outcome: TrialOutcome,
    pub trials: usize,
}

impl SweepPoint {
    pub fn ber(&self) -> f64 {
        self.outcome.bit_errors as f64 / self.outcome.bits.max(1) as f64
    }

    pub fn ser(&self) -> f64 {
        self.outcome.symbol_errors as f64 / self.outcome.symbols.max(1) as f64
    }

    /// `sum |beta_hat - beta|^2 / sum |beta|^2` over all trials.
    pub fn mse(&self) -> f64 {
        if self.outcome.gain_power > 0.0 {
            self.outcome.gain_error / self.outcome.gain_power
        } else {
            0.0
        }
    }

    pub fn ber_interval(&self) -> WilsonInterval {
        WilsonInterval::new(self.outcome.bit_errors, self.outcome.bits)
    }

    pub fn ser_interval(&self) -> WilsonInterval {
        WilsonInterval::new(self.outcome.symbol_errors, self.outcome.symbols)
    }
}

/// Runs `cfg.trials` trials at one point.
pub fn run_point(cfg: &ExperimentConfig, experiment: &str, point: TrialPoint) -> Result<SweepPoint> {
    let outcomes = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, &point, &mut trial_rng(cfg.seed, experiment, t)))
        .collect::<Result<Vec<TrialOutcome>>>()?;
    let outcome = outcomes
        .iter()
        .fold(TrialOutcome::default(), |acc, o| acc.merge(o));
    Ok(SweepPoint {
        point,
        outcome,
        trials: cfg.trials,
    })
}

fn record(experiment: &str, metric: &str, p: &SweepPoint, seed: u64) -> ResultRecord {
    let mut r = ResultRecord::new(experiment, metric, 0.0, p.trials, seed);
    r.snr_db = Some(p.point.snr_db);
    r.snr_p_db = Some(p.point.snr_p_db);
    r.velocity_kmh = Some(p.point.velocity_kmh);
    r.antennas = Some(p.point.antennas);
    r.pattern = Some(p.point.pattern.name().to_string());
    r
}

/// Error-rate sweep over pattern x velocity x antennas x pilot SNR x SNR.
pub fn ber_points(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::new();
    for &pattern in &cfg.patterns {
        for &velocity_kmh in &cfg.velocities_kmh {
            for &antennas in &cfg.antennas {
                for &snr_p_db in &cfg.snr_p_db {
                    for &snr_db in &cfg.snr_db {
                        let point = TrialPoint {
                            pattern,
                            velocity_kmh,
                            antennas,
                            snr_db,
                            snr_p_db,
                        };
                        out.push(run_point(cfg, "ber", point)?);
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn run_ber(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let mut records = Vec::new();
    for p in ber_points(cfg)? {
        let mut ber = record("ber", "BER", &p, cfg.seed);
        ber.value = p.ber();
        ber.ci_half_width = Some(p.ber_interval().half_width());
        let mut ser = record("ber", "SER", &p, cfg.seed);
        ser.value = p.ser();
        ser.ci_half_width = Some(p.ser_interval().half_width());
        records.push(ber);
        records.push(ser);
    }
    Ok(records)
}

/// Channel-estimation sweep over pattern x velocity x antennas x pilot SNR
/// at the fixed data SNR `mse_data_snr_db`.
pub fn mse_points(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::new();
    for &pattern in &cfg.patterns {
        for &velocity_kmh in &cfg.velocities_kmh {
            for &antennas in &cfg.antennas {
                for &snr_p_db in &cfg.mse_snr_p_db {
                    let point = TrialPoint {
                        pattern,
                        velocity_kmh,
                        antennas,
                        snr_db: cfg.mse_data_snr_db,
                        snr_p_db,
                    };
                    out.push(run_point(cfg, "mse", point)?);
                }
            }
        }
    }
    Ok(out)
}

pub fn run_mse(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    Ok(mse_points(cfg)?
        .iter()
        .map(|p| {
            let mut r = record("mse", "MSE", p, cfg.seed);
            r.value = p.mse();
            r
        })
        .collect())
}

/// Pilot-plus-guard cell counts of every pattern at every velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverheadRow {
    pub pattern: PatternVariant,
    pub velocity_kmh: f64,
    pub l_max: usize,
    pub k_max: usize,
    pub count: usize,
    pub percent: f64,
}

pub fn overhead_rows(cfg: &ExperimentConfig) -> Result<Vec<OverheadRow>> {
    let params = cfg.frame_params(cfg.antennas[0])?;
    let l_max = cfg
        .l_max
        .unwrap_or_else(|| cfg.profile.delay_support(&params).max(1));
    let mut rows = Vec::new();
    for pattern in PatternVariant::ALL {
        for &v in &cfg.velocities_kmh {
            let k_max = params.doppler_support(params.max_doppler_hz(v));
            let p = make_pattern(pattern, &params, l_max, k_max, 0.0, 1.0)?;
            rows.push(OverheadRow {
                pattern,
                velocity_kmh: v,
                l_max,
                k_max,
                count: p.overhead(),
                percent: 100.0 * p.overhead_fraction(),
            });
        }
    }
    Ok(rows)
}

pub fn run_overhead(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let mut records = Vec::new();
    for row in overhead_rows(cfg)? {
        for (metric, value) in [("overhead_count", row.count as f64), ("overhead_percent", row.percent)] {
            let mut r = ResultRecord::new("overhead", metric, value, 1, cfg.seed);
            r.velocity_kmh = Some(row.velocity_kmh);
            r.pattern = Some(row.pattern.name().to_string());
            records.push(r);
        }
    }
    Ok(records)
}

/// Closed-form array gain against the direct sum for every antenna count
/// and `du`; the `du` coordinate is carried in the metric name.
pub fn run_arraygain(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let mut records = Vec::new();
    for &e in &cfg.arraygain_antennas {
        let params = cfg.frame_params(e)?;
        let mut worst: f64 = 0.0;
        for &du in &cfg.arraygain_du {
            if !(du.abs() <= 2.0) {
                return Err(SimError::invalid("arraygain_du", format!("{du} outside [-2, 2]")));
            }
            // keep both cosines in [-1, 1]
            let (u_src, u_beam) = (du / 2.0, -du / 2.0);
            let g = array_gain(u_src, u_beam, &params);
            worst = worst.max((g - array_gain_direct(u_src, u_beam, &params)).abs());
            let mut r = ResultRecord::new("arraygain", &format!("array_gain[du={du}]"), g, 1, cfg.seed);
            r.antennas = Some(e);
            records.push(r);
        }
        if worst >= 1e-10 {
            return Err(SimError::Output(format!(
                "array gain closed form deviates from the direct sum by {worst:e} at E={e}"
            )));
        }
        let mut r = ResultRecord::new("arraygain", "max_abs_diff", worst, 1, cfg.seed);
        r.antennas = Some(e);
        records.push(r);
    }
    Ok(records)
}

/// Detection time for one `(M, N, B)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub m: usize,
    pub n: usize,
    pub branches: usize,
    /// Best observed seconds per detection.
    pub seconds: f64,
}

impl ScalingPoint {
    pub fn work(&self) -> f64 {
        (self.branches * self.m * self.n) as f64
    }
}

fn time_detection(
    cfg: &ExperimentConfig,
    m: usize,
    n: usize,
    b: usize,
    point_index: u64,
) -> Result<ScalingPoint> {
    let params = FrameParams::with_spacing_wavelengths(
        m,
        n,
        cfg.delta_f,
        cfg.carrier_hz,
        1,
        cfg.spacing_wavelengths,
        0,
    )?;
    let mut rng = trial_rng(cfg.seed, "scaling", point_index);
    let pattern = make_pattern(PatternVariant::Naive, &params, 0, 0, 20.0, 1.0)?;
    let constellation = Constellation::new(cfg.modulation);
    let branches: Vec<DdFrame> = (0..b)
        .map(|_| {
            let v = (0..params.cells())
                .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            DdFrame::from_vec(&params, v)
        })
        .collect::<otfs_core::Result<_>>()?;
    let estimates: Vec<BranchEstimate> = (0..b)
        .map(|i| BranchEstimate {
            u: 0.0,
            k_hat: (i % n) as i64 - (n / 2) as i64,
            l_hat: i % m,
            beta_hat: C64::new(rng.random::<f64>() + 0.1, rng.random::<f64>()),
        })
        .collect();
    let run = || detect(&branches, &estimates, &pattern, &constellation, &params);
    black_box(run()?);
    // size the batch so one measurement takes about 20 ms
    let start = Instant::now();
    black_box(run()?);
    let single = start.elapsed().as_secs_f64().max(1e-7);
    let iters = ((0.02 / single).ceil() as usize).clamp(1, 10_000);
    let mut best = f64::INFINITY;
    for _ in 0..cfg.scaling_reps {
        let start = Instant::now();
        for _ in 0..iters {
            black_box(run()?);
        }
        best = best.min(start.elapsed().as_secs_f64() / iters as f64);
    }
    Ok(ScalingPoint {
        m,
        n,
        branches: b,
        seconds: best,
    })
}

/// Times detection (compensation, MRC and hard decisions) over the
/// configured `(M, N, B)` grid, sequentially.
pub fn scaling_points(cfg: &ExperimentConfig) -> Result<Vec<ScalingPoint>> {
    let mut out = Vec::new();
    let mut idx = 0;
    for &m in &cfg.scaling_m {
        for &n in &cfg.scaling_n {
            for &b in &cfg.scaling_paths {
                out.push(time_detection(cfg, m, n, b, idx)?);
                idx += 1;
            }
        }
    }
    Ok(out)
}

/// Least-squares slope of `log(seconds)` against `log(B M N)`.
pub fn loglog_slope(points: &[ScalingPoint]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.work().ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.seconds.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Scaling records carry `M`, `N` and `B` in the metric name. Wall times
/// are not reproducible between runs.
pub fn run_scaling(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let points = scaling_points(cfg)?;
    let mut records: Vec<ResultRecord> = points
        .iter()
        .map(|p| {
            ResultRecord::new(
                "scaling",
                &format!("runtime_s[M={};N={};B={}]", p.m, p.n, p.branches),
                p.seconds,
                cfg.scaling_reps,
                cfg.seed,
            )
        })
        .collect();
    if points.len() >= 2 {
        let slope = loglog_slope(&points);
        if !slope.is_finite() {
            return Err(SimError::Output("scaling sweep needs at least two work sizes".into()));
        }
        records.push(ResultRecord::new(
            "scaling",
            "loglog_slope",
            slope.max(0.0),
            cfg.scaling_reps,
            cfg.seed,
        ));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        let mut c = ExperimentConfig::desk();
        c.trials = 4;
        c.antennas = vec![64];
        c.velocities_kmh = vec![120.0];
        c.snr_db = vec![0.0, 20.0];
        c
    }

    #[test]
    fn ber_records_follow_sweep_order() {
        let r = run_ber(&tiny()).unwrap();
        assert_eq!(r.len(), 4);
        assert_eq!(r[0].metric, "BER");
        assert_eq!(r[0].snr_db, Some(0.0));
        assert_eq!(r[2].snr_db, Some(20.0));
        assert!(r.iter().all(|x| x.ci_half_width.is_some()));
    }

    #[test]
    fn runs_are_reproducible() {
        let a = ber_points(&tiny()).unwrap();
        let b = ber_points(&tiny()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn overhead_at_desk_scale() {
        let rows = overhead_rows(&ExperimentConfig::desk()).unwrap();
        assert_eq!(rows.len(), 9);
        // l_max 3, k_max 4 at 500 km/h
        let full = rows
            .iter()
            .find(|r| r.pattern == PatternVariant::FullGuard && r.velocity_kmh == 500.0)
            .unwrap();
        assert_eq!((full.l_max, full.k_max, full.count), (3, 4, 7 * 17));
    }

    #[test]
    fn noiseless_single_path_mse_vanishes() {
        let mut c = tiny();
        c.profile = otfs_core::DelayProfile::new(vec![0.0], vec![0.0]).unwrap();
        c.profile_name = "custom".into();
        c.mse_data_snr_db = f64::INFINITY;
        c.mse_snr_p_db = vec![20.0, 40.0];
        for p in mse_points(&c).unwrap() {
            assert!(p.mse() < 1e-20, "{}", p.mse());
            assert!(p.outcome.gain_power > 0.0);
        }
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<ScalingPoint> = [1usize, 2, 4, 8]
            .iter()
            .map(|&b| ScalingPoint {
                m: 8,
                n: 8,
                branches: b,
                seconds: 3e-6 * (b as f64).powf(1.1),
            })
            .collect();
        assert!((loglog_slope(&pts) - 1.1).abs() < 1e-12);
    }

    #[test]
    fn arraygain_rejects_bad_du() {
        let mut c = ExperimentConfig::desk();
        c.arraygain_du = vec![3.0];
        assert!(run_arraygain(&c).is_err());
    }
}
