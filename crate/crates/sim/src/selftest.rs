//! Quick oracle-equivalence checks, one PASS/FAIL line per invariant.

use otfs_core::{
    array_gain, array_gain_direct, assemble_frame, build_dd_channel_matrix, combine,
    make_pattern, propagate_ideal, propagate_ideal_all, propagate_time, receive,
    ChannelRealization, DdFrame, FrameParams, PathSpec, PatternVariant, Transforms, C64,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::record::ResultRecord;
use crate::trial::trial_rng;

/// Outcome of one invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Measured quantity the verdict is based on.
    pub value: f64,
    pub limit: f64,
}

impl Check {
    fn at_most(name: &'static str, value: f64, limit: f64) -> Self {
        Self {
            name,
            passed: value <= limit,
            value,
            limit,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {} value={:e} limit={:e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.limit
        )
    }
}

fn random_frame(p: &FrameParams, rng: &mut ChaCha8Rng) -> Result<DdFrame> {
    let v = (0..p.cells())
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    Ok(DdFrame::from_vec(p, v)?)
}

fn max_err(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn random_paths(
    count: usize,
    l_max: usize,
    k_max: i64,
    p: &FrameParams,
    rng: &mut ChaCha8Rng,
) -> Vec<PathSpec> {
    (0..count)
        .map(|_| {
            let l = rng.random_range(0..=l_max);
            let k = rng.random_range(-k_max..=k_max);
            let aoa = rng.random::<f64>() * std::f64::consts::TAU;
            let g = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            PathSpec::on_grid(l, k, aoa, g, p)
        })
        .collect()
}

fn transforms_round_trip(seed: u64) -> Result<Check> {
    let p = FrameParams::desk(1)?;
    let t = Transforms::new(&p);
    let mut rng = trial_rng(seed, "selftest-transforms", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let x = random_frame(&p, &mut rng)?;
        let back = t.demodulate(&otfs_core::remove_cp(&t.modulate(&x, p.cp_len)?)?)?;
        worst = worst.max(max_err(back.as_slice(), x.as_slice()));
    }
    Ok(Check::at_most("transforms_round_trip", worst, 1e-12))
}

fn ideal_matches_matrix(seed: u64) -> Result<Check> {
    let p = FrameParams::with_spacing_wavelengths(8, 8, 15e3, 4e9, 1, 0.45, 3)?;
    let mut rng = trial_rng(seed, "selftest-matrix", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let ch = ChannelRealization::from_paths(random_paths(4, 3, 2, &p, &mut rng), 0.0, &p);
        let x = random_frame(&p, &mut rng)?;
        let y = propagate_ideal(&x, &ch, &p, 0)?;
        let h = build_dd_channel_matrix(&ch, &p)?;
        let xs = x.as_slice();
        let hx: Vec<C64> = (0..h.nrows())
            .map(|r| (0..h.ncols()).map(|c| h[(r, c)] * xs[c]).sum())
            .collect();
        worst = worst.max(max_err(y.as_slice(), &hx));
    }
    Ok(Check::at_most("ideal_matches_channel_matrix", worst, 1e-12))
}

fn time_matches_ideal(seed: u64, doppler: bool) -> Result<Check> {
    let p = FrameParams::with_spacing_wavelengths(64, 32, 15e3, 4e9, 2, 0.45, 3)?;
    let t = Transforms::new(&p);
    let mut rng = trial_rng(seed, "selftest-time", u64::from(doppler));
    let k_max = if doppler { (p.n / 8) as i64 } else { 0 };
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let ch = ChannelRealization::from_paths(random_paths(3, 3, k_max, &p, &mut rng), 0.0, &p);
        let x = random_frame(&p, &mut rng)?;
        let bodies = propagate_time(&t.modulate(&x, p.cp_len)?, &ch, &p)?;
        for (i, body) in bodies.iter().enumerate() {
            let got = t.demodulate(body)?;
            let want = propagate_ideal(&x, &ch, &p, i)?;
            let value = if doppler {
                let err: f64 = got
                    .as_slice()
                    .iter()
                    .zip(want.as_slice())
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum();
                err / want.energy()
            } else {
                max_err(got.as_slice(), want.as_slice())
            };
            worst = worst.max(value);
        }
    }
    Ok(if doppler {
        Check::at_most("time_vs_ideal_doppler_nmse", worst, 0.05)
    } else {
        Check::at_most("time_vs_ideal_zero_doppler", worst, 1e-9)
    })
}

fn array_gain_closed_form(seed: u64) -> Result<Check> {
    let mut rng = trial_rng(seed, "selftest-arraygain", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let e = rng.random_range(1..=1024);
        let spacing = rng.random_range(0.05..1.0);
        let p = FrameParams::with_spacing_wavelengths(4, 4, 15e3, 4e9, e, spacing, 0)?;
        let a = rng.random_range(-1.0..=1.0);
        let b = rng.random_range(-1.0..=1.0);
        worst = worst.max((array_gain(a, b, &p) - array_gain_direct(a, b, &p)).abs());
    }
    Ok(Check::at_most("array_gain_closed_form", worst, 1e-10))
}

fn combine_commutes(seed: u64) -> Result<Check> {
    let p = FrameParams::with_spacing_wavelengths(16, 8, 15e3, 4e9, 8, 0.45, 0)?;
    let t = Transforms::new(&p);
    let mut rng = trial_rng(seed, "selftest-combine", 0);
    let bodies = (0..p.antennas)
        .map(|_| Ok(t.modulate(&random_frame(&p, &mut rng)?, 0)?))
        .collect::<Result<Vec<_>>>()?;
    let u = 0.3;
    let a = t.demodulate(&combine(&bodies, u, &p)?.signal)?;
    let dd = bodies
        .iter()
        .map(|b| Ok(t.demodulate(b)?))
        .collect::<Result<Vec<_>>>()?;
    let b = combine(&dd, u, &p)?.signal;
    Ok(Check::at_most("combine_commutes_with_demodulation", max_err(a.as_slice(), b.as_slice()), 1e-12))
}

fn single_path_estimation(seed: u64) -> Result<Check> {
    let p = FrameParams::desk(64)?;
    let mut rng = trial_rng(seed, "selftest-estimate", 0);
    let f_d = p.max_doppler_hz(500.0);
    let k_max = p.doppler_support(f_d);
    let pat = make_pattern(PatternVariant::FullGuard, &p, 3, k_max, 40.0, 1.0)?;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let aoa = rng.random::<f64>() * std::f64::consts::TAU;
        let l = rng.random_range(0..=3);
        let nt = p.n as f64 * p.symbol_duration();
        let k = otfs_core::channel::round_half_up(nt * f_d * aoa.cos());
        let beta = C64::new(rng.random::<f64>() + 0.1, rng.random::<f64>());
        let ch = ChannelRealization::from_paths(vec![PathSpec::on_grid(l, k, aoa, beta, &p)], f_d, &p);
        let x = assemble_frame(&vec![C64::new(1.0, 0.0); pat.data_len()], &pat, &p)?;
        let frames = propagate_ideal_all(&x, &ch, &p)?;
        let out = receive(&frames, &[aoa.cos()], &pat, f_d, &p)?;
        let e = out.estimates[0];
        let miss = if (e.l_hat, e.k_hat) == (l, k) { 0.0 } else { 1.0 };
        worst = worst.max(miss).max((e.beta_hat - beta).norm());
        worst = worst.max(max_err(out.x_hat.as_slice(), x.as_slice()));
    }
    Ok(Check::at_most("single_path_estimation_exact", worst, 1e-9))
}

fn table_overheads() -> Result<Check> {
    let p = FrameParams::table_i(1)?;
    let mut mismatches = 0.0;
    let expected = [
        (PatternVariant::FullGuard, [205, 697, 2665]),
        (PatternVariant::Naive, [1, 1, 1]),
        (PatternVariant::Proposed, [63, 189, 693]),
    ];
    for (variant, counts) in expected {
        for (k_max, want) in [1usize, 4, 16].into_iter().zip(counts) {
            let pat = make_pattern(variant, &p, 20, k_max, 0.0, 1.0)?;
            if pat.overhead() != want {
                mismatches += 1.0;
            }
        }
    }
    Ok(Check::at_most("overhead_counts", mismatches, 0.0))
}

/// Runs every check.
pub fn run_checks(seed: u64) -> Result<Vec<Check>> {
    Ok(vec![
        transforms_round_trip(seed)?,
        ideal_matches_matrix(seed)?,
        time_matches_ideal(seed, false)?,
        time_matches_ideal(seed, true)?,
        array_gain_closed_form(seed)?,
        combine_commutes(seed)?,
        single_path_estimation(seed)?,
        table_overheads()?,
    ])
}

pub fn records(checks: &[Check], seed: u64) -> Vec<ResultRecord> {
    checks
        .iter()
        .map(|c| ResultRecord::new("selftest", c.name, c.value, 1, seed))
        .collect()
}
