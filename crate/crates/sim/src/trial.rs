//! One Monte-Carlo frame: transmit, propagate, receive, count errors.

use otfs_core::{
    add_noise, assemble_frame,
    beamforming::scan_angles,
    channel::{mainlobe_width, ChannelRealization},
    make_pattern, propagate_ideal_all, propagate_time, receive, sample_channel, ChannelSpec,
    Constellation, DdFrame, FrameParams, PatternVariant, ReceiverOutput, Transforms, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{AngleMode, ExperimentConfig, PropagationMode};
use crate::error::Result;

/// Generator for one trial, a pure function of the master seed, the
/// experiment name and the trial index. Every sweep point reuses the same
/// streams, so points differ only in the swept parameter.
pub fn trial_rng(master_seed: u64, experiment: &str, trial: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&fnv1a(experiment.as_bytes()).to_le_bytes());
    seed[16..24].copy_from_slice(&trial.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Noise variance for a data SNR in dB (unit data power).
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Sweep coordinates of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialPoint {
    pub pattern: PatternVariant,
    pub velocity_kmh: f64,
    pub antennas: usize,
    pub snr_db: f64,
    pub snr_p_db: f64,
}

/// Counts accumulated over one or more trials.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrialOutcome {
    pub bit_errors: u64,
    pub bits: u64,
    pub symbol_errors: u64,
    pub symbols: u64,
    /// `sum_b |beta_hat_b - beta_b|^2`, a missed path counting as `beta_hat = 0`.
    pub gain_error: f64,
    /// `sum_b |beta_b|^2`.
    pub gain_power: f64,
    /// Branches the receiver formed.
    pub branches: u64,
}

impl TrialOutcome {
    pub fn merge(mut self, other: &TrialOutcome) -> Self {
        self.bit_errors += other.bit_errors;
        self.bits += other.bits;
        self.symbol_errors += other.symbol_errors;
        self.symbols += other.symbols;
        self.gain_error += other.gain_error;
        self.gain_power += other.gain_power;
        self.branches += other.branches;
        self
    }
}

fn random_bits<R: Rng>(count: usize, rng: &mut R) -> Vec<u8> {
    let mut bits = Vec::with_capacity(count);
    while bits.len() < count {
        let word: u64 = rng.random();
        let take = (count - bits.len()).min(64);
        bits.extend((0..take).map(|i| ((word >> i) & 1) as u8));
    }
    bits
}

/// Per-antenna delay-Doppler frames received for `x`.
fn received_frames<R: Rng>(
    x: &DdFrame,
    ch: &ChannelRealization,
    params: &FrameParams,
    mode: PropagationMode,
    sigma2: f64,
    rng: &mut R,
) -> Result<Vec<DdFrame>> {
    match mode {
        PropagationMode::Ideal => {
            let mut frames = propagate_ideal_all(x, ch, params)?;
            for f in frames.iter_mut() {
                add_noise(f, sigma2, rng)?;
            }
            Ok(frames)
        }
        PropagationMode::Time => {
            let t = Transforms::new(params);
            let s = t.modulate(x, params.cp_len)?;
            let mut bodies = propagate_time(&s, ch, params)?;
            for b in bodies.iter_mut() {
                add_noise(b, sigma2, rng)?;
            }
            Ok(bodies
                .iter()
                .map(|b| t.demodulate(b))
                .collect::<otfs_core::Result<Vec<_>>>()?)
        }
    }
}

/// Gain error of the receiver against the true paths. In genie mode branch
/// `b` belongs to path `b`; after a scan every path takes the closest branch
/// within one mainlobe width that found its delay and Doppler.
fn gain_error(
    out: Option<&ReceiverOutput>,
    ch: &ChannelRealization,
    angles: AngleMode,
    params: &FrameParams,
) -> f64 {
    let width = mainlobe_width(params);
    ch.paths
        .iter()
        .enumerate()
        .map(|(b, p)| {
            let hit = out.and_then(|o| match angles {
                AngleMode::Genie => o.estimates.get(b).copied(),
                AngleMode::Scan => o
                    .estimates
                    .iter()
                    .filter(|e| (e.u - p.cos_aoa()).abs() < width)
                    .min_by(|a, c| {
                        (a.u - p.cos_aoa())
                            .abs()
                            .total_cmp(&(c.u - p.cos_aoa()).abs())
                    })
                    .copied(),
            });
            let beta_hat = match hit {
                Some(e) if e.l_hat == p.l && e.k_hat == p.k => e.beta_hat,
                _ => C64::default(),
            };
            (beta_hat - p.gain).norm_sqr()
        })
        .sum()
}

/// Runs one frame through the whole chain.
pub fn run_trial<R: Rng>(
    cfg: &ExperimentConfig,
    point: &TrialPoint,
    rng: &mut R,
) -> Result<TrialOutcome> {
    let params = cfg.frame_params(point.antennas)?;
    let spec = ChannelSpec {
        profile: cfg.profile.clone(),
        velocity_kmh: point.velocity_kmh,
        paths_per_tap: cfg.paths_per_tap_expanded(),
        l_max: cfg.l_max,
        aoa_policy: cfg.aoa_policy(&params),
    };
    let l_max = spec.l_max(&params);
    let k_max = spec.k_max(&params);
    let ch = sample_channel(&spec, &params, rng)?;

    let sigma2 = noise_variance(point.snr_db);
    let pattern = make_pattern(point.pattern, &params, l_max, k_max, point.snr_p_db, sigma2)?;
    let constellation = Constellation::new(cfg.modulation);
    let bits = random_bits(pattern.data_len() * constellation.bits_per_symbol(), rng);
    let data = constellation.modulate(&bits)?;
    let x = assemble_frame(&data, &pattern, &params)?;

    let frames = received_frames(&x, &ch, &params, cfg.mode, sigma2, rng)?;
    let directions: Vec<f64> = match cfg.angles {
        AngleMode::Genie => ch.paths.iter().map(|p| p.cos_aoa()).collect(),
        AngleMode::Scan => {
            let grid = cfg.scan.grid(&params)?;
            scan_angles(&frames, &grid, &cfg.scan, &pattern, ch.f_d, &params)?
                .into_iter()
                .map(|d| d.u)
                .collect()
        }
    };
    let out = if directions.is_empty() {
        None
    } else {
        match receive(&frames, &directions, &pattern, ch.f_d, &params) {
            Ok(o) => Some(o),
            Err(otfs_core::Error::DegenerateCombine) => None,
            Err(e) => return Err(e.into()),
        }
    };

    // Without a usable branch every symbol is decided from zero.
    let symbols = match &out {
        Some(o) => o.symbols.clone(),
        None => vec![C64::default(); data.len()],
    };
    let decided = constellation.demodulate(&symbols);
    let bps = constellation.bits_per_symbol();
    let bit_errors = decided.iter().zip(&bits).filter(|(a, b)| a != b).count() as u64;
    let symbol_errors = decided
        .chunks_exact(bps)
        .zip(bits.chunks_exact(bps))
        .filter(|(a, b)| a != b)
        .count() as u64;

    Ok(TrialOutcome {
        bit_errors,
        bits: bits.len() as u64,
        symbol_errors,
        symbols: data.len() as u64,
        gain_error: gain_error(out.as_ref(), &ch, cfg.angles, &params),
        gain_power: ch.paths.iter().map(|p| p.gain.norm_sqr()).sum(),
        branches: out.as_ref().map_or(0, |o| o.estimates.len() as u64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_streams_are_pure_and_distinct() {
        let a: u64 = trial_rng(1, "ber", 3).random();
        let b: u64 = trial_rng(1, "ber", 3).random();
        assert_eq!(a, b);
        assert_ne!(a, trial_rng(1, "ber", 4).random::<u64>());
        assert_ne!(a, trial_rng(2, "ber", 3).random::<u64>());
        assert_ne!(a, trial_rng(1, "mse", 3).random::<u64>());
    }

    #[test]
    fn bits_are_balanced() {
        let mut rng = trial_rng(0, "bits", 0);
        let bits = random_bits(100_001, &mut rng);
        assert_eq!(bits.len(), 100_001);
        let ones = bits.iter().filter(|&&b| b == 1).count() as f64;
        assert!((ones / 100_001.0 - 0.5).abs() < 0.01);
    }

    #[test]
    fn noiseless_genie_trial_is_error_free() {
        let mut cfg = ExperimentConfig::desk();
        cfg.antennas = vec![256];
        let point = TrialPoint {
            pattern: PatternVariant::FullGuard,
            velocity_kmh: 500.0,
            antennas: 256,
            snr_db: f64::INFINITY,
            snr_p_db: 40.0,
        };
        for t in 0..5 {
            let o = run_trial(&cfg, &point, &mut trial_rng(9, "t", t)).unwrap();
            assert_eq!(o.bit_errors, 0);
            assert_eq!(o.bits, 2 * o.symbols);
            assert_eq!(o.branches, 4);
        }
    }
}
