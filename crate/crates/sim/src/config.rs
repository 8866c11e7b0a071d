//! Experiment configuration: flat `key = value` text, one key per line,
//! lists comma separated, `#` starts a comment.
//!
//! | key | meaning | desk default |
//! |-----|---------|--------------|
//! | `m`, `n` | delay and Doppler bins | 64, 32 |
//! | `delta_f` | subcarrier spacing (Hz) | 15000 |
//! | `carrier_hz` | carrier frequency (Hz) | 4e9 |
//! | `spacing_wavelengths` | element spacing in wavelengths | 0.45 |
//! | `cp_len` | cyclic prefix per OTFS symbol (samples) | 3 |
//! | `profile` | `P4`, `P6` or `custom` | P4 |
//! | `profile_delays_ns`, `profile_powers_db` | custom profile lists | - |
//! | `paths_per_tap` | paths per tap (one value or one per tap) | 1 |
//! | `l_max` | delay support; `auto` derives it from the profile | auto |
//! | `antennas` | receive antenna counts (list) | 128 |
//! | `velocities_kmh` | terminal speeds (list) | 30, 120, 500 |
//! | `snr_db` | data SNR sweep for `ber` (list) | 0, 5, 10, 15, 20 |
//! | `snr_p_db` | pilot SNR for `ber` (list) | 40 |
//! | `mse_snr_p_db` | pilot SNR sweep for `mse` (list) | 20, 25, 30, 35, 40 |
//! | `mse_data_snr_db` | data SNR for `mse` | 20 |
//! | `patterns` | `full_guard`, `naive`, `proposed` (list) | proposed |
//! | `modulation` | 4 or 16 | 4 |
//! | `trials` | frames per sweep point | 200 |
//! | `seed` | master seed | 1 |
//! | `mode` | `ideal` or `time` propagation | ideal |
//! | `angles` | `genie` or `scan` branch directions | genie |
//! | `grid_size` | scan grid points, 0 for 4E | 0 |
//! | `threshold_ratio` | scan detection threshold | 0.5 |
//! | `merge_width_factor` | peak merge width in mainlobe widths | 1.0 |
//! | `aoa_policy` | `resample` or `keep` close angles | resample |
//! | `arraygain_antennas`, `arraygain_du` | array-gain table axes | 32..1024; 0..0.5 |
//! | `scaling_m`, `scaling_n`, `scaling_paths`, `scaling_reps` | timing sweep | see below |

use std::fmt;
use std::str::FromStr;

use otfs_core::{
    channel::AoaPolicy, DelayProfile, FrameParams, PatternVariant, QamOrder, ScanPolicy,
};

use crate::error::{Result, SimError};

/// Propagation model used by the Monte-Carlo runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMode {
    /// Exact delay-Doppler input-output relation.
    Ideal,
    /// Sampled time-domain channel with rectangular pulses.
    Time,
}

impl FromStr for PropagationMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ideal" => Ok(Self::Ideal),
            "time" => Ok(Self::Time),
            other => Err(format!("expected ideal|time, got `{other}`")),
        }
    }
}

impl fmt::Display for PropagationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ideal => "ideal",
            Self::Time => "time",
        })
    }
}

/// Where the receiver points its beams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleMode {
    /// Exactly at the true path angles.
    Genie,
    /// At the peaks found by scanning the pilot region.
    Scan,
}

impl FromStr for AngleMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "genie" => Ok(Self::Genie),
            "scan" => Ok(Self::Scan),
            other => Err(format!("expected genie|scan, got `{other}`")),
        }
    }
}

impl fmt::Display for AngleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Genie => "genie",
            Self::Scan => "scan",
        })
    }
}

/// Whether close path angles are redrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AoaHandling {
    Resample,
    Keep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub delta_f: f64,
    pub carrier_hz: f64,
    pub spacing_wavelengths: f64,
    pub cp_len: usize,
    pub profile_name: String,
    pub profile: DelayProfile,
    pub paths_per_tap: Vec<usize>,
    pub l_max: Option<usize>,
    pub antennas: Vec<usize>,
    pub velocities_kmh: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub snr_p_db: Vec<f64>,
    pub mse_snr_p_db: Vec<f64>,
    pub mse_data_snr_db: f64,
    pub patterns: Vec<PatternVariant>,
    pub modulation: QamOrder,
    pub trials: usize,
    pub seed: u64,
    pub mode: PropagationMode,
    pub angles: AngleMode,
    pub scan: ScanPolicy,
    pub aoa: AoaHandling,
    pub arraygain_antennas: Vec<usize>,
    pub arraygain_du: Vec<f64>,
    pub scaling_m: Vec<usize>,
    pub scaling_n: Vec<usize>,
    pub scaling_paths: Vec<usize>,
    pub scaling_reps: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ExperimentConfig {
    /// Desk-scale defaults (M=64, N=32).
    pub fn desk() -> Self {
        Self {
            m: 64,
            n: 32,
            delta_f: 15e3,
            carrier_hz: 4e9,
            spacing_wavelengths: 0.45,
            cp_len: 3,
            profile_name: "P4".into(),
            profile: DelayProfile::p4(),
            paths_per_tap: vec![1],
            l_max: None,
            antennas: vec![128],
            velocities_kmh: vec![30.0, 120.0, 500.0],
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            snr_p_db: vec![40.0],
            mse_snr_p_db: vec![20.0, 25.0, 30.0, 35.0, 40.0],
            mse_data_snr_db: 20.0,
            patterns: vec![PatternVariant::Proposed],
            modulation: QamOrder::Qam4,
            trials: 200,
            seed: 1,
            mode: PropagationMode::Ideal,
            angles: AngleMode::Genie,
            scan: ScanPolicy::default(),
            aoa: AoaHandling::Resample,
            arraygain_antennas: vec![32, 64, 128, 256, 1024],
            arraygain_du: vec![0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5],
            scaling_m: vec![64],
            scaling_n: vec![32, 64, 128, 256],
            scaling_paths: vec![2, 4, 8],
            scaling_reps: 5,
        }
    }

    /// Full-size frame (M=512, N=128, CP 20); everything else as desk.
    pub fn full() -> Self {
        Self {
            m: 512,
            n: 128,
            cp_len: 20,
            scaling_m: vec![512],
            scaling_n: vec![16, 32, 64, 128],
            ..Self::desk()
        }
    }

    /// Frame parameters for `antennas` receive antennas.
    pub fn frame_params(&self, antennas: usize) -> Result<FrameParams> {
        Ok(FrameParams::with_spacing_wavelengths(
            self.m,
            self.n,
            self.delta_f,
            self.carrier_hz,
            antennas,
            self.spacing_wavelengths,
            self.cp_len,
        )?)
    }

    /// Paths per tap expanded to one entry per profile tap.
    pub fn paths_per_tap_expanded(&self) -> Vec<usize> {
        if self.paths_per_tap.len() == 1 {
            vec![self.paths_per_tap[0]; self.profile.taps()]
        } else {
            self.paths_per_tap.clone()
        }
    }

    pub fn aoa_policy(&self, params: &FrameParams) -> AoaPolicy {
        match self.aoa {
            AoaHandling::Resample => AoaPolicy::mainlobe(params),
            AoaHandling::Keep => AoaPolicy::Keep,
        }
    }

    /// Parses `text` on top of `self`.
    pub fn apply_text(mut self, text: &str) -> Result<Self> {
        let mut custom_delays: Option<Vec<f64>> = None;
        let mut custom_powers: Option<Vec<f64>> = None;
        let mut profile_line = 0;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(SimError::Config {
                    line: line_no,
                    key: line.to_string(),
                    reason: "expected `key = value`".into(),
                });
            };
            let key = key.trim();
            let value = value.trim();
            let err = |reason: String| SimError::Config {
                line: line_no,
                key: key.to_string(),
                reason,
            };
            match key {
                "m" => self.m = scalar(value).map_err(err)?,
                "n" => self.n = scalar(value).map_err(err)?,
                "delta_f" => self.delta_f = scalar(value).map_err(err)?,
                "carrier_hz" => self.carrier_hz = scalar(value).map_err(err)?,
                "spacing_wavelengths" => self.spacing_wavelengths = scalar(value).map_err(err)?,
                "cp_len" => self.cp_len = scalar(value).map_err(err)?,
                "profile" => {
                    profile_line = line_no;
                    self.profile_name = value.to_string();
                    if !value.eq_ignore_ascii_case("custom") {
                        self.profile =
                            DelayProfile::preset(value).map_err(|e| err(e.to_string()))?;
                    }
                }
                "profile_delays_ns" => custom_delays = Some(list(value).map_err(err)?),
                "profile_powers_db" => custom_powers = Some(list(value).map_err(err)?),
                "paths_per_tap" => self.paths_per_tap = list(value).map_err(err)?,
                "l_max" => {
                    self.l_max = if value == "auto" {
                        None
                    } else {
                        Some(scalar(value).map_err(err)?)
                    }
                }
                "antennas" => self.antennas = list(value).map_err(err)?,
                "velocities_kmh" => self.velocities_kmh = list(value).map_err(err)?,
                "snr_db" => self.snr_db = list(value).map_err(err)?,
                "snr_p_db" => self.snr_p_db = list(value).map_err(err)?,
                "mse_snr_p_db" => self.mse_snr_p_db = list(value).map_err(err)?,
                "mse_data_snr_db" => self.mse_data_snr_db = scalar(value).map_err(err)?,
                "patterns" | "pattern" => self.patterns = list(value).map_err(err)?,
                "modulation" => {
                    let order: u32 = scalar(value).map_err(err)?;
                    self.modulation =
                        QamOrder::from_order(order).map_err(|e| err(e.to_string()))?;
                }
                "trials" => self.trials = scalar(value).map_err(err)?,
                "seed" => self.seed = scalar(value).map_err(err)?,
                "mode" => self.mode = scalar(value).map_err(err)?,
                "angles" => self.angles = scalar(value).map_err(err)?,
                "grid_size" => self.scan.grid_size = scalar(value).map_err(err)?,
                "threshold_ratio" => self.scan.threshold_ratio = scalar(value).map_err(err)?,
                "merge_width_factor" => {
                    self.scan.merge_width_factor = scalar(value).map_err(err)?
                }
                "aoa_policy" => {
                    self.aoa = match value {
                        "resample" => AoaHandling::Resample,
                        "keep" => AoaHandling::Keep,
                        other => return Err(err(format!("expected resample|keep, got `{other}`"))),
                    }
                }
                "arraygain_antennas" => self.arraygain_antennas = list(value).map_err(err)?,
                "arraygain_du" => self.arraygain_du = list(value).map_err(err)?,
                "scaling_m" => self.scaling_m = list(value).map_err(err)?,
                "scaling_n" => self.scaling_n = list(value).map_err(err)?,
                "scaling_paths" => self.scaling_paths = list(value).map_err(err)?,
                "scaling_reps" => self.scaling_reps = scalar(value).map_err(err)?,
                _ => return Err(err("unknown key".into())),
            }
        }
        if self.profile_name.eq_ignore_ascii_case("custom") {
            let (Some(d), Some(p)) = (custom_delays, custom_powers) else {
                return Err(SimError::Config {
                    line: profile_line,
                    key: "profile".into(),
                    reason: "custom profile needs profile_delays_ns and profile_powers_db".into(),
                });
            };
            self.profile = DelayProfile::new(d, p)
                .map_err(|e| SimError::invalid("profile_delays_ns", e.to_string()))?;
        } else if custom_delays.is_some() || custom_powers.is_some() {
            return Err(SimError::invalid(
                "profile_delays_ns",
                "custom delays need `profile = custom`",
            ));
        }
        self.validate()?;
        Ok(self)
    }

    /// Checks the invariants not enforced by parsing.
    pub fn validate(&self) -> Result<()> {
        let nonempty = |key: &str, len: usize| {
            if len == 0 {
                Err(SimError::invalid(key, "list must not be empty"))
            } else {
                Ok(())
            }
        };
        nonempty("antennas", self.antennas.len())?;
        nonempty("velocities_kmh", self.velocities_kmh.len())?;
        nonempty("snr_db", self.snr_db.len())?;
        nonempty("snr_p_db", self.snr_p_db.len())?;
        nonempty("mse_snr_p_db", self.mse_snr_p_db.len())?;
        nonempty("patterns", self.patterns.len())?;
        nonempty("arraygain_antennas", self.arraygain_antennas.len())?;
        nonempty("arraygain_du", self.arraygain_du.len())?;
        nonempty("scaling_m", self.scaling_m.len())?;
        nonempty("scaling_n", self.scaling_n.len())?;
        nonempty("scaling_paths", self.scaling_paths.len())?;
        if self.trials == 0 {
            return Err(SimError::invalid("trials", "must be at least 1"));
        }
        if self.scaling_reps == 0 {
            return Err(SimError::invalid("scaling_reps", "must be at least 1"));
        }
        if self.antennas.contains(&0) {
            return Err(SimError::invalid("antennas", "must be at least 1"));
        }
        if self.velocities_kmh.iter().any(|v| !(*v >= 0.0)) {
            return Err(SimError::invalid("velocities_kmh", "must be non-negative"));
        }
        let per_tap = self.paths_per_tap_expanded();
        if per_tap.len() != self.profile.taps() || per_tap.contains(&0) {
            return Err(SimError::invalid(
                "paths_per_tap",
                format!("need one positive value or {} values", self.profile.taps()),
            ));
        }
        if !(self.scan.threshold_ratio > 0.0 && self.scan.threshold_ratio <= 1.0) {
            return Err(SimError::invalid("threshold_ratio", "must be in (0, 1]"));
        }
        if !(self.scan.merge_width_factor >= 0.0) {
            return Err(SimError::invalid("merge_width_factor", "must be non-negative"));
        }
        self.frame_params(self.antennas[0])
            .map_err(|e| SimError::invalid("m", e.to_string()))?;
        Ok(())
    }
}

fn scalar<T: FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| format!("cannot parse `{value}`: {e}"))
}

fn list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(scalar)
        .collect()
}
