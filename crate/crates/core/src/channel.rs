//! Multipath channel realizations and their application to signals.
//!
//! Two propagation modes are provided:
//!
//! * [`propagate_ideal`] applies the delay-Doppler input-output relation of
//!   bi-orthogonal pulses directly on the grid: every path is a cyclic shift
//!   by `(l_p, k_p)` with phase `exp(-j2pi l_p k_p / MN)`.
//! * [`propagate_time`] applies the sampled time-varying channel to a
//!   CP-OTFS waveform (rectangular pulses, one CP per symbol).
//!
//! [`build_dd_channel_matrix`] materializes the ideal relation as a dense
//! `MN x MN` matrix for small frames.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::frame::{DdFrame, FrameParams, Samples, TimeSignal, C64};

/// Largest `M * N` for which the dense channel matrix is built.
pub const DENSE_MATRIX_CAP: usize = 4096;

/// Tap delays (ns) and relative powers (dB).
#[derive(Debug, Clone, PartialEq)]
pub struct DelayProfile {
    pub delays_ns: Vec<f64>,
    pub powers_db: Vec<f64>,
}

impl DelayProfile {
    pub fn new(delays_ns: Vec<f64>, powers_db: Vec<f64>) -> Result<Self> {
        if delays_ns.is_empty() {
            return Err(Error::Config("delay profile is empty".into()));
        }
        if delays_ns.len() != powers_db.len() {
            return Err(Error::Config(format!(
                "delay profile has {} delays but {} powers",
                delays_ns.len(),
                powers_db.len()
            )));
        }
        if delays_ns.iter().any(|d| !d.is_finite() || *d < 0.0)
            || powers_db.iter().any(|p| !p.is_finite())
        {
            return Err(Error::Config("delay profile values must be finite, delays >= 0".into()));
        }
        Ok(Self {
            delays_ns,
            powers_db,
        })
    }

    /// Four-tap profile.
    pub fn p4() -> Self {
        Self {
            delays_ns: vec![0.0, 370.0, 1090.0, 2510.0],
            powers_db: vec![0.0, -0.6, -7.0, -16.9],
        }
    }

    /// Six-tap profile.
    pub fn p6() -> Self {
        Self {
            delays_ns: vec![0.0, 150.0, 370.0, 1090.0, 1730.0, 2510.0],
            powers_db: vec![0.0, -1.4, -3.6, -7.0, -12.0, -16.9],
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name.to_ascii_uppercase().as_str() {
            "P4" => Ok(Self::p4()),
            "P6" => Ok(Self::p6()),
            other => Err(Error::Config(format!("unknown delay profile {other}"))),
        }
    }

    pub fn taps(&self) -> usize {
        self.delays_ns.len()
    }

    /// Linear tap powers normalized to sum to one.
    pub fn normalized_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self.powers_db.iter().map(|db| 10f64.powf(db / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|p| p / total).collect()
    }

    /// Delay index `round(M delta_f tau)` of every tap.
    pub fn delay_indices(&self, params: &FrameParams) -> Vec<usize> {
        self.delays_ns
            .iter()
            .map(|d| round_half_up(params.sample_rate() * d * 1e-9) as usize)
            .collect()
    }

    /// Smallest delay support covering the profile, `ceil(M delta_f tau_max)`.
    pub fn delay_support(&self, params: &FrameParams) -> usize {
        let tau_max = self.delays_ns.iter().copied().fold(0.0, f64::max);
        (params.sample_rate() * tau_max * 1e-9 - 1e-9).ceil().max(0.0) as usize
    }
}

/// `floor(x + 0.5)`.
pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// One propagation path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    /// Tap this path belongs to.
    pub tap: usize,
    pub delay_s: f64,
    pub doppler_hz: f64,
    /// Angle of arrival in `[0, 2pi)`.
    pub aoa: f64,
    pub gain: C64,
    /// Variance the gain was drawn with.
    pub mean_power: f64,
    /// Integer delay index.
    pub l: usize,
    /// Integer Doppler index (signed).
    pub k: i64,
}

impl PathSpec {
    /// `cos` of the arrival angle, the coordinate the array responds to.
    pub fn cos_aoa(&self) -> f64 {
        self.aoa.cos()
    }

    /// Continuous Doppler index `N T nu`.
    pub fn doppler_index(&self, params: &FrameParams) -> f64 {
        params.n as f64 * params.symbol_duration() * self.doppler_hz
    }

    /// A path on the integer grid, arriving from `aoa`, with Doppler
    /// `k / (N T)` and delay `l / (M delta_f)`.
    pub fn on_grid(l: usize, k: i64, aoa: f64, gain: C64, params: &FrameParams) -> Self {
        Self {
            tap: 0,
            delay_s: l as f64 / params.sample_rate(),
            doppler_hz: k as f64 / (params.n as f64 * params.symbol_duration()),
            aoa,
            gain,
            mean_power: gain.norm_sqr(),
            l,
            k,
        }
    }
}

/// The set of paths drawn for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub paths: Vec<PathSpec>,
    pub paths_per_tap: Vec<usize>,
    /// Maximum Doppler shift in Hz.
    pub f_d: f64,
    pub l_max: usize,
    pub k_max: usize,
}

impl ChannelRealization {
    /// Builds a realization from explicit paths, deriving the supports.
    pub fn from_paths(paths: Vec<PathSpec>, f_d: f64, params: &FrameParams) -> Self {
        let taps = paths.iter().map(|p| p.tap).max().map_or(0, |t| t + 1);
        let mut paths_per_tap = vec![0; taps];
        for p in &paths {
            paths_per_tap[p.tap] += 1;
        }
        let l_max = paths.iter().map(|p| p.l).max().unwrap_or(0);
        let k_from_paths = paths.iter().map(|p| p.k.unsigned_abs() as usize).max().unwrap_or(0);
        let k_max = params.doppler_support(f_d).max(k_from_paths);
        Self {
            paths,
            paths_per_tap,
            f_d,
            l_max,
            k_max,
        }
    }

    /// Number of paths `B`.
    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    pub fn taps(&self) -> usize {
        self.paths_per_tap.len()
    }

    pub fn total_mean_power(&self) -> f64 {
        self.paths.iter().map(|p| p.mean_power).sum()
    }

    pub fn max_delay_index(&self) -> usize {
        self.paths.iter().map(|p| p.l).max().unwrap_or(0)
    }

    /// Pairs of paths closer than `min_du` in `cos(aoa)`.
    pub fn unresolvable_pairs(&self, min_du: f64) -> Vec<(usize, usize)> {
        close_pairs(
            &self.paths.iter().map(PathSpec::cos_aoa).collect::<Vec<_>>(),
            min_du,
        )
    }
}

fn close_pairs(us: &[f64], min_du: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..us.len() {
        for b in a + 1..us.len() {
            if (us[a] - us[b]).abs() < min_du {
                out.push((a, b));
            }
        }
    }
    out
}

/// What to do with path angles the array cannot tell apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AoaPolicy {
    /// Redraw all angles until every pair differs by at least `min_du` in
    /// `cos(aoa)`.
    Resample { min_du: f64 },
    Keep,
}

impl AoaPolicy {
    /// Resample with the array mainlobe width `2 lambda / (E eta)`.
    pub fn mainlobe(params: &FrameParams) -> Self {
        AoaPolicy::Resample {
            min_du: mainlobe_width(params),
        }
    }
}

/// Null-to-null mainlobe width of the array in `cos(angle)`.
pub fn mainlobe_width(params: &FrameParams) -> f64 {
    2.0 * params.wavelength() / (params.antennas as f64 * params.spacing_m)
}

const MAX_ANGLE_DRAWS: usize = 10_000;

/// Everything needed to draw a channel besides the frame geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub profile: DelayProfile,
    pub velocity_kmh: f64,
    /// Paths per tap; empty means one path per tap.
    pub paths_per_tap: Vec<usize>,
    /// Delay support; `None` derives it from the profile.
    pub l_max: Option<usize>,
    pub aoa_policy: AoaPolicy,
}

impl ChannelSpec {
    pub fn new(profile: DelayProfile, velocity_kmh: f64, aoa_policy: AoaPolicy) -> Self {
        Self {
            profile,
            velocity_kmh,
            paths_per_tap: Vec::new(),
            l_max: None,
            aoa_policy,
        }
    }

    pub fn l_max(&self, params: &FrameParams) -> usize {
        self.l_max
            .unwrap_or_else(|| self.profile.delay_support(params).max(1))
    }

    pub fn k_max(&self, params: &FrameParams) -> usize {
        params.doppler_support(params.max_doppler_hz(self.velocity_kmh))
    }

    fn per_tap(&self) -> Result<Vec<usize>> {
        let taps = self.profile.taps();
        if self.paths_per_tap.is_empty() {
            return Ok(vec![1; taps]);
        }
        if self.paths_per_tap.len() != taps {
            return Err(Error::Config(format!(
                "paths_per_tap has {} entries for {} taps",
                self.paths_per_tap.len(),
                taps
            )));
        }
        if self.paths_per_tap.contains(&0) {
            return Err(Error::Config("every tap needs at least one path".into()));
        }
        Ok(self.paths_per_tap.clone())
    }
}

/// Draws one realization: uniform AoA, Rayleigh gains following the
/// normalized profile, Doppler `f_d cos(aoa)`, rounded grid indices.
pub fn sample_channel<R: Rng + ?Sized>(
    spec: &ChannelSpec,
    params: &FrameParams,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if spec.profile.taps() == 0 {
        return Err(Error::Config("delay profile is empty".into()));
    }
    if !(spec.velocity_kmh >= 0.0) {
        return Err(Error::Config("velocity must be non-negative".into()));
    }
    let per_tap = spec.per_tap()?;
    let powers = spec.profile.normalized_powers();
    let delays = spec.profile.delay_indices(params);
    let l_max = spec.l_max(params);
    if let Some(&l) = delays.iter().max() {
        if l > l_max {
            return Err(Error::Config(format!(
                "profile delay index {l} exceeds l_max {l_max}"
            )));
        }
    }
    let f_d = params.max_doppler_hz(spec.velocity_kmh);
    let k_max = params.doppler_support(f_d);
    let total: usize = per_tap.iter().sum();

    let mut aoas = vec![0.0; total];
    let mut draws = 0;
    loop {
        for a in aoas.iter_mut() {
            *a = rng.random::<f64>() * 2.0 * PI;
        }
        draws += 1;
        match spec.aoa_policy {
            AoaPolicy::Keep => break,
            AoaPolicy::Resample { min_du } => {
                let us: Vec<f64> = aoas.iter().map(|a| a.cos()).collect();
                if close_pairs(&us, min_du).is_empty() {
                    break;
                }
                if draws >= MAX_ANGLE_DRAWS {
                    return Err(Error::Config(format!(
                        "could not separate {total} paths by {min_du} in cos(aoa)"
                    )));
                }
            }
        }
    }

    let nt = params.n as f64 * params.symbol_duration();
    let mut paths = Vec::with_capacity(total);
    let mut idx = 0;
    for (tap, &q) in per_tap.iter().enumerate() {
        let var = powers[tap] / q as f64;
        for _ in 0..q {
            let aoa = aoas[idx];
            idx += 1;
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let gain = C64::new(re, im) * (var / 2.0).sqrt();
            let doppler_hz = f_d * aoa.cos();
            paths.push(PathSpec {
                tap,
                delay_s: spec.profile.delays_ns[tap] * 1e-9,
                doppler_hz,
                aoa,
                gain,
                mean_power: var,
                l: delays[tap],
                k: round_half_up(nt * doppler_hz),
            });
        }
    }
    Ok(ChannelRealization {
        paths,
        paths_per_tap: per_tap,
        f_d,
        l_max,
        k_max,
    })
}

/// Phase `exp(j phi_i u)` of antenna `i` for a plane wave with `u = cos(angle)`.
#[inline]
pub fn antenna_phase(params: &FrameParams, antenna: usize, u: f64) -> C64 {
    C64::from_polar(1.0, antenna as f64 * params.phase_step() * u)
}

/// `out[l, k] += coef * x[[l - dl]_M, [k - dk]_N]`.
pub(crate) fn add_shifted(out: &mut [C64], x: &[C64], m: usize, n: usize, dl: usize, dk: i64, coef: C64) {
    let dl = dl % m;
    let dk = dk.rem_euclid(n as i64) as usize;
    for k in 0..n {
        let src_k = (k + n - dk) % n;
        let dst = &mut out[k * m..(k + 1) * m];
        let src = &x[src_k * m..(src_k + 1) * m];
        for l in 0..m {
            dst[l] += coef * src[(l + m - dl) % m];
        }
    }
}

/// Twisted phase `exp(-j2pi l k / MN)` of an on-grid path.
#[inline]
pub fn path_twist(l: i64, k: i64, params: &FrameParams) -> C64 {
    C64::from_polar(1.0, -2.0 * PI * (l * k) as f64 / params.cells() as f64)
}

fn single_path_frames(x: &DdFrame, ch: &ChannelRealization, params: &FrameParams) -> Vec<Vec<C64>> {
    ch.paths
        .iter()
        .map(|p| {
            let mut out = vec![C64::default(); params.cells()];
            let coef = p.gain * path_twist(p.l as i64, p.k, params);
            add_shifted(&mut out, x.as_slice(), params.m, params.n, p.l, p.k, coef);
            out
        })
        .collect()
}

/// Noiseless delay-Doppler output at one antenna.
pub fn propagate_ideal(
    x: &DdFrame,
    ch: &ChannelRealization,
    params: &FrameParams,
    antenna: usize,
) -> Result<DdFrame> {
    x.check_dims(params)?;
    if antenna >= params.antennas {
        return Err(Error::Domain(format!(
            "antenna {antenna} outside array of {}",
            params.antennas
        )));
    }
    let mut out = vec![C64::default(); params.cells()];
    for p in &ch.paths {
        let coef = p.gain
            * antenna_phase(params, antenna, p.cos_aoa())
            * path_twist(p.l as i64, p.k, params);
        add_shifted(&mut out, x.as_slice(), params.m, params.n, p.l, p.k, coef);
    }
    DdFrame::from_vec(params, out)
}

/// Noiseless delay-Doppler outputs at every antenna.
pub fn propagate_ideal_all(
    x: &DdFrame,
    ch: &ChannelRealization,
    params: &FrameParams,
) -> Result<Vec<DdFrame>> {
    x.check_dims(params)?;
    let per_path = single_path_frames(x, ch, params);
    let us: Vec<f64> = ch.paths.iter().map(PathSpec::cos_aoa).collect();
    mix_per_antenna(&per_path, &us, params)
        .into_iter()
        .map(|v| DdFrame::from_vec(params, v))
        .collect()
}

fn mix_per_antenna(per_path: &[Vec<C64>], us: &[f64], params: &FrameParams) -> Vec<Vec<C64>> {
    let len = per_path.first().map_or(0, Vec::len);
    (0..params.antennas)
        .map(|i| {
            let mut out = vec![C64::default(); len];
            for (frame, &u) in per_path.iter().zip(us) {
                let a = antenna_phase(params, i, u);
                for (o, v) in out.iter_mut().zip(frame) {
                    *o += a * v;
                }
            }
            out
        })
        .collect()
}

/// Noiseless received bodies (CP removed) at every antenna.
///
/// Each path contributes
/// `gain * exp(j phi_i cos(aoa)) * exp(j2pi kappa (t - l - t0) / (N (M + cp))) * s[t - l]` with `kappa = N T nu` the continuous Doppler index and `t` the
/// absolute sample index of the CP-OTFS frame. The phase origin `t0` is the
/// centre of the first symbol body, so the per-symbol phase of a path
/// matches the ideal relation.
pub fn propagate_time(
    s: &TimeSignal,
    ch: &ChannelRealization,
    params: &FrameParams,
) -> Result<Vec<TimeSignal>> {
    let (m, cp) = (s.symbol_len(), s.cp_len());
    if m != params.m || s.symbols() != params.n {
        return Err(Error::Size {
            what: "transmit signal",
            expected: params.n * (params.m + params.cp_len),
            got: s.len(),
        });
    }
    let max_l = ch.max_delay_index();
    if max_l > cp {
        return Err(Error::Config(format!(
            "cyclic prefix {cp} shorter than path delay index {max_l}"
        )));
    }
    let block = m + cp;
    let frame_len = (params.n * block) as f64;
    let t0 = cp as f64 + (m as f64 - 1.0) / 2.0;
    let tx = s.samples();
    let per_path: Vec<Vec<C64>> = ch
        .paths
        .iter()
        .map(|p| {
            let kappa = p.doppler_index(params);
            let step = 2.0 * PI * kappa / frame_len;
            let mut out = Vec::with_capacity(params.cells());
            for n in 0..params.n {
                for j in cp..block {
                    let t = n * block + j;
                    let src = t - p.l;
                    let ph = step * (src as f64 - t0);
                    out.push(p.gain * C64::from_polar(1.0, ph) * tx[src]);
                }
            }
            out
        })
        .collect();
    let us: Vec<f64> = ch.paths.iter().map(PathSpec::cos_aoa).collect();
    mix_per_antenna(&per_path, &us, params)
        .into_iter()
        .map(|v| TimeSignal::new(v, m, 0))
        .collect()
}

/// Adds i.i.d. `CN(0, sigma2)` noise to every sample.
pub fn add_noise<S: Samples, R: Rng + ?Sized>(signal: &mut S, sigma2: f64, rng: &mut R) -> Result<()> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::Domain(format!("noise variance {sigma2} must be >= 0")));
    }
    if sigma2 == 0.0 {
        return Ok(());
    }
    let sd = (sigma2 / 2.0).sqrt();
    for v in signal.samples_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v += C64::new(re * sd, im * sd);
    }
    Ok(())
}

/// Dense `H` with `vec(y) = H vec(x)` for the ideal relation at antenna 0.
pub fn build_dd_channel_matrix(ch: &ChannelRealization, params: &FrameParams) -> Result<DMatrix<C64>> {
    let (m, n) = (params.m, params.n);
    let mn = m * n;
    if mn > DENSE_MATRIX_CAP {
        return Err(Error::Size {
            what: "dense channel matrix (M*N cap)",
            expected: DENSE_MATRIX_CAP,
            got: mn,
        });
    }
    let mut h = DMatrix::<C64>::zeros(mn, mn);
    for p in &ch.paths {
        let coef = p.gain * path_twist(p.l as i64, p.k, params);
        let dk = p.k.rem_euclid(n as i64) as usize;
        for k in 0..n {
            for l in 0..m {
                let row = k * m + l;
                let col = ((k + n - dk) % n) * m + (l + m - p.l % m) % m;
                h[(row, col)] += coef;
            }
        }
    }
    Ok(h)
}
