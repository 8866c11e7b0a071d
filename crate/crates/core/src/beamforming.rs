//! Receive beamforming over a uniform linear array.
//!
//! Angles are handled through `u = cos(angle)`, the only coordinate the array
//! response depends on.

use std::f64::consts::PI;

use crate::channel::{antenna_phase, ChannelRealization};
use crate::error::{Error, Result};
use crate::estimation::estimate_doppler;
use crate::frame::{DdFrame, FrameParams, Samples, C64};
use crate::pattern::PilotPattern;

fn check_u(u: f64) -> Result<()> {
    if u.is_finite() && u.abs() <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("cos(angle) {u} outside [-1, 1]")))
    }
}

/// Weights `w_i = exp(j phi_i u)`.
pub fn steering_vector(u: f64, params: &FrameParams) -> Result<Vec<C64>> {
    check_u(u)?;
    Ok((0..params.antennas)
        .map(|i| antenna_phase(params, i, u))
        .collect())
}

/// A beamformed signal for one look direction.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSignal<S> {
    pub u: f64,
    pub signal: S,
    pub amplitude_metric: f64,
}

/// Spatial matched filter `(1/E) sum_i conj(w_i(u)) r_i`.
pub fn combine<S: Samples>(signals: &[S], u: f64, params: &FrameParams) -> Result<BranchSignal<S>> {
    let w = steering_vector(u, params)?;
    if signals.len() != params.antennas {
        return Err(Error::Size {
            what: "antenna signals",
            expected: params.antennas,
            got: signals.len(),
        });
    }
    let len = signals[0].samples().len();
    let mut out = vec![C64::default(); len];
    let inv_e = 1.0 / params.antennas as f64;
    for (sig, wi) in signals.iter().zip(&w) {
        let s = sig.samples();
        if s.len() != len {
            return Err(Error::Size {
                what: "antenna signal length",
                expected: len,
                got: s.len(),
            });
        }
        let c = wi.conj() * inv_e;
        for (o, v) in out.iter_mut().zip(s) {
            *o += c * v;
        }
    }
    let amplitude_metric = out.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(BranchSignal {
        u,
        signal: signals[0].same_shape(out),
        amplitude_metric,
    })
}

/// Normalized array gain towards `u_src` of a beam steered at `u_beam`,
/// closed form `|sin(pi E eta du / lambda)| / (E |sin(pi eta du / lambda)|)`.
pub fn array_gain(u_src: f64, u_beam: f64, params: &FrameParams) -> f64 {
    let e = params.antennas as f64;
    let x = PI * params.spacing_m / params.wavelength() * (u_src - u_beam);
    let den = x.sin();
    if den.abs() < 1e-12 {
        // du = 0, or a grating lobe: every element adds in phase
        return 1.0;
    }
    ((e * x).sin() / den).abs() / e
}

/// The same gain evaluated as `|sum_i exp(j phi_i du)| / E`.
pub fn array_gain_direct(u_src: f64, u_beam: f64, params: &FrameParams) -> f64 {
    let du = u_src - u_beam;
    let sum: C64 = (0..params.antennas)
        .map(|i| antenna_phase(params, i, du))
        .sum();
    sum.norm() / params.antennas as f64
}

/// Uniform grid over `u` in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    u_values: Vec<f64>,
}

impl AngleGrid {
    pub fn uniform(count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::Config("angle grid needs at least two points".into()));
        }
        let step = 2.0 / (count - 1) as f64;
        let mut u_values: Vec<f64> = (0..count).map(|j| -1.0 + j as f64 * step).collect();
        u_values[count - 1] = 1.0;
        Ok(Self { u_values })
    }

    pub fn u_values(&self) -> &[f64] {
        &self.u_values
    }

    pub fn len(&self) -> usize {
        self.u_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_values.is_empty()
    }

    pub fn step(&self) -> f64 {
        2.0 / (self.u_values.len() - 1) as f64
    }
}

/// Branch detection settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPolicy {
    /// Grid points; 0 selects `4 E`.
    pub grid_size: usize,
    /// Detection threshold relative to the strongest direction.
    pub threshold_ratio: f64,
    /// Peaks closer than this many mainlobe widths are merged.
    pub merge_width_factor: f64,
}

impl Default for ScanPolicy {
    fn default() -> Self {
        Self {
            grid_size: 0,
            threshold_ratio: 0.5,
            merge_width_factor: 1.0,
        }
    }
}

impl ScanPolicy {
    pub fn grid(&self, params: &FrameParams) -> Result<AngleGrid> {
        let size = if self.grid_size == 0 {
            4 * params.antennas
        } else {
            self.grid_size
        };
        AngleGrid::uniform(size)
    }

    pub fn merge_width(&self, params: &FrameParams) -> f64 {
        self.merge_width_factor * crate::channel::mainlobe_width(params)
    }
}

/// A direction reported by [`scan_angles`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectedBranch {
    pub u: f64,
    pub metric: f64,
}

/// Largest pilot-region amplitude of the beam at `u`: the row
/// `k0 + k_hat(u)` over delays `l0 ..= l0 + l_max`.
pub fn pilot_region_metric(
    frames: &[DdFrame],
    u: f64,
    pattern: &PilotPattern,
    f_d: f64,
    params: &FrameParams,
) -> Result<f64> {
    let w = steering_vector(u, params)?;
    let k_hat = estimate_doppler(u, params, f_d);
    let row = (pattern.k0 as i64 + k_hat).rem_euclid(params.n as i64) as usize;
    let inv_e = 1.0 / params.antennas as f64;
    let mut best: f64 = 0.0;
    for l in pattern.l0..=pattern.l0 + pattern.l_max {
        let idx = row * params.m + l;
        let v: C64 = frames
            .iter()
            .zip(&w)
            .map(|(f, wi)| wi.conj() * f.as_slice()[idx])
            .sum::<C64>()
            * inv_e;
        best = best.max(v.norm());
    }
    Ok(best)
}

/// Scans the angle grid and returns the detected branch directions,
/// sorted by `u`.
///
/// A grid point is a detection when its metric is a local maximum at or above
/// `threshold_ratio` times the global maximum. Detections within the merge
/// width of a stronger one are dropped.
pub fn scan_angles(
    frames: &[DdFrame],
    grid: &AngleGrid,
    policy: &ScanPolicy,
    pattern: &PilotPattern,
    f_d: f64,
    params: &FrameParams,
) -> Result<Vec<DetectedBranch>> {
    if frames.len() != params.antennas {
        return Err(Error::Size {
            what: "antenna frames",
            expected: params.antennas,
            got: frames.len(),
        });
    }
    for f in frames {
        f.check_dims(params)?;
    }
    let us = grid.u_values();
    let metrics = us
        .iter()
        .map(|&u| pilot_region_metric(frames, u, pattern, f_d, params))
        .collect::<Result<Vec<f64>>>()?;
    let peak = metrics.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Ok(Vec::new());
    }
    let threshold = policy.threshold_ratio * peak;
    let mut candidates: Vec<DetectedBranch> = (0..us.len())
        .filter(|&j| {
            let v = metrics[j];
            let left = j == 0 || v >= metrics[j - 1];
            let right = j + 1 == us.len() || v > metrics[j + 1];
            v >= threshold && left && right
        })
        .map(|j| DetectedBranch {
            u: us[j],
            metric: metrics[j],
        })
        .collect();
    candidates.sort_by(|a, b| b.metric.total_cmp(&a.metric).then(a.u.total_cmp(&b.u)));
    let width = policy.merge_width(params);
    let mut kept: Vec<DetectedBranch> = Vec::new();
    for c in candidates {
        if kept.iter().all(|k| (k.u - c.u).abs() >= width) {
            kept.push(c);
        }
    }
    kept.sort_by(|a, b| a.u.total_cmp(&b.u));
    Ok(kept)
}

/// A branch at the exact direction of a known path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenieBranch {
    pub u: f64,
    /// Index of the path in the realization.
    pub path: usize,
}

/// One branch per true path, in path order.
pub fn genie_angles(ch: &ChannelRealization) -> Vec<GenieBranch> {
    ch.paths
        .iter()
        .enumerate()
        .map(|(path, p)| GenieBranch {
            u: p.cos_aoa(),
            path,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{propagate_ideal_all, ChannelRealization, PathSpec};
    use crate::frame::TimeSignal;
    use crate::pattern::{make_pattern, PatternVariant};
    use crate::transforms::Transforms;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(e: usize, spacing: f64) -> FrameParams {
        FrameParams::with_spacing_wavelengths(16, 8, 15e3, 4e9, e, spacing, 2).unwrap()
    }

    fn noise_frame(p: &FrameParams, rng: &mut ChaCha8Rng) -> DdFrame {
        let mut f = DdFrame::zeros(p);
        crate::channel::add_noise(&mut f, 1.0, rng).unwrap();
        f
    }

    #[test]
    fn steering_basics() {
        let p = params(8, 0.45);
        assert!(steering_vector(0.0, &p).unwrap().iter().all(|w| (w - 1.0).norm() < 1e-15));
        assert!(steering_vector(0.37, &p).unwrap().iter().all(|w| (w.norm() - 1.0).abs() < 1e-15));
        let half = params(2, 0.5);
        let w = steering_vector(1.0, &half).unwrap();
        assert!((w[0] - 1.0).norm() < 1e-15);
        assert!((w[1] + 1.0).norm() < 1e-12);
        assert!(matches!(steering_vector(1.01, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn combine_identical_signals_at_broadside() {
        let p = params(4, 0.45);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = noise_frame(&p, &mut rng);
        let frames = vec![f.clone(); 4];
        let b = combine(&frames, 0.0, &p).unwrap();
        assert!(b.signal.as_slice().iter().zip(f.as_slice()).all(|(a, c)| (a - c).norm() < 1e-15));
    }

    #[test]
    fn combine_recovers_plane_wave() {
        let p = params(6, 0.45);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = noise_frame(&p, &mut rng);
        let u0 = -0.42;
        let frames: Vec<DdFrame> = (0..6)
            .map(|i| {
                let a = antenna_phase(&p, i, u0);
                s.same_shape(s.as_slice().iter().map(|v| v * a).collect())
            })
            .collect();
        let b = combine(&frames, u0, &p).unwrap();
        assert!(b.signal.as_slice().iter().zip(s.as_slice()).all(|(a, c)| (a - c).norm() < 1e-14));
        assert!(combine(&frames[..5], u0, &p).is_err());
    }

    #[test]
    fn combined_noise_variance_drops_by_e() {
        let e = 16;
        let len = 1_000_000 / e * e;
        let p = params(e, 0.45);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let signals: Vec<TimeSignal> = (0..e)
            .map(|_| {
                let mut t = TimeSignal::new(vec![C64::default(); len / e * 16], 16, 0).unwrap();
                crate::channel::add_noise(&mut t, 2.0, &mut rng).unwrap();
                t
            })
            .collect();
        let b = combine(&signals, 0.3, &p).unwrap();
        let var = b.signal.energy() / b.signal.len() as f64;
        let want = 2.0 / e as f64;
        assert!((var - want).abs() < 0.03 * want, "var {var} want {want}");
    }

    #[test]
    fn array_gain_values() {
        let half = params(2, 0.5);
        assert!((array_gain(0.4, 0.4, &half) - 1.0).abs() < 1e-15);
        assert!(array_gain(1.0, 0.0, &half).abs() < 1e-12);
        assert!(array_gain_direct(1.0, 0.0, &half).abs() < 1e-12);
        let big = params(256, 0.45);
        let g = array_gain(0.55, 0.45, &big);
        let bound = 1.0 / (256.0 * (0.045 * PI).sin());
        assert!(g <= bound + 1e-15);
        assert!((bound - 0.0277).abs() < 1e-4);
    }

    #[test]
    fn closed_form_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..2000 {
            let e = rng.random_range(1..300);
            let spacing = rng.random_range(0.1..1.5);
            let p = params(e, spacing);
            let a = rng.random_range(-1.0..1.0);
            let b = rng.random_range(-1.0..1.0);
            assert!((array_gain(a, b, &p) - array_gain_direct(a, b, &p)).abs() < 1e-10);
        }
    }

    #[test]
    fn grid_is_uniform_and_spans() {
        let g = AngleGrid::uniform(9).unwrap();
        assert_eq!(g.u_values()[0], -1.0);
        assert_eq!(g.u_values()[8], 1.0);
        assert!(g.u_values().windows(2).all(|w| w[1] > w[0]));
        assert!(AngleGrid::uniform(1).is_err());
    }

    fn pilot_only(p: &FrameParams) -> (DdFrame, PilotPattern) {
        let pat = make_pattern(PatternVariant::FullGuard, p, 2, 1, 30.0, 0.0).unwrap();
        let frame = crate::pattern::assemble_frame(&vec![C64::default(); pat.data_len()], &pat, p).unwrap();
        (frame, pat)
    }

    #[test]
    fn scan_finds_single_path_on_grid() {
        let p = params(256, 0.45);
        let (x, pat) = pilot_only(&p);
        let grid = AngleGrid::uniform(4 * 256).unwrap();
        let u0 = grid.u_values()[700];
        let ch = ChannelRealization::from_paths(
            vec![PathSpec::on_grid(1, 0, u0.acos(), C64::new(0.9, 0.3), &p)],
            0.0,
            &p,
        );
        let frames = propagate_ideal_all(&x, &ch, &p).unwrap();
        let found = scan_angles(&frames, &grid, &ScanPolicy::default(), &pat, 0.0, &p).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].u, u0);
    }

    #[test]
    fn scan_separates_two_paths() {
        let p = params(256, 0.45);
        let (x, pat) = pilot_only(&p);
        let grid = AngleGrid::uniform(4 * 256).unwrap();
        let f_d = 600.0;
        let paths = vec![
            PathSpec::on_grid(0, 0, 0.2f64.acos(), C64::new(1.0, 0.0), &p),
            PathSpec::on_grid(2, 0, (-0.3f64).acos(), C64::new(0.0, 0.8), &p),
        ];
        let ch = ChannelRealization::from_paths(paths, f_d, &p);
        let frames = propagate_ideal_all(&x, &ch, &p).unwrap();
        let found = scan_angles(&frames, &grid, &ScanPolicy::default(), &pat, f_d, &p).unwrap();
        assert_eq!(found.len(), 2);
        assert!((found[0].u + 0.3).abs() <= grid.step());
        assert!((found[1].u - 0.2).abs() <= grid.step());
        assert!(found.len() <= grid.len());
    }

    #[test]
    fn scan_of_silence_is_empty() {
        let p = params(8, 0.45);
        let (_, pat) = pilot_only(&p);
        let frames = vec![DdFrame::zeros(&p); 8];
        let grid = AngleGrid::uniform(32).unwrap();
        assert!(scan_angles(&frames, &grid, &ScanPolicy::default(), &pat, 0.0, &p).unwrap().is_empty());
    }

    #[test]
    fn genie_branches_follow_paths() {
        let p = params(8, 0.45);
        let paths: Vec<PathSpec> = (0..4)
            .map(|i| PathSpec::on_grid(i, 0, 0.5 + i as f64, C64::new(1.0, 0.0), &p))
            .collect();
        let ch = ChannelRealization::from_paths(paths, 0.0, &p);
        let g = genie_angles(&ch);
        assert_eq!(g.len(), 4);
        for (i, b) in g.iter().enumerate() {
            assert_eq!(b.path, i);
            assert!((b.u - (0.5 + i as f64).cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn genie_interference_is_bounded_by_array_gain() {
        let p = FrameParams::with_spacing_wavelengths(16, 8, 15e3, 4e9, 512, 0.45, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = noise_frame(&p, &mut rng);
        let paths = vec![
            PathSpec::on_grid(0, 0, 1.2, C64::new(0.8, 0.1), &p),
            PathSpec::on_grid(1, 1, 2.0, C64::new(-0.3, 0.4), &p),
            PathSpec::on_grid(2, -1, 0.4, C64::new(0.2, 0.2), &p),
        ];
        let ch = ChannelRealization::from_paths(paths.clone(), 500.0, &p);
        let frames = propagate_ideal_all(&x, &ch, &p).unwrap();
        for b in genie_angles(&ch) {
            let branch = combine(&frames, b.u, &p).unwrap().signal;
            let alone = ChannelRealization::from_paths(vec![paths[b.path].clone()], 500.0, &p);
            let desired = crate::channel::propagate_ideal(&x, &alone, &p, 0).unwrap();
            let interference: f64 = branch
                .as_slice()
                .iter()
                .zip(desired.as_slice())
                .map(|(a, d)| (a - d).norm_sqr())
                .sum();
            let ratio = interference / desired.energy();
            let bound: f64 = paths
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != b.path)
                .map(|(_, q)| {
                    let g = array_gain(q.cos_aoa(), b.u, &p);
                    q.gain.norm() * g
                })
                .sum::<f64>()
                .powi(2)
                / paths[b.path].gain.norm_sqr();
            assert!(ratio <= bound * (1.0 + 1e-9), "ratio {ratio} bound {bound}");
        }
    }

    #[test]
    fn combining_commutes_with_receiver_transforms() {
        let p = params(8, 0.45);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = Transforms::new(&p);
        let bodies: Vec<TimeSignal> = (0..8)
            .map(|_| {
                let mut s = TimeSignal::new(vec![C64::default(); p.cells()], p.m, 0).unwrap();
                crate::channel::add_noise(&mut s, 1.0, &mut rng).unwrap();
                s
            })
            .collect();
        let u = 0.61;
        let time_first = t.demodulate(&combine(&bodies, u, &p).unwrap().signal).unwrap();
        let dd: Vec<DdFrame> = bodies.iter().map(|b| t.demodulate(b).unwrap()).collect();
        let dd_first = combine(&dd, u, &p).unwrap().signal;
        let err = time_first
            .as_slice()
            .iter()
            .zip(dd_first.as_slice())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }
}
