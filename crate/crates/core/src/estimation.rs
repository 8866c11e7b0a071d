//! Per-branch channel estimation, shift compensation and maximal-ratio
//! combining.

use std::f64::consts::PI;

use crate::beamforming::combine;
use crate::channel::round_half_up;
use crate::error::{Error, Result};
use crate::frame::{DdFrame, FrameParams, Samples, C64};
use crate::pattern::{extract_data, PilotPattern};
use crate::qam::Constellation;

/// Receiver state for one identified path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchEstimate {
    /// `cos` of the beam angle.
    pub u: f64,
    pub k_hat: i64,
    pub l_hat: usize,
    pub beta_hat: C64,
}

/// `floor(N T f_d u + 0.5)`.
pub fn estimate_doppler(u: f64, params: &FrameParams, f_d: f64) -> i64 {
    round_half_up(params.n as f64 * params.symbol_duration() * f_d * u)
}

fn pilot_row(pattern: &PilotPattern, k_hat: i64) -> usize {
    (pattern.k0 as i64 + k_hat).rem_euclid(pattern.n as i64) as usize
}

/// Delay offset of the strongest cell on row `k0 + k_hat` within
/// `l0 ..= l0 + l_max`; ties go to the smaller delay.
pub fn estimate_delay(branch: &DdFrame, k_hat: i64, pattern: &PilotPattern) -> usize {
    let row = pilot_row(pattern, k_hat);
    let mut best = 0;
    let mut best_mag = -1.0;
    for dl in 0..=pattern.l_max {
        let l = (pattern.l0 + dl) % pattern.m;
        let mag = branch.get(l, row).norm_sqr();
        if mag > best_mag {
            best_mag = mag;
            best = dl;
        }
    }
    best
}

/// `y[l0 + l_hat, k0 + k_hat] exp(j2pi l_hat k_hat / MN) / d0`.
pub fn estimate_gain(
    branch: &DdFrame,
    l_hat: usize,
    k_hat: i64,
    pattern: &PilotPattern,
    params: &FrameParams,
) -> C64 {
    let row = pilot_row(pattern, k_hat);
    let l = (pattern.l0 + l_hat) % params.m;
    let untwist = C64::from_polar(
        1.0,
        2.0 * PI * (l_hat as i64 * k_hat) as f64 / params.cells() as f64,
    );
    branch.get(l, row) * untwist / pattern.d0
}

/// Runs the three estimators on one beamformed branch.
pub fn estimate_branch(
    branch: &DdFrame,
    u: f64,
    pattern: &PilotPattern,
    f_d: f64,
    params: &FrameParams,
) -> BranchEstimate {
    let k_hat = estimate_doppler(u, params, f_d);
    let l_hat = estimate_delay(branch, k_hat, pattern);
    let beta_hat = estimate_gain(branch, l_hat, k_hat, pattern, params);
    BranchEstimate {
        u,
        k_hat,
        l_hat,
        beta_hat,
    }
}

/// Cyclic shift undoing the branch delay and Doppler:
/// `out[l, k] = y[[l + l_hat]_M, [k + k_hat]_N]`.
pub fn compensate(branch: &DdFrame, l_hat: usize, k_hat: i64) -> DdFrame {
    let (m, n) = branch.dims();
    let dl = l_hat % m;
    let dk = k_hat.rem_euclid(n as i64) as usize;
    let src = branch.as_slice();
    let mut out = Vec::with_capacity(m * n);
    for k in 0..n {
        let row = &src[((k + dk) % n) * m..][..m];
        out.extend_from_slice(&row[dl..]);
        out.extend_from_slice(&row[..dl]);
    }
    branch.same_shape(out)
}

/// Maximal-ratio combination of compensated branches,
/// `sum_b conj(beta_b) exp(j2pi l_b k_b / MN) y_b / sum_b |beta_b|^2`.
pub fn mrc_combine(
    branches: &[DdFrame],
    estimates: &[BranchEstimate],
    params: &FrameParams,
) -> Result<DdFrame> {
    if branches.len() != estimates.len() {
        return Err(Error::Size {
            what: "branch estimates",
            expected: branches.len(),
            got: estimates.len(),
        });
    }
    if branches.is_empty() {
        return Err(Error::DegenerateCombine);
    }
    let norm: f64 = estimates.iter().map(|e| e.beta_hat.norm_sqr()).sum();
    if norm <= 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateCombine);
    }
    let mut out = vec![C64::default(); params.cells()];
    for (b, e) in branches.iter().zip(estimates) {
        b.check_dims(params)?;
        let w = e.beta_hat.conj()
            * C64::from_polar(
                1.0,
                2.0 * PI * (e.l_hat as i64 * e.k_hat) as f64 / params.cells() as f64,
            )
            / norm;
        for (o, v) in out.iter_mut().zip(b.as_slice()) {
            *o += w * v;
        }
    }
    DdFrame::from_vec(params, out)
}

/// Compensates every branch and combines them.
pub fn compensate_and_combine(
    branches: &[DdFrame],
    estimates: &[BranchEstimate],
    params: &FrameParams,
) -> Result<DdFrame> {
    let shifted: Vec<DdFrame> = branches
        .iter()
        .zip(estimates)
        .map(|(b, e)| compensate(b, e.l_hat, e.k_hat))
        .collect();
    mrc_combine(&shifted, estimates, params)
}

/// Symbol detection from already-estimated branches: compensation, MRC and
/// hard decisions on the data cells.
pub fn detect(
    branches: &[DdFrame],
    estimates: &[BranchEstimate],
    pattern: &PilotPattern,
    constellation: &Constellation,
    params: &FrameParams,
) -> Result<Vec<u8>> {
    let x_hat = compensate_and_combine(branches, estimates, params)?;
    Ok(constellation.demodulate(&extract_data(&x_hat, pattern)?))
}

/// Output of the beamforming receiver for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverOutput {
    pub estimates: Vec<BranchEstimate>,
    /// Combined delay-Doppler frame before hard decisions.
    pub x_hat: DdFrame,
    /// Equalized data symbols in data-cell order.
    pub symbols: Vec<C64>,
}

/// Full receiver over per-antenna delay-Doppler frames: one branch per look
/// direction, estimation, compensation and MRC.
pub fn receive(
    frames: &[DdFrame],
    directions: &[f64],
    pattern: &PilotPattern,
    f_d: f64,
    params: &FrameParams,
) -> Result<ReceiverOutput> {
    let branches = directions
        .iter()
        .map(|&u| combine(frames, u, params).map(|b| b.signal))
        .collect::<Result<Vec<DdFrame>>>()?;
    let estimates: Vec<BranchEstimate> = branches
        .iter()
        .zip(directions)
        .map(|(b, &u)| estimate_branch(b, u, pattern, f_d, params))
        .collect();
    let x_hat = compensate_and_combine(&branches, &estimates, params)?;
    let symbols = extract_data(&x_hat, pattern)?;
    Ok(ReceiverOutput {
        estimates,
        x_hat,
        symbols,
    })
}
