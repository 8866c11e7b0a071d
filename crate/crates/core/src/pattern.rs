//! Pilot patterns on the delay-Doppler grid and frame assembly.
//!
//! Three layouts are supported. All place a single pilot `d0` at `(l0, k0)`:
//!
//! * `FullGuard`: zero guards over `l0 +- l_max`, `k0 +- 2 k_max`.
//! * `Naive`: no guards at all.
//! * `Proposed`: guards over `l_max + 1` delay bins around the pilot
//!   (`floor(l_max/2)` below, `ceil(l_max/2)` above) and `k0 +- k_max`.
//!
//! Data cells are filled in ascending linear index, i.e. delay index fastest.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::frame::{DdFrame, FrameParams, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatternVariant {
    FullGuard,
    Naive,
    Proposed,
}

impl PatternVariant {
    pub const ALL: [PatternVariant; 3] = [
        PatternVariant::FullGuard,
        PatternVariant::Naive,
        PatternVariant::Proposed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PatternVariant::FullGuard => "full_guard",
            PatternVariant::Naive => "naive",
            PatternVariant::Proposed => "proposed",
        }
    }

    /// Pilot plus guard cells for the given supports.
    pub fn overhead_cells(self, l_max: usize, k_max: usize) -> usize {
        match self {
            PatternVariant::FullGuard => (2 * l_max + 1) * (4 * k_max + 1),
            PatternVariant::Naive => 1,
            PatternVariant::Proposed => (l_max + 1) * (2 * k_max + 1),
        }
    }
}

impl fmt::Display for PatternVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PatternVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full_guard" | "full" => Ok(PatternVariant::FullGuard),
            "naive" => Ok(PatternVariant::Naive),
            "proposed" => Ok(PatternVariant::Proposed),
            other => Err(Error::Config(format!("unknown pilot pattern {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellRole {
    Pilot,
    Guard,
    Data,
}

impl CellRole {
    pub fn symbol(self) -> char {
        match self {
            CellRole::Pilot => 'P',
            CellRole::Guard => 'G',
            CellRole::Data => 'D',
        }
    }
}

/// Pilot position, amplitude and the partition of the grid into
/// pilot, guard and data cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotPattern {
    pub variant: PatternVariant,
    pub m: usize,
    pub n: usize,
    pub l0: usize,
    pub k0: usize,
    pub l_max: usize,
    pub k_max: usize,
    pub d0: C64,
    pub pilot_index: usize,
    pub guard_indices: Vec<usize>,
    pub data_indices: Vec<usize>,
    roles: Vec<CellRole>,
}

/// Pilot amplitude for a pilot SNR in dB: `|d0|^2 = sigma2 * 10^(snr_p/10)`.
/// A zero noise variance references the pilot to unit data power instead.
pub fn pilot_amplitude(snr_p_db: f64, sigma2: f64) -> f64 {
    let reference = if sigma2 > 0.0 { sigma2 } else { 1.0 };
    (reference * 10f64.powf(snr_p_db / 10.0)).sqrt()
}

/// Builds a pattern with the pilot at the centre of its legal region.
pub fn make_pattern(
    variant: PatternVariant,
    params: &FrameParams,
    l_max: usize,
    k_max: usize,
    snr_p_db: f64,
    sigma2: f64,
) -> Result<PilotPattern> {
    make_pattern_at(variant, params, l_max, k_max, snr_p_db, sigma2, None)
}

/// Builds a pattern, optionally with an explicit pilot position.
pub fn make_pattern_at(
    variant: PatternVariant,
    params: &FrameParams,
    l_max: usize,
    k_max: usize,
    snr_p_db: f64,
    sigma2: f64,
    pilot: Option<(usize, usize)>,
) -> Result<PilotPattern> {
    let (m, n) = (params.m, params.n);
    if 2 * l_max + 1 > m || 4 * k_max + 1 > n {
        return Err(Error::Config(format!(
            "pilot footprint (l_max={l_max}, k_max={k_max}) does not fit a {m}x{n} grid"
        )));
    }
    if !(sigma2 >= 0.0) || !snr_p_db.is_finite() {
        return Err(Error::Config("pilot SNR and noise variance must be finite".into()));
    }
    let (l0, k0) = pilot.unwrap_or(((m - 1) / 2, (n - 1) / 2));
    if l0 < l_max || l0 > m - 1 - l_max || k0 < 2 * k_max || k0 > n - 1 - 2 * k_max {
        return Err(Error::Config(format!(
            "pilot position ({l0}, {k0}) outside legal region l0 in [{l_max}, {}], k0 in [{}, {}]",
            m - 1 - l_max,
            2 * k_max,
            n - 1 - 2 * k_max
        )));
    }

    let guard_box = match variant {
        PatternVariant::FullGuard => Some((l0 - l_max, l0 + l_max, k0 - 2 * k_max, k0 + 2 * k_max)),
        PatternVariant::Naive => None,
        PatternVariant::Proposed => Some((
            l0 - l_max / 2,
            l0 + l_max.div_ceil(2),
            k0 - k_max,
            k0 + k_max,
        )),
    };

    let mut roles = vec![CellRole::Data; m * n];
    if let Some((l_lo, l_hi, k_lo, k_hi)) = guard_box {
        for k in k_lo..=k_hi {
            for l in l_lo..=l_hi {
                roles[k * m + l] = CellRole::Guard;
            }
        }
    }
    let pilot_index = k0 * m + l0;
    roles[pilot_index] = CellRole::Pilot;

    let mut guard_indices = Vec::new();
    let mut data_indices = Vec::new();
    for (idx, role) in roles.iter().enumerate() {
        match role {
            CellRole::Guard => guard_indices.push(idx),
            CellRole::Data => data_indices.push(idx),
            CellRole::Pilot => {}
        }
    }

    Ok(PilotPattern {
        variant,
        m,
        n,
        l0,
        k0,
        l_max,
        k_max,
        d0: C64::new(pilot_amplitude(snr_p_db, sigma2), 0.0),
        pilot_index,
        guard_indices,
        data_indices,
        roles,
    })
}

impl PilotPattern {
    pub fn role(&self, l: usize, k: usize) -> CellRole {
        self.roles[k * self.m + l]
    }

    /// Pilot plus guard cell count.
    pub fn overhead(&self) -> usize {
        1 + self.guard_indices.len()
    }

    /// Overhead as a fraction of the grid.
    pub fn overhead_fraction(&self) -> f64 {
        self.overhead() as f64 / (self.m * self.n) as f64
    }

    pub fn data_len(&self) -> usize {
        self.data_indices.len()
    }

    /// Same layout with a different pilot amplitude.
    pub fn with_pilot_amplitude(&self, d0: C64) -> Self {
        Self { d0, ..self.clone() }
    }

    /// One line per delay index, `N` comma-separated role letters.
    pub fn roles_csv(&self) -> String {
        let mut out = String::with_capacity(self.m * (2 * self.n + 1));
        for l in 0..self.m {
            for k in 0..self.n {
                if k > 0 {
                    out.push(',');
                }
                out.push(self.role(l, k).symbol());
            }
            out.push('\n');
        }
        out
    }

    fn check_grid(&self, params: &FrameParams) -> Result<()> {
        if params.m != self.m || params.n != self.n {
            return Err(Error::Size {
                what: "pattern grid",
                expected: self.m * self.n,
                got: params.cells(),
            });
        }
        Ok(())
    }
}

/// Places the pilot, zero guards and `data` on the grid.
pub fn assemble_frame(data: &[C64], pattern: &PilotPattern, params: &FrameParams) -> Result<DdFrame> {
    pattern.check_grid(params)?;
    if data.len() != pattern.data_len() {
        return Err(Error::Size {
            what: "data symbols",
            expected: pattern.data_len(),
            got: data.len(),
        });
    }
    let mut frame = DdFrame::zeros(params);
    let cells = frame.as_mut_slice();
    cells[pattern.pilot_index] = pattern.d0;
    for (&idx, &d) in pattern.data_indices.iter().zip(data) {
        cells[idx] = d;
    }
    Ok(frame)
}

/// Reads the data cells back in assembly order.
pub fn extract_data(frame: &DdFrame, pattern: &PilotPattern) -> Result<Vec<C64>> {
    let (m, n) = frame.dims();
    if m != pattern.m || n != pattern.n {
        return Err(Error::Size {
            what: "frame for pattern",
            expected: pattern.m * pattern.n,
            got: m * n,
        });
    }
    let cells = frame.as_slice();
    Ok(pattern.data_indices.iter().map(|&i| cells[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(m: usize, n: usize) -> FrameParams {
        FrameParams::with_spacing_wavelengths(m, n, 15e3, 4e9, 1, 0.45, 0).unwrap()
    }

    #[test]
    fn table_iii_counts() {
        let p = grid(512, 128);
        let expect = [(1, 205, 1, 63), (4, 697, 1, 189), (16, 2665, 1, 693)];
        for (k_max, full, naive, prop) in expect {
            let f = make_pattern(PatternVariant::FullGuard, &p, 20, k_max, 40.0, 0.1).unwrap();
            let nv = make_pattern(PatternVariant::Naive, &p, 20, k_max, 40.0, 0.1).unwrap();
            let pr = make_pattern(PatternVariant::Proposed, &p, 20, k_max, 40.0, 0.1).unwrap();
            assert_eq!(f.overhead(), full);
            assert_eq!(nv.overhead(), naive);
            assert_eq!(pr.overhead(), prop);
        }
        let f = make_pattern(PatternVariant::FullGuard, &p, 20, 16, 40.0, 0.1).unwrap();
        assert_eq!(f.data_len(), 65536 - 2665);
        let pr = make_pattern(PatternVariant::Proposed, &p, 20, 16, 40.0, 0.1).unwrap();
        assert_eq!(pr.data_len(), 64843);
    }

    #[test]
    fn naive_small_grid() {
        let p = grid(4, 4);
        let pat = make_pattern(PatternVariant::Naive, &p, 0, 0, 0.0, 1.0).unwrap();
        assert_eq!(pat.data_len(), 15);
        let data: Vec<C64> = (0..15).map(|i| C64::new(i as f64 + 1.0, 0.0)).collect();
        let frame = assemble_frame(&data, &pat, &p).unwrap();
        assert_eq!(frame.as_slice().iter().filter(|v| v.norm() > 0.0).count(), 16);
        assert_eq!(frame.get(pat.l0, pat.k0), pat.d0);
    }

    #[test]
    fn pilot_power_follows_snr_p() {
        let p = grid(64, 32);
        let pat = make_pattern(PatternVariant::Proposed, &p, 3, 4, 40.0, 0.01).unwrap();
        assert!((pat.d0.norm_sqr() - 100.0).abs() < 1e-9);
        assert_eq!(pat.d0.im, 0.0);
        let noiseless = make_pattern(PatternVariant::Proposed, &p, 3, 4, 20.0, 0.0).unwrap();
        assert!((noiseless.d0.norm_sqr() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn fill_order_is_delay_fastest() {
        let p = grid(8, 8);
        let pat = make_pattern(PatternVariant::FullGuard, &p, 1, 1, 10.0, 1.0).unwrap();
        assert!(pat.data_indices.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(pat.data_indices[0], 0);
        assert_eq!(pat.data_indices[1], 1);
    }

    #[test]
    fn oversized_footprint_is_rejected() {
        let p = grid(8, 8);
        assert!(matches!(
            make_pattern(PatternVariant::FullGuard, &p, 4, 1, 10.0, 1.0),
            Err(Error::Config(_))
        ));
        assert!(make_pattern(PatternVariant::Naive, &p, 1, 2, 10.0, 1.0).is_err());
        assert!(make_pattern_at(PatternVariant::Naive, &p, 1, 1, 10.0, 1.0, Some((0, 3))).is_err());
        assert!(make_pattern_at(PatternVariant::Naive, &p, 1, 1, 10.0, 1.0, Some((1, 2))).is_ok());
    }

    #[test]
    fn size_errors() {
        let p = grid(8, 8);
        let pat = make_pattern(PatternVariant::Naive, &p, 1, 1, 10.0, 1.0).unwrap();
        assert!(matches!(assemble_frame(&[C64::default(); 3], &pat, &p), Err(Error::Size { .. })));
        assert!(extract_data(&DdFrame::zeros(&grid(4, 8)), &pat).is_err());
    }

    #[test]
    fn zero_frame_extracts_zeros() {
        let p = grid(16, 16);
        let pat = make_pattern(PatternVariant::Proposed, &p, 3, 2, 10.0, 1.0).unwrap();
        let d = extract_data(&DdFrame::zeros(&p), &pat).unwrap();
        assert_eq!(d.len(), pat.data_len());
        assert!(d.iter().all(|v| *v == C64::default()));
    }

    #[test]
    fn roles_dump() {
        let p = grid(4, 4);
        let pat = make_pattern(PatternVariant::Naive, &p, 0, 0, 0.0, 1.0).unwrap();
        let csv = pat.roles_csv();
        assert_eq!(csv.lines().count(), 4);
        assert_eq!(csv.matches('P').count(), 1);
        assert_eq!(csv.lines().nth(1).unwrap(), "D,P,D,D");
    }

    proptest! {
        #[test]
        fn overhead_identity(l_max in 1usize..=32, k_max in 1usize..=32) {
            let p = grid(2 * l_max + 1 + 3, 4 * k_max + 1 + 2);
            for v in PatternVariant::ALL {
                let pat = make_pattern(v, &p, l_max, k_max, 30.0, 1.0).unwrap();
                prop_assert_eq!(pat.overhead(), v.overhead_cells(l_max, k_max));
                prop_assert_eq!(pat.overhead() + pat.data_len(), p.cells());
            }
        }

        #[test]
        fn assemble_extract_round_trip(
            l_max in 0usize..4, k_max in 0usize..3, extra_m in 0usize..6, extra_n in 0usize..6,
            seed in any::<u64>(), which in 0usize..3,
        ) {
            let p = grid(2 * l_max + 1 + extra_m, 4 * k_max + 1 + extra_n);
            let pat = make_pattern(PatternVariant::ALL[which], &p, l_max, k_max, 20.0, 0.5).unwrap();
            let data: Vec<C64> = (0..pat.data_len())
                .map(|i| C64::new((seed.wrapping_add(i as u64) % 97) as f64, i as f64))
                .collect();
            let frame = assemble_frame(&data, &pat, &p).unwrap();
            prop_assert_eq!(extract_data(&frame, &pat).unwrap(), data);
            for &g in &pat.guard_indices {
                prop_assert_eq!(frame.as_slice()[g], C64::default());
            }
        }
    }
}
