//! Discrete OTFS domain transforms.
//!
//! * ISFFT: `s[m,n] = 1/sqrt(MN) sum_{l,k} x[l,k] exp(j2pi(nk/N - ml/M))`
//! * SFFT: its inverse.
//! * Heisenberg with a rectangular pulse sampled at `M * delta_f`:
//!   symbol `n` has body samples `1/sqrt(M) sum_m s[m,n] exp(j2pi m i / M)`,
//!   each symbol prefixed by its own cyclic prefix.
//! * Wigner: the matching per-symbol receive filter on a CP-free body.
//!
//! All four maps are unitary.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, Error, Result};
use crate::frame::{DdFrame, FrameParams, FtFrame, TimeSignal, C64};

/// FFT plans for one `(M, N)` geometry.
#[derive(Clone)]
pub struct Transforms {
    m: usize,
    n: usize,
    fwd_m: Arc<dyn Fft<f64>>,
    inv_m: Arc<dyn Fft<f64>>,
    fwd_n: Arc<dyn Fft<f64>>,
    inv_n: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transforms {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transforms")
            .field("m", &self.m)
            .field("n", &self.n)
            .finish()
    }
}

impl Transforms {
    pub fn new(params: &FrameParams) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            m: params.m,
            n: params.n,
            fwd_m: planner.plan_fft_forward(params.m),
            inv_m: planner.plan_fft_inverse(params.m),
            fwd_n: planner.plan_fft_forward(params.n),
            inv_n: planner.plan_fft_inverse(params.n),
        }
    }

    fn check(&self, rows: usize, cols: usize) -> Result<()> {
        check_len("frame rows", self.m, rows)?;
        check_len("frame cols", self.n, cols)
    }

    /// Runs `along_rows` over each contiguous column (length M) and
    /// `along_cols` over each strided row (length N), then scales.
    fn separable(
        &self,
        data: &mut [C64],
        along_rows: &Arc<dyn Fft<f64>>,
        along_cols: &Arc<dyn Fft<f64>>,
    ) {
        let (m, n) = (self.m, self.n);
        along_rows.process(data);
        let mut row = vec![C64::default(); n];
        for l in 0..m {
            for (k, v) in row.iter_mut().enumerate() {
                *v = data[k * m + l];
            }
            along_cols.process(&mut row);
            for (k, v) in row.iter().enumerate() {
                data[k * m + l] = *v;
            }
        }
        let scale = 1.0 / ((m * n) as f64).sqrt();
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    pub fn isfft(&self, x: &DdFrame) -> Result<FtFrame> {
        let (r, c) = x.dims();
        self.check(r, c)?;
        let mut data = x.as_slice().to_vec();
        // exp(-j2pi ml/M) along delay, exp(+j2pi nk/N) along Doppler
        self.separable(&mut data, &self.fwd_m, &self.inv_n);
        Ok(FtFrame::from_grid(
            crate::frame::Grid::from_vec(self.m, self.n, data)?,
        ))
    }

    pub fn sfft(&self, y: &FtFrame) -> Result<DdFrame> {
        let (r, c) = y.dims();
        self.check(r, c)?;
        let mut data = y.as_slice().to_vec();
        self.separable(&mut data, &self.inv_m, &self.fwd_n);
        Ok(DdFrame::from_grid(
            crate::frame::Grid::from_vec(self.m, self.n, data)?,
        ))
    }

    /// Heisenberg transform; the output carries a `cp_len` prefix per symbol.
    pub fn heisenberg(&self, s: &FtFrame, cp_len: usize) -> Result<TimeSignal> {
        let (r, c) = s.dims();
        self.check(r, c)?;
        let m = self.m;
        let scale = 1.0 / (m as f64).sqrt();
        let mut body = s.as_slice().to_vec();
        for symbol in body.chunks_exact_mut(m) {
            self.inv_m.process(symbol);
            for v in symbol.iter_mut() {
                *v *= scale;
            }
        }
        add_cp(&TimeSignal::new(body, m, 0)?, cp_len)
    }

    /// Wigner transform of a CP-free body of `M * N` samples.
    pub fn wigner(&self, r: &TimeSignal) -> Result<FtFrame> {
        if r.cp_len() != 0 {
            return Err(Error::Config("wigner expects a CP-free body".into()));
        }
        check_len("time body", self.m * self.n, r.len())?;
        check_len("symbol length", self.m, r.symbol_len())?;
        let m = self.m;
        let scale = 1.0 / (m as f64).sqrt();
        let mut data = r.samples().to_vec();
        for symbol in data.chunks_exact_mut(m) {
            self.fwd_m.process(symbol);
            for v in symbol.iter_mut() {
                *v *= scale;
            }
        }
        Ok(FtFrame::from_grid(
            crate::frame::Grid::from_vec(self.m, self.n, data)?,
        ))
    }

    /// Full transmitter: ISFFT then Heisenberg with the configured CP.
    pub fn modulate(&self, x: &DdFrame, cp_len: usize) -> Result<TimeSignal> {
        self.heisenberg(&self.isfft(x)?, cp_len)
    }

    /// Full receiver front end: CP removal, Wigner, SFFT.
    pub fn demodulate(&self, r: &TimeSignal) -> Result<DdFrame> {
        let body = if r.cp_len() == 0 {
            r.clone()
        } else {
            remove_cp(r)?
        };
        self.sfft(&self.wigner(&body)?)
    }
}

pub fn isfft(x: &DdFrame, params: &FrameParams) -> Result<FtFrame> {
    Transforms::new(params).isfft(x)
}

pub fn sfft(y: &FtFrame, params: &FrameParams) -> Result<DdFrame> {
    Transforms::new(params).sfft(y)
}

pub fn heisenberg(s: &FtFrame, params: &FrameParams) -> Result<TimeSignal> {
    Transforms::new(params).heisenberg(s, params.cp_len)
}

pub fn wigner(r: &TimeSignal, params: &FrameParams) -> Result<FtFrame> {
    Transforms::new(params).wigner(r)
}

/// Prepends the last `cp_len` samples of each symbol to that symbol.
pub fn add_cp(body: &TimeSignal, cp_len: usize) -> Result<TimeSignal> {
    if body.cp_len() != 0 {
        return Err(Error::Config("signal already carries a cyclic prefix".into()));
    }
    let m = body.symbol_len();
    if cp_len > m {
        return Err(Error::Size {
            what: "cyclic prefix (at most one symbol)",
            expected: m,
            got: cp_len,
        });
    }
    let mut out = Vec::with_capacity(body.symbols() * (m + cp_len));
    for symbol in body.samples().chunks_exact(m) {
        out.extend_from_slice(&symbol[m - cp_len..]);
        out.extend_from_slice(symbol);
    }
    TimeSignal::new(out, m, cp_len)
}

/// Drops the prefix of every symbol.
pub fn remove_cp(sig: &TimeSignal) -> Result<TimeSignal> {
    let (m, cp) = (sig.symbol_len(), sig.cp_len());
    let out = sig
        .samples()
        .chunks_exact(m + cp)
        .flat_map(|block| block[cp..].iter().copied())
        .collect();
    TimeSignal::new(out, m, 0)
}
