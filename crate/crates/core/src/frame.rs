//! Frame geometry and the signal containers for the delay-Doppler,
//! frequency-time and time domains.
//!
//! Grids are stored flat with the first index fastest: cell `(l, k)` of an
//! `M x N` delay-Doppler frame lives at `k * M + l`, and the same layout is
//! used for `(m, n)` in the frequency-time domain. This is also the ordering
//! of `vec(x)` for the dense channel matrix.

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};

pub type C64 = Complex64;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Static dimensions and physical constants of one OTFS configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameParams {
    /// Delay bins (subcarriers).
    pub m: usize,
    /// Doppler bins (OTFS symbols).
    pub n: usize,
    /// Subcarrier spacing in Hz.
    pub delta_f: f64,
    /// Carrier frequency in Hz.
    pub carrier_hz: f64,
    /// Receive antennas.
    pub antennas: usize,
    /// Element spacing in meters.
    pub spacing_m: f64,
    /// Cyclic prefix length in samples, applied to every OTFS symbol.
    pub cp_len: usize,
}

impl FrameParams {
    pub fn new(
        m: usize,
        n: usize,
        delta_f: f64,
        carrier_hz: f64,
        antennas: usize,
        spacing_m: f64,
        cp_len: usize,
    ) -> Result<Self> {
        let p = Self {
            m,
            n,
            delta_f,
            carrier_hz,
            antennas,
            spacing_m,
            cp_len,
        };
        p.validate()?;
        Ok(p)
    }

    /// Element spacing given as a fraction of the carrier wavelength.
    pub fn with_spacing_wavelengths(
        m: usize,
        n: usize,
        delta_f: f64,
        carrier_hz: f64,
        antennas: usize,
        spacing_wavelengths: f64,
        cp_len: usize,
    ) -> Result<Self> {
        if !(carrier_hz > 0.0) {
            return Err(Error::Config("carrier frequency must be positive".into()));
        }
        let lambda = SPEED_OF_LIGHT / carrier_hz;
        Self::new(
            m,
            n,
            delta_f,
            carrier_hz,
            antennas,
            spacing_wavelengths * lambda,
            cp_len,
        )
    }

    /// Full-size parameters: M=512, N=128, 15 kHz, 4 GHz, 0.45 wavelength
    /// spacing, CP of 20 samples.
    pub fn table_i(antennas: usize) -> Result<Self> {
        Self::with_spacing_wavelengths(512, 128, 15e3, 4e9, antennas, 0.45, 20)
    }

    /// Desk-scale parameters used by default in the harness: M=64, N=32.
    pub fn desk(antennas: usize) -> Result<Self> {
        Self::with_spacing_wavelengths(64, 32, 15e3, 4e9, antennas, 0.45, 3)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::Config("M and N must be at least 1".into()));
        }
        if !(self.delta_f > 0.0) || !self.delta_f.is_finite() {
            return Err(Error::Config("delta_f must be positive".into()));
        }
        if !(self.carrier_hz > 0.0) || !self.carrier_hz.is_finite() {
            return Err(Error::Config("carrier frequency must be positive".into()));
        }
        if self.antennas == 0 {
            return Err(Error::Config("at least one antenna is required".into()));
        }
        if !(self.spacing_m > 0.0) || !self.spacing_m.is_finite() {
            return Err(Error::Config("antenna spacing must be positive".into()));
        }
        if self.cp_len > self.m {
            return Err(Error::Config(format!(
                "cp_len {} exceeds symbol length {}",
                self.cp_len, self.m
            )));
        }
        Ok(())
    }

    /// Number of grid cells, `M * N`.
    pub fn cells(&self) -> usize {
        self.m * self.n
    }

    /// Symbol duration `T = 1 / delta_f`.
    pub fn symbol_duration(&self) -> f64 {
        1.0 / self.delta_f
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Sample rate of the time-domain realization, `M * delta_f`.
    pub fn sample_rate(&self) -> f64 {
        self.m as f64 * self.delta_f
    }

    /// Maximum Doppler shift in Hz for a terminal speed in km/h.
    pub fn max_doppler_hz(&self, velocity_kmh: f64) -> f64 {
        velocity_kmh / 3.6 / self.wavelength()
    }

    /// Doppler support index `ceil(N T f_d)`.
    pub fn doppler_support(&self, f_d: f64) -> usize {
        (self.n as f64 * self.symbol_duration() * f_d - 1e-9).ceil().max(0.0) as usize
    }

    /// Array phase step `2 pi eta / lambda`; antenna `i` has phase `i` times this.
    pub fn phase_step(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.spacing_m / self.wavelength()
    }

    pub fn with_antennas(&self, antennas: usize) -> Self {
        Self {
            antennas,
            ..self.clone()
        }
    }
}

/// A dense `rows x cols` complex grid, first index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Grid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        check_len("grid", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        col * self.rows + row
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[col * self.rows + row]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: C64) {
        self.data[col * self.rows + row] = v;
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

macro_rules! grid_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Grid);

        impl $name {
            pub fn zeros(params: &FrameParams) -> Self {
                Self(Grid::zeros(params.m, params.n))
            }

            pub fn from_vec(params: &FrameParams, data: Vec<C64>) -> Result<Self> {
                Grid::from_vec(params.m, params.n, data).map(Self)
            }

            pub fn from_grid(grid: Grid) -> Self {
                Self(grid)
            }

            pub fn grid(&self) -> &Grid {
                &self.0
            }

            pub fn grid_mut(&mut self) -> &mut Grid {
                &mut self.0
            }

            pub fn into_grid(self) -> Grid {
                self.0
            }

            pub fn dims(&self) -> (usize, usize) {
                (self.0.rows(), self.0.cols())
            }

            #[inline]
            pub fn get(&self, a: usize, b: usize) -> C64 {
                self.0.get(a, b)
            }

            #[inline]
            pub fn set(&mut self, a: usize, b: usize, v: C64) {
                self.0.set(a, b, v)
            }

            pub fn as_slice(&self) -> &[C64] {
                self.0.as_slice()
            }

            pub fn as_mut_slice(&mut self) -> &mut [C64] {
                self.0.as_mut_slice()
            }

            pub fn energy(&self) -> f64 {
                self.0.energy()
            }

            pub fn check_dims(&self, params: &FrameParams) -> Result<()> {
                check_len(stringify!($name), params.cells(), self.0.rows() * self.0.cols())?;
                check_len(concat!(stringify!($name), " rows"), params.m, self.0.rows())
            }
        }
    };
}

grid_newtype!(
    /// Delay-Doppler frame `x[l, k]`, `l` delay index, `k` Doppler index.
    DdFrame
);
grid_newtype!(
    /// Frequency-time frame `s[m, n]`, `m` subcarrier, `n` symbol.
    FtFrame
);

/// Time-domain samples at rate `M * delta_f`.
///
/// The signal is `N` blocks of `cp_len + M` samples: every OTFS symbol carries
/// its own cyclic prefix. A body (CP removed) has `cp_len == 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    samples: Vec<C64>,
    symbol_len: usize,
    cp_len: usize,
}

impl TimeSignal {
    pub fn new(samples: Vec<C64>, symbol_len: usize, cp_len: usize) -> Result<Self> {
        if symbol_len == 0 {
            return Err(Error::Config("symbol length must be positive".into()));
        }
        let block = symbol_len + cp_len;
        if !samples.len().is_multiple_of(block) {
            return Err(Error::Size {
                what: "time signal",
                expected: (samples.len() / block + 1) * block,
                got: samples.len(),
            });
        }
        Ok(Self {
            samples,
            symbol_len,
            cp_len,
        })
    }

    /// A CP-free body of `M * N` samples.
    pub fn body(samples: Vec<C64>, params: &FrameParams) -> Result<Self> {
        check_len("time body", params.cells(), samples.len())?;
        Self::new(samples, params.m, 0)
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [C64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<C64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn symbol_len(&self) -> usize {
        self.symbol_len
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn symbols(&self) -> usize {
        self.samples.len() / (self.symbol_len + self.cp_len)
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Anything that is a flat buffer of complex samples with a fixed shape.
///
/// Beamforming and noise act elementwise, so they work the same on
/// per-antenna time signals and on per-antenna delay-Doppler frames.
pub trait Samples: Sized {
    fn samples(&self) -> &[C64];
    fn samples_mut(&mut self) -> &mut [C64];
    /// A value of the same shape holding `data`.
    fn same_shape(&self, data: Vec<C64>) -> Self;
}

impl Samples for DdFrame {
    fn samples(&self) -> &[C64] {
        self.as_slice()
    }
    fn samples_mut(&mut self) -> &mut [C64] {
        self.as_mut_slice()
    }
    fn same_shape(&self, data: Vec<C64>) -> Self {
        let (r, c) = self.dims();
        DdFrame(Grid::from_vec(r, c, data).expect("same shape"))
    }
}

impl Samples for FtFrame {
    fn samples(&self) -> &[C64] {
        self.as_slice()
    }
    fn samples_mut(&mut self) -> &mut [C64] {
        self.as_mut_slice()
    }
    fn same_shape(&self, data: Vec<C64>) -> Self {
        let (r, c) = self.dims();
        FtFrame(Grid::from_vec(r, c, data).expect("same shape"))
    }
}

impl Samples for TimeSignal {
    fn samples(&self) -> &[C64] {
        &self.samples
    }
    fn samples_mut(&mut self) -> &mut [C64] {
        &mut self.samples
    }
    fn same_shape(&self, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), self.samples.len());
        TimeSignal {
            samples: data,
            symbol_len: self.symbol_len,
            cp_len: self.cp_len,
        }
    }
}
