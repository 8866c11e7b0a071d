//! Exact linear equalization with the dense delay-Doppler channel matrix.
//! Only practical for small frames; used as a reference receiver.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::frame::{DdFrame, FrameParams, C64};

/// Linear equalizer flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqualizerMode {
    ZeroForcing,
    Mmse,
}

/// Singular values below this fraction of the largest count as zero.
const RANK_TOLERANCE: f64 = 1e-10;

/// Solves `y = H x` for `x`: least squares for zero forcing, or
/// `(H^H H + sigma2 I)^{-1} H^H y` for MMSE.
pub fn matrix_equalize(
    y: &DdFrame,
    h: &DMatrix<C64>,
    sigma2: f64,
    mode: EqualizerMode,
    params: &FrameParams,
) -> Result<DdFrame> {
    y.check_dims(params)?;
    let mn = params.cells();
    check_len("channel matrix rows", mn, h.nrows())?;
    check_len("channel matrix columns", mn, h.ncols())?;
    let rhs = DVector::from_column_slice(y.as_slice());
    let x = match mode {
        EqualizerMode::ZeroForcing => {
            let svd = h.clone().svd(true, true);
            let s_max = svd.singular_values.max();
            if !(s_max > 0.0) || svd.singular_values.min() <= RANK_TOLERANCE * s_max {
                return Err(Error::Rank);
            }
            svd.solve(&rhs, RANK_TOLERANCE * s_max)
                .map_err(|_| Error::Rank)?
        }
        EqualizerMode::Mmse => {
            if sigma2 < 0.0 {
                return Err(Error::Domain(format!("noise variance {sigma2} is negative")));
            }
            let hh = h.adjoint();
            let mut gram = &hh * h;
            for i in 0..mn {
                gram[(i, i)] += C64::new(sigma2, 0.0);
            }
            gram.lu().solve(&(hh * rhs)).ok_or(Error::Rank)?
        }
    };
    DdFrame::from_vec(params, x.as_slice().to_vec())
}
