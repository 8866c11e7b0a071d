//! OTFS modulation with a large uniform linear receive array.
//!
//! The crate covers the whole link: QAM mapping, delay-Doppler frame
//! assembly with pilot patterns, the OTFS transforms, multipath channel
//! generation and propagation (exact delay-Doppler and sampled time domain),
//! receive beamforming, per-branch channel estimation with shift
//! compensation and maximal-ratio combining, and a dense matrix equalizer
//! used as a reference.

pub mod beamforming;
pub mod channel;
pub mod equalizer;
pub mod error;
pub mod estimation;
pub mod frame;
pub mod pattern;
pub mod qam;
pub mod transforms;

pub use beamforming::{
    array_gain, array_gain_direct, combine, genie_angles, scan_angles, steering_vector, AngleGrid,
    BranchSignal, DetectedBranch, GenieBranch, ScanPolicy,
};
pub use channel::{
    add_noise, build_dd_channel_matrix, propagate_ideal, propagate_ideal_all, propagate_time,
    sample_channel, AoaPolicy, ChannelRealization, ChannelSpec, DelayProfile, PathSpec,
};
pub use equalizer::{matrix_equalize, EqualizerMode};
pub use error::{Error, Result};
pub use estimation::{
    compensate, detect, estimate_delay, estimate_doppler, estimate_gain, mrc_combine, receive,
    BranchEstimate, ReceiverOutput,
};
pub use frame::{DdFrame, FrameParams, FtFrame, Grid, Samples, TimeSignal, C64};
pub use pattern::{assemble_frame, extract_data, make_pattern, PatternVariant, PilotPattern};
pub use qam::{qam_demodulate, qam_modulate, Constellation, QamOrder};
pub use transforms::{add_cp, heisenberg, isfft, remove_cp, sfft, wigner, Transforms};
