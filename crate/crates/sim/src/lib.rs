//! Seeded Monte-Carlo harness for the OTFS array receiver: configuration,
//! experiment runners and result serialization. The `otfs-sim` binary is a
//! thin CLI over this library.

pub mod config;
pub mod error;
pub mod experiments;
pub mod record;
pub mod selftest;
pub mod trial;

pub use config::{AngleMode, ExperimentConfig, PropagationMode};
pub use error::{Result, SimError};
pub use record::{to_csv, to_json, ResultRecord, WilsonInterval};
