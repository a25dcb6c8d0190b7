//! Benchmark suite for the pulsesim models: calibration, static sweeps, the
//! truncation study, R_X and CZ dynamics, leakage currents and runtime.

pub mod calibrate;
pub mod config;
pub mod error;
pub mod gates;
pub mod leakage;
pub mod output;
pub mod runtime;
pub mod statics;

pub use calibrate::{load_or_calibrate, run_calibrate, Calibrated};
pub use config::RunConfig;
pub use error::BenchError;
