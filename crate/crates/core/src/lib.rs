//! Simulation of a two-transmon device with a harmonic bus at three levels of
//! abstraction: a four-level effective model, a Duffing oscillator model and a
//! charge-basis circuit model.

pub mod calibration;
pub mod device;
pub mod dynamics;
pub mod error;
pub mod linalg;

pub use error::{Error, Result};
