//! Pulse schedules, piecewise-constant propagation and time-domain
//! observables.

mod observables;
mod propagate;
mod schedule;

pub use observables::*;
pub use propagate::*;
pub use schedule::*;
