//! Static extraction from the circuit reference and fitting of the reduced
//! model curves.

mod artifact;
mod assign;
mod duffing;
mod effective;
mod extract;
mod fit;
pub mod optimize;

pub use artifact::{device_hash, load_artifact, save_artifact, CalibrationArtifact, ARTIFACT_VERSION};
pub use assign::{assign_dressed_states, optimal_assignment, AssignedState, AssignmentMap, MIN_OVERLAP, WARN_OVERLAP};
pub use duffing::{
    calibrate_duffing, duffing_objective, stage_one_estimate, DuffingCalibration, DuffingCurves, DuffingRecord,
    REFINE_HALF_WIDTH,
};
pub use effective::{calibrate_effective, EffectiveCurves};
pub use extract::{
    analyze_model, analyze_spectrum, extract_static_quantities, project_computational, reextract_effective, zeta_of,
    ProjectedHamiltonian, StaticExtraction, StaticPoint,
};
pub use fit::{fit_harmonic, fit_surrogate, HarmonicFit, InteractionFit, SurrogateFit, EPSILON_BOUNDS};

use rayon::prelude::*;

use crate::device::{circuit_hamiltonian, DeviceParams, TruncationConfig};
use crate::error::{Error, Result};

pub const DEFAULT_HARMONIC_ORDER: usize = 4;

/// `n` uniform points on `[lo, hi]`.
pub fn flux_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// 101 points on `[0, 0.45]`.
pub fn default_flux_grid() -> Vec<f64> {
    flux_grid(101, 0.0, 0.45)
}

/// Static analysis of the circuit model at every grid point.
pub fn circuit_sweep(params: &DeviceParams, trunc: &TruncationConfig, grid: &[f64]) -> Result<Vec<StaticPoint>> {
    grid.par_iter()
        .map(|&phi| {
            let model = circuit_hamiltonian(params, trunc, phi)?;
            analyze_model(&model)
        })
        .collect()
}

pub(crate) fn samples(sweep: &[StaticExtraction], f: impl Fn(&StaticExtraction) -> f64) -> Vec<(f64, f64)> {
    sweep.iter().map(|x| (x.phi, f(x))).collect()
}

pub(crate) fn require_coverage(sweep: &[StaticExtraction], order: usize) -> Result<()> {
    let mut phis: Vec<f64> = sweep.iter().map(|x| x.phi).collect();
    phis.sort_by(f64::total_cmp);
    phis.dedup();
    if phis.len() < 2 * order + 1 {
        return Err(Error::InsufficientFluxCoverage(format!("{} distinct flux points for order {order}", phis.len())));
    }
    Ok(())
}
