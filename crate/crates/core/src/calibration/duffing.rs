use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::extract::{analyze_model, StaticExtraction};
use super::fit::{fit_harmonic, HarmonicFit};
use super::optimize::{nelder_mead, SimplexOptions};
use super::require_coverage;
use crate::device::{
    duffing_hamiltonian, transmon_levels, DeviceParams, DuffingPoint, PerQubit, Qubit, TruncationConfig,
};
use crate::error::{Error, Result};

/// Half-width of the refinement box around the stage-1 values, GHz.
pub const REFINE_HALF_WIDTH: f64 = 0.15;
/// Refined values replace stage-1 values only if the objective drops by more
/// than this, GHz^2.
const IMPROVEMENT_FLOOR: f64 = 1e-18;

/// Flux-dependent parameters of the Duffing model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuffingCurves {
    pub omega: PerQubit<HarmonicFit>,
    pub alpha: PerQubit<HarmonicFit>,
}

impl DuffingCurves {
    pub fn at(&self, phi: f64) -> DuffingPoint {
        DuffingPoint { omega: self.omega.map(|_, f| f.eval(phi)), alpha: self.alpha.map(|_, f| f.eval(phi)) }
    }
}

/// Per-flux outcome of the pointwise stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuffingRecord {
    pub phi: f64,
    pub stage_one: DuffingPoint,
    pub refined: DuffingPoint,
    pub objective_before: f64,
    pub objective_after: f64,
    /// `|dzeta|` against the circuit reference before and after refinement.
    pub zeta_error_before: f64,
    pub zeta_error_after: f64,
    /// Refinement did not improve the objective; stage-1 values kept.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuffingCalibration {
    pub curves: DuffingCurves,
    pub records: Vec<DuffingRecord>,
}

/// `omega = E1 - E0` and `alpha = E2 - 2 E1 + E0` from each bare transmon.
pub fn stage_one_estimate(params: &DeviceParams, trunc: &TruncationConfig, phi: f64) -> Result<DuffingPoint> {
    let levels = PerQubit::new((), ()).try_map(|j, _| {
        let flux = if j == Qubit::Q1 { phi } else { 0.0 };
        transmon_levels(params, j, flux, trunc.n_q, trunc.n_eq.max(3))
    })?;
    Ok(DuffingPoint {
        omega: levels.map(|_, t| t.energies[1] - t.energies[0]),
        alpha: levels.map(|_, t| t.energies[2] - 2.0 * t.energies[1] + t.energies[0]),
    })
}

/// Squared spectral RMSE over the computational energies plus squared `J`
/// and `zeta` errors, all in GHz^2 with unit weights. Infinite when the
/// Duffing spectrum cannot be assigned.
pub fn duffing_objective(
    params: &DeviceParams,
    trunc: &TruncationConfig,
    point: &DuffingPoint,
    target: &StaticExtraction,
) -> f64 {
    duffing_errors(params, trunc, point, target).map_or(f64::INFINITY, |(obj, _)| obj)
}

fn duffing_errors(
    params: &DeviceParams,
    trunc: &TruncationConfig,
    point: &DuffingPoint,
    target: &StaticExtraction,
) -> Option<(f64, f64)> {
    let nd = trunc.n_duff;
    let dims = [nd, trunc.duffing_coupler_levels(), nd];
    let model = duffing_hamiltonian(params, point, dims, target.phi).ok()?;
    let x = analyze_model(&model).ok()?.extraction;
    let mse = x.energies.iter().zip(&target.energies).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 4.0;
    let dj = x.j_coupling - target.j_coupling;
    let dz = x.zeta - target.zeta;
    Some((mse + dj * dj + dz * dz, dz.abs()))
}

fn to_vec(p: &DuffingPoint) -> [f64; 4] {
    [p.omega.q1, p.alpha.q1, p.omega.q0, p.alpha.q0]
}

fn from_slice(x: &[f64]) -> DuffingPoint {
    DuffingPoint { omega: PerQubit::new(x[0], x[2]), alpha: PerQubit::new(x[1], x[3]) }
}

fn refine_point(params: &DeviceParams, trunc: &TruncationConfig, target: &StaticExtraction) -> Result<DuffingRecord> {
    let stage_one = stage_one_estimate(params, trunc, target.phi)?;
    let x0 = to_vec(&stage_one);
    let lower = x0.map(|v| v - REFINE_HALF_WIDTH);
    let upper = x0.map(|v| v + REFINE_HALF_WIDTH);
    let (before, zeta_before) =
        duffing_errors(params, trunc, &stage_one, target).unwrap_or((f64::INFINITY, f64::INFINITY));
    let opts = SimplexOptions { initial_step: 0.02, max_evaluations: 800, f_tol: 1e-22, x_tol: 1e-9 };
    let result = nelder_mead(|x| duffing_objective(params, trunc, &from_slice(x), target), &x0, &lower, &upper, opts);
    let refined = from_slice(&result.x);
    let after_errors = duffing_errors(params, trunc, &refined, target);
    let improved = after_errors.is_some_and(|(after, _)| after < before - IMPROVEMENT_FLOOR);
    if improved {
        let (after, zeta_after) = after_errors.expect("checked above");
        Ok(DuffingRecord {
            phi: target.phi,
            stage_one,
            refined,
            objective_before: before,
            objective_after: after,
            zeta_error_before: zeta_before,
            zeta_error_after: zeta_after,
            flagged: false,
        })
    } else {
        let worse = after_errors.is_none_or(|(after, _)| after > before);
        if worse {
            log::warn!("Duffing refinement at flux {} did not improve; keeping stage-1 values", target.phi);
        }
        Ok(DuffingRecord {
            phi: target.phi,
            stage_one,
            refined: stage_one,
            objective_before: before,
            objective_after: before,
            zeta_error_before: zeta_before,
            zeta_error_after: zeta_before,
            flagged: worse,
        })
    }
}

/// Pointwise transmon estimates, bounded refinement against the circuit
/// sweep, then harmonic fits of each parameter.
pub fn calibrate_duffing(
    params: &DeviceParams,
    trunc: &TruncationConfig,
    circuit_sweep: &[StaticExtraction],
    order: usize,
) -> Result<DuffingCalibration> {
    require_coverage(circuit_sweep, order)?;
    let records: Vec<DuffingRecord> =
        circuit_sweep.par_iter().map(|target| refine_point(params, trunc, target)).collect::<Result<_>>()?;
    let fit = |f: &dyn Fn(&DuffingPoint) -> f64| {
        let s: Vec<(f64, f64)> = records.iter().map(|r| (r.phi, f(&r.refined))).collect();
        fit_harmonic(&s, order)
    };
    let curves = DuffingCurves {
        omega: PerQubit::new(fit(&|p| p.omega.q1)?, fit(&|p| p.omega.q0)?),
        alpha: PerQubit::new(fit(&|p| p.alpha.q1)?, fit(&|p| p.alpha.q0)?),
    };
    for r in &records {
        let p = curves.at(r.phi);
        if p.alpha.q1 >= 0.0 || p.alpha.q0 >= 0.0 {
            return Err(Error::InvalidParameter(format!("fitted anharmonicity non-negative at flux {}", r.phi)));
        }
    }
    Ok(DuffingCalibration { curves, records })
}
