use rayon::prelude::*;
use serde::Serialize;

use pulsesim_core::calibration::{analyze_model, DuffingCurves, StaticExtraction};
use pulsesim_core::device::{
    build_hamiltonian, circuit_hamiltonian, Curves, DeviceParams, ModelKind, TruncationConfig,
};

use crate::calibrate::{fmt, Calibrated};
use crate::config::RunConfig;
use crate::error::BenchError;
use crate::output::Table;

/// Spectral RMSE over the four computational energies, relative to ground.
pub fn spectral_rmse(a: &StaticExtraction, b: &StaticExtraction) -> f64 {
    (a.energies.iter().zip(&b.energies).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / 4.0).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub phi: f64,
    /// Indexed like [`ModelKind::ALL`]; `None` where the model failed.
    pub models: [Option<StaticExtraction>; 3],
    /// RMSE against the circuit model, `NaN` where unavailable.
    pub rmse: [f64; 3],
    pub errors: Vec<String>,
}

impl SweepRow {
    pub fn flagged(&self) -> bool {
        !self.errors.is_empty()
    }
}

fn model_index(kind: ModelKind) -> usize {
    ModelKind::ALL.iter().position(|&k| k == kind).expect("known model")
}

fn analyze(kind: ModelKind, cfg: &RunConfig, curves: Curves<'_>, phi: f64) -> pulsesim_core::Result<StaticExtraction> {
    let model = build_hamiltonian(kind, &cfg.device, curves, &cfg.truncation.production, phi)?;
    Ok(analyze_model(&model)?.extraction)
}

/// All three models on the calibration grid; failures flag the row.
pub fn run_static_sweep(cfg: &RunConfig, cal: &Calibrated) -> Vec<SweepRow> {
    let grid = cfg.sweep.grid();
    let curves = cal.curves();
    grid.par_iter()
        .enumerate()
        .map(|(i, &phi)| {
            let mut errors = Vec::new();
            let models = ModelKind::ALL.map(|kind| {
                let cached = match (kind, &cal.circuit) {
                    (ModelKind::Circuit, Some(c)) if c[i].phi == phi => Some(c[i]),
                    _ => None,
                };
                match cached.map(Ok).unwrap_or_else(|| analyze(kind, cfg, curves, phi)) {
                    Ok(x) => Some(x),
                    Err(e) => {
                        errors.push(format!("{kind}: {e}"));
                        None
                    }
                }
            });
            let circuit = models[model_index(ModelKind::Circuit)];
            let rmse = models.map(|m| match (m, circuit) {
                (Some(a), Some(b)) => spectral_rmse(&a, &b),
                _ => f64::NAN,
            });
            SweepRow { phi, models, rmse, errors }
        })
        .collect()
}

/// Mean of the per-flux RMSE of `kind`, skipping flagged rows.
pub fn mean_rmse(rows: &[SweepRow], kind: ModelKind) -> f64 {
    let v: Vec<f64> = rows.iter().map(|r| r.rmse[model_index(kind)]).filter(|x| x.is_finite()).collect();
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut cols = vec!["phi".to_string()];
    for kind in ModelKind::ALL {
        for label in ["E00", "E01", "E10", "E11"] {
            cols.push(format!("{label}_{kind}_GHz"));
        }
        cols.push(format!("J_{kind}_GHz"));
        cols.push(format!("zeta_{kind}_GHz"));
        cols.push(format!("rmse_{kind}_GHz"));
    }
    cols.push("flag".into());
    let refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new("static_sweep", &refs);
    for r in rows {
        let mut row = vec![fmt(r.phi)];
        for (m, rmse) in r.models.iter().zip(r.rmse) {
            match m {
                Some(x) => {
                    row.extend(x.energies.iter().map(|&e| fmt(e)));
                    row.push(fmt(x.j_coupling));
                    row.push(fmt(x.zeta));
                }
                None => row.extend(std::iter::repeat_n("NaN".to_string(), 6)),
            }
            row.push(fmt(rmse));
        }
        row.push(r.errors.join("; "));
        t.push(row);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    /// `n_q`, `n_eq`, `n_ec`, `n_duff` or `reference`.
    pub axis: String,
    pub value: usize,
    /// Flux-averaged errors against the reference circuit, GHz.
    pub rmse: f64,
    pub dj: f64,
    pub dzeta: f64,
    /// The full truncation equals the production setting.
    pub production: bool,
}

fn errors_against(reference: &[StaticExtraction], trial: &[StaticExtraction]) -> (f64, f64, f64) {
    let n = reference.len() as f64;
    let mut acc = (0.0, 0.0, 0.0);
    for (r, x) in reference.iter().zip(trial) {
        acc.0 += spectral_rmse(x, r);
        acc.1 += (x.j_coupling - r.j_coupling).abs();
        acc.2 += (x.zeta - r.zeta).abs();
    }
    (acc.0 / n, acc.1 / n, acc.2 / n)
}

fn circuit_at(
    params: &DeviceParams,
    trunc: &TruncationConfig,
    flux: &[f64],
) -> pulsesim_core::Result<Vec<StaticExtraction>> {
    flux.iter().map(|&phi| Ok(analyze_model(&circuit_hamiltonian(params, trunc, phi)?)?.extraction)).collect()
}

/// Sweeps each truncation axis with the others held at production values and
/// compares against the reference circuit truncation. The `n_duff` axis is
/// the Duffing model against the same reference and needs its curves.
pub fn run_truncation_study(
    cfg: &RunConfig,
    duffing: Option<&DuffingCurves>,
) -> Result<Vec<ConvergenceRow>, BenchError> {
    let t = &cfg.truncation;
    let flux = &t.study_flux;
    let production = t.production;
    let reference =
        circuit_at(&cfg.device, &t.reference, flux).map_err(BenchError::numerical("reference truncation"))?;

    let mut tasks: Vec<(&str, usize, TruncationConfig)> = Vec::new();
    for &v in &t.n_q_values {
        tasks.push(("n_q", v, TruncationConfig { n_q: v, n_eq: production.n_eq.min(v), ..production }));
    }
    for &v in &t.n_eq_values {
        tasks.push(("n_eq", v, TruncationConfig { n_eq: v, ..production }));
    }
    for &v in &t.n_ec_values {
        tasks.push(("n_ec", v, TruncationConfig { n_ec: v, ..production }));
    }
    let mut rows: Vec<ConvergenceRow> = tasks
        .par_iter()
        .map(|&(axis, value, trunc)| {
            let trial =
                circuit_at(&cfg.device, &trunc, flux).map_err(BenchError::numerical(format!("{axis} = {value}")))?;
            let (rmse, dj, dzeta) = errors_against(&reference, &trial);
            Ok(ConvergenceRow { axis: axis.into(), value, rmse, dj, dzeta, production: trunc == production })
        })
        .collect::<Result<_, BenchError>>()?;

    if let Some(curves) = duffing {
        for &v in &t.n_duff_values {
            let trunc = TruncationConfig { n_duff: v, n_duff_c: None, ..production };
            let trial: Vec<StaticExtraction> = flux
                .iter()
                .map(|&phi| {
                    let m = build_hamiltonian(ModelKind::Duffing, &cfg.device, Curves::Duffing(curves), &trunc, phi)?;
                    Ok(analyze_model(&m)?.extraction)
                })
                .collect::<pulsesim_core::Result<_>>()
                .map_err(BenchError::numerical(format!("n_duff = {v}")))?;
            let (rmse, dj, dzeta) = errors_against(&reference, &trial);
            rows.push(ConvergenceRow {
                axis: "n_duff".into(),
                value: v,
                rmse,
                dj,
                dzeta,
                production: v == production.n_duff,
            });
        }
    }
    let (rmse, dj, dzeta) = errors_against(&reference, &reference);
    rows.push(ConvergenceRow { axis: "reference".into(), value: 0, rmse, dj, dzeta, production: false });
    Ok(rows)
}

pub fn convergence_table(rows: &[ConvergenceRow]) -> Table {
    let mut t =
        Table::new("truncation_study", &["axis", "value", "rmse_GHz", "abs_dJ_GHz", "abs_dzeta_GHz", "production"]);
    for r in rows {
        t.push([r.axis.clone(), r.value.to_string(), fmt(r.rmse), fmt(r.dj), fmt(r.dzeta), r.production.to_string()]);
    }
    t
}
