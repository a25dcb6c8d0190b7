use std::f64::consts::PI;

use rayon::prelude::*;

use pulsesim_core::calibration::analyze_model;
use pulsesim_core::device::{circuit_hamiltonian, ModelKind, Qubit};
use pulsesim_core::dynamics::{
    conditional_phase, cz_duration, flat_for_area, leakage_series, make_drive_pulse, make_flux_pulse,
    population_transfer_and_mismatch, propagate_in_frame, ComputationalFrame, DriveFrame, ModelFamily, PhaseSeries,
    PropagationOptions, PulseSchedule, Trajectory, TransferSeries,
};

use crate::calibrate::{fmt, Calibrated};
use crate::config::RunConfig;
use crate::error::BenchError;
use crate::output::Table;

/// Norm and unitarity bookkeeping of one or more trajectories.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Conservation {
    pub max_norm_defect: f64,
    pub max_unitarity_defect: f64,
}

impl Conservation {
    pub fn of(traj: &Trajectory) -> Self {
        Self { max_norm_defect: traj.max_norm_defect(), max_unitarity_defect: traj.max_unitarity_defect }
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            max_norm_defect: self.max_norm_defect.max(other.max_norm_defect),
            max_unitarity_defect: self.max_unitarity_defect.max(other.max_unitarity_defect),
        }
    }
}

/// Dressed q0 frequency of the circuit model at `phi`.
pub fn default_carrier(cfg: &RunConfig, phi: f64) -> Result<f64, BenchError> {
    let model = circuit_hamiltonian(&cfg.device, &cfg.truncation.production, phi)
        .map_err(BenchError::numerical("carrier frequency"))?;
    let x = analyze_model(&model).map_err(BenchError::numerical("carrier frequency"))?;
    Ok(x.extraction.omega_tilde.q0)
}

pub fn rx_schedule(cfg: &RunConfig, carrier: f64, dt: f64) -> Result<PulseSchedule, BenchError> {
    let rx = &cfg.rx;
    let cfg_err = |e: pulsesim_core::Error| BenchError::Config(e.to_string());
    let flat = flat_for_area(rx.area, rx.amplitude, rx.ramp).map_err(cfg_err)?;
    make_drive_pulse(rx.amplitude, rx.ramp, flat, carrier, rx.phase, dt, Qubit::Q0, rx.idle_flux).map_err(cfg_err)
}

#[derive(Debug, Clone)]
pub struct RxRun {
    pub kind: ModelKind,
    pub transfer: TransferSeries,
    /// Leakage with the spectator in `|0>` and in `|1>`.
    pub leakage: [Vec<f64>; 2],
    pub conservation: Conservation,
}

/// Drives `|00>` and `|10>` through the same schedule.
pub fn run_rx_model(
    family: ModelFamily<'_>,
    schedule: &PulseSchedule,
    frame: DriveFrame,
) -> pulsesim_core::Result<RxRun> {
    let comp = ComputationalFrame::at_idle(&family.build(schedule.idle_flux)?)?;
    let opts = PropagationOptions { frame, ..Default::default() };
    let [a, b] = [0, 2].map(|i| propagate_in_frame(family, schedule, &comp.state(i), &opts, comp.clone()));
    let (a, b) = (a?, b?);
    Ok(RxRun {
        kind: family.kind,
        transfer: population_transfer_and_mismatch(&a, &b)?,
        leakage: [leakage_series(&a), leakage_series(&b)],
        conservation: Conservation::of(&a).merge(Conservation::of(&b)),
    })
}

#[derive(Debug)]
pub struct RxBenchmark {
    pub carrier: f64,
    pub frame: DriveFrame,
    pub schedule: PulseSchedule,
    pub runs: Vec<(ModelKind, Result<RxRun, BenchError>)>,
}

pub fn run_rx_benchmark(
    cfg: &RunConfig,
    cal: &Calibrated,
    frame: DriveFrame,
    dt: f64,
) -> Result<RxBenchmark, BenchError> {
    let carrier = match cfg.rx.carrier {
        Some(f) => f,
        None => default_carrier(cfg, cfg.rx.idle_flux)?,
    };
    let schedule = rx_schedule(cfg, carrier, dt)?;
    let runs = rx_runs(cal, &schedule, frame);
    Ok(RxBenchmark { carrier, frame, schedule, runs })
}

/// R_X runs of every model on a given schedule.
pub fn rx_runs(
    cal: &Calibrated,
    schedule: &PulseSchedule,
    frame: DriveFrame,
) -> Vec<(ModelKind, Result<RxRun, BenchError>)> {
    ModelKind::ALL
        .par_iter()
        .map(|&kind| {
            let run =
                run_rx_model(cal.family(kind), schedule, frame).map_err(BenchError::numerical(format!("{kind} R_X")));
            (kind, run)
        })
        .collect()
}

pub fn rx_table(run: &RxRun, schedule: &PulseSchedule) -> Table {
    let mut t = Table::new(
        format!("rx_{}", run.kind),
        &["time_ns", "amp_GHz", "P_00_to_01", "P_10_to_11", "mismatch", "leakage_spectator0", "leakage_spectator1"],
    );
    let tr = &run.transfer;
    for k in 0..tr.times.len() {
        let amp = if k < schedule.steps() { schedule.amp[k] } else { 0.0 };
        t.push([
            fmt(tr.times[k]),
            fmt(amp),
            fmt(tr.from_00[k]),
            fmt(tr.from_10[k]),
            fmt(tr.mismatch[k]),
            fmt(run.leakage[0][k]),
            fmt(run.leakage[1][k]),
        ]);
    }
    t
}

/// Flat duration of the CZ pulse: configured, or `1 / (2 |zeta|)` of the
/// effective model at the target flux.
pub fn cz_hold(cfg: &RunConfig, cal: &Calibrated) -> Result<f64, BenchError> {
    match cfg.cz.hold {
        Some(h) => Ok(h),
        None => cz_duration(cal.artifact.effective.at(cfg.cz.target_flux).zeta)
            .map_err(BenchError::numerical(format!("CZ hold at flux {}", cfg.cz.target_flux))),
    }
}

pub fn cz_schedule(cfg: &RunConfig, hold: f64, dt: f64) -> Result<PulseSchedule, BenchError> {
    let c = &cfg.cz;
    make_flux_pulse(c.idle_flux, c.target_flux, c.ramp, hold, dt).map_err(|e| BenchError::Config(e.to_string()))
}

/// Largest deviation of `(t, y)` from its least-squares line over `[t0, t1]`.
pub fn linear_fit_deviation(times: &[f64], values: &[f64], t0: f64, t1: f64) -> f64 {
    let pts: Vec<(f64, f64)> =
        times.iter().zip(values).filter(|(t, _)| **t >= t0 && **t <= t1).map(|(&t, &y)| (t, y)).collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let slope = sxy / sxx;
    pts.iter().map(|p| (p.1 - my - slope * (p.0 - mt)).abs()).fold(0.0, f64::max)
}

/// Series value at the sample nearest `t`.
pub fn value_at(times: &[f64], values: &[f64], t: f64) -> f64 {
    let k = times.iter().enumerate().min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs())).map_or(0, |(k, _)| k);
    values[k]
}

#[derive(Debug, Clone)]
pub struct CzRun {
    pub kind: ModelKind,
    pub phase: PhaseSeries,
    pub leakage: Vec<f64>,
    /// Conditional phase gained over the flat segment.
    pub flat_phase: f64,
    /// Largest deviation from linear over the flat segment, in units of pi.
    pub linearity: f64,
    pub conservation: Conservation,
}

pub fn run_cz_model(
    family: ModelFamily<'_>,
    schedule: &PulseSchedule,
    ramp: f64,
    hold: f64,
) -> pulsesim_core::Result<CzRun> {
    let comp = ComputationalFrame::at_idle(&family.build(schedule.idle_flux)?)?;
    let traj = propagate_in_frame(family, schedule, &comp.plus_plus(), &PropagationOptions::default(), comp.clone())?;
    let phase = conditional_phase(&traj)?;
    let (t0, t1) = (ramp, ramp + hold);
    let flat_phase = value_at(&phase.times, &phase.conditional, t1) - value_at(&phase.times, &phase.conditional, t0);
    let linearity = linear_fit_deviation(&phase.times, &phase.conditional, t0, t1) / PI;
    Ok(CzRun {
        kind: family.kind,
        leakage: leakage_series(&traj),
        phase,
        flat_phase,
        linearity,
        conservation: Conservation::of(&traj),
    })
}

#[derive(Debug)]
pub struct CzBenchmark {
    pub hold: f64,
    pub schedule: PulseSchedule,
    pub runs: Vec<(ModelKind, Result<CzRun, BenchError>)>,
}

pub fn run_cz_benchmark(cfg: &RunConfig, cal: &Calibrated, dt: f64) -> Result<CzBenchmark, BenchError> {
    let hold = cz_hold(cfg, cal)?;
    let schedule = cz_schedule(cfg, hold, dt)?;
    let runs = cz_runs(cal, &schedule, cfg.cz.ramp, hold);
    Ok(CzBenchmark { hold, schedule, runs })
}

/// CZ runs of every model on a given schedule.
pub fn cz_runs(
    cal: &Calibrated,
    schedule: &PulseSchedule,
    ramp: f64,
    hold: f64,
) -> Vec<(ModelKind, Result<CzRun, BenchError>)> {
    ModelKind::ALL
        .par_iter()
        .map(|&kind| {
            let run = run_cz_model(cal.family(kind), schedule, ramp, hold)
                .map_err(BenchError::numerical(format!("{kind} CZ")));
            (kind, run)
        })
        .collect()
}

/// Every `stride`-th sample, for long series.
pub fn cz_table(run: &CzRun, schedule: &PulseSchedule, stride: usize) -> Table {
    let mut t = Table::new(format!("cz_{}", run.kind), &["time_ns", "flux", "phi_cz_rad", "leakage"]);
    let p = &run.phase;
    for k in (0..p.times.len()).step_by(stride.max(1)) {
        t.push([fmt(p.times[k]), fmt(schedule.flux_at(p.times[k])), fmt(p.conditional[k]), fmt(run.leakage[k])]);
    }
    t
}

/// Max-norm difference of a coarse series and the matching samples of a
/// series computed at half the step.
pub fn halving_difference(coarse: &[f64], fine: &[f64]) -> f64 {
    coarse.iter().enumerate().map(|(k, x)| (x - fine[2 * k]).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_series_has_no_deviation() {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|x| 3.0 * x - 1.0).collect();
        assert!(linear_fit_deviation(&t, &y, 1.0, 8.0) < 1e-12);
        let bumped: Vec<f64> =
            y.iter().zip(&t).map(|(v, x)| v + if (*x - 5.0).abs() < 0.05 { 0.3 } else { 0.0 }).collect();
        assert!(linear_fit_deviation(&t, &bumped, 1.0, 8.0) > 0.25);
    }

    #[test]
    fn halving_compares_shared_times() {
        assert_eq!(halving_difference(&[0.0, 1.0], &[0.0, 7.0, 1.5]), 0.5);
    }
}
