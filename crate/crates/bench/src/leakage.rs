use pulsesim_core::device::{BasisLabel, ModelKind};
use pulsesim_core::dynamics::{
    bare_state, continuity_tolerance, population_currents, propagate_in_frame, tracked_states, ComputationalFrame,
    CurrentRecord, ModelFamily, PropagationOptions, PulseSchedule,
};

use crate::calibrate::{fmt, Calibrated};
use crate::config::RunConfig;
use crate::error::BenchError;
use crate::gates::{cz_schedule, Conservation};
use crate::output::Table;

/// Initial state of the leakage analysis.
pub const LEAKAGE_START: BasisLabel = BasisLabel { q1: 1, c: 0, q0: 1 };

#[derive(Debug, Clone)]
pub struct LeakageRun {
    pub kind: ModelKind,
    pub record: CurrentRecord,
    /// Tracked state taking the largest integrated current out of the
    /// initial state during the early window.
    pub dominant_early: Option<BasisLabel>,
    pub continuity_defect: f64,
    pub continuity_tolerance: f64,
    pub conservation: Conservation,
}

/// The CZ flux pulse shortened to the leakage window.
pub fn leakage_schedule(cfg: &RunConfig, dt: f64) -> Result<PulseSchedule, BenchError> {
    cz_schedule(cfg, cfg.cz.leakage_window - 2.0 * cfg.cz.ramp, dt)
}

pub fn run_leakage_model(
    family: ModelFamily<'_>,
    schedule: &PulseSchedule,
    threshold: f64,
    early_window: f64,
) -> pulsesim_core::Result<LeakageRun> {
    let idle = family.build(schedule.idle_flux)?;
    let comp = ComputationalFrame::at_idle(&idle)?;
    let psi0 = bare_state(&idle.labels, LEAKAGE_START)?;
    let opts = PropagationOptions { record_states: true, ..Default::default() };
    let traj = propagate_in_frame(family, schedule, &psi0, &opts, comp)?;
    let tracked = tracked_states(&traj, threshold)?;
    let record = population_currents(family, &traj, &tracked)?;
    Ok(LeakageRun {
        kind: family.kind,
        dominant_early: record.dominant_channel(LEAKAGE_START, early_window),
        continuity_defect: record.continuity_defect(),
        continuity_tolerance: continuity_tolerance(traj.computational.max_energy, schedule.dt),
        conservation: Conservation::of(&traj),
        record,
    })
}

/// Duffing and circuit runs from `|1,0,1>`; the four-level model has no
/// states to leak into.
pub fn run_leakage_analysis(
    cfg: &RunConfig,
    cal: &Calibrated,
) -> Result<Vec<(ModelKind, Result<LeakageRun, BenchError>)>, BenchError> {
    let schedule = leakage_schedule(cfg, cfg.dt)?;
    Ok([ModelKind::Duffing, ModelKind::Circuit]
        .into_iter()
        .map(|kind| {
            let run = run_leakage_model(cal.family(kind), &schedule, cfg.cz.tracking_threshold, cfg.cz.early_window)
                .map_err(BenchError::numerical(format!("{kind} leakage")));
            (kind, run)
        })
        .collect())
}

pub fn populations_table(run: &LeakageRun, stride: usize) -> Table {
    let r = &run.record;
    let mut cols = vec!["time_ns".to_string()];
    cols.extend(r.tracked.iter().map(|l| format!("P{l}")));
    let refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new(format!("leakage_populations_{}", run.kind), &refs);
    for k in (0..r.times.len()).step_by(stride.max(1)) {
        t.push(std::iter::once(fmt(r.times[k])).chain(r.populations[k].iter().map(|&p| fmt(p))));
    }
    t
}

pub fn currents_table(run: &LeakageRun, stride: usize) -> Table {
    let r = &run.record;
    let mut cols = vec!["time_ns".to_string()];
    cols.extend(r.pairs.iter().map(|&(m, n)| format!("I{}->{}_per_ns", r.tracked[m], r.tracked[n])));
    let refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new(format!("leakage_currents_{}", run.kind), &refs);
    for k in (0..r.currents.len()).step_by(stride.max(1)) {
        t.push(std::iter::once(fmt(r.times[k])).chain(r.currents[k].iter().map(|&c| fmt(c))));
    }
    t
}
