use std::time::Instant;

use pulsesim_core::device::{ModelKind, TruncationConfig};
use pulsesim_core::dynamics::{
    propagate_with, ComputationalFrame, ModelFamily, PropagationOptions, PulseSchedule, StepHamiltonians,
};

use crate::calibrate::{fmt, Calibrated};
use crate::config::RunConfig;
use crate::error::BenchError;
use crate::gates::{cz_hold, cz_schedule};
use crate::output::Table;

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeRow {
    pub kind: ModelKind,
    pub n_eq: usize,
    pub dim: usize,
    /// Medians over the repeats, seconds.
    pub build_seconds: f64,
    pub propagate_seconds: f64,
}

impl RuntimeRow {
    pub fn total(&self) -> f64 {
        self.build_seconds + self.propagate_seconds
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn time_model(
    family: ModelFamily<'_>,
    schedule: &PulseSchedule,
    repeats: usize,
) -> pulsesim_core::Result<(usize, f64, f64)> {
    let comp = ComputationalFrame::at_idle(&family.build(schedule.idle_flux)?)?;
    let psi0 = comp.plus_plus();
    let opts = PropagationOptions { check_unitarity: false, ..Default::default() };
    let mut build = Vec::with_capacity(repeats);
    let mut prop = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t0 = Instant::now();
        let mut hams = StepHamiltonians::prebuilt(family, schedule, opts.frame)?;
        build.push(t0.elapsed().as_secs_f64());
        let t1 = Instant::now();
        propagate_with(&mut hams, &psi0, &opts, comp.clone())?;
        prop.push(t1.elapsed().as_secs_f64());
    }
    Ok((comp.dim(), median(build), median(prop)))
}

/// Build and propagation time of the CZ schedule at `runtime_dt`, per model
/// and qubit truncation. Duffing modes use `n_eq` levels and the circuit's
/// bus truncation, so both multilevel models have the same dimension.
pub fn run_runtime_benchmark(cfg: &RunConfig, cal: &Calibrated) -> Result<Vec<RuntimeRow>, BenchError> {
    let hold = cz_hold(cfg, cal)?;
    let schedule = cz_schedule(cfg, hold, cfg.cz.runtime_dt)?;
    let base = cfg.truncation.production;
    let mut rows = Vec::new();
    for &n_eq in &cfg.truncation.runtime_n_eq {
        let trunc = TruncationConfig { n_eq, n_duff: n_eq, n_duff_c: Some(base.n_ec), ..base };
        trunc.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        for kind in ModelKind::ALL {
            let family = ModelFamily::new(kind, &cal.artifact.device, cal.curves(), &trunc);
            let (dim, build_seconds, propagate_seconds) = time_model(family, &schedule, cfg.cz.runtime_repeats)
                .map_err(BenchError::numerical(format!("{kind} runtime at n_eq = {n_eq}")))?;
            rows.push(RuntimeRow { kind, n_eq, dim, build_seconds, propagate_seconds });
        }
    }
    Ok(rows)
}

pub fn runtime_table(rows: &[RuntimeRow]) -> Table {
    let mut t = Table::new("runtime", &["model", "n_eq", "dimension", "build_s", "propagate_s"]);
    for r in rows {
        t.push([
            r.kind.to_string(),
            r.n_eq.to_string(),
            r.dim.to_string(),
            fmt(r.build_seconds),
            fmt(r.propagate_seconds),
        ]);
    }
    t
}
