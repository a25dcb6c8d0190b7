use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::propagate::{ModelFamily, StepHamiltonians, Trajectory};
use crate::device::BasisLabel;
use crate::error::{Error, Result};

/// Amplitudes below this leave the phase undefined.
pub const PHASE_MAGNITUDE_FLOOR: f64 = 1e-6;
/// Smallest `|zeta|` accepted when sizing a CZ hold, GHz.
pub const MIN_CONDITIONAL_ZETA: f64 = 1e-6;
/// Basis states whose population ever exceeds this are tracked.
pub const TRACKING_THRESHOLD: f64 = 0.005;

const COMPUTATIONAL_NAMES: [&str; 4] = ["00", "01", "10", "11"];

/// `1 - sum |c_ab|^2`, clamped to `[0, 1]`, at every time. Identically zero
/// when the computational states span the whole model.
pub fn leakage_series(traj: &Trajectory) -> Vec<f64> {
    if traj.dim() == 4 {
        return vec![0.0; traj.amplitudes.len()];
    }
    traj.amplitudes.iter().map(|a| (1.0 - a.iter().map(|c| c.norm_sqr()).sum::<f64>()).clamp(0.0, 1.0)).collect()
}

pub fn max_leakage(traj: &Trajectory) -> f64 {
    leakage_series(traj).into_iter().fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSeries {
    pub times: Vec<f64>,
    /// Unwrapped `arg c_ab` per computational state.
    pub phases: Vec<[f64; 4]>,
    /// `phi_00 - phi_01 - phi_10 + phi_11`.
    pub conditional: Vec<f64>,
}

impl PhaseSeries {
    pub fn final_conditional(&self) -> f64 {
        *self.conditional.last().expect("series has at least the initial point")
    }
}

/// Adds multiples of `2 pi` so consecutive values differ by at most `pi`.
pub fn unwrap_phases(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut offset = 0.0;
    for (k, &p) in raw.iter().enumerate() {
        if k > 0 {
            let d = p - raw[k - 1];
            if d > PI {
                offset -= TAU;
            } else if d < -PI {
                offset += TAU;
            }
        }
        out.push(p + offset);
    }
    out
}

/// Conditional phase accumulated from the initial state, which must overlap
/// every computational state.
pub fn conditional_phase(traj: &Trajectory) -> Result<PhaseSeries> {
    let mut raw: [Vec<f64>; 4] = Default::default();
    for (k, a) in traj.amplitudes.iter().enumerate() {
        for i in 0..4 {
            let m = a[i].norm();
            if m < PHASE_MAGNITUDE_FLOOR {
                return Err(Error::PhaseUndefined { step: k, label: COMPUTATIONAL_NAMES[i], magnitude: m });
            }
            raw[i].push(a[i].arg());
        }
    }
    let unwrapped = raw.map(|r| unwrap_phases(&r));
    let origin = [0, 1, 2, 3].map(|i| unwrapped[i][0]);
    let phases: Vec<[f64; 4]> =
        (0..traj.amplitudes.len()).map(|k| [0, 1, 2, 3].map(|i| unwrapped[i][k] - origin[i])).collect();
    let conditional = phases.iter().map(|p| p[0] - p[1] - p[2] + p[3]).collect();
    Ok(PhaseSeries { times: traj.times.clone(), phases, conditional })
}

/// Hold time giving a conditional phase of `pi` at constant `zeta`.
pub fn cz_duration(zeta: f64) -> Result<f64> {
    if !zeta.is_finite() || zeta.abs() < MIN_CONDITIONAL_ZETA {
        return Err(Error::NoConditionalInteraction { zeta });
    }
    Ok(1.0 / (2.0 * zeta.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferSeries {
    pub times: Vec<f64>,
    /// Population of `|01>` starting from `|00>`.
    pub from_00: Vec<f64>,
    /// Population of `|11>` starting from `|10>`.
    pub from_10: Vec<f64>,
    /// `|from_00 - from_10|`.
    pub mismatch: Vec<f64>,
}

impl TransferSeries {
    pub fn max_mismatch(&self) -> f64 {
        self.mismatch.iter().copied().fold(0.0, f64::max)
    }
}

/// Spectator-conditioned transfer of a pulse on the least significant qubit.
pub fn population_transfer_and_mismatch(spectator_0: &Trajectory, spectator_1: &Trajectory) -> Result<TransferSeries> {
    if !spectator_0.schedule.same_controls(&spectator_1.schedule) || spectator_0.frame != spectator_1.frame {
        return Err(Error::ScheduleMismatch("spectator runs use different controls".into()));
    }
    if spectator_0.kind != spectator_1.kind {
        return Err(Error::ScheduleMismatch("spectator runs use different models".into()));
    }
    let from_00: Vec<f64> = spectator_0.amplitudes.iter().map(|a| a[1].norm_sqr()).collect();
    let from_10: Vec<f64> = spectator_1.amplitudes.iter().map(|a| a[3].norm_sqr()).collect();
    let mismatch = from_00.iter().zip(&from_10).map(|(a, b)| (a - b).abs()).collect();
    Ok(TransferSeries { times: spectator_0.times.clone(), from_00, from_10, mismatch })
}

/// Populations and pairwise probability currents among the tracked states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentRecord {
    pub times: Vec<f64>,
    pub dt: f64,
    pub tracked: Vec<BasisLabel>,
    /// `populations[k][n]` for tracked state `n` at `t_k`.
    pub populations: Vec<Vec<f64>>,
    /// Tracked index pairs `(m, n)` with `m < n`.
    pub pairs: Vec<(usize, usize)>,
    /// `currents[k][p]` is the flow from `pairs[p].0` into `pairs[p].1`
    /// under the step-`k` Hamiltonian at `t_k`, for `k < K`, per ns.
    pub currents: Vec<Vec<f64>>,
    /// Net inflow into each tracked state from the whole basis at `t_k`,
    /// averaged over the Hamiltonians on either side of `t_k`.
    pub net_inflow: Vec<Vec<f64>>,
}

impl CurrentRecord {
    /// Flow from tracked state `m` into `n` at step `k`.
    pub fn current(&self, k: usize, m: usize, n: usize) -> f64 {
        if m == n {
            return 0.0;
        }
        let (a, b, sign) = if m < n { (m, n, 1.0) } else { (n, m, -1.0) };
        let p = self.pairs.iter().position(|&q| q == (a, b)).expect("pair of tracked states");
        sign * self.currents[k][p]
    }

    pub fn tracked_index(&self, label: BasisLabel) -> Option<usize> {
        self.tracked.iter().position(|&l| l == label)
    }

    /// Largest `|P_n(t_{k+1}) - P_n(t_{k-1}) - 2 dt inflow_n(t_k)| / 2` over
    /// interior steps: the per-step population error of the currents.
    pub fn continuity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 1..self.populations.len().saturating_sub(1) {
            for n in 0..self.tracked.len() {
                let dp = self.populations[k + 1][n] - self.populations[k - 1][n];
                worst = worst.max((dp - 2.0 * self.dt * self.net_inflow[k][n]).abs() / 2.0);
            }
        }
        worst
    }

    pub fn max_abs_current(&self) -> f64 {
        self.currents.iter().flatten().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Tracked state receiving the largest integrated `|current|` out of
    /// `from` during the first `window` ns.
    pub fn dominant_channel(&self, from: BasisLabel, window: f64) -> Option<BasisLabel> {
        let m = self.tracked_index(from)?;
        let mut totals = vec![0.0; self.tracked.len()];
        for k in 0..self.currents.len() {
            if self.times[k] >= window {
                break;
            }
            for (n, total) in totals.iter_mut().enumerate() {
                *total += self.current(k, m, n).abs() * self.dt;
            }
        }
        totals
            .iter()
            .enumerate()
            .filter(|&(n, _)| n != m)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(n, _)| self.tracked[n])
    }
}

/// Allowed per-step continuity defect for spectral radius `e_max` GHz.
pub fn continuity_tolerance(e_max: f64, dt: f64) -> f64 {
    5.0 * (TAU * e_max * dt).powi(2)
}

/// Basis states whose population exceeds `threshold` at some recorded time,
/// ordered by total excitation then lexicographically.
pub fn tracked_states(traj: &Trajectory, threshold: f64) -> Result<Vec<BasisLabel>> {
    let states =
        traj.states.as_ref().ok_or_else(|| Error::InvalidParameter("trajectory has no recorded states".into()))?;
    let mut peak = vec![0.0f64; traj.dim()];
    for psi in states {
        for (p, c) in peak.iter_mut().zip(psi) {
            *p = p.max(c.norm_sqr());
        }
    }
    let mut out: Vec<BasisLabel> =
        traj.labels.iter().zip(&peak).filter(|&(_, &p)| p > threshold).map(|(&l, _)| l).collect();
    out.sort_by(BasisLabel::excitation_order);
    Ok(out)
}

/// Signed currents `I_{m->n} = 4 pi Im(conj(psi_n) H_nm psi_m)` between the
/// tracked states, in the frame the trajectory was propagated in.
pub fn population_currents(
    family: ModelFamily<'_>,
    traj: &Trajectory,
    tracked: &[BasisLabel],
) -> Result<CurrentRecord> {
    let states =
        traj.states.as_ref().ok_or_else(|| Error::InvalidParameter("trajectory has no recorded states".into()))?;
    let idx: Vec<usize> = tracked
        .iter()
        .map(|l| {
            traj.labels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| Error::InvalidParameter(format!("state {l} outside the truncated basis")))
        })
        .collect::<Result<_>>()?;
    let steps = traj.steps();
    let pairs: Vec<(usize, usize)> =
        (0..tracked.len()).flat_map(|m| (m + 1..tracked.len()).map(move |n| (m, n))).collect();
    let mut hams = StepHamiltonians::new(family, &traj.schedule, traj.frame);
    let flow = |h: &crate::linalg::HermitianOperator, psi: &[C64], m: usize, n: usize| {
        2.0 * TAU * (psi[n].conj() * h.matrix()[(n, m)] * psi[m]).im
    };
    let inflow = |h: &crate::linalg::HermitianOperator, psi: &[C64], n: usize| {
        let row = h.matrix().row(n);
        let hpsi: C64 = row.iter().zip(psi).map(|(a, b)| a * b).sum();
        2.0 * TAU * (psi[n].conj() * hpsi).im
    };

    let populations: Vec<Vec<f64>> =
        states.iter().map(|psi| idx.iter().map(|&i| psi[i].norm_sqr()).collect()).collect();
    let mut currents = Vec::with_capacity(steps);
    let mut right = Vec::with_capacity(steps);
    let mut left = Vec::with_capacity(steps);
    let mut last: Option<(f64, f64, f64, std::sync::Arc<crate::linalg::HermitianOperator>)> = None;
    for k in 0..steps {
        let key = (traj.schedule.flux[k], traj.schedule.amp[k], traj.schedule.drive_phase(k, traj.frame));
        let h = match &last {
            Some((f, a, t, h)) if (*f, *a, *t) == key => h.clone(),
            _ => {
                let h =
                    std::sync::Arc::new(hams.dense(k).map_err(|e| Error::StepFailed { step: k, source: Box::new(e) })?);
                last = Some((key.0, key.1, key.2, h.clone()));
                h
            }
        };
        let psi = &states[k];
        currents.push(pairs.iter().map(|&(m, n)| flow(&h, psi, idx[m], idx[n])).collect::<Vec<f64>>());
        right.push(idx.iter().map(|&n| inflow(&h, psi, n)).collect::<Vec<f64>>());
        left.push(idx.iter().map(|&n| inflow(&h, &states[k + 1], n)).collect::<Vec<f64>>());
    }
    let mut net_inflow = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let row = match (k.checked_sub(1).map(|j| &left[j]), right.get(k)) {
            (Some(l), Some(r)) => l.iter().zip(r).map(|(a, b)| 0.5 * (a + b)).collect(),
            (Some(l), None) => l.clone(),
            (None, Some(r)) => r.clone(),
            (None, None) => vec![0.0; tracked.len()],
        };
        net_inflow.push(row);
    }
    Ok(CurrentRecord {
        times: traj.times.clone(),
        dt: traj.schedule.dt,
        tracked: tracked.to_vec(),
        populations,
        pairs,
        currents,
        net_inflow,
    })
}
