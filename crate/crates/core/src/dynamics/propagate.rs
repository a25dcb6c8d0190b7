use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::schedule::{DriveFrame, PulseSchedule};
use crate::calibration::{assign_dressed_states, AssignmentMap};
use crate::device::{
    build_hamiltonian, drive_operator, BasisLabel, Curves, DeviceParams, DriveOperator, ModelHamiltonian, ModelKind,
    TruncationConfig,
};
use crate::error::{Error, Result};
use crate::linalg::sparse::{expm_action, CsrMatrix, PatternedSum};
use crate::linalg::{eigh, vec_norm, ComplexMatrix, HermitianOperator, Spectrum};

/// Largest dimension propagated by a dense eigendecomposition per step.
pub const DENSE_STEP_LIMIT: usize = 64;
/// Constant stretches at least this long reuse one eigendecomposition even
/// above [`DENSE_STEP_LIMIT`].
const EIGEN_STRETCH_MIN: usize = 64;
const CACHE_LIMIT: usize = 8;

/// A model kind together with everything needed to build it at any flux.
#[derive(Debug, Clone, Copy)]
pub struct ModelFamily<'a> {
    pub kind: ModelKind,
    pub params: &'a DeviceParams,
    pub curves: Curves<'a>,
    pub trunc: &'a TruncationConfig,
}

impl<'a> ModelFamily<'a> {
    pub fn new(kind: ModelKind, params: &'a DeviceParams, curves: Curves<'a>, trunc: &'a TruncationConfig) -> Self {
        Self { kind, params, curves, trunc }
    }

    pub fn build(&self, phi: f64) -> Result<ModelHamiltonian> {
        build_hamiltonian(self.kind, self.params, self.curves, self.trunc, phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepMethod {
    /// Eigendecomposition for small models and long constant stretches,
    /// Taylor action otherwise.
    Auto,
    Dense,
    Taylor,
}

#[derive(Debug, Clone, Copy)]
pub struct PropagationOptions {
    pub frame: DriveFrame,
    pub method: StepMethod,
    /// Keep the full state after every step.
    pub record_states: bool,
    /// Measure `|U^dagger U - I|` wherever a propagator is formed.
    pub check_unitarity: bool,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self { frame: DriveFrame::Lab, method: StepMethod::Auto, record_states: false, check_unitarity: true }
    }
}

/// Dressed computational states at the idle flux, held fixed during a run.
#[derive(Debug, Clone)]
pub struct ComputationalFrame {
    /// Columns are the dressed `|00>, |01>, |10>, |11>` states.
    pub vectors: ComplexMatrix,
    pub assignment: AssignmentMap,
    pub energies: [f64; 4],
    /// Largest eigenvalue magnitude of the idle drift.
    pub max_energy: f64,
}

impl ComputationalFrame {
    pub fn at_idle(model: &ModelHamiltonian) -> Result<Self> {
        let spec = eigh(&model.drift)?;
        Self::from_spectrum(&spec, model)
    }

    fn from_spectrum(spec: &Spectrum, model: &ModelHamiltonian) -> Result<Self> {
        let assignment = assign_dressed_states(spec, &model.labels, model.flux)?;
        let all: Vec<usize> = (0..spec.dim()).collect();
        let vectors = spec.eigenvectors.submatrix(&all, &assignment.indices());
        let max_energy = spec.eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        Ok(Self { vectors, energies: assignment.energies(spec), assignment, max_energy })
    }

    pub fn dim(&self) -> usize {
        self.vectors.rows()
    }

    /// Dressed computational state `i` in `|00>, |01>, |10>, |11>` order.
    pub fn state(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i)
    }

    /// Equal superposition of the four dressed computational states.
    pub fn plus_plus(&self) -> Vec<C64> {
        (0..self.dim()).map(|r| (0..4).map(|i| self.vectors[(r, i)]).sum::<C64>() * 0.5).collect()
    }

    pub fn amplitudes(&self, psi: &[C64]) -> [C64; 4] {
        let a = self.vectors.adjoint_matvec(psi);
        [a[0], a[1], a[2], a[3]]
    }
}

/// Unit vector on one bare product state.
pub fn bare_state(labels: &[BasisLabel], label: BasisLabel) -> Result<Vec<C64>> {
    let i = labels
        .iter()
        .position(|&l| l == label)
        .ok_or_else(|| Error::InvalidParameter(format!("state {label} outside the truncated basis")))?;
    let mut v = vec![C64::new(0.0, 0.0); labels.len()];
    v[i] = C64::new(1.0, 0.0);
    Ok(v)
}

/// State history of one propagation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub kind: ModelKind,
    pub dims: [usize; 3],
    pub labels: Vec<BasisLabel>,
    pub frame: DriveFrame,
    pub schedule: PulseSchedule,
    /// `k dt` for `k = 0..=K`.
    pub times: Vec<f64>,
    /// Projections on the idle dressed computational states at each time.
    pub amplitudes: Vec<[C64; 4]>,
    pub norms: Vec<f64>,
    pub states: Option<Vec<Vec<C64>>>,
    pub final_state: Vec<C64>,
    /// Largest `|U^dagger U - I|` over the propagators formed, 0 if none.
    pub max_unitarity_defect: f64,
    pub computational: ComputationalFrame,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn max_norm_defect(&self) -> f64 {
        self.norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }
}

struct FluxEntry {
    model: ModelHamiltonian,
    drive: Option<DriveOperator>,
    /// Drift plus frame shift, with the drive pieces, on one pattern.
    pattern: Option<PatternedSum>,
}

/// Builds per-step Hamiltonians with a small cache keyed on flux.
pub struct StepHamiltonians<'a> {
    family: ModelFamily<'a>,
    schedule: &'a PulseSchedule,
    frame: DriveFrame,
    cache: HashMap<u64, Arc<FluxEntry>>,
    limit: usize,
}

impl<'a> StepHamiltonians<'a> {
    pub fn new(family: ModelFamily<'a>, schedule: &'a PulseSchedule, frame: DriveFrame) -> Self {
        Self { family, schedule, frame, cache: HashMap::new(), limit: CACHE_LIMIT }
    }

    /// Builds the model at every distinct flux sample up front and keeps all
    /// of them.
    pub fn prebuilt(family: ModelFamily<'a>, schedule: &'a PulseSchedule, frame: DriveFrame) -> Result<Self> {
        let mut hams = Self { limit: usize::MAX, ..Self::new(family, schedule, frame) };
        for &phi in &schedule.flux {
            hams.entry(phi)?;
        }
        Ok(hams)
    }

    pub fn frame(&self) -> DriveFrame {
        self.frame
    }

    fn entry(&mut self, phi: f64) -> Result<Arc<FluxEntry>> {
        if let Some(e) = self.cache.get(&phi.to_bits()) {
            return Ok(e.clone());
        }
        if self.cache.len() >= self.limit {
            self.cache.clear();
        }
        let model = self.family.build(phi)?;
        let drive = self.schedule.target.map(|j| drive_operator(&model, j));
        let entry = Arc::new(FluxEntry { model, drive, pattern: None });
        self.cache.insert(phi.to_bits(), entry.clone());
        Ok(entry)
    }

    fn static_part(&self, model: &ModelHamiltonian) -> HermitianOperator {
        let mut h = model.drift.clone();
        if self.frame == DriveFrame::Envelope && self.schedule.carrier_freq != 0.0 {
            let f = self.schedule.carrier_freq;
            let shift: Vec<f64> = model.excitation_numbers().iter().map(|n| -f * n).collect();
            h = h.add(&HermitianOperator::from_real_diagonal(&shift));
        }
        h
    }

    fn drive_coefficients(&self, k: usize) -> (C64, C64) {
        let amp = match self.frame {
            DriveFrame::Lab => self.schedule.amp[k] / carrier_attenuation(self.schedule.carrier_freq, self.schedule.dt),
            DriveFrame::Envelope => self.schedule.amp[k],
        };
        let theta = self.schedule.drive_phase(k, self.frame);
        (C64::from_polar(-0.5 * amp, -theta), C64::from_polar(-0.5 * amp, theta))
    }

    /// Dense Hamiltonian of step `k`.
    pub fn dense(&mut self, k: usize) -> Result<HermitianOperator> {
        let entry = self.entry(self.schedule.flux[k])?;
        let mut h = self.static_part(&entry.model).into_matrix();
        if let (Some(d), true) = (&entry.drive, self.schedule.amp[k] != 0.0) {
            let (up, down) = self.drive_coefficients(k);
            h.add_scaled(&d.raising, up);
            h.add_scaled(&d.lowering, down);
        }
        HermitianOperator::symmetrized(h)
    }

    /// Sparse Hamiltonian of step `k`.
    pub fn sparse(&mut self, k: usize) -> Result<CsrMatrix> {
        let phi = self.schedule.flux[k];
        let mut entry = self.entry(phi)?;
        if entry.drive.is_none() || self.schedule.amp[k] == 0.0 {
            return Ok(CsrMatrix::from_dense(self.static_part(&entry.model).matrix(), 0.0));
        }
        if entry.pattern.is_none() {
            let base = self.static_part(&entry.model).into_matrix();
            let d = entry.drive.as_ref().expect("checked above");
            let pattern = PatternedSum::new(&[&base, &d.raising, &d.lowering], 0.0);
            let updated = FluxEntry { model: entry.model.clone(), drive: entry.drive.clone(), pattern: Some(pattern) };
            entry = Arc::new(updated);
            self.cache.insert(phi.to_bits(), entry.clone());
        }
        let (up, down) = self.drive_coefficients(k);
        Ok(entry.pattern.as_ref().expect("just built").assemble(&[C64::new(1.0, 0.0), up, down]))
    }

    pub fn model(&mut self, k: usize) -> Result<ModelHamiltonian> {
        Ok(self.entry(self.schedule.flux[k])?.model.clone())
    }
}

/// `sin(x)/x` with `x = pi f dt`: the attenuation a piecewise-constant step
/// imposes on a signal at frequency `f`. Lab-frame drive samples are divided
/// by it so the resonant Rabi rate does not depend on `dt` at leading order.
pub fn carrier_attenuation(freq: f64, dt: f64) -> f64 {
    let x = std::f64::consts::PI * freq * dt;
    if x.abs() < 1e-8 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Maximal runs of steps sharing one Hamiltonian.
fn constant_stretches(schedule: &PulseSchedule, frame: DriveFrame) -> Vec<(usize, usize)> {
    let key = |k: usize| {
        let a = schedule.amp[k];
        let varying = a != 0.0 && frame == DriveFrame::Lab;
        (schedule.flux[k].to_bits(), a.to_bits(), if varying { Some(k) } else { None })
    };
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=schedule.steps() {
        if k == schedule.steps() || key(k) != key(start) {
            out.push((start, k));
            start = k;
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Backward,
}

struct Recorder<'f> {
    frame: &'f ComputationalFrame,
    amplitudes: Vec<[C64; 4]>,
    norms: Vec<f64>,
    states: Option<Vec<Vec<C64>>>,
}

impl Recorder<'_> {
    fn push(&mut self, psi: &[C64]) {
        self.amplitudes.push(self.frame.amplitudes(psi));
        self.norms.push(vec_norm(psi));
        if let Some(s) = self.states.as_mut() {
            s.push(psi.to_vec());
        }
    }
}

fn use_eigen(method: StepMethod, dim: usize, len: usize) -> bool {
    match method {
        StepMethod::Dense => true,
        StepMethod::Taylor => false,
        StepMethod::Auto => dim <= DENSE_STEP_LIMIT || len >= EIGEN_STRETCH_MIN,
    }
}

fn drive_step(
    hams: &mut StepHamiltonians<'_>,
    opts: &PropagationOptions,
    dim: usize,
    k: usize,
    dt: f64,
    psi: &[C64],
    defect: &mut f64,
) -> Result<Vec<C64>> {
    if use_eigen(opts.method, dim, 1) {
        let spec = eigh(&hams.dense(k)?)?;
        let u = spec.propagator(dt);
        if opts.check_unitarity {
            *defect = defect.max(u.unitarity_defect());
        }
        Ok(u.matvec(psi))
    } else {
        expm_action(&hams.sparse(k)?, dt, psi)
    }
}

fn run(
    hams: &mut StepHamiltonians<'_>,
    psi0: &[C64],
    opts: &PropagationOptions,
    direction: Direction,
    recorder: Option<&mut Recorder<'_>>,
) -> Result<(Vec<C64>, f64)> {
    let schedule = hams.schedule;
    let dim = psi0.len();
    let mut psi = psi0.to_vec();
    let mut defect = 0.0f64;
    let sign = if direction == Direction::Forward { 1.0 } else { -1.0 };
    let dt = sign * schedule.dt;
    let mut stretches = constant_stretches(schedule, opts.frame);
    if direction == Direction::Backward {
        stretches.reverse();
    }
    let mut recorder = recorder;

    for (start, end) in stretches {
        let len = end - start;
        let wrap = |e: Error| Error::StepFailed { step: start, source: Box::new(e) };
        if len > 1 && use_eigen(opts.method, dim, len) {
            let h = hams.dense(start).map_err(wrap)?;
            let spec = eigh(&h).map_err(wrap)?;
            let v = &spec.eigenvectors;
            if opts.check_unitarity {
                let d =
                    if dim <= DENSE_STEP_LIMIT { spec.propagator(dt).unitarity_defect() } else { v.unitarity_defect() };
                defect = defect.max(d);
            }
            let phases: Vec<C64> =
                spec.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -std::f64::consts::TAU * dt * e)).collect();
            let mut c = v.adjoint_matvec(&psi);
            match recorder.as_deref_mut() {
                Some(rec) if rec.states.is_none() => {
                    // Project the computational frame once; each step is then O(dim).
                    let m = rec.frame.vectors.adjoint().matmul(v);
                    for _ in 0..len {
                        for (x, p) in c.iter_mut().zip(&phases) {
                            *x *= p;
                        }
                        let a = m.matvec(&c);
                        rec.amplitudes.push([a[0], a[1], a[2], a[3]]);
                        rec.norms.push(vec_norm(&c));
                    }
                    psi = v.matvec(&c);
                }
                Some(rec) => {
                    for _ in 0..len {
                        for (x, p) in c.iter_mut().zip(&phases) {
                            *x *= p;
                        }
                        psi = v.matvec(&c);
                        rec.push(&psi);
                    }
                }
                None => {
                    for (x, &e) in c.iter_mut().zip(&spec.eigenvalues) {
                        *x *= C64::from_polar(1.0, -std::f64::consts::TAU * dt * len as f64 * e);
                    }
                    psi = v.matvec(&c);
                }
            }
        } else {
            let order: Box<dyn Iterator<Item = usize>> =
                if direction == Direction::Forward { Box::new(start..end) } else { Box::new((start..end).rev()) };
            for k in order {
                psi = drive_step(hams, opts, dim, k, dt, &psi, &mut defect)
                    .map_err(|e| Error::StepFailed { step: k, source: Box::new(e) })?;
                if let Some(rec) = recorder.as_deref_mut() {
                    rec.push(&psi);
                }
            }
        }
    }
    Ok((psi, defect))
}

/// Piecewise-constant propagation of `psi0` through `schedule`.
pub fn propagate(
    family: ModelFamily<'_>,
    schedule: &PulseSchedule,
    psi0: &[C64],
    opts: &PropagationOptions,
) -> Result<Trajectory> {
    let idle = family.build(schedule.idle_flux)?;
    let frame = ComputationalFrame::at_idle(&idle)?;
    propagate_in_frame(family, schedule, psi0, opts, frame)
}

/// As [`propagate`], with a precomputed computational frame.
pub fn propagate_in_frame(
    family: ModelFamily<'_>,
    schedule: &PulseSchedule,
    psi0: &[C64],
    opts: &PropagationOptions,
    frame: ComputationalFrame,
) -> Result<Trajectory> {
    let mut hams = StepHamiltonians::new(family, schedule, opts.frame);
    propagate_with(&mut hams, psi0, opts, frame)
}

/// Propagation through the schedule and models held by `hams`.
pub fn propagate_with(
    hams: &mut StepHamiltonians<'_>,
    psi0: &[C64],
    opts: &PropagationOptions,
    frame: ComputationalFrame,
) -> Result<Trajectory> {
    if hams.frame != opts.frame {
        return Err(Error::InvalidParameter("Hamiltonians were built for a different drive frame".into()));
    }
    let schedule = hams.schedule;
    let family = hams.family;
    let dim = frame.dim();
    if psi0.len() != dim {
        return Err(Error::DimensionMismatch(format!("state of length {} for a model of dimension {dim}", psi0.len())));
    }
    let n0 = vec_norm(psi0);
    if (n0 - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("initial state norm {n0} is not 1")));
    }
    let steps = schedule.steps();
    let mut recorder = Recorder {
        frame: &frame,
        amplitudes: Vec::with_capacity(steps + 1),
        norms: Vec::with_capacity(steps + 1),
        states: opts.record_states.then(|| Vec::with_capacity(steps + 1)),
    };
    recorder.push(psi0);
    let (final_state, defect) = run(hams, psi0, opts, Direction::Forward, Some(&mut recorder))?;
    let Recorder { amplitudes, norms, states, .. } = recorder;
    let idle = hams.entry(schedule.idle_flux)?;
    Ok(Trajectory {
        kind: family.kind,
        dims: idle.model.dims,
        labels: idle.model.labels.clone(),
        frame: opts.frame,
        schedule: schedule.clone(),
        times: (0..=steps).map(|k| schedule.time(k)).collect(),
        amplitudes,
        norms,
        states,
        final_state,
        max_unitarity_defect: defect,
        computational: frame,
    })
}

/// Applies `exp(+i 2 pi dt H[k])` for `k = K-1, ..., 0`, undoing a forward run.
pub fn propagate_backward(
    family: ModelFamily<'_>,
    schedule: &PulseSchedule,
    psi_end: &[C64],
    opts: &PropagationOptions,
) -> Result<Vec<C64>> {
    let mut hams = StepHamiltonians::new(family, schedule, opts.frame);
    Ok(run(&mut hams, psi_end, opts, Direction::Backward, None)?.0)
}
