//! Model Hamiltonians of the two-transmon bus device.

mod params;
mod transmon;

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use params::{DeviceParams, PerQubit, Qubit, TruncationConfig};
pub use transmon::{
    ej_of_flux, transmon_charge_hamiltonian, transmon_levels, truncate_to_eigenbasis, ChargeBasisTransmon,
    TruncatedTransmon,
};

use crate::calibration::{DuffingCurves, EffectiveCurves};
use crate::error::{Error, Result};
use crate::linalg::sparse::{lowest_eigenvalue, CsrMatrix};
use crate::linalg::{eigh, embed_operator, ComplexMatrix, HermitianOperator};

/// Largest dimension for which the ground energy is found by full
/// diagonalization rather than Lanczos.
const DENSE_GROUND_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Effective,
    Duffing,
    Circuit,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Effective, ModelKind::Duffing, ModelKind::Circuit];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Effective => "effective",
            ModelKind::Duffing => "duffing",
            ModelKind::Circuit => "circuit",
        }
    }

    pub fn is_multilevel(self) -> bool {
        self != ModelKind::Effective
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Product state `|q1, c, q0>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisLabel {
    pub q1: usize,
    pub c: usize,
    pub q0: usize,
}

impl BasisLabel {
    pub const fn new(q1: usize, c: usize, q0: usize) -> Self {
        Self { q1, c, q0 }
    }

    /// The four computational states `|00>, |01>, |10>, |11>` as `|q1 q0>`.
    pub const COMPUTATIONAL: [BasisLabel; 4] =
        [BasisLabel::new(0, 0, 0), BasisLabel::new(0, 0, 1), BasisLabel::new(1, 0, 0), BasisLabel::new(1, 0, 1)];

    pub fn excitations(&self) -> usize {
        self.q1 + self.c + self.q0
    }

    pub fn level(&self, j: Qubit) -> usize {
        match j {
            Qubit::Q1 => self.q1,
            Qubit::Q0 => self.q0,
        }
    }

    /// Flat index for subsystem dimensions `dims`, `q0` least significant.
    pub fn index(&self, dims: [usize; 3]) -> Option<usize> {
        (self.q1 < dims[0] && self.c < dims[1] && self.q0 < dims[2])
            .then(|| (self.q1 * dims[1] + self.c) * dims[2] + self.q0)
    }

    /// Ordering by total excitation number, then lexicographic.
    pub fn excitation_order(a: &BasisLabel, b: &BasisLabel) -> std::cmp::Ordering {
        a.excitations().cmp(&b.excitations()).then(a.cmp(b))
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{},{}>", self.q1, self.c, self.q0)
    }
}

pub fn product_labels(dims: [usize; 3]) -> Vec<BasisLabel> {
    let mut out = Vec::with_capacity(dims.iter().product());
    for q1 in 0..dims[0] {
        for c in 0..dims[1] {
            for q0 in 0..dims[2] {
                out.push(BasisLabel::new(q1, c, q0));
            }
        }
    }
    out
}

/// Parameters of the four-level model at one flux point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectivePoint {
    pub omega_tilde: PerQubit<f64>,
    pub j_coupling: f64,
    pub zeta: f64,
}

/// Parameters of the Duffing model at one flux point; bus and couplings come
/// from [`DeviceParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuffingPoint {
    pub omega: PerQubit<f64>,
    pub alpha: PerQubit<f64>,
}

/// Fitted curves needed by the reduced models.
#[derive(Debug, Clone, Copy)]
pub enum Curves<'a> {
    None,
    Effective(&'a EffectiveCurves),
    Duffing(&'a DuffingCurves),
    Both(&'a EffectiveCurves, &'a DuffingCurves),
}

impl<'a> Curves<'a> {
    fn effective(&self) -> Option<&'a EffectiveCurves> {
        match *self {
            Curves::Effective(e) | Curves::Both(e, _) => Some(e),
            _ => None,
        }
    }

    fn duffing(&self) -> Option<&'a DuffingCurves> {
        match *self {
            Curves::Duffing(d) | Curves::Both(_, d) => Some(d),
            _ => None,
        }
    }
}

/// Drift Hamiltonian of one model at one flux, shifted so the dressed ground
/// energy is zero.
#[derive(Debug, Clone)]
pub struct ModelHamiltonian {
    pub kind: ModelKind,
    pub drift: HermitianOperator,
    pub dims: [usize; 3],
    pub labels: Vec<BasisLabel>,
    pub flux: f64,
    /// Energy subtracted from the unshifted drift.
    pub ground_shift: f64,
    lowering: PerQubit<ComplexMatrix>,
}

impl ModelHamiltonian {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn index_of(&self, label: BasisLabel) -> Option<usize> {
        label.index(self.dims)
    }

    /// Flat indices of `|00>, |01>, |10>, |11>`.
    pub fn computational_indices(&self) -> [usize; 4] {
        BasisLabel::COMPUTATIONAL.map(|l| l.index(self.dims).expect("computational label in range"))
    }

    /// Single-mode lowering operator of qubit `j` before embedding.
    pub fn local_lowering(&self, j: Qubit) -> &ComplexMatrix {
        self.lowering.get(j)
    }

    /// Total excitation number of every basis state, as a diagonal.
    pub fn excitation_numbers(&self) -> Vec<f64> {
        self.labels.iter().map(|l| l.excitations() as f64).collect()
    }
}

/// Lowering and raising operators of one drive line.
#[derive(Debug, Clone)]
pub struct DriveOperator {
    pub lowering: ComplexMatrix,
    pub raising: ComplexMatrix,
}

impl DriveOperator {
    /// `-A/2 (e^{-i theta} a^dagger + e^{i theta} a)`.
    pub fn hamiltonian(&self, amp: f64, theta: f64) -> HermitianOperator {
        let mut m = self.raising.scale(C64::from_polar(-0.5 * amp, -theta));
        m.add_scaled(&self.lowering, C64::from_polar(-0.5 * amp, theta));
        HermitianOperator::symmetrized(m).expect("drive operator is hermitian by construction")
    }
}

/// Embedded lowering operator for the drive on qubit `j`.
pub fn drive_operator(model: &ModelHamiltonian, j: Qubit) -> DriveOperator {
    let lowering = embed_operator(model.local_lowering(j), j.slot(), &model.dims)
        .expect("lowering operator matches its subsystem");
    let raising = lowering.adjoint();
    DriveOperator { lowering, raising }
}

fn boson_lowering(n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| if j == i + 1 { C64::new((j as f64).sqrt(), 0.0) } else { C64::default() })
}

fn kron3(a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b).kron(c)
}

/// Four-level Hamiltonian with `Z = |1><1| - |0><0|` on each qubit.
pub fn effective_matrix(p: &EffectivePoint) -> ComplexMatrix {
    let z = |level: usize| if level == 1 { 1.0 } else { -1.0 };
    let mut h = ComplexMatrix::zeros(4, 4);
    for (i, label) in BasisLabel::COMPUTATIONAL.iter().enumerate() {
        let (z1, z0) = (z(label.q1), z(label.q0));
        h[(i, i)] = C64::new(0.5 * p.omega_tilde.q1 * z1 + 0.5 * p.omega_tilde.q0 * z0 + 0.25 * p.zeta * z1 * z0, 0.0);
    }
    // XX + YY = 2 (|01><10| + |10><01|)
    h[(1, 2)] = C64::new(2.0 * p.j_coupling, 0.0);
    h[(2, 1)] = C64::new(2.0 * p.j_coupling, 0.0);
    h
}

pub fn effective_hamiltonian(p: &EffectivePoint, phi: f64) -> Result<ModelHamiltonian> {
    let dims = [2, 1, 2];
    let a = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    finish(ModelKind::Effective, effective_matrix(p), dims, phi, PerQubit::new(a.clone(), a))
}

pub fn duffing_hamiltonian(
    params: &DeviceParams,
    p: &DuffingPoint,
    dims: [usize; 3],
    phi: f64,
) -> Result<ModelHamiltonian> {
    let [n1, nc, n0] = dims;
    let level = |k: usize, omega: f64, alpha: f64| {
        let k = k as f64;
        omega * k + 0.5 * alpha * k * (k - 1.0)
    };
    let at = |k1: usize, kc: usize, k0: usize| (k1 * nc + kc) * n0 + k0;
    // Diagonal plus the two excitation-exchange terms, filled directly.
    let mut h = ComplexMatrix::zeros(n1 * nc * n0, n1 * nc * n0);
    for k1 in 0..n1 {
        for kc in 0..nc {
            for k0 in 0..n0 {
                let i = at(k1, kc, k0);
                let e = level(k1, p.omega.q1, p.alpha.q1)
                    + level(kc, params.omega_c, 0.0)
                    + level(k0, p.omega.q0, p.alpha.q0);
                h[(i, i)] = C64::new(e, 0.0);
                if kc == 0 {
                    continue;
                }
                if k1 + 1 < n1 {
                    let j = at(k1 + 1, kc - 1, k0);
                    let v = C64::new(params.g.q1 * ((k1 + 1) as f64 * kc as f64).sqrt(), 0.0);
                    h[(j, i)] = v;
                    h[(i, j)] = v;
                }
                if k0 + 1 < n0 {
                    let j = at(k1, kc - 1, k0 + 1);
                    let v = C64::new(params.g.q0 * (kc as f64 * (k0 + 1) as f64).sqrt(), 0.0);
                    h[(j, i)] = v;
                    h[(i, j)] = v;
                }
            }
        }
    }
    let (a1, a0) = (boson_lowering(n1), boson_lowering(n0));
    finish(ModelKind::Duffing, h, dims, phi, PerQubit::new(a1, a0))
}

/// Charge-basis model: each transmon truncated to `n_eq` eigenstates, a
/// harmonic bus on `n_ec` levels, coupled through the normalized charge
/// operators `g_j n_j/|<0|n_j|1>| (a_c + a_c^dagger)`.
pub fn circuit_hamiltonian(params: &DeviceParams, trunc: &TruncationConfig, phi: f64) -> Result<ModelHamiltonian> {
    let t1 = transmon_levels(params, Qubit::Q1, phi, trunc.n_q, trunc.n_eq)?;
    let t0 = transmon_levels(params, Qubit::Q0, 0.0, trunc.n_q, trunc.n_eq)?;
    circuit_from_transmons(params, &t1, &t0, trunc.n_ec, phi)
}

pub fn circuit_from_transmons(
    params: &DeviceParams,
    t1: &TruncatedTransmon,
    t0: &TruncatedTransmon,
    n_ec: usize,
    phi: f64,
) -> Result<ModelHamiltonian> {
    let dims = [t1.dim(), n_ec, t0.dim()];
    let (i1, ic, i0) =
        (ComplexMatrix::identity(dims[0]), ComplexMatrix::identity(n_ec), ComplexMatrix::identity(dims[2]));
    let ac = boson_lowering(n_ec);
    let quadrature = ac.add(&ac.adjoint());
    let bus: Vec<f64> = (0..n_ec).map(|k| params.omega_c * k as f64).collect();

    let mut h = kron3(&ComplexMatrix::from_real_diagonal(&t1.energies), &ic, &i0);
    h.add_scaled(&kron3(&i1, &ComplexMatrix::from_real_diagonal(&bus), &i0), C64::new(1.0, 0.0));
    h.add_scaled(&kron3(&i1, &ic, &ComplexMatrix::from_real_diagonal(&t0.energies)), C64::new(1.0, 0.0));
    h.add_scaled(&kron3(&t1.normalized_charge(), &quadrature, &i0), C64::new(params.g.q1, 0.0));
    h.add_scaled(&kron3(&i1, &quadrature, &t0.normalized_charge()), C64::new(params.g.q0, 0.0));
    finish(ModelKind::Circuit, h, dims, phi, PerQubit::new(t1.lowering(), t0.lowering()))
}

fn finish(
    kind: ModelKind,
    h: ComplexMatrix,
    dims: [usize; 3],
    phi: f64,
    lowering: PerQubit<ComplexMatrix>,
) -> Result<ModelHamiltonian> {
    let mut drift = HermitianOperator::symmetrized(h)?;
    let ground = ground_energy(&drift)?;
    drift.add_to_diagonal(-ground);
    Ok(ModelHamiltonian { kind, drift, dims, labels: product_labels(dims), flux: phi, ground_shift: ground, lowering })
}

/// Lowest eigenvalue, by full diagonalization for small operators and by
/// Lanczos otherwise.
pub fn ground_energy(h: &HermitianOperator) -> Result<f64> {
    if h.dim() <= DENSE_GROUND_LIMIT {
        Ok(eigh(h)?.eigenvalues[0])
    } else {
        lowest_eigenvalue(&CsrMatrix::from_dense(h.matrix(), 0.0))
    }
}

/// Drift Hamiltonian of `kind` at flux `phi`.
pub fn build_hamiltonian(
    kind: ModelKind,
    params: &DeviceParams,
    curves: Curves<'_>,
    trunc: &TruncationConfig,
    phi: f64,
) -> Result<ModelHamiltonian> {
    match kind {
        ModelKind::Effective => {
            let c = curves.effective().ok_or_else(|| Error::ModelNotCalibrated(kind.name().into()))?;
            effective_hamiltonian(&c.at(phi), phi)
        }
        ModelKind::Duffing => {
            let c = curves.duffing().ok_or_else(|| Error::ModelNotCalibrated(kind.name().into()))?;
            let nd = trunc.n_duff;
            duffing_hamiltonian(params, &c.at(phi), [nd, trunc.duffing_coupler_levels(), nd], phi)
        }
        ModelKind::Circuit => circuit_hamiltonian(params, trunc, phi),
    }
}
