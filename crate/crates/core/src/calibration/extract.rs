use serde::{Deserialize, Serialize};

use super::assign::{assign_dressed_states, AssignmentMap};
use crate::device::{effective_matrix, BasisLabel, EffectivePoint, ModelHamiltonian, PerQubit};
use crate::error::{Error, Result};
use crate::linalg::{eigh, lowdin_orthonormalize, ComplexMatrix, HermitianOperator, Spectrum};

/// Dressed computational structure in the ordered basis `|00>, |01>, |10>, |11>`.
#[derive(Debug, Clone)]
pub struct ProjectedHamiltonian {
    pub h4: HermitianOperator,
    /// Assigned dressed energies, relative to the dressed ground state.
    pub energies: [f64; 4],
}

/// Restricts the assigned eigenvectors to computational coordinates,
/// orthonormalizes them symmetrically and forms `W diag(E) W^dagger`.
pub fn project_computational(
    spec: &Spectrum,
    amap: &AssignmentMap,
    labels: &[BasisLabel],
) -> Result<ProjectedHamiltonian> {
    let rows: Vec<usize> = BasisLabel::COMPUTATIONAL
        .iter()
        .map(|l| {
            labels.iter().position(|x| x == l).ok_or_else(|| Error::InvalidParameter(format!("label {l} missing")))
        })
        .collect::<Result<_>>()?;
    let cols = amap.indices();
    let v = spec.eigenvectors.submatrix(&rows, &cols);
    let w = lowdin_orthonormalize(&v)?;
    let ground = spec.eigenvalues[0];
    let energies = amap.energies(spec).map(|e| e - ground);
    let mut scaled = w.clone();
    for i in 0..4 {
        for (k, &e) in energies.iter().enumerate() {
            scaled[(i, k)] *= e;
        }
    }
    let h4 = HermitianOperator::symmetrized(scaled.matmul(&w.adjoint()))?;
    Ok(ProjectedHamiltonian { h4, energies })
}

/// Static two-qubit quantities at one flux point. Energies in GHz relative to
/// the dressed ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticExtraction {
    pub phi: f64,
    pub omega_tilde: PerQubit<f64>,
    pub j_coupling: f64,
    pub zeta: f64,
    /// `E00, E01, E10, E11`.
    pub energies: [f64; 4],
}

impl StaticExtraction {
    pub fn effective_point(&self) -> EffectivePoint {
        EffectivePoint { omega_tilde: self.omega_tilde, j_coupling: self.j_coupling, zeta: self.zeta }
    }
}

pub fn zeta_of(energies: &[f64; 4]) -> f64 {
    energies[0] - energies[1] - energies[2] + energies[3]
}

/// `zeta = E00 - E01 - E10 + E11`, `J = Re<01|h4|10>/2`, and dressed
/// frequencies from the diagonal of `h4`, `<1_j|h4|1_j> - <00|h4|00> + zeta/2`.
///
/// Taking the frequencies from the diagonal rather than from the dressed
/// energies makes the four-level model built from the result reproduce `h4`
/// exactly, including when `J` is large.
pub fn extract_static_quantities(phi: f64, projected: &ProjectedHamiltonian) -> StaticExtraction {
    let h = projected.h4.matrix();
    let zeta = zeta_of(&projected.energies);
    let base = h[(0, 0)].re;
    StaticExtraction {
        phi,
        omega_tilde: PerQubit::new(h[(2, 2)].re - base + 0.5 * zeta, h[(1, 1)].re - base + 0.5 * zeta),
        j_coupling: 0.5 * h[(1, 2)].re,
        zeta,
        energies: projected.energies,
    }
}

/// Full static analysis of one model Hamiltonian.
#[derive(Debug, Clone)]
pub struct StaticPoint {
    pub extraction: StaticExtraction,
    pub assignment: AssignmentMap,
    pub projected: ProjectedHamiltonian,
}

pub fn analyze_model(model: &ModelHamiltonian) -> Result<StaticPoint> {
    let spec = eigh(&model.drift)?;
    analyze_spectrum(&spec, &model.labels, model.flux)
}

pub fn analyze_spectrum(spec: &Spectrum, labels: &[BasisLabel], phi: f64) -> Result<StaticPoint> {
    let assignment = assign_dressed_states(spec, labels, phi)?;
    let projected = project_computational(spec, &assignment, labels)?;
    let extraction = extract_static_quantities(phi, &projected);
    Ok(StaticPoint { extraction, assignment, projected })
}

/// Builds the four-level Hamiltonian from `point` and extracts it again.
///
/// In the four-level space the orthonormalized dressed basis spans
/// everything, so `h4` is the Hamiltonian itself; the `|01>, |10>` energies
/// only enter through their sum, which is the trace of that block.
pub fn reextract_effective(point: &StaticExtraction) -> StaticExtraction {
    let h = effective_matrix(&point.effective_point());
    let block = ComplexMatrix::from_fn(2, 2, |i, j| h[(i + 1, j + 1)]);
    let tr = block.trace().re;
    let det = (block[(0, 0)] * block[(1, 1)] - block[(0, 1)] * block[(1, 0)]).re;
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let (lo, hi) = (0.5 * tr - disc, 0.5 * tr + disc);
    // The dressed state continuously connected to the lower diagonal entry
    // takes the lower eigenvalue.
    let (e01, e10) = if h[(1, 1)].re <= h[(2, 2)].re { (lo, hi) } else { (hi, lo) };
    let raw = [h[(0, 0)].re, e01, e10, h[(3, 3)].re];
    let ground = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = ground;
    let mut shifted = h.clone();
    shifted.add_to_diagonal(-shift);
    let projected = ProjectedHamiltonian {
        h4: HermitianOperator::new(shifted).expect("four-level model is hermitian"),
        energies: raw.map(|e| e - shift),
    };
    extract_static_quantities(point.phi, &projected)
}
