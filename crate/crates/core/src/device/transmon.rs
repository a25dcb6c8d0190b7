use num_complex::Complex64 as C64;

use super::params::{DeviceParams, Qubit};
use crate::error::{Error, Result};
use crate::linalg::{eigh, ComplexMatrix, HermitianOperator};

/// `E_J(phi) = E_J,max sqrt(cos^2(pi phi) + d^2 sin^2(pi phi))`.
pub fn ej_of_flux(params: &DeviceParams, j: Qubit, phi: f64) -> f64 {
    let (s, c) = (std::f64::consts::PI * phi).sin_cos();
    let d = *params.d.get(j);
    params.ej_max.get(j) * (c * c + d * d * s * s).sqrt()
}

/// Transmon Hamiltonian in the charge basis together with its charge operator.
#[derive(Debug, Clone)]
pub struct ChargeBasisTransmon {
    pub hamiltonian: HermitianOperator,
    /// Diagonal charge-number operator with entries `-ncut..=ncut`.
    pub charge: ComplexMatrix,
}

/// `4 ec (n - n_g)^2 - ej/2 (|n><n+1| + h.c.)` on `n_q` charge states.
pub fn transmon_charge_hamiltonian(ec: f64, ej: f64, n_g: f64, n_q: usize) -> Result<ChargeBasisTransmon> {
    if n_q % 2 == 0 || n_q == 0 {
        return Err(Error::ChargeBasisNotSymmetric(n_q));
    }
    let ncut = (n_q / 2) as f64;
    let mut h = ComplexMatrix::zeros(n_q, n_q);
    let mut charge = ComplexMatrix::zeros(n_q, n_q);
    for i in 0..n_q {
        let n = i as f64 - ncut;
        h[(i, i)] = C64::new(4.0 * ec * (n - n_g).powi(2), 0.0);
        charge[(i, i)] = C64::new(n, 0.0);
        if i + 1 < n_q {
            h[(i, i + 1)] = C64::new(-0.5 * ej, 0.0);
            h[(i + 1, i)] = C64::new(-0.5 * ej, 0.0);
        }
    }
    Ok(ChargeBasisTransmon { hamiltonian: HermitianOperator::new(h)?, charge })
}

/// Lowest transmon eigenstates with the charge operator expressed in them.
#[derive(Debug, Clone)]
pub struct TruncatedTransmon {
    /// Level energies with the ground level at 0.
    pub energies: Vec<f64>,
    /// `V^dagger n V` on the kept levels.
    pub charge: ComplexMatrix,
}

impl TruncatedTransmon {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `|<0|n|1>|`, the scale that makes the qubit transition matrix element 1.
    pub fn charge_scale(&self) -> f64 {
        self.charge[(0, 1)].norm()
    }

    /// Charge operator divided by [`Self::charge_scale`].
    pub fn normalized_charge(&self) -> ComplexMatrix {
        self.charge.scale_real(1.0 / self.charge_scale())
    }

    /// Nearest-level part of the normalized charge operator above the
    /// diagonal, `a[k][k+1] = n[k][k+1] / |n[0][1]|`.
    pub fn lowering(&self) -> ComplexMatrix {
        let n = self.dim();
        let s = self.charge_scale();
        ComplexMatrix::from_fn(n, n, |i, j| if j == i + 1 { self.charge[(i, j)] / s } else { C64::default() })
    }
}

/// Diagonalizes `h`, keeps the lowest `n_eq` eigenstates and projects `n_hat`.
///
/// Eigenvector phases are chained so every `<k+1|n|k>` is real and
/// non-negative; this keeps the sign of charge matrix elements continuous in
/// flux.
pub fn truncate_to_eigenbasis(h: &HermitianOperator, n_hat: &ComplexMatrix, n_eq: usize) -> Result<TruncatedTransmon> {
    let n = h.dim();
    if n_eq == 0 || n_eq > n {
        return Err(Error::InvalidParameter(format!("cannot keep {n_eq} of {n} levels")));
    }
    if n_hat.rows() != n || !n_hat.is_square() {
        return Err(Error::DimensionMismatch("charge operator does not match hamiltonian".into()));
    }
    let spec = eigh(h)?;
    let keep: Vec<usize> = (0..n_eq).collect();
    let all: Vec<usize> = (0..n).collect();
    let mut v = spec.eigenvectors.submatrix(&all, &keep);
    let mut projected = v.adjoint().matmul(n_hat).matmul(&v);
    for k in 0..n_eq.saturating_sub(1) {
        let elem = projected[(k + 1, k)];
        if elem.norm() <= 1e-12 * n_hat.max_abs().max(1.0) {
            continue;
        }
        // Rotating column k+1 by conj(elem)/|elem| makes <k+1|n|k> real positive.
        let rot = elem.conj() / elem.norm();
        for i in 0..n {
            v[(i, k + 1)] *= rot;
        }
        projected = v.adjoint().matmul(n_hat).matmul(&v);
    }
    let herm = projected.add(&projected.adjoint()).scale_real(0.5);
    let e0 = spec.eigenvalues[0];
    Ok(TruncatedTransmon { energies: spec.eigenvalues[..n_eq].iter().map(|e| e - e0).collect(), charge: herm })
}

/// Builds and truncates transmon `j` at flux `phi`.
pub fn transmon_levels(
    params: &DeviceParams,
    j: Qubit,
    phi: f64,
    n_q: usize,
    n_eq: usize,
) -> Result<TruncatedTransmon> {
    let ej = ej_of_flux(params, j, phi);
    let t = transmon_charge_hamiltonian(*params.ec.get(j), ej, *params.n_g.get(j), n_q)?;
    truncate_to_eigenbasis(&t.hamiltonian, &t.charge, n_eq)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ej_values() {
        let p = DeviceParams::default();
        assert_eq!(ej_of_flux(&p, Qubit::Q1, 0.0), 28.48);
        assert!(ej_of_flux(&p, Qubit::Q1, 0.5).abs() < 1e-12);
        let direct = 28.48 * ((std::f64::consts::PI * 0.25).cos().powi(2)).sqrt();
        assert!((ej_of_flux(&p, Qubit::Q1, 0.25) - direct).abs() < 1e-12);
        assert!((ej_of_flux(&p, Qubit::Q1, 0.25) - 20.139).abs() < 1e-3);
    }

    #[test]
    fn asymmetric_squid_keeps_minimum() {
        let mut p = DeviceParams::default();
        p.d.q1 = 0.2;
        assert!((ej_of_flux(&p, Qubit::Q1, 0.5) - 0.2 * 28.48).abs() < 1e-12);
    }

    #[test]
    fn zero_josephson_is_diagonal() {
        let t = transmon_charge_hamiltonian(0.3, 0.0, 0.0, 7).unwrap();
        let spec = eigh(&t.hamiltonian).unwrap();
        assert_eq!(spec.eigenvalues[0], 0.0);
        assert_eq!(spec.eigenvectors[(3, 0)], C64::new(1.0, 0.0));
    }

    #[test]
    fn small_instance_matches_hand_built_matrix() {
        let (ec, ej, ng) = (0.25, 3.0, 0.1);
        let t = transmon_charge_hamiltonian(ec, ej, ng, 5).unwrap();
        #[rustfmt::skip]
        let want = [
            4.0 * ec * (-2.0f64 - ng).powi(2), -ej / 2.0, 0.0, 0.0, 0.0,
            -ej / 2.0, 4.0 * ec * (-1.0f64 - ng).powi(2), -ej / 2.0, 0.0, 0.0,
            0.0, -ej / 2.0, 4.0 * ec * ng * ng, -ej / 2.0, 0.0,
            0.0, 0.0, -ej / 2.0, 4.0 * ec * (1.0 - ng).powi(2), -ej / 2.0,
            0.0, 0.0, 0.0, -ej / 2.0, 4.0 * ec * (2.0 - ng).powi(2),
        ];
        assert!(t.hamiltonian.matrix().max_abs_diff(&ComplexMatrix::from_real(5, 5, &want)) < 1e-15);
        let charges: Vec<f64> = (0..5).map(|i| t.charge[(i, i)].re).collect();
        assert_eq!(charges, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn even_charge_basis_rejected() {
        let err = transmon_charge_hamiltonian(0.3, 10.0, 0.0, 4).unwrap_err();
        assert!(err.to_string().starts_with("charge basis must be symmetric"));
    }

    #[test]
    fn diagonal_case_reorders_charge() {
        let h = HermitianOperator::from_real_diagonal(&[3.0, 1.0, 2.0]);
        let n = ComplexMatrix::from_real_diagonal(&[10.0, 20.0, 30.0]);
        let t = truncate_to_eigenbasis(&h, &n, 3).unwrap();
        assert_eq!(t.energies, vec![0.0, 1.0, 2.0]);
        let diag: Vec<f64> = (0..3).map(|i| t.charge[(i, i)].re).collect();
        assert_eq!(diag, vec![20.0, 30.0, 10.0]);
        assert_eq!(t.charge.sub(&ComplexMatrix::from_real_diagonal(&diag)).max_abs(), 0.0);
    }

    #[test]
    fn complete_basis_preserves_trace() {
        let t = transmon_charge_hamiltonian(0.3, 12.0, 0.2, 9).unwrap();
        let tr = truncate_to_eigenbasis(&t.hamiltonian, &t.charge, 9).unwrap();
        assert!((tr.charge.trace() - t.charge.trace()).norm() < 1e-9);
    }

    #[test]
    fn ladder_elements_positive_and_lowering_normalized() {
        let p = DeviceParams::default();
        for phi in [0.0, 0.1, 0.233, 0.4] {
            let t = transmon_levels(&p, Qubit::Q1, phi, 23, 9).unwrap();
            for k in 0..8 {
                assert!(t.charge[(k + 1, k)].re > 0.0 && t.charge[(k + 1, k)].im == 0.0);
            }
            let a = t.lowering();
            assert!((a[(0, 1)].norm() - 1.0).abs() < 1e-14);
            let quad = a.add(&a.adjoint());
            let nn = t.normalized_charge();
            for k in 0..8 {
                assert!((quad[(k, k + 1)] - nn[(k, k + 1)]).norm() < 1e-14);
            }
        }
    }
}
