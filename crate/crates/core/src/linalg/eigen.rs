use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Relative tolerance on `|H - H^dagger|` accepted by [`HermitianOperator::new`].
pub const HERMITIAN_TOL: f64 = 1e-10;

const MAX_QR_ITERATIONS: usize = 10_000;

/// Dense Hermitian matrix in GHz.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "hermitian operator must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if !matrix.is_finite() {
            return Err(Error::EigensolveFailed("non-finite matrix entry".into()));
        }
        let defect = matrix.hermiticity_defect();
        if defect > HERMITIAN_TOL * matrix.max_abs() {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self { matrix })
    }

    /// Symmetrizes `(M + M^dagger)/2`; for operators assembled from Hermitian
    /// pieces where roundoff would otherwise trip the tolerance check.
    pub fn symmetrized(matrix: ComplexMatrix) -> Result<Self> {
        let herm = matrix.add(&matrix.adjoint()).scale_real(0.5);
        Self::new(herm)
    }

    pub fn zeros(n: usize) -> Self {
        Self { matrix: ComplexMatrix::zeros(n, n) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self { matrix: ComplexMatrix::from_real_diagonal(diag) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// True when every entry has an exactly zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.matrix.as_slice().iter().all(|z| z.im == 0.0)
    }

    pub fn add_to_diagonal(&mut self, shift: f64) {
        self.matrix.add_to_diagonal(shift);
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { matrix: self.matrix.add(&other.matrix) }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { matrix: self.matrix.scale_real(s) }
    }

    pub fn expectation(&self, psi: &[C64]) -> f64 {
        super::matrix::inner(psi, &self.matrix.matvec(psi)).re
    }
}

/// Eigendecomposition of a Hermitian operator with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }

    /// `V diag(exp(-i 2 pi dt E)) V^dagger`.
    pub fn propagator(&self, dt: f64) -> ComplexMatrix {
        let n = self.dim();
        let phases: Vec<C64> =
            self.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -std::f64::consts::TAU * dt * e)).collect();
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for i in 0..n {
            for k in 0..n {
                scaled[(i, k)] *= phases[k];
            }
        }
        scaled.matmul(&v.adjoint())
    }

    /// `V diag(E) V^dagger`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut scaled = self.eigenvectors.clone();
        for i in 0..self.dim() {
            for (k, &e) in self.eigenvalues.iter().enumerate() {
                scaled[(i, k)] *= e;
            }
        }
        scaled.matmul(&self.eigenvectors.adjoint())
    }

    /// Largest per-column residual `|H v - E v| / (1 + |E|)`.
    pub fn max_relative_residual(&self, h: &HermitianOperator) -> f64 {
        let hv = h.matrix().matmul(&self.eigenvectors);
        let mut worst = 0.0f64;
        for (k, &e) in self.eigenvalues.iter().enumerate() {
            let r: f64 =
                (0..self.dim()).map(|i| (hv[(i, k)] - self.eigenvectors[(i, k)] * e).norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(r / (1.0 + e.abs()));
        }
        worst
    }
}

/// Hermitian eigendecomposition.
///
/// Eigenvalues ascend. Each eigenvector is rotated so its largest-magnitude
/// component (first such index, within a relative 1e-9) is real and positive.
/// Numerically degenerate eigenvalues are ordered by that index.
pub fn eigh(h: &HermitianOperator) -> Result<Spectrum> {
    let n = h.dim();
    let m = h.matrix();
    let scale = m.max_abs().max(1.0);
    let eps = f64::EPSILON;

    let (values, vectors): (Vec<f64>, ComplexMatrix) = if h.is_real() {
        let dense = DMatrix::<f64>::from_fn(n, n, |i, j| m[(i, j)].re);
        let eig = dense
            .try_symmetric_eigen(eps, MAX_QR_ITERATIONS)
            .ok_or_else(|| Error::EigensolveFailed(format!("no convergence for n = {n}")))?;
        let vecs = ComplexMatrix::from_fn(n, n, |i, j| C64::new(eig.eigenvectors[(i, j)], 0.0));
        (eig.eigenvalues.iter().copied().collect(), vecs)
    } else {
        let dense = DMatrix::<C64>::from_fn(n, n, |i, j| m[(i, j)]);
        let eig = dense
            .try_symmetric_eigen(eps, MAX_QR_ITERATIONS)
            .ok_or_else(|| Error::EigensolveFailed(format!("no convergence for n = {n}")))?;
        let vecs = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, j)]);
        (eig.eigenvalues.iter().copied().collect(), vecs)
    };

    if values.iter().any(|e| !e.is_finite()) || !vectors.is_finite() {
        return Err(Error::EigensolveFailed("non-finite eigenpair".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let pivots: Vec<usize> = (0..n).map(|k| pivot_index(&vectors, k)).collect();
    // Roundoff level of the QR iteration; real splittings above it keep
    // ascending order.
    let degenerate_tol = 4.0 * n as f64 * f64::EPSILON * scale;
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    // Reorder runs of numerically equal eigenvalues by pivot index.
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] - values[order[end - 1]] <= degenerate_tol {
            end += 1;
        }
        if end - start > 1 {
            order[start..end].sort_by_key(|&k| (pivots[k], k));
        }
        start = end;
    }

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(values[src]);
        let p = vectors[(pivots[src], src)];
        let rot = p.conj() / p.norm();
        for i in 0..n {
            eigenvectors[(i, dst)] = vectors[(i, src)] * rot;
        }
    }
    Ok(Spectrum { eigenvalues, eigenvectors })
}

fn pivot_index(v: &ComplexMatrix, col: usize) -> usize {
    let n = v.rows();
    let biggest = (0..n).map(|i| v[(i, col)].norm()).fold(0.0, f64::max);
    (0..n).find(|&i| v[(i, col)].norm() >= biggest * (1.0 - 1e-9)).unwrap_or(0)
}

/// `U = exp(-i 2 pi dt H)` from the eigendecomposition of `h`.
pub fn unitary_step(h: &HermitianOperator, dt: f64) -> Result<ComplexMatrix> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    Ok(eigh(h)?.propagator(dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::test_support::{jacobi_eigenvalues, random_hermitian_op as random_hermitian, to_dense};

    #[test]
    fn diagonal_spectrum_sorted() {
        let h = HermitianOperator::from_real_diagonal(&[3.0, 1.0, 2.0]);
        let s = eigh(&h).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 2.0, 3.0]);
        assert_eq!(s.eigenvectors[(1, 0)], C64::new(1.0, 0.0));
    }

    #[test]
    fn split_pair_stays_ascending() {
        let h = HermitianOperator::from_real_diagonal(&[1.0 + 1e-11, 1.0]);
        let s = eigh(&h).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 1.0 + 1e-11]);
        assert_eq!(s.eigenvectors[(1, 0)], C64::new(1.0, 0.0));
    }

    #[test]
    fn pauli_x() {
        let x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let s = eigh(&HermitianOperator::new(x).unwrap()).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_complex_matches_jacobi_oracle() {
        let h = random_hermitian(8, 20240611);
        let s = eigh(&h).unwrap();
        let oracle = jacobi_eigenvalues(&to_dense(h.matrix()));
        for (a, b) in s.eigenvalues.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert!(s.max_relative_residual(&h) < 1e-8);
        assert!(s.eigenvectors.unitarity_defect() < 1e-9);
    }

    #[test]
    fn phase_convention_largest_component_real_positive() {
        let h = random_hermitian(6, 7);
        let s = eigh(&h).unwrap();
        for k in 0..6 {
            let v = s.vector(k);
            let p = pivot_index(&s.eigenvectors, k);
            assert!(v[p].im.abs() < 1e-14 && v[p].re > 0.0);
        }
    }

    #[test]
    fn degenerate_runs_ordered_by_pivot() {
        let h = HermitianOperator::from_real_diagonal(&[1.0, 0.0, 1.0, 0.0]);
        let s = eigh(&h).unwrap();
        let pivots: Vec<usize> = (0..4).map(|k| pivot_index(&s.eigenvectors, k)).collect();
        assert_eq!(pivots, vec![1, 3, 0, 2]);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(HermitianOperator::new(m), Err(Error::NotHermitian { .. })));
        let nan = ComplexMatrix::from_real(1, 1, &[f64::NAN]);
        assert!(matches!(HermitianOperator::new(nan), Err(Error::EigensolveFailed(_))));
    }

    #[test]
    fn unitary_step_zero_and_scalar() {
        let u = unitary_step(&HermitianOperator::zeros(3), 0.7).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
        let u = unitary_step(&HermitianOperator::from_real_diagonal(&[1.0]), 0.5).unwrap();
        assert!((u[(0, 0)] - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!(unitary_step(&HermitianOperator::zeros(1), 0.0).is_err());
    }
}
