use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::matrix::{inner, vec_norm, ComplexMatrix};
use crate::error::{Error, Result};

/// Compressed sparse row matrix, square.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Drops entries with magnitude at or below `drop_tol * max|m|`.
    pub fn from_dense(m: &ComplexMatrix, drop_tol: f64) -> Self {
        assert!(m.is_square());
        let n = m.rows();
        let cutoff = drop_tol * m.max_abs();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for (j, &z) in m.row(i).iter().enumerate() {
                if z.norm() > cutoff || (i == j && z != C64::new(0.0, 0.0)) {
                    col_idx.push(j);
                    values.push(z);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        for i in 0..self.n {
            let mut acc = C64::new(0.0, 0.0);
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            y[i] = acc;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        (self.row_ptr[i]..self.row_ptr[i + 1])
            .find(|&p| self.col_idx[p] == j)
            .map(|p| self.values[p])
            .unwrap_or_default()
    }

    /// Iterates `(column, value)` over the stored entries of row `i`.
    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (self.col_idx[p], self.values[p]))
    }

    /// Gershgorin interval `(lo, hi)` containing the spectrum of a Hermitian matrix.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let (c, r) = self.gershgorin_row(i);
            lo = lo.min(c - r);
            hi = hi.max(c + r);
        }
        (lo, hi)
    }

    /// Row center and radius of row `i`.
    pub fn gershgorin_row(&self, i: usize) -> (f64, f64) {
        let mut center = 0.0;
        let mut radius = 0.0;
        for (j, z) in self.row_entries(i) {
            if j == i {
                center = z.re;
            } else {
                radius += z.norm();
            }
        }
        (center, radius)
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, z) in self.row_entries(i) {
                m[(i, j)] = z;
            }
        }
        m
    }
}

/// A fixed family of matrices sharing one sparsity pattern, so weighted sums
/// can be formed per time step without re-scanning dense storage.
#[derive(Debug, Clone)]
pub struct PatternedSum {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    components: Vec<Vec<C64>>,
}

impl PatternedSum {
    pub fn new(terms: &[&ComplexMatrix], drop_tol: f64) -> Self {
        assert!(!terms.is_empty());
        let n = terms[0].rows();
        let cutoffs: Vec<f64> = terms.iter().map(|t| drop_tol * t.max_abs()).collect();
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut components = vec![Vec::new(); terms.len()];
        for i in 0..n {
            for j in 0..n {
                let keep = i == j
                    || terms.iter().zip(&cutoffs).any(|(t, &c)| {
                        let z = t[(i, j)];
                        z.norm() > c
                    });
                if keep {
                    col_idx.push(j);
                    for (comp, t) in components.iter_mut().zip(terms) {
                        comp.push(t[(i, j)]);
                    }
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { n, row_ptr, col_idx, components }
    }

    pub fn assemble(&self, coeffs: &[C64]) -> CsrMatrix {
        assert_eq!(coeffs.len(), self.components.len());
        let mut values = vec![C64::new(0.0, 0.0); self.col_idx.len()];
        for (comp, &c) in self.components.iter().zip(coeffs) {
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            for (v, &x) in values.iter_mut().zip(comp) {
                *v += c * x;
            }
        }
        CsrMatrix { n: self.n, row_ptr: self.row_ptr.clone(), col_idx: self.col_idx.clone(), values }
    }
}

/// Largest `tau * radius` handled by one Taylor substep.
const TAYLOR_SUBSTEP_BOUND: f64 = 2.0;
const TAYLOR_MAX_TERMS: usize = 60;

/// `exp(-i 2 pi dt H) psi` for Hermitian `h` by a truncated Taylor series on
/// the spectrum-centered operator. Terms are added until the next one falls
/// below 1e-17 of the vector norm. Negative `dt` propagates backward.
pub fn expm_action(h: &CsrMatrix, dt: f64, psi: &[C64]) -> Result<Vec<C64>> {
    let n = h.dim();
    if psi.len() != n {
        return Err(Error::DimensionMismatch(format!("state of length {} for operator of dimension {n}", psi.len())));
    }
    let (lo, hi) = h.gershgorin_bounds();
    let center = 0.5 * (lo + hi);
    let radius = 0.5 * (hi - lo);
    let tau = std::f64::consts::TAU * dt;
    let substeps = ((tau.abs() * radius / TAYLOR_SUBSTEP_BOUND).ceil() as usize).max(1);
    let h_tau = tau / substeps as f64;

    let mut v = psi.to_vec();
    let mut term = vec![C64::new(0.0, 0.0); n];
    let mut next = vec![C64::new(0.0, 0.0); n];
    for _ in 0..substeps {
        let scale = vec_norm(&v);
        term.copy_from_slice(&v);
        let mut converged = false;
        for k in 1..=TAYLOR_MAX_TERMS {
            h.matvec_into(&term, &mut next);
            // next = (-i h_tau / k) (H - center) term
            let f = C64::new(0.0, -h_tau / k as f64);
            for (nx, &t) in next.iter_mut().zip(&term) {
                *nx = f * (*nx - t * center);
            }
            std::mem::swap(&mut term, &mut next);
            for (a, &t) in v.iter_mut().zip(&term) {
                *a += t;
            }
            if vec_norm(&term) <= 1e-17 * scale {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::EigensolveFailed("Taylor series did not converge".into()));
        }
    }
    let global = C64::from_polar(1.0, -tau * center);
    for a in v.iter_mut() {
        *a *= global;
    }
    Ok(v)
}

/// Smallest eigenvalue of a Hermitian operator by Lanczos iteration with full
/// reorthogonalization, started from a deterministic vector weighted toward
/// index 0.
pub fn lowest_eigenvalue(h: &CsrMatrix) -> Result<f64> {
    let n = h.dim();
    let max_iter = n.min(300);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(max_iter);
    let mut alphas = Vec::with_capacity(max_iter);
    let mut betas: Vec<f64> = Vec::with_capacity(max_iter);

    let mut q: Vec<C64> = (0..n).map(|i| C64::new(1.0 / (1.0 + i as f64), 0.0)).collect();
    q[0] += C64::new(4.0, 0.0);
    let nq = vec_norm(&q);
    q.iter_mut().for_each(|z| *z /= nq);

    let (lo, hi) = h.gershgorin_bounds();
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let mut last = f64::INFINITY;
    for it in 0..max_iter {
        let mut w = h.matvec(&q);
        let alpha = inner(&q, &w).re;
        alphas.push(alpha);
        basis.push(q);
        for _ in 0..2 {
            for b in &basis {
                let c = inner(b, &w);
                for (x, y) in w.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let beta = vec_norm(&w);
        let done_basis = beta <= 1e-13 * scale || it + 1 == max_iter;
        if it % 4 == 3 || done_basis {
            let m = alphas.len();
            let t = DMatrix::<f64>::from_fn(m, m, |i, j| {
                if i == j {
                    alphas[i]
                } else if i + 1 == j {
                    betas[i]
                } else if j + 1 == i {
                    betas[j]
                } else {
                    0.0
                }
            });
            let ev = t
                .try_symmetric_eigen(f64::EPSILON, 10_000)
                .ok_or_else(|| Error::EigensolveFailed("tridiagonal eigensolve".into()))?;
            let lowest = ev.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            if (lowest - last).abs() <= 1e-13 * scale || done_basis {
                return Ok(lowest);
            }
            last = lowest;
        }
        betas.push(beta);
        q = w.into_iter().map(|z| z / beta).collect();
    }
    Err(Error::EigensolveFailed("Lanczos did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::test_support::{expm_series, random_hermitian, to_matrix};
    use crate::linalg::{eigh, HermitianOperator};

    #[test]
    fn taylor_action_matches_dense_propagator() {
        let dense = to_matrix(&random_hermitian(12, 3)).scale_real(20.0);
        let h = HermitianOperator::new(dense.clone()).unwrap();
        let csr = CsrMatrix::from_dense(&dense, 0.0);
        let psi: Vec<C64> = (0..12).map(|i| C64::new((i as f64).cos(), (i as f64 * 0.3).sin())).collect();
        let nrm = vec_norm(&psi);
        let psi: Vec<C64> = psi.iter().map(|z| z / nrm).collect();
        for dt in [0.002, 0.05, 0.3] {
            let got = expm_action(&csr, dt, &psi).unwrap();
            let want = eigh(&h).unwrap().propagator(dt).matvec(&psi);
            let err = got.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "dt {dt}: {err}");
            let oracle = to_matrix(&expm_series(
                &random_hermitian(12, 3).iter().map(|r| r.iter().map(|z| z * 20.0).collect()).collect(),
                dt,
            ))
            .matvec(&psi);
            let err = got.iter().zip(&oracle).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10, "dt {dt} vs series: {err}");
        }
    }

    #[test]
    fn lanczos_finds_ground_energy() {
        let dense = to_matrix(&random_hermitian(40, 11));
        let h = HermitianOperator::new(dense.clone()).unwrap();
        let exact = eigh(&h).unwrap().eigenvalues[0];
        let got = lowest_eigenvalue(&CsrMatrix::from_dense(&dense, 0.0)).unwrap();
        assert!((exact - got).abs() < 1e-10, "{exact} vs {got}");
    }

    #[test]
    fn patterned_sum_assembles_linear_combination() {
        let a = to_matrix(&random_hermitian(5, 1));
        let b = ComplexMatrix::from_fn(5, 5, |i, j| if j == i + 1 { C64::new(1.0, 0.0) } else { C64::default() });
        let sum = PatternedSum::new(&[&a, &b], 0.0);
        let c = [C64::new(1.0, 0.0), C64::new(0.3, -0.2)];
        let got = sum.assemble(&c).to_dense();
        let mut want = a.clone();
        want.add_scaled(&b, c[1]);
        assert!(got.max_abs_diff(&want) < 1e-15);
    }
}
