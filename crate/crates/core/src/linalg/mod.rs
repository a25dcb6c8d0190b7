//! Dense complex linear algebra: tensor embedding, Hermitian eigensolver,
//! piecewise-constant propagators and symmetric orthonormalization.

mod eigen;
mod matrix;
pub mod sparse;

use num_complex::Complex64 as C64;

pub use eigen::{eigh, unitary_step, HermitianOperator, Spectrum, HERMITIAN_TOL};
pub use matrix::{inner, vec_norm, ComplexMatrix};

use crate::error::{Error, Result};

/// Smallest singular value accepted by [`lowdin_orthonormalize`].
pub const LOWDIN_MIN_SINGULAR: f64 = 1e-8;

/// `I (x) ... (x) op (x) ... (x) I` with `op` in position `slot`; the last
/// subsystem is least significant.
pub fn embed_operator(op: &ComplexMatrix, slot: usize, dims: &[usize]) -> Result<ComplexMatrix> {
    if dims.contains(&0) {
        return Err(Error::InvalidParameter("subsystem dimensions must be positive".into()));
    }
    let expected = *dims
        .get(slot)
        .ok_or_else(|| Error::InvalidParameter(format!("slot {slot} out of range for {} subsystems", dims.len())))?;
    if !op.is_square() || op.rows() != expected {
        return Err(Error::EmbedDimension { slot, op: op.rows(), expected });
    }
    let left: usize = dims[..slot].iter().product();
    let right: usize = dims[slot + 1..].iter().product();
    let d = expected;
    let total = left * d * right;
    let mut out = ComplexMatrix::zeros(total, total);
    for l in 0..left {
        for a in 0..d {
            for b in 0..d {
                let z = op[(a, b)];
                if z == C64::new(0.0, 0.0) {
                    continue;
                }
                for r in 0..right {
                    let i = (l * d + a) * right + r;
                    let j = (l * d + b) * right + r;
                    out[(i, j)] = z;
                }
            }
        }
    }
    Ok(out)
}

/// Symmetric orthonormalization `W = V (V^dagger V)^(-1/2)`.
pub fn lowdin_orthonormalize(v: &ComplexMatrix) -> Result<ComplexMatrix> {
    let overlap = HermitianOperator::symmetrized(v.adjoint().matmul(v))?;
    let spec = eigh(&overlap)?;
    let smallest = spec.eigenvalues[0].max(0.0).sqrt();
    if smallest < LOWDIN_MIN_SINGULAR {
        return Err(Error::DegenerateProjection { singular: smallest });
    }
    let k = spec.dim();
    let u = &spec.eigenvectors;
    let mut scaled = u.clone();
    for i in 0..k {
        for (c, &e) in spec.eigenvalues.iter().enumerate() {
            scaled[(i, c)] *= 1.0 / e.sqrt();
        }
    }
    let inv_sqrt = scaled.matmul(&u.adjoint());
    Ok(v.matmul(&inv_sqrt))
}

#[cfg(test)]
#[path = "../../tests/common/oracles.rs"]
mod oracles;


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn identity_embeds_to_identity() {
        let e = embed_operator(&ComplexMatrix::identity(2), 1, &[2, 2, 2]).unwrap();
        assert_eq!(e, ComplexMatrix::identity(8));
    }

    #[test]
    fn least_significant_slot_alternates() {
        let p = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
        let e = embed_operator(&p, 2, &[2, 2, 2]).unwrap();
        let diag: Vec<f64> = (0..8).map(|i| e[(i, i)].re).collect();
        assert_eq!(diag, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert!(e.sub(&ComplexMatrix::from_real_diagonal(&diag)).max_abs() == 0.0);
    }

    #[test]
    fn lowering_in_middle_slot_matches_kronecker_oracle() {
        let a = ComplexMatrix::from_fn(3, 3, |i, j| if j == i + 1 { c((j as f64).sqrt()) } else { c(0.0) });
        let got = embed_operator(&a, 1, &[3, 3, 3]).unwrap();
        let want = to_matrix(&kron_embed(&to_dense(&a), 1, [3, 3, 3]));
        assert_eq!(got, want);
    }

    #[test]
    fn embed_rejects_wrong_dimension() {
        let err = embed_operator(&ComplexMatrix::identity(3), 0, &[2, 2, 2]).unwrap_err();
        assert!(err.to_string().starts_with("embed dimension"));
    }

    #[test]
    fn unitary_step_matches_series_oracle() {
        let h = random_hermitian(6, 99);
        let got = unitary_step(&HermitianOperator::new(to_matrix(&h)).unwrap(), 0.01).unwrap();
        let want = to_matrix(&expm_series(&h, 0.01));
        assert!(got.max_abs_diff(&want) < 1e-9);
    }

    fn random_basis(n: usize, seed: u64) -> ComplexMatrix {
        eigh(&random_hermitian_op(n, seed)).unwrap().eigenvectors
    }

    #[test]
    fn lowdin_fixed_point_and_rescaling() {
        let q = random_basis(4, 5);
        assert!(lowdin_orthonormalize(&q).unwrap().max_abs_diff(&q) < 1e-12);
        let stretched = q.matmul(&ComplexMatrix::from_real_diagonal(&[2.0, 1.0, 1.0, 1.0]));
        assert!(lowdin_orthonormalize(&stretched).unwrap().max_abs_diff(&q) < 1e-12);
    }

    #[test]
    fn lowdin_matches_direct_inverse_square_root() {
        // Overlap has a 2x2 block mixing the first two columns.
        let v = ComplexMatrix::from_real(
            4,
            4,
            &[1.0, 0.3, 0.0, 0.0, 0.0, 0.9, 0.0, 0.0, 0.0, 0.1, 1.0, 0.0, 0.0, 0.0, 0.0, 0.8],
        );
        let w = lowdin_orthonormalize(&v).unwrap();
        let s = to_dense(&v.adjoint().matmul(&v));
        let want = to_matrix(&mul(&to_dense(&v), &inverse_sqrt(&s)));
        assert!(w.max_abs_diff(&want) < 1e-12);
        assert!(w.unitarity_defect() < 1e-9);
    }

    #[test]
    fn lowdin_is_closest_orthonormal_basis() {
        let v = random_basis(4, 8).add(&to_matrix(&random_hermitian(4, 9)).scale_real(0.1));
        let w = lowdin_orthonormalize(&v).unwrap();
        let dist = |m: &ComplexMatrix| m.sub(&v).as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>();
        let base = dist(&w);
        for seed in 0..20 {
            // Small unitary perturbation exp(-i eps G) of W stays orthonormal.
            let g = HermitianOperator::new(to_matrix(&random_hermitian(4, 100 + seed))).unwrap();
            let rot = unitary_step(&g, 1e-3).unwrap();
            assert!(dist(&w.matmul(&rot)) >= base - 1e-12);
        }
    }

    #[test]
    fn lowdin_rejects_dependent_columns() {
        let v = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        let err = lowdin_orthonormalize(&v).unwrap_err();
        assert!(err.to_string().starts_with("degenerate computational projection"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn unitary_step_is_unitary(seed in 0u64..10_000, n in 1usize..10, dt in 1e-4f64..2.0) {
            let h = random_hermitian_op(n, seed).scale(10.0);
            let u = unitary_step(&h, dt).unwrap();
            prop_assert!(u.unitarity_defect() <= 1e-9);
        }

        #[test]
        fn eigh_reconstructs(seed in 0u64..10_000, n in 1usize..12) {
            let h = random_hermitian_op(n, seed);
            let s = eigh(&h).unwrap();
            prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(s.eigenvectors.unitarity_defect() <= 1e-9);
            prop_assert!(s.max_relative_residual(&h) <= 1e-8);
            prop_assert!(s.reconstruct().max_abs_diff(h.matrix()) <= 1e-8 * h.matrix().max_abs());
        }

        #[test]
        fn embedding_is_homomorphic(seed in 0u64..10_000, slot in 0usize..3) {
            let dims = [2usize, 3, 2];
            let a = to_matrix(&random_hermitian(dims[slot], seed));
            let b = to_matrix(&random_hermitian(dims[slot], seed + 1));
            let lhs = embed_operator(&a.matmul(&b), slot, &dims).unwrap();
            let rhs = embed_operator(&a, slot, &dims).unwrap().matmul(&embed_operator(&b, slot, &dims).unwrap());
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
            let other = (slot + 1) % 3;
            let c = embed_operator(&to_matrix(&random_hermitian(dims[other], seed + 2)), other, &dims).unwrap();
            let ea = embed_operator(&a, slot, &dims).unwrap();
            prop_assert!(ea.matmul(&c).max_abs_diff(&c.matmul(&ea)) < 1e-12);
        }

        #[test]
        fn lowdin_is_idempotent(seed in 0u64..10_000) {
            let v = random_basis(4, seed).add(&to_matrix(&random_hermitian(4, seed + 7)).scale_real(0.2));
            let w = lowdin_orthonormalize(&v).unwrap();
            let ww = lowdin_orthonormalize(&w).unwrap();
            prop_assert!(ww.max_abs_diff(&w) < 1e-10);
        }
    }
}
