use serde::{Deserialize, Serialize};

use crate::device::BasisLabel;
use crate::error::{Error, Result};
use crate::linalg::Spectrum;

/// Squared overlap below which an assignment is rejected.
pub const MIN_OVERLAP: f64 = 0.5;
/// Squared overlap below which an assignment is accepted with a warning.
pub const WARN_OVERLAP: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssignedState {
    pub label: BasisLabel,
    pub eigen_index: usize,
    /// `|<label|v>|^2`.
    pub overlap: f64,
}

/// Dressed eigenstates matched to `|00>, |01>, |10>, |11>`, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssignmentMap {
    pub states: [AssignedState; 4],
}

impl AssignmentMap {
    pub fn indices(&self) -> [usize; 4] {
        self.states.map(|s| s.eigen_index)
    }

    pub fn min_overlap(&self) -> f64 {
        self.states.iter().map(|s| s.overlap).fold(f64::INFINITY, f64::min)
    }

    pub fn energies(&self, spec: &Spectrum) -> [f64; 4] {
        self.states.map(|s| spec.eigenvalues[s.eigen_index])
    }
}

/// Matches each computational bare state to a distinct eigenvector, maximizing
/// the total squared overlap over all distinct choices.
///
/// `labels[i]` names basis index `i` of the spectrum's vectors.
pub fn assign_dressed_states(spec: &Spectrum, labels: &[BasisLabel], phi: f64) -> Result<AssignmentMap> {
    let n = spec.dim();
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!("{} labels for a spectrum of dimension {n}", labels.len())));
    }
    if n < 4 {
        return Err(Error::DimensionMismatch("need at least four states to assign".into()));
    }
    let rows: Vec<usize> = BasisLabel::COMPUTATIONAL
        .iter()
        .map(|l| {
            labels.iter().position(|x| x == l).ok_or_else(|| Error::InvalidParameter(format!("label {l} missing")))
        })
        .collect::<Result<_>>()?;
    let overlaps: Vec<Vec<f64>> =
        rows.iter().map(|&r| (0..n).map(|k| spec.eigenvectors[(r, k)].norm_sqr()).collect()).collect();

    let pick = optimal_assignment(&overlaps);
    let states: [AssignedState; 4] = std::array::from_fn(|i| AssignedState {
        label: BasisLabel::COMPUTATIONAL[i],
        eigen_index: pick[i],
        overlap: overlaps[i][pick[i]],
    });
    for s in &states {
        if s.overlap < MIN_OVERLAP {
            return Err(Error::AssignmentAmbiguous { phi, overlap: s.overlap, label: s.label.to_string() });
        }
        if s.overlap < WARN_OVERLAP {
            log::warn!("weak assignment at flux {phi}: {} overlap {:.3}", s.label, s.overlap);
        }
    }
    Ok(AssignmentMap { states })
}

/// Distinct column per row maximizing the summed table entries, for a table
/// with four rows and at least four columns.
pub fn optimal_assignment(overlaps: &[Vec<f64>]) -> [usize; 4] {
    assert_eq!(overlaps.len(), 4);
    let n = overlaps[0].len();
    assert!(n >= 4);
    // An optimal choice for each row lies among that row's four best columns:
    // otherwise one of them is free and switching to it cannot lose.
    let candidates: Vec<Vec<usize>> = overlaps
        .iter()
        .map(|row| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
            idx.truncate(4);
            idx
        })
        .collect();

    let mut best: Option<(f64, [usize; 4])> = None;
    for &a in &candidates[0] {
        for &b in &candidates[1] {
            for &c in &candidates[2] {
                for &d in &candidates[3] {
                    let pick = [a, b, c, d];
                    let distinct = (0..4).all(|i| (i + 1..4).all(|j| pick[i] != pick[j]));
                    if !distinct {
                        continue;
                    }
                    let total: f64 = (0..4).map(|i| overlaps[i][pick[i]]).sum();
                    if best.is_none_or(|(t, _)| total > t) {
                        best = Some((total, pick));
                    }
                }
            }
        }
    }
    best.expect("a distinct choice exists with four or more columns").1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::product_labels;
    use crate::linalg::{eigh, ComplexMatrix, HermitianOperator};

    #[test]
    fn uncoupled_assignment_is_identity() {
        let labels = product_labels([2, 2, 2]);
        let diag: Vec<f64> = labels.iter().map(|l| 5.0 * l.q1 as f64 + 7.0 * l.c as f64 + 4.5 * l.q0 as f64).collect();
        let spec = eigh(&HermitianOperator::from_real_diagonal(&diag)).unwrap();
        let amap = assign_dressed_states(&spec, &labels, 0.0).unwrap();
        for s in amap.states {
            assert_eq!(s.overlap, 1.0);
            assert_eq!(spec.eigenvectors[(s.label.index([2, 2, 2]).unwrap(), s.eigen_index)].re, 1.0);
        }
    }

    use crate::linalg::test_support as oracles;

    /// |01> and |10> both have their largest overlap with eigenvector 1.
    fn colliding_table() -> Vec<Vec<f64>> {
        vec![
            vec![0.90, 0.05, 0.03, 0.02],
            vec![0.02, 0.45, 0.40, 0.13],
            vec![0.03, 0.42, 0.15, 0.40],
            vec![0.05, 0.08, 0.42, 0.45],
        ]
    }

    #[test]
    fn global_assignment_resolves_greedy_collision() {
        let table = colliding_table();
        let greedy: Vec<usize> = table.iter().map(|r| (0..4).max_by(|&x, &y| r[x].total_cmp(&r[y])).unwrap()).collect();
        assert_eq!(greedy[1], greedy[2]);
        let pick = optimal_assignment(&table);
        assert!((0..4).all(|i| (i + 1..4).all(|j| pick[i] != pick[j])));
        assert_eq!(pick.to_vec(), oracles::brute_force_assignment(&table));
    }

    proptest::proptest! {
        #[test]
        fn optimal_assignment_matches_brute_force(
            cols in 4usize..8,
            raw in proptest::collection::vec(0.0f64..1.0, 32),
        ) {
            let table: Vec<Vec<f64>> = (0..4).map(|r| (0..cols).map(|c| raw[r * 8 + c]).collect()).collect();
            let pick = optimal_assignment(&table);
            let oracle = oracles::brute_force_assignment(&table);
            let total = |p: &[usize]| p.iter().enumerate().map(|(i, &c)| table[i][c]).sum::<f64>();
            proptest::prop_assert!((total(&pick) - total(&oracle)).abs() < 1e-12);
        }
    }

    #[test]
    fn weak_overlap_is_ambiguous() {
        let labels = BasisLabel::COMPUTATIONAL.to_vec();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let rot =
            ComplexMatrix::from_real(4, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, r, -r, 0.0, 0.0, r, r, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let q = ComplexMatrix::from_real(
            4,
            4,
            &[1.0, 0.0, 0.0, 0.0, 0.0, 0.8, 0.0, -0.6, 0.0, 0.0, 1.0, 0.0, 0.0, 0.6, 0.0, 0.8],
        );
        let vecs = q.matmul(&rot);
        let h = HermitianOperator::symmetrized(
            vecs.matmul(&ComplexMatrix::from_real_diagonal(&[0.0, 1.0, 2.0, 3.0])).matmul(&vecs.adjoint()),
        )
        .unwrap();
        let spec = eigh(&h).unwrap();
        let err = assign_dressed_states(&spec, &labels, 0.25).unwrap_err();
        assert!(err.to_string().starts_with("assignment ambiguous at flux 0.25"), "{err}");
    }
}
