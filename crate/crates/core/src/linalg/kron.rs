//! Eigenstructure of `Σ₂ ⊗ Σ₁` assembled from the factors' eigensystems.
//!
//! With `Σ₁ = Σ λ_i ν_i ν_iᵀ` (p×p) and `Σ₂ = Σ ξ_j γ_j γ_jᵀ` (q×q), the
//! Kronecker product has eigenvalues `ξ_j λ_i` with eigenvectors
//! `γ_j ⊗ ν_i`. Entry `l = c·p + r` of that eigenvector is
//! `γ_j[c] · ν_i[r]`, so nothing of size `pq × pq` is ever formed.

use crate::linalg::eigen::EigenSystem;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KronEigenpair<T> {
    pub value: T,
    /// Column of the `Σ₁` eigensystem.
    pub i: usize,
    /// Column of the `Σ₂` eigensystem.
    pub j: usize,
}

/// All `p·q` eigenvalue products, non-increasing, ties broken by `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KronEigenIndex<T> {
    pairs: Vec<KronEigenpair<T>>,
    p: usize,
    q: usize,
}

impl<T: Real> KronEigenIndex<T> {
    pub fn pairs(&self) -> &[KronEigenpair<T>] {
        &self.pairs
    }

    pub fn values(&self) -> Vec<T> {
        self.pairs.iter().map(|e| e.value).collect()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    /// Materializes `γ_j ⊗ ν_i` for entry `k`. Test and diagnostic use only.
    pub fn eigenvector(&self, k: usize, e1: &EigenSystem<T>, e2: &EigenSystem<T>) -> Vec<T> {
        let KronEigenpair { i, j, .. } = self.pairs[k];
        let mut out = Vec::with_capacity(self.p * self.q);
        for c in 0..self.q {
            let g = e2.vectors[(c, j)];
            for r in 0..self.p {
                out.push(g * e1.vectors[(r, i)]);
            }
        }
        out
    }
}

pub fn kron_eigenpairs<T: Real>(e1: &EigenSystem<T>, e2: &EigenSystem<T>) -> KronEigenIndex<T> {
    let (p, q) = (e1.dim(), e2.dim());
    let mut pairs = Vec::with_capacity(p * q);
    for (i, &l) in e1.values.iter().enumerate() {
        for (j, &x) in e2.values.iter().enumerate() {
            pairs.push(KronEigenpair { value: x * l, i, j });
        }
    }
    // Generation order is already (i, j)-lexicographic, so a stable sort on
    // the value alone gives the required tie-break.
    pairs.sort_by(|a, b| b.value.partial_cmp(&a.value).expect("finite eigenvalues"));
    KronEigenIndex { pairs, p, q }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::DenseMatrix;

    fn diag_system(values: &[f64]) -> EigenSystem<f64> {
        EigenSystem {
            values: values.to_vec(),
            vectors: DenseMatrix::identity(values.len()),
        }
    }

    #[test]
    fn diagonal_products() {
        let idx = kron_eigenpairs(&diag_system(&[3.0, 1.0]), &diag_system(&[2.0, 1.0]));
        assert_eq!(idx.values(), vec![6.0, 3.0, 2.0, 1.0]);
        let ij: Vec<_> = idx.pairs().iter().map(|e| (e.i, e.j)).collect();
        assert_eq!(ij, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn ties_are_lexicographic() {
        let idx = kron_eigenpairs(&diag_system(&[1.0, 1.0]), &diag_system(&[1.0, 1.0]));
        assert_eq!(idx.values(), vec![1.0; 4]);
        let ij: Vec<_> = idx.pairs().iter().map(|e| (e.i, e.j)).collect();
        assert_eq!(ij, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }
}
