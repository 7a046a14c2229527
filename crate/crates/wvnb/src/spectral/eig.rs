//! Dense eigendecomposition backends for Hermitian and normal matrices.
//!
//! The Hermitian path wraps nalgebra's symmetric eigensolver with a
//! canonical ascending ordering. The normal path splits the matrix into
//! commuting Hermitian parts, diagonalizes the first, and within each
//! eigenvalue cluster diagonalizes the compression of the second; a full
//! complex Schur decomposition is kept as a fallback route (for a normal
//! matrix the Schur triangle is diagonal, so its unitary is an eigenbasis).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::SpectralError;

/// Eigenpairs of a normal matrix: `values[k]` belongs to column `k` of
/// `vectors`, sorted by `(re, im)`.
#[derive(Clone, Debug)]
pub struct NormalEigen {
    pub values: Vec<Complex64>,
    pub vectors: DMatrix<Complex64>,
}

/// Ascending eigenvalues and matching eigenvector columns of a Hermitian
/// matrix.
pub fn hermitian_eigen(h: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let se = h.clone().symmetric_eigen();
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let cols: Vec<DVector<Complex64>> = order
        .iter()
        .map(|&i| se.eigenvectors.column(i).into_owned())
        .collect();
    (values, DMatrix::from_columns(&cols))
}

/// Largest eigenvalue magnitude of a Hermitian matrix (its operator norm).
pub fn hermitian_op_norm(h: &DMatrix<Complex64>) -> f64 {
    let (values, _) = hermitian_eigen(h);
    values.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
}

/// Operator norm of an arbitrary complex matrix via the Gram spectrum.
pub fn op_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = hermitize(&(m.adjoint() * m));
    let (values, _) = hermitian_eigen(&gram);
    values
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v))
        .max(0.0)
        .sqrt()
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    let gram = hermitize(&(m.adjoint() * m));
    let (values, _) = hermitian_eigen(&gram);
    let mut out: Vec<f64> = values.iter().map(|&v| v.max(0.0).sqrt()).collect();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// Force exact Hermitian symmetry, averaging out round-off.
pub fn hermitize(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Max residual `‖A v_k − λ_k v_k‖₂` over all eigenpairs.
pub fn eigen_residual(a: &DMatrix<Complex64>, eig: &NormalEigen) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..eig.values.len() {
        let v = eig.vectors.column(k);
        let r = (a * v - v * eig.values[k]).norm();
        worst = worst.max(r);
    }
    worst
}

fn sort_pairs(values: Vec<Complex64>, cols: Vec<DVector<Complex64>>) -> NormalEigen {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .re
            .total_cmp(&values[b].re)
            .then(values[a].im.total_cmp(&values[b].im))
    });
    let sorted_values: Vec<Complex64> = order.iter().map(|&i| values[i]).collect();
    let sorted_cols: Vec<DVector<Complex64>> = order.iter().map(|&i| cols[i].clone()).collect();
    NormalEigen {
        values: sorted_values,
        vectors: DMatrix::from_columns(&sorted_cols),
    }
}

fn rayleigh(a: &DMatrix<Complex64>, v: &DVector<Complex64>) -> Complex64 {
    v.dotc(&(a * v))
}

/// Residual tolerance for accepting an eigendecomposition of `a`.
pub fn residual_bound(a: &DMatrix<Complex64>) -> f64 {
    1e-8 * a.norm().max(f64::MIN_POSITIVE)
}

/// Primary route: simultaneous diagonalization of the commuting Hermitian
/// parts `(A + A*)/2` and `(A − A*)/2i`.
pub fn normal_eigen_split(a: &DMatrix<Complex64>) -> Result<NormalEigen, SpectralError> {
    let n = a.nrows();
    let h1 = hermitize(a);
    let h2 = hermitize(&((a - a.adjoint()) * Complex64::new(0.0, -0.5)));
    let (theta, v) = hermitian_eigen(&h1);
    // Eigenvalues of the real part closer than this are treated as one
    // invariant subspace; the imaginary part separates them afterwards.
    let cluster_gap = 1e-10 * a.norm() + f64::MIN_POSITIVE;

    let mut cols: Vec<DVector<Complex64>> = Vec::with_capacity(n);
    let mut lo = 0usize;
    while lo < n {
        let mut hi = lo + 1;
        while hi < n && theta[hi] - theta[hi - 1] <= cluster_gap {
            hi += 1;
        }
        if hi - lo == 1 {
            cols.push(v.column(lo).into_owned());
        } else {
            let block = v.columns(lo, hi - lo).into_owned();
            let compressed = hermitize(&(block.adjoint() * &h2 * &block));
            let (_, w) = hermitian_eigen(&compressed);
            let rotated = block * w;
            for k in 0..hi - lo {
                cols.push(rotated.column(k).into_owned());
            }
        }
        lo = hi;
    }

    let values: Vec<Complex64> = cols.iter().map(|c| rayleigh(a, c)).collect();
    let eig = sort_pairs(values, cols);
    let residual = eigen_residual(a, &eig);
    let bound = residual_bound(a);
    if residual <= bound {
        Ok(eig)
    } else {
        Err(SpectralError::EigenFailed { residual, bound })
    }
}

/// Fallback route: complex Schur form. For normal input the triangle is
/// diagonal, so the Schur unitary is an eigenbasis.
pub fn normal_eigen_schur(a: &DMatrix<Complex64>) -> Result<NormalEigen, SpectralError> {
    let bound = residual_bound(a);
    let schur = a
        .clone()
        .try_schur(1e-14, 100_000)
        .ok_or(SpectralError::EigenFailed {
            residual: f64::INFINITY,
            bound,
        })?;
    let (q, _t) = schur.unpack();
    let cols: Vec<DVector<Complex64>> = (0..a.nrows()).map(|k| q.column(k).into_owned()).collect();
    let values: Vec<Complex64> = cols.iter().map(|c| rayleigh(a, c)).collect();
    let eig = sort_pairs(values, cols);
    let residual = eigen_residual(a, &eig);
    if residual <= bound {
        Ok(eig)
    } else {
        Err(SpectralError::EigenFailed { residual, bound })
    }
}

/// Eigendecomposition of a normal matrix: split route first, Schur on
/// failure.
pub fn normal_eigen(a: &DMatrix<Complex64>) -> Result<NormalEigen, SpectralError> {
    normal_eigen_split(a).or_else(|_| normal_eigen_schur(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_normal_matrix, rng_from_seed};

    fn unitarity_defect(v: &DMatrix<Complex64>) -> f64 {
        let n = v.ncols();
        (v.adjoint() * v - DMatrix::<Complex64>::identity(n, n)).norm()
    }

    #[test]
    fn split_route_handles_shared_real_parts() {
        // diag(i, -i): the Hermitian real part is doubly degenerate, so the
        // cluster compression of the imaginary part must do the work.
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
        ]));
        let eig = normal_eigen_split(&a).unwrap();
        assert_eq!(eig.values.len(), 2);
        assert!((eig.values[0] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((eig.values[1] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        assert!(unitarity_defect(&eig.vectors) < 1e-12);
    }

    #[test]
    fn both_routes_agree_on_random_normal_matrices() {
        let mut rng = rng_from_seed(7);
        for n in [1usize, 2, 5, 12] {
            let (a, _) = random_normal_matrix(n, &mut rng);
            let split = normal_eigen_split(&a).unwrap();
            let schur = normal_eigen_schur(&a).unwrap();
            assert!(eigen_residual(&a, &split) <= residual_bound(&a));
            assert!(eigen_residual(&a, &schur) <= residual_bound(&a));
            assert!(unitarity_defect(&split.vectors) < 1e-10);
            assert!(unitarity_defect(&schur.vectors) < 1e-10);
            for (s, t) in split.values.iter().zip(&schur.values) {
                assert!((s - t).norm() < 1e-9 * (1.0 + a.norm()), "{s} vs {t}");
            }
        }
    }

    #[test]
    fn op_norm_matches_hermitian_spectrum() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(0.25, 0.0),
            Complex64::new(-0.75, 0.0),
        ]));
        assert!((op_norm(&h) - 0.75).abs() < 1e-12);
        assert!((hermitian_op_norm(&h) - 0.75).abs() < 1e-12);
        let s = singular_values(&h);
        assert!((s[0] - 0.75).abs() < 1e-12 && (s[1] - 0.25).abs() < 1e-12);
    }
}
