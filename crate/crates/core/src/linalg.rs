//! Thin wrappers over the dense decompositions with the orderings the
//! rest of the crate relies on.

use crate::{Matrix, Vector};

/// SVD with singular values sorted in non-increasing order.
pub(crate) struct SortedSvd {
    pub u: Matrix,
    pub values: Vector,
    pub v: Matrix,
}

pub(crate) fn sorted_svd(a: &Matrix) -> SortedSvd {
    let n = a.nrows();
    let svd = faer::Mat::from_fn(n, n, |i, j| a[(i, j)])
        .svd()
        .expect("SVD of a finite square matrix");
    let (u, v) = (svd.U(), svd.V());
    let s = svd.S().column_vector();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));

    let mut uo = Matrix::zeros(n, n);
    let mut vo = Matrix::zeros(n, n);
    let mut so = Vector::zeros(n);
    for (k, &i) in order.iter().enumerate() {
        for r in 0..n {
            uo[(r, k)] = u[(r, i)];
            vo[(r, k)] = v[(r, i)];
        }
        so[k] = s[i];
    }
    SortedSvd {
        u: uo,
        values: so,
        v: vo,
    }
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending. Ties keep the
/// solver's order so the result is deterministic.
pub(crate) fn sorted_symmetric_eigen(a: &Matrix) -> (Vec<f64>, Vec<Vector>) {
    let n = a.nrows();
    let eig = to_faer_symmetric(a)
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("eigendecomposition of a finite symmetric matrix");
    let s = eig.S().column_vector();
    let u = eig.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].total_cmp(&s[j]));
    let values = order.iter().map(|&i| s[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| Vector::from_fn(n, |r, _| u[(r, i)]))
        .collect();
    (values, vectors)
}

pub(crate) fn max_symmetric_eigenvalue(a: &Matrix) -> f64 {
    to_faer_symmetric(a)
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .expect("eigenvalues of a finite symmetric matrix")
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

fn to_faer_symmetric(a: &Matrix) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

/// Removes the components of `v` along the orthonormal `basis`, two passes.
pub(crate) fn orthogonalize(v: &Vector, basis: &[Vector]) -> Vector {
    let mut r = v.clone();
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(&r);
            r.axpy(-c, b, 1.0);
        }
    }
    r
}

pub(crate) fn skew_part(a: &Matrix) -> Matrix {
    0.5 * (a - a.transpose())
}

#[cfg(test)]
pub(crate) fn frobenius_inner(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub(crate) fn determinant(a: &Matrix) -> f64 {
    a.clone().determinant()
}
