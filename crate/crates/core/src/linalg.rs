//! Small dense helpers built on nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::Real;

/// Symmetric eigendecomposition with eigenvalues sorted ascending and the
/// eigenvector columns permuted to match.
pub fn sym_eigh<T: Real>(m: DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigenvalues only, ascending.
pub fn sym_eigvals<T: Real>(m: DMatrix<T>) -> Vec<T> {
    let mut v: Vec<T> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    let half = T::lit(0.5);
    (m + m.transpose()) * half
}

/// `||QᵀQ − I||_F`.
pub fn orthonormality_defect<T: Real>(q: &DMatrix<T>) -> T {
    let k = q.ncols();
    let g = q.tr_mul(q) - DMatrix::<T>::identity(k, k);
    g.norm()
}

/// Thin QR `X = Q R` with `Q` of the same shape as `X`.
pub fn thin_qr<T: Real>(x: DMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
    let qr = x.qr();
    (qr.q(), qr.r())
}

/// `Q (Qᵀ X)`: projection of `X` onto the column span of `Q`.
pub fn project_onto<T: Real>(q: &DMatrix<T>, x: &DMatrix<T>) -> DMatrix<T> {
    if q.ncols() == 0 {
        return DMatrix::zeros(x.nrows(), x.ncols());
    }
    q * q.tr_mul(x)
}

/// `X − Q (Qᵀ X)` in place.
pub fn deflate_in_place<T: Real>(q: &DMatrix<T>, x: &mut DMatrix<T>) {
    if q.ncols() == 0 {
        return;
    }
    let c = q.tr_mul(x);
    x.gemm(-T::one(), q, &c, T::one());
}

pub fn trace<T: Real>(m: &DMatrix<T>) -> T {
    m.diagonal().iter().fold(T::zero(), |acc, &x| acc + x)
}

pub fn max_abs<T: Real>(v: &DVector<T>) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}
