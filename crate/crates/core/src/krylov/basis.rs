use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::orthonormality_defect;
use crate::Real;

/// Orthonormal eigenvector block `Q` of `H` with eigenvalues `Λ`.
#[derive(Clone, Debug)]
pub struct DeflationBasis<T: Real> {
    q: DMatrix<T>,
    lambda: Vec<T>,
    residual_norms: Vec<T>,
}

impl<T: Real> DeflationBasis<T> {
    pub fn empty(dim: usize) -> Self {
        Self {
            q: DMatrix::zeros(dim, 0),
            lambda: Vec::new(),
            residual_norms: Vec::new(),
        }
    }

    /// Wraps externally computed eigenpairs; `q` must be orthonormal to
    /// `1e-12` (`√ε` for single precision) and `lambda` nondecreasing.
    pub fn new(q: DMatrix<T>, lambda: Vec<T>, residual_norms: Vec<T>) -> Result<Self> {
        if lambda.len() != q.ncols() || residual_norms.len() != q.ncols() {
            return Err(Error::DimensionMismatch {
                context: "deflation basis eigenvalues",
                expected: q.ncols(),
                got: lambda.len().min(residual_norms.len()),
            });
        }
        if lambda.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("eigenvalues must be nondecreasing".into()));
        }
        let tol = Self::orthonormality_tolerance();
        let defect = orthonormality_defect(&q);
        if !(defect <= tol) {
            return Err(Error::NotOrthonormal {
                defect: defect.as_f64(),
                tolerance: tol.as_f64(),
            });
        }
        Ok(Self {
            q,
            lambda,
            residual_norms,
        })
    }

    fn orthonormality_tolerance() -> T {
        T::lit(1e-12).max(T::default_epsilon().sqrt())
    }

    pub(crate) fn from_parts_unchecked(q: DMatrix<T>, lambda: Vec<T>, residual_norms: Vec<T>) -> Self {
        Self {
            q,
            lambda,
            residual_norms,
        }
    }

    pub fn q(&self) -> &DMatrix<T> {
        &self.q
    }

    pub fn lambda(&self) -> &[T] {
        &self.lambda
    }

    pub fn residual_norms(&self) -> &[T] {
        &self.residual_norms
    }

    pub fn k(&self) -> usize {
        self.q.ncols()
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.k() == 0
    }

    /// Keeps the first `k` eigenpairs.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.k());
        Self {
            q: self.q.columns(0, k).into_owned(),
            lambda: self.lambda[..k].to_vec(),
            residual_norms: self.residual_norms[..k].to_vec(),
        }
    }
}
