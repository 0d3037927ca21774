use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::Real;

/// Matrix-free real symmetric operator acting on blocks of column vectors.
///
/// Implementations must be usable from several threads at once; `apply`
/// never mutates the operator.
pub trait LinOp<T: Real>: Sync {
    fn dim(&self) -> usize;

    /// `out = A x` for a `dim × b` block `x`. `out` has the same shape.
    fn apply_into(&self, x: &DMatrix<T>, out: &mut DMatrix<T>);

    fn apply(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        self.apply_into(x, &mut out);
        out
    }
}

impl<T: Real, O: LinOp<T> + ?Sized> LinOp<T> for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply_into(&self, x: &DMatrix<T>, out: &mut DMatrix<T>) {
        (**self).apply_into(x, out)
    }
}

/// Compressed sparse row storage.
#[derive(Clone, Debug)]
pub struct SparseOp<T> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<T>,
}

impl<T: Real> SparseOp<T> {
    /// Builds CSR from `(row, col, value)` triplets; duplicates are summed
    /// and exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, T)>) -> Result<Self> {
        if dim > u32::MAX as usize {
            return Err(Error::InvalidArgument(format!("dimension {dim} too large for CSR")));
        }
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return Err(Error::InvalidArgument(format!(
                "triplet ({r}, {c}) outside a {dim}x{dim} matrix"
            )));
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut rows: Vec<Vec<(u32, T)>> = vec![Vec::new(); dim];
        for (r, c, v) in triplets {
            let row = &mut rows[r];
            match row.last_mut() {
                Some((lc, lv)) if *lc as usize == c => *lv += v,
                _ => row.push((c as u32, v)),
            }
        }
        Ok(Self::from_sorted_rows(rows))
    }

    /// Rows must already be sorted by column with no repeats.
    pub(crate) fn from_sorted_rows(rows: Vec<Vec<(u32, T)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v != T::zero() {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[idx] as usize)] += self.vals[idx];
            }
        }
        m
    }

    /// Frobenius norm of the stored matrix.
    pub fn frobenius_norm(&self) -> T {
        self.vals.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt()
    }

    /// Largest absolute row sum, an upper bound on the spectral norm.
    pub fn inf_norm(&self) -> T {
        (0..self.dim)
            .map(|r| {
                self.vals[self.row_ptr[r]..self.row_ptr[r + 1]]
                    .iter()
                    .fold(T::zero(), |acc, &v| acc + v.abs())
            })
            .fold(T::zero(), |acc, x| acc.max(x))
    }

    pub fn trace(&self) -> T {
        let mut t = T::zero();
        for r in 0..self.dim {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.cols[idx] as usize == r {
                    t += self.vals[idx];
                }
            }
        }
        t
    }
}

impl<T: Real> LinOp<T> for SparseOp<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, x: &DMatrix<T>, out: &mut DMatrix<T>) {
        assert_eq!(x.nrows(), self.dim, "operand rows must equal operator dimension");
        assert_eq!(out.shape(), x.shape(), "output block shape must match input");
        for c in 0..x.ncols() {
            let xc = x.column(c);
            let xs = xc.as_slice();
            let mut oc = out.column_mut(c);
            let os = oc.as_mut_slice();
            for (r, o) in os.iter_mut().enumerate() {
                let mut acc = T::zero();
                for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.vals[idx] * xs[self.cols[idx] as usize];
                }
                *o = acc;
            }
        }
    }
}

/// Explicit dense symmetric matrix as an operator (tests and oracles).
#[derive(Clone, Debug)]
pub struct DenseOp<T: Real>(pub DMatrix<T>);

impl<T: Real> LinOp<T> for DenseOp<T> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply_into(&self, x: &DMatrix<T>, out: &mut DMatrix<T>) {
        self.0.mul_to(x, out);
    }
}

#[derive(Clone, Debug)]
pub struct DiagonalOp<T: Real>(pub DVector<T>);

impl<T: Real> LinOp<T> for DiagonalOp<T> {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn apply_into(&self, x: &DMatrix<T>, out: &mut DMatrix<T>) {
        for c in 0..x.ncols() {
            for r in 0..x.nrows() {
                out[(r, c)] = self.0[r] * x[(r, c)];
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IdentityOp(pub usize);

impl<T: Real> LinOp<T> for IdentityOp {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply_into(&self, x: &DMatrix<T>, out: &mut DMatrix<T>) {
        out.copy_from(x);
    }
}

/// `A + shift·I`.
pub struct ShiftedOp<'a, T: Real, O: LinOp<T> + ?Sized> {
    pub op: &'a O,
    pub shift: T,
}

impl<T: Real, O: LinOp<T> + ?Sized> LinOp<T> for ShiftedOp<'_, T, O> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply_into(&self, x: &DMatrix<T>, out: &mut DMatrix<T>) {
        self.op.apply_into(x, out);
        out.zip_apply(x, |o, xi| *o += self.shift * xi);
    }
}

/// Wraps an operator and counts applications, one per column.
pub struct CountingOp<'a, O: ?Sized> {
    inner: &'a O,
    count: AtomicU64,
}

impl<'a, O: ?Sized> CountingOp<'a, O> {
    pub fn new(inner: &'a O) -> Self {
        Self {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

impl<T: Real, O: LinOp<T> + ?Sized> LinOp<T> for CountingOp<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_into(&self, x: &DMatrix<T>, out: &mut DMatrix<T>) {
        self.count.fetch_add(x.ncols() as u64, Ordering::Relaxed);
        self.inner.apply_into(x, out)
    }
}
