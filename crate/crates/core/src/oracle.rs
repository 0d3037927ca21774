//! Dense reference computations (full diagonalization) for validation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::krylov::DeflationBasis;
use crate::linalg::{sym_eigh, symmetrize};
use crate::ptrace::{partial_trace_lowrank, LogScaledMatrix};
use crate::spinsys::{BipartiteSplit, LinOp};
use crate::Real;

/// Largest dimension any oracle will materialize.
pub const ORACLE_LIMIT: usize = 4096;

fn guard(dim: usize) -> Result<()> {
    if dim > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge {
            dim,
            limit: ORACLE_LIMIT,
        });
    }
    Ok(())
}

/// Materializes `h` by applying it to the identity.
pub fn dense_matrix<T: Real, O: LinOp<T> + ?Sized>(h: &O) -> Result<DMatrix<T>> {
    let n = h.dim();
    guard(n)?;
    Ok(symmetrize(&h.apply(&DMatrix::identity(n, n))))
}

/// Full eigendecomposition of `H`, reusable across temperatures.
#[derive(Clone, Debug)]
pub struct DenseSpectrum<T: Real> {
    pub matrix: DMatrix<T>,
    /// Ascending.
    pub eigenvalues: Vec<T>,
    pub eigenvectors: DMatrix<T>,
}

impl<T: Real> DenseSpectrum<T> {
    pub fn new<O: LinOp<T> + ?Sized>(h: &O) -> Result<Self> {
        Self::from_matrix(dense_matrix(h)?)
    }

    pub fn from_matrix(a: DMatrix<T>) -> Result<Self> {
        guard(a.nrows())?;
        let matrix = symmetrize(&a);
        let (eigenvalues, eigenvectors) = sym_eigh(matrix.clone());
        Ok(Self {
            matrix,
            eigenvalues,
            eigenvectors,
        })
    }

    /// The lowest `k` eigenpairs as a deflation basis (`k = d_t` allowed).
    pub fn basis(&self, k: usize) -> Result<DeflationBasis<T>> {
        let q = self.eigenvectors.columns(0, k).into_owned();
        let mut r = &self.matrix * &q;
        for i in 0..k {
            r.column_mut(i).axpy(-self.eigenvalues[i], &q.column(i), T::one());
        }
        let norms = (0..k).map(|i| r.column(i).norm()).collect();
        DeflationBasis::new(q, self.eigenvalues[..k].to_vec(), norms)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn ground_energy(&self) -> T {
        self.eigenvalues[0]
    }

    /// `exp(−β(λ_i − λ_min))`.
    fn boltzmann(&self, beta: T) -> Vec<T> {
        let l0 = self.ground_energy();
        self.eigenvalues.iter().map(|&l| (-beta * (l - l0)).exp()).collect()
    }

    /// `ln Z_t = ln Σ exp(−βλ_i)`.
    pub fn log_partition(&self, beta: T) -> T {
        let s = self.boltzmann(beta).into_iter().fold(T::zero(), |a, b| a + b);
        s.ln() - beta * self.ground_energy()
    }

    pub fn thermal(&self, beta: T) -> DenseThermal<T> {
        let w = self.boltzmann(beta);
        let mut scaled = self.eigenvectors.clone();
        for (c, &f) in w.iter().enumerate() {
            scaled.column_mut(c).scale_mut(f);
        }
        let m = symmetrize(&(&scaled * self.eigenvectors.transpose()));
        DenseThermal {
            state: LogScaledMatrix::new(m, -beta * self.ground_energy()),
            log_partition: self.log_partition(beta),
        }
    }

    /// `tr_b exp(−βH)` as a log-scaled matrix.
    pub fn partial_trace_thermal(&self, beta: T, split: &BipartiteSplit) -> Result<LogScaledMatrix<T>> {
        let m = partial_trace_lowrank(&self.eigenvectors, &self.boltzmann(beta), split)?;
        Ok(LogScaledMatrix::new(m, -beta * self.ground_energy()))
    }

    /// `ρ*(β) = tr_b exp(−βH) / Z_t`.
    pub fn reduced_density(&self, beta: T, split: &BipartiteSplit) -> Result<DMatrix<T>> {
        Ok(self.partial_trace_thermal(beta, split)?.trace_normalized().expect("positive trace"))
    }

    /// `(β, k) ↦ 2 Σ_{i>k} σ_i²` for the singular values `σ` of
    /// `exp(−βH)/Z_t`, returned as `log10`. Computed in log space so large
    /// `β` does not underflow.
    pub fn log10_variance_bound(&self, beta: T, k: usize) -> T {
        let n = self.dim();
        if k >= n {
            return T::lit(f64::NEG_INFINITY);
        }
        let l0 = self.ground_energy();
        // ln σ_i = −β(λ_i − λ_0) − ln Z'
        let log_sigma: Vec<T> = self.eigenvalues.iter().map(|&l| -beta * (l - l0)).collect();
        let log_z = logsumexp(&log_sigma);
        let tail: Vec<T> = log_sigma[k..].iter().map(|&x| T::lit(2.0) * (x - log_z)).collect();
        (T::ln_2() + logsumexp(&tail)) / T::ln_10()
    }
}

fn logsumexp<T: Real>(x: &[T]) -> T {
    let m = x.iter().copied().fold(T::lit(f64::NEG_INFINITY), |a, b| a.max(b));
    if !m.is_finite() {
        return m;
    }
    m + x.iter().fold(T::zero(), |a, &v| a + (v - m).exp()).ln()
}

#[derive(Clone, Debug)]
pub struct DenseThermal<T: Real> {
    /// `exp(−βH)` in log-scaled form.
    pub state: LogScaledMatrix<T>,
    /// `ln Z_t`.
    pub log_partition: T,
}

/// `exp(−βH)` by full diagonalization, scaled by `exp(−βλ_min)`.
pub fn dense_thermal<T: Real, O: LinOp<T> + ?Sized>(h: &O, beta: T) -> Result<DenseThermal<T>> {
    Ok(DenseSpectrum::new(h)?.thermal(beta))
}

/// Literal block partial trace: `out[i][j] = Σ_l A[i·d_b + l, j·d_b + l]`.
pub fn dense_partial_trace<T: Real>(a: &DMatrix<T>, split: &BipartiteSplit) -> Result<DMatrix<T>> {
    if a.shape() != (split.d_t(), split.d_t()) {
        return Err(Error::DimensionMismatch {
            context: "dense partial trace",
            expected: split.d_t(),
            got: a.nrows().max(a.ncols()),
        });
    }
    let d_b = split.d_b();
    Ok(DMatrix::from_fn(split.d_s(), split.d_s(), |i, j| {
        (0..d_b).fold(T::zero(), |acc, l| acc + a[(i * d_b + l, j * d_b + l)])
    }))
}

/// `ρ*(β)` from a fresh diagonalization.
pub fn dense_reduced_density<T: Real, O: LinOp<T> + ?Sized>(
    h: &O,
    beta: T,
    split: &BipartiteSplit,
) -> Result<DMatrix<T>> {
    DenseSpectrum::new(h)?.reduced_density(beta, split)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarianceBound<T> {
    pub beta: T,
    pub k: usize,
    pub log10_bound: T,
}

impl<T: Real> VarianceBound<T> {
    pub fn bound(&self) -> T {
        T::lit(10.0).powf(self.log10_bound)
    }
}

/// Deflated variance bound for every `(β, k)`, `β`-major.
pub fn variance_profile<T: Real, O: LinOp<T> + ?Sized>(
    h: &O,
    betas: &[T],
    ks: &[usize],
) -> Result<Vec<VarianceBound<T>>> {
    let spec = DenseSpectrum::new(h)?;
    Ok(betas
        .iter()
        .flat_map(|&beta| {
            let spec = &spec;
            ks.iter().map(move |&k| VarianceBound {
                beta,
                k,
                log10_bound: spec.log10_variance_bound(beta, k),
            })
        })
        .collect())
}
