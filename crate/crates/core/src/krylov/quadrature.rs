use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::sym_eigh;
use crate::Real;

use super::BlockTridiagonal;

/// Block Gauss rule `Σ_i f(θ_i) w_i w_iᵀ` extracted from a block-tridiagonal
/// `T`: nodes `θ_i` are the eigenvalues of `T`, `w_i = R_0ᵀ S[0..b, i]`.
///
/// The rule is independent of `f`, so one decomposition serves any number
/// of functions (e.g. a whole grid of inverse temperatures).
#[derive(Clone, Debug)]
pub struct GaussRule<T: Real> {
    nodes: Vec<T>,
    // row i is w_iᵀ
    weights: DMatrix<T>,
}

impl<T: Real> GaussRule<T> {
    pub fn from_tridiagonal(trid: &BlockTridiagonal<T>) -> Self {
        let b = trid.block_size();
        let (nodes, s) = sym_eigh(trid.assemble());
        let first_rows = s.rows(0, b);
        let weights = first_rows.tr_mul(trid.r0());
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn block_size(&self) -> usize {
        self.weights.ncols()
    }

    pub fn min_node(&self) -> T {
        self.nodes.first().copied().unwrap_or_else(T::zero)
    }

    /// `R_0ᵀ E_1ᵀ f(T) E_1 R_0`.
    pub fn evaluate(&self, f: impl Fn(T) -> T) -> Result<DMatrix<T>> {
        let mut fv = Vec::with_capacity(self.nodes.len());
        for &x in &self.nodes {
            let y = f(x);
            if !y.is_finite() {
                return Err(Error::Domain { node: x.as_f64() });
            }
            fv.push(y);
        }
        Ok(self.weighted_sum(&fv))
    }

    /// `exp(−β(x − shift))` evaluated with the rule. Choosing
    /// `shift = min_node()` keeps every factor in `(0, 1]`.
    pub fn evaluate_exp(&self, beta: T, shift: T) -> DMatrix<T> {
        let fv: Vec<T> = self.nodes.iter().map(|&x| (-beta * (x - shift)).exp()).collect();
        self.weighted_sum(&fv)
    }

    fn weighted_sum(&self, fv: &[T]) -> DMatrix<T> {
        let mut scaled = self.weights.clone();
        for (i, &f) in fv.iter().enumerate() {
            scaled.row_mut(i).scale_mut(f);
        }
        let out = self.weights.tr_mul(&scaled);
        (&out + out.transpose()) * T::lit(0.5)
    }
}

/// `R_0ᵀ E_1ᵀ f(T) E_1 R_0` via a dense eigendecomposition of `T`.
pub fn matfun_quadrature<T: Real>(trid: &BlockTridiagonal<T>, f: impl Fn(T) -> T) -> Result<DMatrix<T>> {
    GaussRule::from_tridiagonal(trid).evaluate(f)
}
