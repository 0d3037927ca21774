use nalgebra::{DMatrix, DVector, DVectorView};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{orthonormality_defect, project_onto, sym_eigh, symmetrize};
use crate::spinsys::{BipartiteSplit, CountingOp, LinOp};
use crate::Real;

use super::probes::probe_contract;
use super::{probe_block, LogScaledMatrix, PartialTraceEstimate, ProbeConfig};

/// Orthonormality tolerance for caller-supplied `Q`.
const Q_CONTRACT_TOL: f64 = 1e-8;

/// `weight · tr_b(x xᵀ)`: the Gram matrix of the `d_s` chunks of `x`.
pub fn partial_trace_rank1<T: Real>(x: DVectorView<'_, T>, split: &BipartiteSplit, weight: T) -> Result<DMatrix<T>> {
    split.check_len("rank-1 partial trace", x.len())?;
    let c = DMatrix::from_column_slice(split.d_b(), split.d_s(), x.as_slice());
    Ok(c.tr_mul(&c) * weight)
}

/// `Σ_i w_i tr_b(x_i x_iᵀ)` over the columns of `x`.
pub fn partial_trace_lowrank<T: Real>(x: &DMatrix<T>, weights: &[T], split: &BipartiteSplit) -> Result<DMatrix<T>> {
    split.check_len("low-rank partial trace", x.nrows())?;
    if weights.len() != x.ncols() {
        return Err(Error::DimensionMismatch {
            context: "low-rank partial trace weights",
            expected: x.ncols(),
            got: weights.len(),
        });
    }
    let mut out = DMatrix::zeros(split.d_s(), split.d_s());
    for (i, &w) in weights.iter().enumerate() {
        out += partial_trace_rank1(x.column(i), split, w)?;
    }
    Ok(out)
}

pub(crate) fn check_orthonormal<T: Real>(q: &DMatrix<T>) -> Result<()> {
    let defect = orthonormality_defect(q).as_f64();
    if !(defect <= Q_CONTRACT_TOL) {
        return Err(Error::NotOrthonormal {
            defect,
            tolerance: Q_CONTRACT_TOL,
        });
    }
    Ok(())
}

fn check_op<T: Real, O: LinOp<T> + ?Sized>(a: &O, split: &BipartiteSplit) -> Result<()> {
    split.check_len("operator", a.dim())
}

/// `B_rem = YᵀAY − (YᵀX) Θ (XᵀY)` for every probe.
fn residual_samples<T: Real, O: LinOp<T> + ?Sized>(
    a: &O,
    split: &BipartiteSplit,
    probes: &ProbeConfig,
    x: &DMatrix<T>,
    theta: &[T],
) -> Result<Vec<LogScaledMatrix<T>>> {
    let (d_s, d_b) = (split.d_s(), split.d_b());
    probes.run(|i| {
        let v: DVector<T> = probes.vector(d_b, i as u64);
        let ay = a.apply(&probe_block(&v, d_s));
        let mut b = probe_contract(&v, d_s, &ay);
        if !theta.is_empty() {
            let yx = probe_contract(&v, d_s, x);
            let mut yx_theta = yx.clone();
            for (c, &t) in theta.iter().enumerate() {
                yx_theta.column_mut(c).scale_mut(t);
            }
            b.gemm(-T::one(), &yx_theta, &yx.transpose(), T::one());
        }
        Ok(LogScaledMatrix::from_matrix(b))
    })
}

/// Plain typicality estimator `(1/m) Σ YᵀAY` with `Y = I ⊗ v`.
pub fn estimate_plain<T: Real, O: LinOp<T> + ?Sized>(
    a: &O,
    split: &BipartiteSplit,
    probes: &ProbeConfig,
) -> Result<PartialTraceEstimate<T>> {
    check_op(a, split)?;
    probes.validate()?;
    let counter = CountingOp::new(a);
    let samples = residual_samples(&counter, split, probes, &DMatrix::zeros(split.d_t(), 0), &[])?;
    Ok(PartialTraceEstimate::from_parts(
        LogScaledMatrix::zeros(split.d_s()),
        samples,
        counter.count(),
    ))
}

/// Deflated estimator: exact `tr_b(X Θ Xᵀ)` with `QᵀAQ = SΘSᵀ`, `X = QS`,
/// plus the typicality estimate of the residual. Costs `k + m·d_s`
/// applications of `A`.
pub fn estimate_deflated_dense<T: Real, O: LinOp<T> + ?Sized>(
    a: &O,
    q: &DMatrix<T>,
    split: &BipartiteSplit,
    probes: &ProbeConfig,
) -> Result<PartialTraceEstimate<T>> {
    check_op(a, split)?;
    split.check_len("deflation basis", q.nrows())?;
    probes.validate()?;
    check_orthonormal(q)?;
    let counter = CountingOp::new(a);
    let (theta, x) = if q.ncols() == 0 {
        (Vec::new(), q.clone())
    } else {
        let aq = counter.apply(q);
        let (theta, s) = sym_eigh(symmetrize(&q.tr_mul(&aq)));
        (theta, q * s)
    };
    let defl = partial_trace_lowrank(&x, &theta, split)?;
    let samples = residual_samples(&counter, split, probes, &x, &theta)?;
    Ok(PartialTraceEstimate::from_parts(
        LogScaledMatrix::from_matrix(defl),
        samples,
        counter.count(),
    ))
}

/// `½[WᵀAZ + ZᵀAW]` with `Z = (I − QQᵀ)Y`, `W = (I + QQᵀ)Y`; equal to
/// `YᵀAY − YᵀQQᵀAQQᵀY` but without forming the difference of two large
/// terms. Uses `A` symmetric, so one block application suffices.
pub fn residual_quadratic_general_q<T: Real, O: LinOp<T> + ?Sized>(
    a: &O,
    q: &DMatrix<T>,
    y: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    if a.dim() != y.nrows() || q.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch {
            context: "general-Q residual",
            expected: a.dim(),
            got: if q.nrows() != a.dim() { q.nrows() } else { y.nrows() },
        });
    }
    let p = project_onto(q, y);
    let z = y - &p;
    let w = y + &p;
    Ok(symmetrize(&w.tr_mul(&a.apply(&z))))
}

/// Deflated estimator for an arbitrary orthonormal `Q` (not necessarily
/// invariant under `A`): `tr_b(QQᵀAQQᵀ)` plus the estimate of the residual
/// `A − QQᵀAQQᵀ` through [`residual_quadratic_general_q`].
pub fn estimate_deflated_general<T: Real, O: LinOp<T> + ?Sized>(
    a: &O,
    q: &DMatrix<T>,
    split: &BipartiteSplit,
    probes: &ProbeConfig,
) -> Result<PartialTraceEstimate<T>> {
    check_op(a, split)?;
    split.check_len("deflation basis", q.nrows())?;
    probes.validate()?;
    check_orthonormal(q)?;
    let counter = CountingOp::new(a);
    let defl = if q.ncols() == 0 {
        DMatrix::zeros(split.d_s(), split.d_s())
    } else {
        let (theta, s) = sym_eigh(symmetrize(&q.tr_mul(&counter.apply(q))));
        partial_trace_lowrank(&(q * s), &theta, split)?
    };
    let (d_s, d_b) = (split.d_s(), split.d_b());
    let samples = probes.run(|i| {
        let v: DVector<T> = probes.vector(d_b, i as u64);
        let b = residual_quadratic_general_q(&counter, q, &probe_block(&v, d_s))?;
        Ok(LogScaledMatrix::from_matrix(b))
    })?;
    Ok(PartialTraceEstimate::from_parts(
        LogScaledMatrix::from_matrix(defl),
        samples,
        counter.count(),
    ))
}

#[derive(Clone, Debug)]
pub struct RangeBasis<T: Real> {
    pub q: DMatrix<T>,
    /// Fewer than the requested `k` columns were numerically independent.
    pub deficient: bool,
}

/// Randomized range finder: orthonormal basis of `AΩ` for a Gaussian
/// `d_t × k` sketch `Ω`. Directions whose singular value falls below
/// `1e-12·σ_1` are dropped.
pub fn randomized_range<T: Real, O: LinOp<T> + ?Sized>(a: &O, k: usize, seed: u64) -> Result<RangeBasis<T>> {
    let n = a.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("range rank {k} outside 1..={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(n, k, |_, _| T::lit(StandardNormal.sample(&mut rng)));
    let sketch = a.apply(&omega);
    let svd = sketch.svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].partial_cmp(&svd.singular_values[i]).unwrap());
    let top = svd.singular_values[order[0]];
    let floor = top * T::lit(1e-12);
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&i| top > T::zero() && svd.singular_values[i] > floor)
        .collect();
    let deficient = keep.len() < k;
    if deficient {
        log::warn!("range finder kept {} of {k} directions", keep.len());
    }
    let q = DMatrix::from_fn(n, keep.len(), |r, c| u[(r, keep[c])]);
    Ok(RangeBasis { q, deficient })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinsys::{DenseOp, IdentityOp};
    use crate::ptrace::ProbeDistribution;

    #[test]
    fn rank1_examples() {
        let split = BipartiteSplit::from_dims(2, 2).unwrap();
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let g = partial_trace_rank1(e1.as_view(), &split, 1.0).unwrap();
        assert_eq!(g, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let g = partial_trace_rank1(x.as_view(), &split, 1.0).unwrap();
        assert_eq!(g, DMatrix::from_row_slice(2, 2, &[5.0, 11.0, 11.0, 25.0]));
        let g: DMatrix<f64> = partial_trace_rank1(x.as_view(), &split, 0.5).unwrap();
        assert!((g.trace() - 0.5 * 30.0).abs() < 1e-14);
        let short = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(partial_trace_rank1(short.as_view(), &split, 1.0).is_err());
    }

    #[test]
    fn sphere_probes_on_identity_are_exact() {
        let split = BipartiteSplit::from_dims(4, 8).unwrap();
        let probes = ProbeConfig::new(3, 9).with_distribution(ProbeDistribution::Sphere);
        let est = estimate_plain::<f64, _>(&IdentityOp(32), &split, &probes).unwrap();
        assert_eq!(est.applies, 3 * 4);
        for s in &est.rem_samples {
            let b = s.to_matrix();
            for i in 0..4 {
                assert!((b[(i, i)] - 8.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_deflation_matches_plain() {
        let split = BipartiteSplit::from_dims(2, 4).unwrap();
        let a = DenseOp(DMatrix::from_fn(8, 8, |r, c| ((r + c) % 3) as f64 + if r == c { 2.0 } else { 0.0 }));
        let probes = ProbeConfig::new(4, 1);
        let p = estimate_plain(&a, &split, &probes).unwrap();
        let d = estimate_deflated_dense(&a, &DMatrix::zeros(8, 0), &split, &probes).unwrap();
        assert_eq!(p.mean_matrix(), d.mean_matrix());
    }

    #[test]
    fn broken_basis_is_rejected() {
        let split = BipartiteSplit::from_dims(2, 2).unwrap();
        let q = DMatrix::from_element(4, 1, 1.0);
        let err = estimate_deflated_dense(&IdentityOp(4), &q, &split, &ProbeConfig::new(2, 0)).unwrap_err();
        assert!(matches!(err, Error::NotOrthonormal { .. }));
    }

    #[test]
    fn general_residual_without_q_is_plain_quadratic_form() {
        let a = DenseOp(DMatrix::from_fn(6, 6, |r, c| 1.0 / (1.0 + r as f64 + c as f64)));
        let y = DMatrix::from_fn(6, 2, |r, c| (r as f64 - c as f64).cos());
        let got = residual_quadratic_general_q(&a, &DMatrix::zeros(6, 0), &y).unwrap();
        assert!((got - y.tr_mul(&(&a.0 * &y))).norm() < 1e-14);
    }

    #[test]
    fn range_of_identity_is_orthonormal() {
        let r = randomized_range::<f64, _>(&IdentityOp(20), 5, 3).unwrap();
        assert_eq!(r.q.ncols(), 5);
        assert!(!r.deficient);
        assert!(orthonormality_defect(&r.q) < 1e-13);
    }
}
