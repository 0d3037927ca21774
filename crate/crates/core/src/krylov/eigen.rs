use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{sym_eigh, symmetrize, thin_qr};
use crate::spinsys::LinOp;
use crate::Real;

use super::DeflationBasis;

#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Residual target relative to the running `‖H‖` estimate.
    pub tol: f64,
    pub max_restarts: usize,
    /// Block width of the Krylov expansion; defaults to `k` clamped to `2..=8`.
    pub block_size: Option<usize>,
    /// Search-space size before a thick restart.
    pub max_basis: Option<usize>,
    /// Dimensions up to this are diagonalized densely.
    pub dense_threshold: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_restarts: 500,
            block_size: None,
            max_basis: None,
            dense_threshold: 128,
            seed: 0x5eed_e16e,
        }
    }
}

/// The `k` algebraically smallest eigenpairs of `h`, each with residual
/// `‖Hq − λq‖ ≤ tol·‖H‖`.
pub fn lowest_eigenpairs<T: Real, O: LinOp<T> + ?Sized>(h: &O, k: usize, tol: f64) -> Result<DeflationBasis<T>> {
    lowest_eigenpairs_with(
        h,
        k,
        &EigenOptions {
            tol,
            ..EigenOptions::default()
        },
    )
}

/// Thick-restart block Lanczos with full reorthogonalization.
///
/// The search space `V` is expanded block by block with classical
/// Gram–Schmidt applied twice; the projected matrix `VᵀHV` is filled from
/// the orthogonalization coefficients. When `V` is full, the lowest Ritz
/// vectors are kept, the pending block is carried over, and expansion
/// resumes. A block start captures eigenvalue multiplicities up to the
/// block width in exact arithmetic.
pub fn lowest_eigenpairs_with<T: Real, O: LinOp<T> + ?Sized>(
    h: &O,
    k: usize,
    opts: &EigenOptions,
) -> Result<DeflationBasis<T>> {
    let n = h.dim();
    if k >= n {
        return Err(Error::InvalidArgument(format!(
            "requested {k} eigenpairs of a {n}-dimensional operator"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("eigen tolerance must be positive".into()));
    }
    if k == 0 {
        return Ok(DeflationBasis::empty(n));
    }
    let bs = opts.block_size.unwrap_or(k.clamp(2, 8)).max(1);
    let m_max = opts.max_basis.unwrap_or((2 * k + 4 * bs).max(k + 6 * bs));
    let m_max = m_max.max(k + 2 * bs);
    if n <= opts.dense_threshold || m_max + bs >= n {
        return dense_lowest(h, k);
    }

    let tol = T::lit(opts.tol);
    let eps100 = T::default_epsilon() * T::lit(100.0);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut gaussian = |rows: usize, cols: usize| -> DMatrix<T> {
        DMatrix::from_fn(rows, cols, |_, _| T::lit(StandardNormal.sample(&mut rng)))
    };

    let mut v = DMatrix::<T>::zeros(n, m_max + bs);
    let (start, _) = thin_qr(gaussian(n, bs));
    v.columns_mut(0, bs).copy_from(&start);
    let mut g = DMatrix::<T>::zeros(m_max, m_max);
    let mut r_last = DMatrix::<T>::zeros(bs, bs);
    let mut known = 0usize;
    let mut norm_est = T::zero();
    let mut restarts = 0usize;

    loop {
        while known + bs <= m_max {
            let p = v.columns(known, bs).into_owned();
            let mut w = h.apply(&p);
            let hp_norm = w.norm();
            let width = known + bs;
            let vall = v.columns(0, width);
            let c = vall.tr_mul(&w);
            for cc in 0..bs {
                for r in 0..width {
                    g[(r, known + cc)] = c[(r, cc)];
                    g[(known + cc, r)] = c[(r, cc)];
                }
            }
            w.gemm(-T::one(), &vall, &c, T::one());
            let c2 = vall.tr_mul(&w);
            w.gemm(-T::one(), &vall, &c2, T::one());

            let (mut qn, mut rn) = thin_qr(w);
            let floor = eps100 * hp_norm.max(norm_est);
            for i in 0..bs {
                if rn[(i, i)].abs() <= floor {
                    // invariant direction found: continue with a fresh random one
                    let mut x = gaussian(n, 1);
                    for _ in 0..2 {
                        let cv = vall.tr_mul(&x);
                        x.gemm(-T::one(), &vall, &cv, T::one());
                        for j in (0..bs).filter(|&j| j != i) {
                            let d = qn.column(j).dot(&x.column(0));
                            x.column_mut(0).axpy(-d, &qn.column(j), T::one());
                        }
                    }
                    let nx = x.norm();
                    qn.column_mut(i).copy_from(&(x.column(0) / nx));
                    rn.row_mut(i).fill(T::zero());
                }
            }
            v.columns_mut(width, bs).copy_from(&qn);
            r_last = rn;
            known += bs;
        }

        let gk = symmetrize(&g.view((0, 0), (known, known)).into_owned());
        let (theta, y) = sym_eigh(gk);
        norm_est = norm_est.max(theta[0].abs()).max(theta[known - 1].abs());
        let target = tol * norm_est;
        let est = &r_last * y.view((known - bs, 0), (bs, k));
        let est_norms: Vec<T> = (0..k).map(|i| est.column(i).norm()).collect();

        let mut worst = None;
        if est_norms.iter().all(|&r| r <= target) {
            let x = v.columns(0, known) * y.columns(0, k);
            let mut resid = h.apply(&x);
            for i in 0..k {
                resid.column_mut(i).axpy(-theta[i], &x.column(i), T::one());
            }
            let norms: Vec<T> = (0..k).map(|i| resid.column(i).norm()).collect();
            match norms.iter().position(|&r| !(r <= target)) {
                None => {
                    log::debug!("eigensolver converged after {restarts} restarts");
                    return Ok(DeflationBasis::from_parts_unchecked(x, theta[..k].to_vec(), norms));
                }
                Some(i) => worst = Some((i, norms[i])),
            }
        }
        if restarts >= opts.max_restarts {
            let (index, residual) = worst.unwrap_or_else(|| {
                let i = est_norms.iter().position(|&r| !(r <= target)).unwrap_or(0);
                (i, est_norms[i])
            });
            return Err(Error::EigenNotConverged {
                index,
                residual: residual.as_f64(),
                target: target.as_f64(),
                restarts,
            });
        }

        let keep = ((k + m_max) / 2).max(k + 1).min(m_max - bs);
        let u = v.columns(0, known) * y.columns(0, keep);
        let pending = v.columns(known, bs).into_owned();
        v.columns_mut(0, keep).copy_from(&u);
        v.columns_mut(keep, bs).copy_from(&pending);
        g.fill(T::zero());
        for i in 0..keep {
            g[(i, i)] = theta[i];
        }
        known = keep;
        restarts += 1;
    }
}

fn dense_lowest<T: Real, O: LinOp<T> + ?Sized>(h: &O, k: usize) -> Result<DeflationBasis<T>> {
    let n = h.dim();
    let dense = symmetrize(&h.apply(&DMatrix::identity(n, n)));
    let (vals, vecs) = sym_eigh(dense.clone());
    let q = vecs.columns(0, k).into_owned();
    let mut resid = &dense * &q;
    for i in 0..k {
        resid.column_mut(i).axpy(-vals[i], &q.column(i), T::one());
    }
    let norms = (0..k).map(|i| resid.column(i).norm()).collect();
    Ok(DeflationBasis::from_parts_unchecked(q, vals[..k].to_vec(), norms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormality_defect;
    use crate::spinsys::{build_hamiltonian, chain_xx, DiagonalOp, SparseOp};
    use nalgebra::DVector;

    #[test]
    fn k_zero_is_empty() {
        let op = DiagonalOp(DVector::from_fn(10, |i, _| i as f64));
        let b = lowest_eigenpairs(&op, 0, 1e-12).unwrap();
        assert!(b.is_empty());
        assert_eq!(b.dim(), 10);
    }

    #[test]
    fn diagonal_operator() {
        let op = DiagonalOp(DVector::from_fn(16, |i, _| (i + 1) as f64));
        let b = lowest_eigenpairs(&op, 3, 1e-13).unwrap();
        assert_eq!(b.lambda().len(), 3);
        for i in 0..3 {
            assert!((b.lambda()[i] - (i + 1) as f64).abs() < 1e-12);
            assert!((b.q()[(i, i)].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_site_singlet() {
        let h: SparseOp<f64> = build_hamiltonian(&chain_xx(2, 1.0, false)).unwrap();
        let b = lowest_eigenpairs(&h, 1, 1e-13).unwrap();
        assert!((b.lambda()[0] + 2.0).abs() < 1e-13);
        let q = b.q().column(0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let sign = q[1].signum();
        let want = [0.0, s, -s, 0.0];
        for (a, w) in q.iter().zip(want) {
            assert!((a - sign * w).abs() < 1e-12);
        }
    }

    #[test]
    fn iterative_path_matches_dense() {
        let h: SparseOp<f64> = build_hamiltonian(&chain_xx(9, 1.0, false).with_field(0.3)).unwrap();
        let dense = crate::linalg::sym_eigvals(h.to_dense());
        let opts = EigenOptions {
            dense_threshold: 0,
            ..EigenOptions::default()
        };
        let b = lowest_eigenpairs_with(&h, 12, &opts).unwrap();
        for i in 0..12 {
            assert!((b.lambda()[i] - dense[i]).abs() < 1e-11, "{i}: {} vs {}", b.lambda()[i], dense[i]);
            assert!(b.residual_norms()[i] <= 1e-13 * 10.0);
        }
        assert!(orthonormality_defect(b.q()) < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let h: SparseOp<f64> = build_hamiltonian(&chain_xx(9, 1.0, false).with_field(0.3)).unwrap();
        let opts = EigenOptions {
            dense_threshold: 0,
            max_restarts: 0,
            max_basis: Some(12),
            block_size: Some(2),
            ..EigenOptions::default()
        };
        let err = lowest_eigenpairs_with(&h, 6, &opts).unwrap_err();
        assert!(matches!(err, Error::EigenNotConverged { .. }), "{err}");
    }
}
