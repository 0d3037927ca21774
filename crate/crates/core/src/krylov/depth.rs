use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spinsys::LinOp;
use crate::Real;

use super::{BlockLanczos, DeflationBasis, GaussRule, LanczosOptions};

/// How many Lanczos blocks to run per probe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DepthPolicy {
    Fixed(usize),
    /// Pilot run over the whole β grid; see [`choose_depth`].
    Auto { rel_tol: f64, t_max: usize },
}

impl Default for DepthPolicy {
    fn default() -> Self {
        DepthPolicy::Auto {
            rel_tol: 1e-10,
            t_max: 512,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DepthChoice {
    pub depth: usize,
    /// Relative change between the chosen depth and the reference depth.
    pub change: f64,
    /// Operator applications spent by the pilot recurrence.
    pub applies: u64,
}

/// Picks the Lanczos depth for `f(x) = exp(−βx)` on a pilot block, for
/// every `β` in `betas` at once.
///
/// The pilot recurrence is doubled (1, 2, 4, …) until the quadrature output
/// at depth `t` agrees with the one at `2t` to `rel_tol` for every `β`; the
/// smallest depth in `(t/2, t]` that still agrees with the deeper reference
/// is returned. The change is measured in Frobenius norm relative to the
/// pilot's whole form `Yᵀ f(H) Y`, deflated part included, since that is the
/// quantity the estimator samples. Without deflation the largest `β` is the
/// binding one; with it the deflated part dominates at large `β` and the
/// binding `β` moves inward. An exhausted Krylov space is exact, so it ends
/// the search at its depth.
pub fn choose_depth<T: Real, O: LinOp<T> + ?Sized>(
    h: &O,
    basis: &DeflationBasis<T>,
    pilot: &DMatrix<T>,
    betas: &[T],
    rel_tol: T,
    t_max: usize,
) -> Result<DepthChoice> {
    if !(rel_tol > T::zero()) {
        return Err(Error::InvalidArgument("depth tolerance must be positive".into()));
    }
    if t_max == 0 {
        return Err(Error::InvalidArgument("depth cap must be at least 1".into()));
    }
    if let Some(b) = betas.iter().find(|b| !(b.is_finite() && **b >= T::zero())) {
        return Err(Error::InvalidArgument(format!("inverse temperature {b} must be finite and >= 0")));
    }
    // Yᵀ Q f(Λ) Qᵀ Y: the part of the pilot's quadratic form that deflation
    // handles exactly
    let qy = basis.q().tr_mul(pilot);
    let deflated = |beta: T, shift: T| {
        let mut w = qy.clone();
        for (mut row, &l) in w.row_iter_mut().zip(basis.lambda()) {
            row *= (-beta * (l - shift)).exp();
        }
        qy.tr_mul(&w)
    };
    let mut lz = BlockLanczos::new(h, pilot, basis.q(), LanczosOptions::default())?;
    lz.step()?;
    let mut t = 1usize;
    loop {
        lz.advance_to((2 * t).min(t_max))?;
        let deep = lz.depth();
        let trid = lz.tridiagonal();
        let reference_rule = GaussRule::from_tridiagonal(&trid);
        let shift = match basis.lambda().first() {
            Some(&l0) => l0.min(reference_rule.min_node()),
            None => reference_rule.min_node(),
        };
        let references: Vec<(T, DMatrix<T>, T)> = betas
            .iter()
            .map(|&beta| {
                let r = reference_rule.evaluate_exp(beta, shift);
                let scale = (&deflated(beta, shift) + &r).norm();
                (beta, r, scale)
            })
            .collect();
        let change_at = |d: usize| -> T {
            let rule = GaussRule::from_tridiagonal(&trid.truncated(d));
            references.iter().fold(T::zero(), |worst, (beta, r, scale)| {
                let c = (rule.evaluate_exp(*beta, shift) - r).norm() / *scale;
                // a zero form (β = 0 with a zero pilot) agrees trivially
                if c.is_finite() {
                    worst.max(c)
                } else {
                    worst
                }
            })
        };
        let change = change_at(t);
        if change <= rel_tol || deep == t {
            let (mut lo, mut hi) = ((t / 2).max(1), t);
            let mut best = change;
            while lo < hi {
                let mid = (lo + hi) / 2;
                let c = change_at(mid);
                if c <= rel_tol {
                    hi = mid;
                    best = c;
                } else {
                    lo = mid + 1;
                }
            }
            return Ok(DepthChoice {
                depth: hi,
                change: best.as_f64(),
                applies: lz.applies(),
            });
        }
        if deep >= t_max {
            return Err(Error::DepthNotConverged {
                t_max,
                last_change: change.as_f64(),
            });
        }
        t = deep;
    }
}
