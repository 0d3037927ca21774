use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{Axis, BipartiteSplit, CouplingSpec, LinOp, SparseOp};
use crate::error::{Error, Result};
use crate::Real;

/// Assembly refuses systems larger than this unless a higher limit is given.
pub const DEFAULT_MAX_SITES: usize = 24;

pub fn build_hamiltonian<T: Real>(spec: &CouplingSpec) -> Result<SparseOp<T>> {
    build_hamiltonian_with_limit(spec, DEFAULT_MAX_SITES)
}

/// Assembles the spin Hamiltonian in the computational basis with real
/// arithmetic only.
///
/// Basis state `s` has site `i` (1-based) in bit `N − i`, so site 1 is the
/// most significant bit; bit 0 is spin up (`σᶻ = +1`). On a pair `(i, j)`
/// the σˣσˣ and σʸσʸ terms both flip the two bits; σʸσʸ carries `−1` when
/// the bits agree and `+1` when they differ, so the fused stencil is
/// `Jx − Jy` or `Jx + Jy` respectively.
pub fn build_hamiltonian_with_limit<T: Real>(
    spec: &CouplingSpec,
    max_sites: usize,
) -> Result<SparseOp<T>> {
    spec.validate()?;
    let n = spec.n_sites;
    if n > max_sites || n > 31 {
        return Err(Error::TooManySites {
            n_sites: n,
            max_sites: max_sites.min(31),
        });
    }
    let dim = 1usize << n;
    let bit = |site: usize| 1usize << (n - site);

    // (i, j) -> (Jx, Jy); off-diagonal stencils
    let mut flips: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
    for c in spec.couplings(Axis::X) {
        flips.entry((c.i, c.j)).or_default().0 += c.value;
    }
    for c in spec.couplings(Axis::Y) {
        flips.entry((c.i, c.j)).or_default().1 += c.value;
    }
    let flips: Vec<(usize, usize, T, T)> = flips
        .into_iter()
        .map(|((i, j), (jx, jy))| (bit(i), bit(j), T::lit(jx - jy), T::lit(jx + jy)))
        .collect();
    let zz: Vec<(usize, usize, T)> = spec
        .couplings(Axis::Z)
        .iter()
        .map(|c| (bit(c.i), bit(c.j), T::lit(c.value)))
        .collect();
    let half_h = T::lit(0.5 * spec.field_h);

    let sign = |s: usize, b: usize| if s & b == 0 { T::one() } else { -T::one() };

    let rows: Vec<Vec<(u32, T)>> = (0..dim)
        .map(|s| {
            let mut diag = T::zero();
            for &(bi, bj, v) in &zz {
                diag += v * sign(s, bi) * sign(s, bj);
            }
            for site in 1..=n {
                diag += half_h * sign(s, bit(site));
            }
            let mut row = Vec::with_capacity(flips.len() + 1);
            row.push((s as u32, diag));
            for &(bi, bj, same, differ) in &flips {
                let aligned = (s & bi == 0) == (s & bj == 0);
                let v = if aligned { same } else { differ };
                if v != T::zero() {
                    row.push(((s ^ bi ^ bj) as u32, v));
                }
            }
            row.sort_by_key(|&(c, _)| c);
            row
        })
        .collect();
    Ok(SparseOp::from_sorted_rows(rows))
}

/// Dense `H_s`: couplings with both sites inside (s) plus the field on (s).
pub fn subsystem_hamiltonian<T: Real>(
    spec: &CouplingSpec,
    split: &BipartiteSplit,
) -> Result<DMatrix<T>> {
    let n_s = split.n_sys_sites().ok_or_else(|| {
        Error::InvalidArgument("subsystem Hamiltonian needs a site-based split".into())
    })?;
    if n_s >= spec.n_sites {
        return Err(Error::InvalidArgument(format!(
            "split keeps {n_s} sites of a {}-site system",
            spec.n_sites
        )));
    }
    let sub = spec.restrict_to_leading(n_s);
    let op: SparseOp<T> = build_hamiltonian(&sub)?;
    debug_assert_eq!(op.dim(), split.d_s());
    Ok(op.to_dense())
}
