//! Quantities derived from a reduced density matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{sym_eigh, sym_eigvals, symmetrize, trace};
use crate::Real;

const TRACE_TOL: f64 = 1e-10;

/// Symmetric unit-trace matrix with its spectrum.
///
/// Negative eigenvalues (estimator noise) are clamped to zero and the rest
/// renormalized for entropy and spectrum; the clamped mass is recorded.
/// Energies use the unclamped spectrum.
#[derive(Clone, Debug)]
pub struct DensityMatrix<T: Real> {
    rho: DMatrix<T>,
    // ascending, as computed
    eigenvalues: Vec<T>,
    probabilities: Vec<T>,
    clamped_mass: T,
}

impl<T: Real> DensityMatrix<T> {
    pub fn new(rho: DMatrix<T>) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::DimensionMismatch {
                context: "density matrix columns",
                expected: rho.nrows(),
                got: rho.ncols(),
            });
        }
        if rho.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("density matrix has non-finite entries".into()));
        }
        let rho = symmetrize(&rho);
        let tr = trace(&rho);
        if !((tr - T::one()).abs() <= T::lit(TRACE_TOL)) {
            return Err(Error::InvalidArgument(format!("density matrix trace {tr} is not 1")));
        }
        let eigenvalues = sym_eigvals(rho.clone());
        let clamped_mass = eigenvalues
            .iter()
            .filter(|&&p| p < T::zero())
            .fold(T::zero(), |a, &p| a - p);
        let mut probabilities: Vec<T> = eigenvalues.iter().map(|&p| p.max(T::zero())).collect();
        let total = probabilities.iter().fold(T::zero(), |a, &b| a + b);
        for p in &mut probabilities {
            *p /= total;
        }
        Ok(Self {
            rho,
            eigenvalues,
            probabilities,
            clamped_mass,
        })
    }

    /// Maximally mixed state `I/d`.
    pub fn maximally_mixed(d: usize) -> Self {
        Self::new(DMatrix::identity(d, d) / T::from_count(d)).expect("valid state")
    }

    pub fn rho(&self) -> &DMatrix<T> {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// Raw eigenvalues, ascending.
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    /// Clamped, renormalized eigenvalues, ascending.
    pub fn probabilities(&self) -> &[T] {
        &self.probabilities
    }

    /// Total magnitude of the negative eigenvalues removed by clamping.
    pub fn clamped_mass(&self) -> T {
        self.clamped_mass
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues[0]
    }
}

/// `−Σ p ln p` in nats.
pub fn von_neumann_entropy<T: Real>(rho: &DensityMatrix<T>) -> T {
    rho.probabilities
        .iter()
        .filter(|&&p| p > T::zero())
        .fold(T::zero(), |s, &p| s - p * p.ln())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntanglementSpectrum<T> {
    /// `−ln p` for every positive `p`, ascending.
    pub levels: Vec<T>,
    /// Number of eigenvalues that were zero after clamping.
    pub clamped: usize,
}

pub fn entanglement_spectrum<T: Real>(rho: &DensityMatrix<T>) -> EntanglementSpectrum<T> {
    let mut levels: Vec<T> = rho
        .probabilities
        .iter()
        .filter(|&&p| p > T::zero())
        .map(|&p| -p.ln())
        .collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    EntanglementSpectrum {
        clamped: rho.dim() - levels.len(),
        levels,
    }
}

fn check_hs<T: Real>(rho: &DensityMatrix<T>, h_s: &DMatrix<T>) -> Result<()> {
    if h_s.shape() != (rho.dim(), rho.dim()) {
        return Err(Error::DimensionMismatch {
            context: "subsystem Hamiltonian",
            expected: rho.dim(),
            got: h_s.nrows(),
        });
    }
    Ok(())
}

/// `tr(H_s ρ)`.
pub fn internal_energy<T: Real>(rho: &DensityMatrix<T>, h_s: &DMatrix<T>) -> Result<T> {
    check_hs(rho, h_s)?;
    Ok(h_s.dot(&rho.rho))
}

/// `Σ p↓_i ε↑_i`: the energy of the passive state with the spectrum of `ρ`.
pub fn passive_energy<T: Real>(rho: &DensityMatrix<T>, h_s: &DMatrix<T>) -> Result<T> {
    check_hs(rho, h_s)?;
    let eps = sym_eigvals(h_s.clone());
    Ok(rho
        .eigenvalues
        .iter()
        .rev()
        .zip(&eps)
        .fold(T::zero(), |a, (&p, &e)| a + p * e))
}

/// Ergotropy `tr(H_s ρ) − Σ p↓ ε↑`.
pub fn ergotropy<T: Real>(rho: &DensityMatrix<T>, h_s: &DMatrix<T>) -> Result<T> {
    Ok(internal_energy(rho, h_s)? - passive_energy(rho, h_s)?)
}

/// Orthogonal `U` with `UρUᵀ` passive for `H_s`: it maps the `i`-th
/// largest eigenvector of `ρ` onto the `i`-th lowest eigenvector of `H_s`.
pub fn extraction_unitary<T: Real>(rho: &DensityMatrix<T>, h_s: &DMatrix<T>) -> Result<DMatrix<T>> {
    check_hs(rho, h_s)?;
    let (_, q_rho) = sym_eigh(rho.rho.clone());
    let (_, q_h) = sym_eigh(h_s.clone());
    let d = rho.dim();
    // descending ρ order paired with ascending energies
    let q_rho_desc = DMatrix::from_fn(d, d, |r, c| q_rho[(r, d - 1 - c)]);
    Ok(q_h * q_rho_desc.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v))
    }

    #[test]
    fn entropy_examples() {
        let mixed = DensityMatrix::<f64>::maximally_mixed(4);
        assert!((von_neumann_entropy(&mixed) - 4f64.ln()).abs() < 1e-14);
        let pure = DensityMatrix::new(diag(&[0.0, 1.0, 0.0])).unwrap();
        assert_eq!(von_neumann_entropy(&pure), 0.0);
        let half = DensityMatrix::new(diag(&[0.5, 0.5, 0.0, 0.0])).unwrap();
        assert!((von_neumann_entropy(&half) - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn spectrum_examples() {
        let s = entanglement_spectrum(&DensityMatrix::<f64>::maximally_mixed(4));
        assert_eq!(s.clamped, 0);
        assert!(s.levels.iter().all(|l| (l - 4f64.ln()).abs() < 1e-14));
        let s = entanglement_spectrum(&DensityMatrix::new(diag(&[1.0, 0.0, 0.0])).unwrap());
        assert_eq!(s.levels, vec![0.0]);
        assert_eq!(s.clamped, 2);
    }

    #[test]
    fn negative_eigenvalues_are_clamped() {
        let rho = DensityMatrix::new(diag(&[0.6, 0.5, -0.1])).unwrap();
        assert!((rho.clamped_mass() - 0.1).abs() < 1e-15);
        let p = rho.probabilities();
        assert_eq!(p[0], 0.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(DensityMatrix::new(diag(&[0.6, 0.6])).is_err());
    }

    #[test]
    fn ergotropy_examples() {
        let h = diag(&[-1.0, 0.5, 2.0]);
        let ground = DensityMatrix::new(diag(&[1.0, 0.0, 0.0])).unwrap();
        assert!(ergotropy(&ground, &h).unwrap().abs() < 1e-14);
        let top = DensityMatrix::new(diag(&[0.0, 0.0, 1.0])).unwrap();
        assert!((ergotropy(&top, &h).unwrap() - 3.0).abs() < 1e-14);
        let mixed = DensityMatrix::maximally_mixed(3);
        assert!(ergotropy(&mixed, &h).unwrap().abs() < 1e-14);
        assert!(ergotropy(&mixed, &diag(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn extraction_unitary_reaches_passive_energy() {
        let h = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.0, 0.3, -0.5, 0.2, 0.0, 0.2, 0.4]);
        let rho = DensityMatrix::new(DMatrix::from_row_slice(
            3,
            3,
            &[0.2, 0.05, 0.01, 0.05, 0.3, -0.02, 0.01, -0.02, 0.5],
        ))
        .unwrap();
        let u = extraction_unitary(&rho, &h).unwrap();
        let moved = DensityMatrix::new(&u * rho.rho() * u.transpose()).unwrap();
        let e: f64 = internal_energy(&moved, &h).unwrap();
        assert!((e - passive_energy(&rho, &h).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn energy_is_entrywise_sum() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, -1.0]);
        let rho = DensityMatrix::new(DMatrix::from_row_slice(2, 2, &[0.25, 0.1, 0.1, 0.75])).unwrap();
        let mut want = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                want += h[(i, j)] * rho.rho()[(j, i)];
            }
        }
        assert!((internal_energy(&rho, &h).unwrap() - want).abs() < 1e-15f64);
    }
}
