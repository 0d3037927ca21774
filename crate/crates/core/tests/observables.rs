mod common;

use common::*;
use nalgebra::DMatrix;
use partial_trace::krylov::lowest_eigenpairs;
use partial_trace::observables::{
    entanglement_spectrum, ergotropy, internal_energy, passive_energy, von_neumann_entropy, DensityMatrix,
};
use partial_trace::oracle::DenseSpectrum;
use partial_trace::ptrace::estimate_thermal;
use partial_trace::spinsys::{build_hamiltonian, chain_xx, SparseOp};
use partial_trace::{BipartiteSplit, ProbeConfig, ThermalOptions};
use proptest::prelude::*;

fn random_density(d: usize, seed: u64) -> DMatrix<f64> {
    let g = gaussian(d, d, seed);
    let rho = &g * g.transpose();
    let tr = rho.trace();
    rho / tr
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn conjugation_invariance(d in 2usize..=8, seed in any::<u64>()) {
        let rho = random_density(d, seed);
        let h_s = random_symmetric(d, seed ^ 1);
        let u = random_orthonormal(d, d, seed ^ 2);
        let a = DensityMatrix::new(rho.clone()).unwrap();
        let b = DensityMatrix::new(&u * &rho * u.transpose()).unwrap();
        let hb = &u * &h_s * u.transpose();
        prop_assert!((von_neumann_entropy(&a) - von_neumann_entropy(&b)).abs() < 1e-10);
        let (ea, eb) = (ergotropy(&a, &h_s).unwrap(), ergotropy(&b, &hb).unwrap());
        prop_assert!((ea - eb).abs() < 1e-10);
        prop_assert!(ea >= -1e-10);
    }

    #[test]
    fn passive_energy_is_a_lower_bound(d in 2usize..=8, seed in any::<u64>()) {
        let rho = random_density(d, seed);
        let h_s = random_symmetric(d, seed ^ 3);
        let passive = passive_energy(&DensityMatrix::new(rho.clone()).unwrap(), &h_s).unwrap();
        for r in 0..100u64 {
            let u = random_orthonormal(d, d, seed.wrapping_add(r));
            let moved = DensityMatrix::new(&u * &rho * u.transpose()).unwrap();
            prop_assert!(passive <= internal_energy(&moved, &h_s).unwrap() + 1e-12);
        }
    }
}

#[test]
fn ties_do_not_change_ergotropy() {
    // doubly degenerate ρ and H_s: every ordering of the tied pairs agrees
    let rho = DMatrix::from_diagonal(&nalgebra::dvector![0.4, 0.4, 0.1, 0.1]);
    let h_s = DMatrix::from_diagonal(&nalgebra::dvector![1.0, -1.0, -1.0, 2.0]);
    let e = ergotropy(&DensityMatrix::new(rho.clone()).unwrap(), &h_s).unwrap();
    let want: f64 = (0.4 + 0.4 * -1.0 + 0.1 * -1.0 + 0.1 * 2.0) - (0.4 * -1.0 + 0.4 * -1.0 + 0.1 * 1.0 + 0.1 * 2.0);
    assert!((e - want).abs() < 1e-14);
    for seed in 0..20 {
        let u = random_orthonormal(4, 4, seed);
        let b = DensityMatrix::new(&u * &rho * u.transpose()).unwrap();
        assert!((ergotropy(&b, &(&u * &h_s * u.transpose())).unwrap() - e).abs() < 1e-12);
    }
}

#[test]
fn entanglement_spectrum_of_the_estimated_state() {
    let h: SparseOp<f64> = build_hamiltonian(&chain_xx(8, 1.0, false).with_field(0.3)).unwrap();
    let split = BipartiteSplit::from_sites(8, 2).unwrap();
    let beta = 10.0;
    let want = DensityMatrix::new(DenseSpectrum::new(&h).unwrap().reduced_density(beta, &split).unwrap()).unwrap();
    // deep deflation makes the stochastic residual negligible at this β
    let basis = lowest_eigenpairs(&h, 64, 1e-13).unwrap();
    let th = estimate_thermal(&h, &split, &basis, &[beta], &ProbeConfig::new(4, 7), &ThermalOptions::default())
        .unwrap();
    let got = DensityMatrix::new(th.estimates[0].density_matrix().unwrap()).unwrap();
    let oracle_levels: Vec<f64> = {
        let mut p: Vec<f64> = want.rho().clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        p.sort_by(|a, b| b.partial_cmp(a).unwrap());
        p.into_iter().filter(|&p| p > 1e-10).map(|p| -p.ln()).collect()
    };
    let levels = entanglement_spectrum(&got).levels;
    assert!(levels.len() >= oracle_levels.len());
    for (a, b) in levels.iter().zip(&oracle_levels) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}
