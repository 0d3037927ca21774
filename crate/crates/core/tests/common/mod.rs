#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian(r: usize, c: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng))
}

pub fn random_symmetric(d: usize, seed: u64) -> DMatrix<f64> {
    let g = gaussian(d, d, seed);
    (&g + g.transpose()) * 0.5
}

pub fn random_orthonormal(d: usize, k: usize, seed: u64) -> DMatrix<f64> {
    gaussian(d, k, seed).qr().q()
}

/// Eigenvectors of `a` for its `k` largest-magnitude eigenvalues.
pub fn dominant_subspace(a: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let eig = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].abs().partial_cmp(&eig.eigenvalues[i].abs()).unwrap());
    DMatrix::from_fn(a.nrows(), k, |r, c| eig.eigenvectors[(r, order[c])])
}

pub struct GrandMean {
    pub mean: DMatrix<f64>,
    pub stderr: DMatrix<f64>,
}

pub fn grand_mean(runs: &[DMatrix<f64>]) -> GrandMean {
    let n = runs.len() as f64;
    let mean = runs.iter().fold(DMatrix::zeros(runs[0].nrows(), runs[0].ncols()), |a, r| a + r) / n;
    let mut var = DMatrix::zeros(mean.nrows(), mean.ncols());
    for r in runs {
        let d = r - &mean;
        var += d.component_mul(&d);
    }
    let stderr = (var / (n - 1.0) / n).map(f64::sqrt);
    GrandMean { mean, stderr }
}

/// Largest `|a − b| / (σ·se + floor)`; the floor covers entries whose
/// spread is exactly zero.
pub fn max_z(a: &DMatrix<f64>, b: &DMatrix<f64>, se: &DMatrix<f64>, sigmas: f64, floor: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).abs() / (sigmas * se[(i, j)] + floor));
        }
    }
    worst
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
