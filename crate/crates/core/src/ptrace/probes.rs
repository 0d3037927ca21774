use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

/// Stream reserved for the depth-selection pilot probe.
pub const PILOT_STREAM: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeDistribution {
    /// iid standard normal entries.
    #[default]
    Gaussian,
    /// Uniform on the sphere of radius `√d_b`.
    Sphere,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeConfig {
    pub m: usize,
    pub distribution: ProbeDistribution,
    pub seed: u64,
    /// Worker count; `None` uses the ambient rayon pool. Output does not
    /// depend on it.
    pub parallel_width: Option<usize>,
}

impl ProbeConfig {
    pub fn new(m: usize, seed: u64) -> Self {
        Self {
            m,
            distribution: ProbeDistribution::Gaussian,
            seed,
            parallel_width: None,
        }
    }

    pub fn with_distribution(mut self, distribution: ProbeDistribution) -> Self {
        self.distribution = distribution;
        self
    }

    pub fn with_parallel_width(mut self, width: usize) -> Self {
        self.parallel_width = Some(width);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::TooFewSamples(0));
        }
        if self.parallel_width == Some(0) {
            return Err(Error::InvalidArgument("parallel width must be at least 1".into()));
        }
        Ok(())
    }

    /// The probe `v` of sample `index`; each sample owns one RNG stream, so
    /// the draw is independent of scheduling.
    pub fn vector<T: Real>(&self, d_b: usize, index: u64) -> DVector<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let raw: Vec<f64> = (0..d_b).map(|_| StandardNormal.sample(&mut rng)).collect();
        let scale = match self.distribution {
            ProbeDistribution::Gaussian => 1.0,
            ProbeDistribution::Sphere => {
                let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
                (d_b as f64).sqrt() / norm
            }
        };
        DVector::from_iterator(d_b, raw.into_iter().map(|x| T::lit(x * scale)))
    }

    /// Runs `f(sample_index)` for every sample and returns the results in
    /// index order.
    pub(crate) fn run<R, F>(&self, f: F) -> Result<Vec<R>>
    where
        R: Send,
        F: Fn(usize) -> Result<R> + Sync + Send,
    {
        match self.parallel_width {
            Some(1) => (0..self.m).map(&f).collect(),
            Some(w) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(w)
                    .build()
                    .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
                pool.install(|| (0..self.m).into_par_iter().map(&f).collect())
            }
            None => (0..self.m).into_par_iter().map(&f).collect(),
        }
    }
}

/// `Y = I_{d_s} ⊗ v`, a `d_s·d_b × d_s` block.
pub fn probe_block<T: Real>(v: &DVector<T>, d_s: usize) -> DMatrix<T> {
    let d_b = v.len();
    let mut y = DMatrix::zeros(d_s * d_b, d_s);
    for i in 0..d_s {
        y.view_mut((i * d_b, i), (d_b, 1)).copy_from(v);
    }
    y
}

/// `Yᵀ W` for `Y = I ⊗ v` without forming `Y`.
pub(crate) fn probe_contract<T: Real>(v: &DVector<T>, d_s: usize, w: &DMatrix<T>) -> DMatrix<T> {
    let d_b = v.len();
    DMatrix::from_fn(d_s, w.ncols(), |i, j| w.view((i * d_b, j), (d_b, 1)).dot(v))
}
