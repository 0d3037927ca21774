use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::symmetrize;
use crate::Real;

use super::LogScaledMatrix;

/// Deflated stochastic estimate `Σ B_defl + (1/m) Σ B_rem` of a partial trace.
#[derive(Clone, Debug)]
pub struct PartialTraceEstimate<T: Real> {
    pub defl_term: LogScaledMatrix<T>,
    pub rem_samples: Vec<LogScaledMatrix<T>>,
    /// Symmetrized `defl_term + mean(rem_samples)`.
    pub mean: LogScaledMatrix<T>,
    /// `‖M − Mᵀ‖_F / ‖M‖_F` of the mean before symmetrization.
    pub asymmetry: T,
    /// Operator applications spent on this estimate.
    pub applies: u64,
}

impl<T: Real> PartialTraceEstimate<T> {
    pub fn from_parts(defl_term: LogScaledMatrix<T>, rem_samples: Vec<LogScaledMatrix<T>>, applies: u64) -> Self {
        let n = defl_term.mat().nrows();
        let m = T::from_count(rem_samples.len().max(1));
        let rem = LogScaledMatrix::sum(&rem_samples, n).scaled(T::one() / m);
        let raw = LogScaledMatrix::sum([&defl_term, &rem], n);
        let norm = raw.mat().norm();
        let asymmetry = if norm.is_zero() {
            T::zero()
        } else {
            (raw.mat() - raw.mat().transpose()).norm() / norm
        };
        let mean = LogScaledMatrix::new(symmetrize(raw.mat()), raw.log_scale());
        Self {
            defl_term,
            rem_samples,
            mean,
            asymmetry,
            applies,
        }
    }

    pub fn m(&self) -> usize {
        self.rem_samples.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.mat().nrows()
    }

    /// Unscaled mean estimate.
    pub fn mean_matrix(&self) -> DMatrix<T> {
        self.mean.to_matrix()
    }

    /// `ρ* = B / tr B`.
    pub fn density_matrix(&self) -> Result<DMatrix<T>> {
        self.mean
            .trace_normalized()
            .ok_or_else(|| Error::InvalidArgument("estimate has zero trace".into()))
    }

    /// Leave-one-out estimates `defl + mean_{i≠j}(rem_i)`, symmetrized.
    pub fn leave_one_out(&self) -> Result<Vec<LogScaledMatrix<T>>> {
        let m = self.m();
        if m < 2 {
            return Err(Error::TooFewSamples(m));
        }
        let n = self.dim();
        let total = LogScaledMatrix::sum(&self.rem_samples, n);
        let inv = T::one() / T::from_count(m - 1);
        Ok(self
            .rem_samples
            .iter()
            .map(|r| {
                let neg = r.scaled(-T::one());
                let rest = LogScaledMatrix::sum([&total, &neg], n).scaled(inv);
                let s = LogScaledMatrix::sum([&self.defl_term, &rest], n);
                LogScaledMatrix::new(symmetrize(s.mat()), s.log_scale())
            })
            .collect())
    }

    /// Entrywise jackknife standard error of the mean, at the mean's scale.
    pub fn stderr(&self) -> Result<LogScaledMatrix<T>> {
        let scale = self.mean.log_scale();
        let loo: Vec<DMatrix<T>> = self.leave_one_out()?.iter().map(|x| x.rescaled_to(scale)).collect();
        Ok(LogScaledMatrix::new(jackknife_from_loo(&loo), scale))
    }

    /// Leave-one-out density matrices, for jackknifing derived quantities.
    pub fn leave_one_out_densities(&self) -> Result<Vec<DMatrix<T>>> {
        self.leave_one_out()?
            .iter()
            .map(|x| {
                x.trace_normalized()
                    .ok_or_else(|| Error::InvalidArgument("leave-one-out estimate has zero trace".into()))
            })
            .collect()
    }

    /// Entrywise jackknife standard error of `ρ*`.
    pub fn density_stderr(&self) -> Result<DMatrix<T>> {
        Ok(jackknife_from_loo(&self.leave_one_out_densities()?))
    }
}

/// Entrywise jackknife standard error of the sample mean of `samples`.
pub fn jackknife_stderr<T: Real>(samples: &[DMatrix<T>]) -> Result<DMatrix<T>> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::TooFewSamples(m));
    }
    let (r, c) = samples[0].shape();
    if let Some(bad) = samples.iter().find(|s| s.shape() != (r, c)) {
        return Err(Error::DimensionMismatch {
            context: "jackknife samples",
            expected: r * c,
            got: bad.len(),
        });
    }
    let total = samples.iter().fold(DMatrix::zeros(r, c), |acc, s| acc + s);
    let inv = T::one() / T::from_count(m - 1);
    let loo: Vec<DMatrix<T>> = samples.iter().map(|s| (&total - s) * inv).collect();
    Ok(jackknife_from_loo(&loo))
}

/// `sqrt((m−1)/m · Σ_j (x_(j) − x̄_(·))²)` entrywise over leave-one-out values.
pub fn jackknife_from_loo<T: Real>(loo: &[DMatrix<T>]) -> DMatrix<T> {
    let m = T::from_count(loo.len());
    let (r, c) = loo[0].shape();
    let centre = loo.iter().fold(DMatrix::zeros(r, c), |acc, s| acc + s) / m;
    let mut ss = DMatrix::<T>::zeros(r, c);
    for x in loo {
        let d = x - &centre;
        ss += d.component_mul(&d);
    }
    ss.map(|v| ((m - T::one()) / m * v).sqrt())
}

/// Scalar jackknife from leave-one-out values of a statistic.
pub fn jackknife_scalar<T: Real>(loo: &[T]) -> T {
    let m = T::from_count(loo.len());
    let centre = loo.iter().fold(T::zero(), |a, &b| a + b) / m;
    let ss = loo.iter().fold(T::zero(), |a, &x| a + (x - centre) * (x - centre));
    ((m - T::one()) / m * ss).sqrt()
}
