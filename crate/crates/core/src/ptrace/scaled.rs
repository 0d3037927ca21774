use nalgebra::DMatrix;

use crate::linalg::trace;
use crate::Real;

/// `exp(log_scale) · mat`.
///
/// Normalization moves powers of two between the two factors, so it is
/// exact and leaves the largest entry of `mat` in `[2^{-1/2}, 2^{1/2})`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogScaledMatrix<T: Real> {
    mat: DMatrix<T>,
    log_scale: T,
}

impl<T: Real> LogScaledMatrix<T> {
    pub fn new(mat: DMatrix<T>, log_scale: T) -> Self {
        let mut out = Self { mat, log_scale };
        out.normalize();
        out
    }

    pub fn from_matrix(mat: DMatrix<T>) -> Self {
        Self::new(mat, T::zero())
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            mat: DMatrix::zeros(n, n),
            log_scale: T::zero(),
        }
    }

    pub fn mat(&self) -> &DMatrix<T> {
        &self.mat
    }

    pub fn log_scale(&self) -> T {
        self.log_scale
    }

    pub fn is_zero(&self) -> bool {
        self.mat.iter().all(|x| x.is_zero())
    }

    fn normalize(&mut self) {
        let norm = self.mat.amax();
        if norm.is_zero() || !norm.is_finite() {
            return;
        }
        let e = norm.log2().round();
        if e.is_zero() {
            return;
        }
        // 2^-e itself overflows for subnormal entries, so scale in steps
        let two = T::lit(2.0);
        let step = T::lit(f64::from(T::MAX_EXP / 2));
        let mut rest = -e;
        while !rest.is_zero() {
            let k = rest.max(-step).min(step);
            self.mat.scale_mut(two.powf(k));
            rest = rest - k;
        }
        self.log_scale += e * T::ln_2();
    }

    /// `mat · exp(log_scale − target)`.
    pub fn rescaled_to(&self, target: T) -> DMatrix<T> {
        if self.is_zero() {
            return self.mat.clone();
        }
        &self.mat * (self.log_scale - target).exp()
    }

    /// Dense value; may overflow or underflow for extreme scales.
    pub fn to_matrix(&self) -> DMatrix<T> {
        self.rescaled_to(T::zero())
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self::new(&self.mat * factor, self.log_scale)
    }

    /// Sum of `items`, evaluated at the largest scale among them.
    pub fn sum<'a>(items: impl IntoIterator<Item = &'a Self>, n: usize) -> Self
    where
        T: 'a,
    {
        let items: Vec<&Self> = items.into_iter().filter(|x| !x.is_zero()).collect();
        let Some(scale) = items.iter().map(|x| x.log_scale).reduce(|a, b| a.max(b)) else {
            return Self::zeros(n);
        };
        let mut acc = DMatrix::zeros(n, n);
        for x in items {
            acc += x.rescaled_to(scale);
        }
        Self::new(acc, scale)
    }

    /// `mat / tr(mat)`: the scale cancels, so this never overflows.
    pub fn trace_normalized(&self) -> Option<DMatrix<T>> {
        let tr = trace(&self.mat);
        if tr.is_zero() || !tr.is_finite() {
            return None;
        }
        Some(&self.mat / tr)
    }

    /// `ln tr(exp(log_scale)·mat)` when the trace is positive.
    pub fn log_trace(&self) -> Option<T> {
        let tr = trace(&self.mat);
        (tr > T::zero()).then(|| tr.ln() + self.log_scale)
    }
}
