//! Matrix-free estimation of partial traces `tr_b f(H)` for spin Hamiltonians.
//!
//! The pieces, bottom-up:
//! - [`spinsys`]: coupling specifications, sparse Hamiltonians, operator trait;
//! - [`krylov`]: eigenpairs for deflation, deflated block Lanczos, Gauss quadrature;
//! - [`ptrace`]: deflated typicality estimators and jackknife errors;
//! - [`observables`]: entropy, entanglement spectrum, ergotropy;
//! - [`oracle`]: dense references used for validation.
//!
//! Everything numerical is generic over [`Real`] (`f32`/`f64`); the aliases
//! below fix `f64`.

pub mod error;
pub mod krylov;
pub mod linalg;
pub mod observables;
pub mod oracle;
pub mod ptrace;
mod real;
pub mod spinsys;

pub use error::{Error, Result};
pub use real::Real;

pub use krylov::{DepthPolicy, EigenOptions, LanczosOptions};
pub use ptrace::{ProbeConfig, ProbeDistribution, ThermalOptions};
pub use spinsys::{BipartiteSplit, CouplingSpec, LinOp};

pub type Hamiltonian = spinsys::SparseOp<f64>;
pub type Basis = krylov::DeflationBasis<f64>;
pub type Tridiagonal = krylov::BlockTridiagonal<f64>;
pub type Estimate = ptrace::PartialTraceEstimate<f64>;
pub type ThermalResult = ptrace::ThermalEstimate<f64>;
pub type ScaledMatrix = ptrace::LogScaledMatrix<f64>;
pub type Density = observables::DensityMatrix<f64>;
pub type Spectrum = oracle::DenseSpectrum<f64>;
