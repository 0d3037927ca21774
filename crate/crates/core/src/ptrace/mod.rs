//! Partial-trace estimators: exact low-rank pieces, the plain and deflated
//! typicality estimators, the Krylov estimator for `exp(−βH)`, and
//! jackknife error bars.

mod estimate;
mod estimators;
mod probes;
mod scaled;
mod thermal;

pub use estimate::{jackknife_from_loo, jackknife_scalar, jackknife_stderr, PartialTraceEstimate};
pub use estimators::{
    estimate_deflated_dense, estimate_deflated_general, estimate_plain, partial_trace_lowrank, partial_trace_rank1,
    randomized_range, residual_quadratic_general_q, RangeBasis,
};
pub use probes::{probe_block, ProbeConfig, ProbeDistribution, PILOT_STREAM};
pub use scaled::LogScaledMatrix;
pub use thermal::{estimate_thermal, ground_state_density, MatvecCounts, ThermalEstimate, ThermalOptions};
