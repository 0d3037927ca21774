use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid coupling specification: {0}")]
    InvalidSpec(String),

    #[error("system of {n_sites} sites exceeds the configured maximum of {max_sites}")]
    TooManySites { n_sites: usize, max_sites: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "eigensolver did not converge: eigenpair {index} has residual {residual:e} \
         (target {target:e}) after {restarts} restarts"
    )]
    EigenNotConverged {
        index: usize,
        residual: f64,
        target: f64,
        restarts: usize,
    },

    #[error("block Krylov space degenerated at iteration {iteration}: |R_ii| = {diagonal:e} vs ||X||_F = {norm:e}")]
    DegenerateKrylov {
        iteration: usize,
        diagonal: f64,
        norm: f64,
    },

    #[error("matrix function is undefined at quadrature node {node}")]
    Domain { node: f64 },

    #[error("Lanczos depth did not stagnate before t = {t_max}; last relative change {last_change:e}")]
    DepthNotConverged { t_max: usize, last_change: f64 },

    #[error("basis is not orthonormal: ||Q^T Q - I||_F = {defect:e} exceeds {tolerance:e}")]
    NotOrthonormal { defect: f64, tolerance: f64 },

    #[error("jackknife needs at least two samples, got {0}")]
    TooFewSamples(usize),

    #[error("dense oracle refuses dimension {dim} (limit {limit})")]
    OracleTooLarge { dim: usize, limit: usize },

    #[error("failed to parse coupling file: {0}")]
    Parse(String),
}
