//! Spin-1/2 Hamiltonians: coupling descriptions, real sparse assembly, and
//! the matrix-free operator interface used by every other module.

mod hamiltonian;
mod operator;
mod spec;
mod split;
mod systems;

pub use hamiltonian::{
    build_hamiltonian, build_hamiltonian_with_limit, subsystem_hamiltonian, DEFAULT_MAX_SITES,
};
pub use operator::{CountingOp, DenseOp, DiagonalOp, IdentityOp, LinOp, ShiftedOp, SparseOp};
pub use spec::{Axis, Coupling, CouplingSpec};
pub use split::BipartiteSplit;
pub use systems::{chain_xx, kagome_strip, long_range_xx, KAGOME_SITES_PER_CELL};
