//! Krylov machinery: extremal eigenpairs for deflation, the block-Lanczos
//! recurrence with explicit deflation, and block Gauss quadrature.

mod basis;
mod depth;
mod eigen;
mod lanczos;
mod quadrature;

pub use basis::DeflationBasis;
pub use depth::{choose_depth, DepthChoice, DepthPolicy};
pub use eigen::{lowest_eigenpairs, lowest_eigenpairs_with, EigenOptions};
pub use lanczos::{block_lanczos_defl, BlockLanczos, BlockTridiagonal, LanczosOptions, LanczosRun};
pub use quadrature::{matfun_quadrature, GaussRule};
