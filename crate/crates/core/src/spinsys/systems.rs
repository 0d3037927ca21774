//! Generators for the benchmark spin systems.

use super::{Axis, CouplingSpec};

/// Nearest-neighbour XX chain, `Jx = Jy = j`, `Jz = 0`, zero field.
///
/// The periodic wrap bond `(1, n)` is only added for `n > 2`; for two
/// sites it would coincide with the open bond.
pub fn chain_xx(n: usize, j: f64, periodic: bool) -> CouplingSpec {
    assert!(n >= 1, "a chain needs at least one site");
    let mut spec = CouplingSpec::new(n);
    let mut bond = |a: usize, b: usize| {
        spec.add(Axis::X, a, b, j).expect("chain bonds are valid");
        spec.add(Axis::Y, a, b, j).expect("chain bonds are valid");
    };
    for i in 1..n {
        bond(i, i + 1);
    }
    if periodic && n > 2 {
        bond(1, n);
    }
    spec
}

/// XX chain with power-law couplings `Jx = Jy = |i − j|^(−alpha)` on every
/// pair. `alpha = f64::INFINITY` gives the open nearest-neighbour chain with
/// unit coupling.
pub fn long_range_xx(n: usize, alpha: f64) -> CouplingSpec {
    assert!(alpha > 0.0, "power-law exponent must be positive");
    if alpha.is_infinite() {
        return chain_xx(n, 1.0, false);
    }
    let mut spec = CouplingSpec::new(n);
    for i in 1..=n {
        for j in i + 1..=n {
            let v = ((j - i) as f64).powf(-alpha);
            spec.add(Axis::X, i, j, v).expect("pairs are valid");
            spec.add(Axis::Y, i, j, v).expect("pairs are valid");
        }
    }
    spec
}

pub const KAGOME_SITES_PER_CELL: usize = 5;

/// Heisenberg Kagome strip built from a five-site cell template.
///
/// Cell `c` (0-based) owns sites `5c + 1 ..= 5c + 5` in the order
/// top-left, top-right, centre, bottom-left, bottom-right. Within a cell
/// the centre couples to the four corners with `j0` and the two rail
/// segments top-left–top-right and bottom-left–bottom-right carry `j1`.
/// Rail segments joining cell `c` to cell `c + 1` (top-right → next
/// top-left, bottom-right → next bottom-left) carry `j2`; with `periodic`
/// the last cell is joined to the first the same way.
///
/// The `j1`/`j2` assignment is a reading of the published drawing: `j1`
/// labels the rail edges inside the encircled cell and `j2` the dotted
/// edges between cells. Cell 0 is the subsystem when splitting after five
/// sites.
pub fn kagome_strip(n_cells: usize, j0: f64, j1: f64, j2: f64, periodic: bool) -> CouplingSpec {
    assert!(n_cells >= 1, "a Kagome strip needs at least one cell");
    let n = KAGOME_SITES_PER_CELL * n_cells;
    let mut spec = CouplingSpec::new(n);
    let site = |cell: usize, slot: usize| KAGOME_SITES_PER_CELL * cell + slot + 1;
    let (tl, tr, centre, bl, br) = (0, 1, 2, 3, 4);
    let mut edge = |a: usize, b: usize, v: f64| {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            spec.accumulate(axis, a, b, v).expect("template edges are valid");
        }
    };
    for c in 0..n_cells {
        for corner in [tl, tr, bl, br] {
            edge(site(c, centre), site(c, corner), j0);
        }
        edge(site(c, tl), site(c, tr), j1);
        edge(site(c, bl), site(c, br), j1);
        let next = if c + 1 < n_cells {
            Some(c + 1)
        } else if periodic {
            Some(0)
        } else {
            None
        };
        if let Some(d) = next {
            edge(site(c, tr), site(d, tl), j2);
            edge(site(c, br), site(d, bl), j2);
        }
    }
    spec
}
