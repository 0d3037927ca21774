use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// One coupling coefficient `J_{i,j}` between 1-based sites `i < j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Symbolic spin system
/// `Σ_{i<j} [Jx σˣσˣ + Jy σʸσʸ + Jz σᶻσᶻ] + (h/2) Σ_i σᶻ_i`.
///
/// Sites are 1-based; site 1 is the leftmost (slowest-varying) tensor factor.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingSpec {
    pub n_sites: usize,
    pub jx: Vec<Coupling>,
    pub jy: Vec<Coupling>,
    pub jz: Vec<Coupling>,
    pub field_h: f64,
}

impl CouplingSpec {
    pub fn new(n_sites: usize) -> Self {
        Self {
            n_sites,
            jx: Vec::new(),
            jy: Vec::new(),
            jz: Vec::new(),
            field_h: 0.0,
        }
    }

    pub fn with_field(mut self, field_h: f64) -> Self {
        self.field_h = field_h;
        self
    }

    pub fn couplings(&self, axis: Axis) -> &[Coupling] {
        match axis {
            Axis::X => &self.jx,
            Axis::Y => &self.jy,
            Axis::Z => &self.jz,
        }
    }

    fn couplings_mut(&mut self, axis: Axis) -> &mut Vec<Coupling> {
        match axis {
            Axis::X => &mut self.jx,
            Axis::Y => &mut self.jy,
            Axis::Z => &mut self.jz,
        }
    }

    /// Adds a coupling; sites may be given in either order.
    pub fn add(&mut self, axis: Axis, i: usize, j: usize, value: f64) -> Result<()> {
        let (i, j) = self.check_pair(i, j, value)?;
        let list = self.couplings_mut(axis);
        if list.iter().any(|c| c.i == i && c.j == j) {
            return Err(Error::InvalidSpec(format!(
                "duplicate {axis} coupling for pair ({i}, {j})"
            )));
        }
        list.push(Coupling { i, j, value });
        Ok(())
    }

    /// Adds `value` to an existing coupling, or inserts it.
    pub(crate) fn accumulate(&mut self, axis: Axis, i: usize, j: usize, value: f64) -> Result<()> {
        let (i, j) = self.check_pair(i, j, value)?;
        let list = self.couplings_mut(axis);
        match list.iter_mut().find(|c| c.i == i && c.j == j) {
            Some(c) => c.value += value,
            None => list.push(Coupling { i, j, value }),
        }
        Ok(())
    }

    /// Adds the same value on all three axes.
    pub fn add_heisenberg(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            self.add(axis, i, j, value)?;
        }
        Ok(())
    }

    fn check_pair(&self, i: usize, j: usize, value: f64) -> Result<(usize, usize)> {
        if i == j {
            return Err(Error::InvalidSpec(format!("self-coupling on site {i}")));
        }
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        if i == 0 || j > self.n_sites {
            return Err(Error::InvalidSpec(format!(
                "pair ({i}, {j}) outside sites 1..={}",
                self.n_sites
            )));
        }
        if !value.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "non-finite coupling {value} on pair ({i}, {j})"
            )));
        }
        Ok((i, j))
    }

    /// Checks the invariants on a spec that may have been built by hand.
    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(Error::InvalidSpec("a system needs at least one site".into()));
        }
        if !self.field_h.is_finite() {
            return Err(Error::InvalidSpec(format!("non-finite field h = {}", self.field_h)));
        }
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let mut seen = std::collections::BTreeSet::new();
            for c in self.couplings(axis) {
                if c.i >= c.j {
                    return Err(Error::InvalidSpec(format!(
                        "{axis} coupling ({}, {}) must satisfy i < j",
                        c.i, c.j
                    )));
                }
                self.check_pair(c.i, c.j, c.value)?;
                if !seen.insert((c.i, c.j)) {
                    return Err(Error::InvalidSpec(format!(
                        "duplicate {axis} coupling for pair ({}, {})",
                        c.i, c.j
                    )));
                }
            }
        }
        Ok(())
    }

    /// Copy restricted to the first `n` sites: couplings with both ends
    /// inside are kept, the field is kept.
    pub fn restrict_to_leading(&self, n: usize) -> CouplingSpec {
        let keep = |list: &[Coupling]| list.iter().filter(|c| c.j <= n).copied().collect();
        CouplingSpec {
            n_sites: n,
            jx: keep(&self.jx),
            jy: keep(&self.jy),
            jz: keep(&self.jz),
            field_h: self.field_h,
        }
    }

    /// Relabels sites by `perm` (1-based, `perm[i-1]` is the new label of site `i`).
    pub fn relabel(&self, perm: &[usize]) -> Result<CouplingSpec> {
        if perm.len() != self.n_sites {
            return Err(Error::DimensionMismatch {
                context: "site permutation",
                expected: self.n_sites,
                got: perm.len(),
            });
        }
        let mut out = CouplingSpec::new(self.n_sites).with_field(self.field_h);
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            for c in self.couplings(axis) {
                out.add(axis, perm[c.i - 1], perm[c.j - 1], c.value)?;
            }
        }
        Ok(out)
    }

    /// Parses the TOML coupling file format (see the crate README).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: CouplingFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut spec = CouplingSpec::new(file.sites).with_field(file.field_h);
        for c in file.coupling {
            spec.add(c.axis, c.i, c.j, c.value)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        let mut coupling = Vec::new();
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            // sorted by pair so output is stable
            let sorted: BTreeMap<(usize, usize), f64> = self
                .couplings(axis)
                .iter()
                .map(|c| ((c.i, c.j), c.value))
                .collect();
            for ((i, j), value) in sorted {
                coupling.push(FileCoupling { axis, i, j, value });
            }
        }
        let file = CouplingFile {
            sites: self.n_sites,
            field_h: self.field_h,
            coupling,
        };
        toml::to_string(&file).expect("coupling file is always serializable")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingFile {
    sites: usize,
    #[serde(default)]
    field_h: f64,
    #[serde(default)]
    coupling: Vec<FileCoupling>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileCoupling {
    axis: Axis,
    i: usize,
    j: usize,
    value: f64,
}
