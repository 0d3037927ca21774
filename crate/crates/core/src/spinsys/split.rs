use crate::error::{Error, Result};

/// Bipartition `H_t = H_s ⊗ H_b` with subsystem (s) on the slow tensor axis.
///
/// A `d_t`-vector is `d_s` contiguous chunks of length `d_b`; chunk `i`
/// holds the amplitudes whose (s) index is `i`. For spin systems (s) is
/// the leading `n_sys_sites` sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BipartiteSplit {
    d_s: usize,
    d_b: usize,
    n_sys_sites: Option<usize>,
}

impl BipartiteSplit {
    /// Split an `n_sites` spin system after its first `n_sys_sites` sites.
    pub fn from_sites(n_sites: usize, n_sys_sites: usize) -> Result<Self> {
        if n_sys_sites == 0 || n_sys_sites >= n_sites {
            return Err(Error::InvalidArgument(format!(
                "subsystem must keep 1 <= N_s < N sites, got N_s = {n_sys_sites}, N = {n_sites}"
            )));
        }
        if n_sites >= usize::BITS as usize {
            return Err(Error::InvalidArgument(format!("{n_sites} sites overflow the index type")));
        }
        Ok(Self {
            d_s: 1 << n_sys_sites,
            d_b: 1 << (n_sites - n_sys_sites),
            n_sys_sites: Some(n_sys_sites),
        })
    }

    /// Split with explicit subsystem dimensions (not necessarily powers of two).
    pub fn from_dims(d_s: usize, d_b: usize) -> Result<Self> {
        if d_s == 0 || d_b == 0 {
            return Err(Error::InvalidArgument(format!(
                "subsystem dimensions must be positive, got d_s = {d_s}, d_b = {d_b}"
            )));
        }
        Ok(Self {
            d_s,
            d_b,
            n_sys_sites: None,
        })
    }

    pub fn d_s(&self) -> usize {
        self.d_s
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn d_t(&self) -> usize {
        self.d_s * self.d_b
    }

    pub fn n_sys_sites(&self) -> Option<usize> {
        self.n_sys_sites
    }

    pub(crate) fn check_len(&self, context: &'static str, len: usize) -> Result<()> {
        if len != self.d_t() {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.d_t(),
                got: len,
            });
        }
        Ok(())
    }
}
