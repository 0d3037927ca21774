use std::path::PathBuf;

use nalgebra::DMatrix;
use partial_trace::krylov::{lowest_eigenpairs_with, DeflationBasis};
use partial_trace::observables::{
    entanglement_spectrum, ergotropy, internal_energy, von_neumann_entropy, DensityMatrix, EntanglementSpectrum,
};
use partial_trace::ptrace::jackknife_scalar;
use partial_trace::spinsys::{build_hamiltonian_with_limit, CountingOp, SparseOp, DEFAULT_MAX_SITES};
use partial_trace::{BipartiteSplit, CouplingSpec, EigenOptions, LanczosOptions, ProbeConfig, ThermalOptions};

use crate::config::Config;
use crate::error::{config_err, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Resolved run settings shared by every subcommand.
pub struct Context {
    pub cfg: Config,
    pub out_dir: PathBuf,
    pub max_n: usize,
}

impl Context {
    pub fn new(cfg: Config, out_dir: Option<PathBuf>, seed: Option<u64>, max_n: Option<usize>) -> CliResult<Self> {
        let mut cfg = cfg;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        let out_dir = out_dir
            .or_else(|| cfg.out_dir.as_ref().map(|d| cfg.base_dir.join(d)))
            .unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&out_dir)?;
        Ok(Self {
            cfg,
            out_dir,
            max_n: max_n.unwrap_or(DEFAULT_MAX_SITES),
        })
    }

    pub fn split(&self, spec: &CouplingSpec) -> CliResult<BipartiteSplit> {
        BipartiteSplit::from_sites(spec.n_sites, self.cfg.split.n_sys).map_err(|e| config_err("split.n_sys", e))
    }

    pub fn hamiltonian(&self, spec: &CouplingSpec) -> CliResult<SparseOp<f64>> {
        Ok(build_hamiltonian_with_limit(spec, self.max_n)?)
    }

    /// Lowest `k` eigenpairs and the operator applications they cost.
    pub fn basis(&self, h: &SparseOp<f64>, k: usize) -> CliResult<(DeflationBasis<f64>, u64)> {
        let counter = CountingOp::new(h);
        let opts = EigenOptions {
            tol: self.cfg.estimator.eig_tol,
            seed: self.cfg.seed,
            ..EigenOptions::default()
        };
        let basis = lowest_eigenpairs_with(&counter, k, &opts)?;
        Ok((basis, counter.count()))
    }

    pub fn probes(&self, seed: u64) -> ProbeConfig {
        ProbeConfig::new(self.cfg.estimator.m, seed).with_distribution(self.cfg.estimator.distribution)
    }

    pub fn thermal_options(&self) -> ThermalOptions {
        ThermalOptions {
            depth: self.cfg.estimator.depth_policy(),
            lanczos: LanczosOptions {
                reorthogonalize: self.cfg.estimator.reorthogonalize,
                ..LanczosOptions::default()
            },
        }
    }
}

/// Observables of one `ρ*`, with jackknife errors when leave-one-out
/// densities are available.
pub struct Observed {
    pub rho: DMatrix<f64>,
    pub rho_stderr: Option<DMatrix<f64>>,
    pub entropy: f64,
    pub entropy_stderr: Option<f64>,
    pub energy: f64,
    pub energy_stderr: Option<f64>,
    pub ergotropy: f64,
    pub ergotropy_stderr: Option<f64>,
    pub spectrum: EntanglementSpectrum<f64>,
    pub probabilities: Vec<f64>,
    pub clamped_mass: f64,
}

pub fn observe(
    rho: DMatrix<f64>,
    rho_stderr: Option<DMatrix<f64>>,
    loo: Option<&[DMatrix<f64>]>,
    h_s: &DMatrix<f64>,
) -> CliResult<Observed> {
    let dm = DensityMatrix::new(rho)?;
    let scalars = |d: &DensityMatrix<f64>| -> CliResult<(f64, f64, f64)> {
        Ok((von_neumann_entropy(d), internal_energy(d, h_s)?, ergotropy(d, h_s)?))
    };
    let (entropy, energy, erg) = scalars(&dm)?;
    let (mut es, mut us, mut gs) = (None, None, None);
    if let Some(loo) = loo {
        let mut vals = Vec::with_capacity(loo.len());
        for r in loo {
            vals.push(scalars(&DensityMatrix::new(r.clone())?)?);
        }
        es = Some(jackknife_scalar(&vals.iter().map(|v| v.0).collect::<Vec<_>>()));
        us = Some(jackknife_scalar(&vals.iter().map(|v| v.1).collect::<Vec<_>>()));
        gs = Some(jackknife_scalar(&vals.iter().map(|v| v.2).collect::<Vec<_>>()));
    }
    let mut probabilities = dm.probabilities().to_vec();
    probabilities.reverse();
    Ok(Observed {
        spectrum: entanglement_spectrum(&dm),
        clamped_mass: dm.clamped_mass(),
        rho: dm.rho().clone(),
        rho_stderr,
        entropy,
        entropy_stderr: es,
        energy,
        energy_stderr: us,
        ergotropy: erg,
        ergotropy_stderr: gs,
        probabilities,
    })
}

/// CSV cell for a float: shortest round-trip exponent form, `inf`, or
/// empty for missing values.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Decorrelated seed for a labelled sub-run (splitmix64 finalizer).
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    let mut z = seed;
    for &l in labels {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(l.wrapping_mul(0xD1B5_4A32_D192_ED03));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}
