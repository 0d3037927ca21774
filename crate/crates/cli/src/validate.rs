//! `validate`: every estimator path against the dense oracle.

use csv::Writer;
use nalgebra::DMatrix;
use partial_trace::observables::{von_neumann_entropy, DensityMatrix};
use partial_trace::oracle::{dense_partial_trace, DenseSpectrum, ORACLE_LIMIT};
use partial_trace::ptrace::{
    estimate_deflated_dense, estimate_thermal, ground_state_density, partial_trace_lowrank, ProbeDistribution,
};
use partial_trace::spinsys::DenseOp;
use partial_trace::{BipartiteSplit, DepthPolicy, ProbeConfig, ThermalOptions};

use crate::context::{Context, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};

pub const VALIDATE_FILE: &str = "validate.csv";

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Round-off allowance for entrywise comparisons: jackknife errors can
/// be exactly zero (for entries fixed by symmetry) while both sides still
/// carry floating-point noise. A backward error of `eps·‖H‖` in the
/// Hamiltonian moves `exp(−βH)` by a relative `β·eps·‖H‖`, so the floor
/// scales with `1 + β·width`, `width` being the spectral width.
pub fn roundoff_floor(reference: &DMatrix<f64>, beta: f64, width: f64) -> f64 {
    64.0 * f64::EPSILON * (1.0 + beta * width) * reference.amax().max(f64::MIN_POSITIVE)
}

/// Largest `|a − b| / (σ·se + floor)` over the upper triangle.
pub fn max_scaled_deviation(a: &DMatrix<f64>, b: &DMatrix<f64>, se: &DMatrix<f64>, sigmas: f64, floor: f64) -> f64 {
    let d = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in i..d {
            let dev = (a[(i, j)] - b[(i, j)]).abs();
            worst = worst.max(dev / (sigmas * se[(i, j)] + floor));
        }
    }
    worst
}

fn ground_oracle(dense: &DenseSpectrum<f64>, split: &BipartiteSplit, rel_tol: f64) -> CliResult<DMatrix<f64>> {
    let l0 = dense.ground_energy();
    let tol = rel_tol * l0.abs().max(1.0);
    let mult = dense.eigenvalues.iter().take_while(|&&l| l - l0 <= tol).count();
    let q = dense.eigenvectors.columns(0, mult).into_owned();
    Ok(partial_trace_lowrank(&q, &vec![1.0 / mult as f64; mult], split)?)
}

pub fn run_validate(ctx: &Context) -> CliResult<Vec<Check>> {
    let cfg = &ctx.cfg;
    let v = cfg.validate.clone().unwrap_or_default();
    let h = cfg.grid.fields()?[0];
    let spec = cfg.system_spec(h)?;
    let split = ctx.split(&spec)?;
    if split.d_t() > ORACLE_LIMIT {
        return Err(partial_trace::Error::OracleTooLarge {
            dim: split.d_t(),
            limit: ORACLE_LIMIT,
        }
        .into());
    }
    let (d_s, m, k) = (split.d_s(), cfg.estimator.m, cfg.estimator.k);
    let ham = ctx.hamiltonian(&spec)?;
    let dense = DenseSpectrum::new(&ham)?;
    let width = dense.eigenvalues[dense.dim() - 1] - dense.eigenvalues[0];
    let (basis, _) = ctx.basis(&ham, k)?;
    let probes = ctx.probes(cfg.seed);
    let mut checks = Vec::new();

    if v.corrupt_basis {
        let mut q = basis.q().clone();
        if q.ncols() == 0 {
            return Err(CliError::Config("validate.corrupt_basis: needs estimator.k >= 1".into()));
        }
        q.column_mut(0).scale_mut(1.5);
        estimate_deflated_dense(&ham, &q, &split, &probes)?;
        unreachable!("a non-orthonormal basis must be rejected");
    }

    let all_betas = cfg.grid.betas()?;
    let sampled: Vec<f64> = all_betas.iter().copied().filter(|b| b.is_finite()).collect();
    if !sampled.is_empty() {
        let th = estimate_thermal(&ham, &split, &basis, &sampled, &probes, &ctx.thermal_options())?;
        for (est, &beta) in th.estimates.iter().zip(&sampled) {
            let want = dense.reduced_density(beta, &split)?;
            let rho = est.density_matrix()?;
            if m >= 2 {
                let se = est.density_stderr()?;
                let z = max_scaled_deviation(&rho, &want, &se, v.sigmas, roundoff_floor(&want, beta, width));
                checks.push(Check::new(
                    format!("thermal beta={beta}: entries within {} stderr", v.sigmas),
                    z <= 1.0,
                    format!("max |err|/({}·se + round-off) = {z:.3}", v.sigmas),
                ));
            }
            if beta >= v.frobenius_min_beta {
                let f = (&rho - &want).norm();
                checks.push(Check::new(
                    format!("thermal beta={beta}: Frobenius error"),
                    f <= v.frobenius_tol,
                    format!("{f:.3e} (tol {:.1e})", v.frobenius_tol),
                ));
            }
        }
        let expected = (m * th.depth * d_s) as u64;
        let exact_count = th.exhausted_probes == 0;
        checks.push(Check::new(
            "thermal matvec count = m·t·d_s",
            if exact_count {
                th.matvecs.estimator == expected
            } else {
                th.matvecs.estimator <= expected
            },
            format!(
                "{} vs {m}·{}·{d_s} = {expected} ({} probes exhausted early)",
                th.matvecs.estimator, th.depth, th.exhausted_probes
            ),
        ));

        // plain deflated estimator on the dense thermal matrix at the smallest positive β
        if let Some(&beta) = sampled.iter().find(|&&b| b > 0.0) {
            let a = dense.thermal(beta).state.mat().clone();
            let est = estimate_deflated_dense(&DenseOp(a.clone()), basis.q(), &split, &probes)?;
            let want = dense_partial_trace(&a, &split)?;
            checks.push(Check::new(
                "deflated dense estimator matvec count = k + m·d_s",
                est.applies == (k + m * d_s) as u64,
                format!("{} vs {k} + {m}·{d_s}", est.applies),
            ));
            if m >= 2 {
                let floor = roundoff_floor(&want, beta, width);
                let z = max_scaled_deviation(&est.mean_matrix(), &want, &est.stderr()?.to_matrix(), v.sigmas, floor);
                checks.push(Check::new(
                    format!("deflated dense estimator beta={beta}: entries within {} stderr", v.sigmas),
                    z <= 1.0,
                    format!("max scaled deviation {z:.3}"),
                ));
            }
        }

        if v.full_deflation {
            let full = dense.basis(split.d_t())?;
            let th = estimate_thermal(&ham, &split, &full, &sampled, &probes, &ThermalOptions::default())?;
            let worst = th
                .estimates
                .iter()
                .zip(&sampled)
                .map(|(e, &b)| Ok((e.density_matrix()? - dense.reduced_density(b, &split)?).norm()))
                .collect::<partial_trace::Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            checks.push(Check::new(
                "full deflation (k = d_t) matches oracle",
                worst <= v.exact_tol,
                format!("max Frobenius error {worst:.3e}"),
            ));
        }
    }

    // exact probes at β = 0
    let sphere = ProbeConfig::new(m, cfg.seed).with_distribution(ProbeDistribution::Sphere);
    let th0 = estimate_thermal(
        &ham,
        &split,
        &basis.truncated(0),
        &[0.0],
        &sphere,
        &ThermalOptions {
            depth: DepthPolicy::Fixed(1),
            ..ThermalOptions::default()
        },
    )?;
    let s0 = von_neumann_entropy(&DensityMatrix::new(th0.estimates[0].density_matrix()?)?);
    let ln_ds = (d_s as f64).ln();
    checks.push(Check::new(
        "beta=0 entropy = ln d_s (sphere probes, k=0)",
        (s0 - ln_ds).abs() <= v.exact_tol,
        format!("|{s0} − {ln_ds}| = {:.3e}", (s0 - ln_ds).abs()),
    ));

    if all_betas.iter().any(|b| b.is_infinite()) {
        let (rho, mult) = ground_state_density(&basis, &split, cfg.estimator.ground_tol)?;
        let want = ground_oracle(&dense, &split, cfg.estimator.ground_tol)?;
        let f = (&rho - &want).norm();
        checks.push(Check::new(
            "beta=inf ground-state density",
            f <= v.exact_tol,
            format!("Frobenius error {f:.3e}, multiplet size {mult}"),
        ));
    }

    let mut w = Writer::from_path(ctx.out_dir.join(VALIDATE_FILE))?;
    w.write_record(["schema_version", "check", "passed", "detail"])?;
    for c in &checks {
        w.write_record([SCHEMA_VERSION.to_string(), c.name.clone(), c.passed.to_string(), c.detail.clone()])?;
    }
    w.flush()?;
    Ok(checks)
}
