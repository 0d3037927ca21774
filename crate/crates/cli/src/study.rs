//! `variance-study`: repeated independent runs per (k, m) cell.

use csv::Writer;
use partial_trace::linalg::sym_eigvals;
use partial_trace::oracle::{DenseSpectrum, ORACLE_LIMIT};
use partial_trace::ptrace::{estimate_thermal, jackknife_scalar};

use crate::context::{derive_seed, num, opt, Context, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};

pub const RUNS_FILE: &str = "variance_runs.csv";
pub const SUMMARY_FILE: &str = "variance_summary.csv";

/// Eigenvalues of ρ*, descending, with jackknife errors.
fn spectrum_with_errors(est: &partial_trace::Estimate) -> CliResult<(Vec<f64>, Vec<Option<f64>>)> {
    let mut ev = sym_eigvals(est.density_matrix()?);
    ev.reverse();
    if est.m() < 2 {
        return Ok((ev.clone(), vec![None; ev.len()]));
    }
    let loo: Vec<Vec<f64>> = est
        .leave_one_out_densities()?
        .into_iter()
        .map(|r| {
            let mut v = sym_eigvals(r);
            v.reverse();
            v
        })
        .collect();
    let se = (0..ev.len())
        .map(|i| Some(jackknife_scalar(&loo.iter().map(|v| v[i]).collect::<Vec<_>>())))
        .collect();
    Ok((ev, se))
}

pub fn run_variance_study(ctx: &Context) -> CliResult<()> {
    let cfg = &ctx.cfg;
    let study = cfg
        .variance_study
        .as_ref()
        .ok_or_else(|| CliError::Config("variance_study: section missing".into()))?;
    let h = match study.h {
        Some(h) => h,
        None => cfg.grid.fields()?[0],
    };
    let betas: Vec<f64> = cfg.grid.betas()?.into_iter().filter(|b| b.is_finite()).collect();
    if betas.is_empty() {
        return Err(CliError::Config("grid.betas: needs at least one finite value".into()));
    }
    let spec = cfg.system_spec(h)?;
    let split = ctx.split(&spec)?;
    let ham = ctx.hamiltonian(&spec)?;
    let k_max = study.ks.iter().copied().max().unwrap_or(0);
    let (full_basis, _) = ctx.basis(&ham, k_max)?;

    let exact: Option<Vec<Vec<f64>>> = if split.d_t() <= ORACLE_LIMIT {
        let dense = DenseSpectrum::new(&ham)?;
        Some(
            betas
                .iter()
                .map(|&b| {
                    let mut v = sym_eigvals(dense.reduced_density(b, &split)?);
                    v.reverse();
                    Ok(v)
                })
                .collect::<partial_trace::Result<_>>()?,
        )
    } else {
        None
    };

    let mut runs_w = Writer::from_path(ctx.out_dir.join(RUNS_FILE))?;
    runs_w.write_record([
        "schema_version",
        "h",
        "k",
        "m",
        "run",
        "seed",
        "beta",
        "index",
        "eigenvalue",
        "eigenvalue_stderr",
        "exact",
    ])?;
    let mut sum_w = Writer::from_path(ctx.out_dir.join(SUMMARY_FILE))?;
    sum_w.write_record([
        "schema_version",
        "h",
        "k",
        "m",
        "runs",
        "beta",
        "index",
        "mean",
        "spread",
        "mean_jackknife",
        "exact",
        "rms_error",
    ])?;

    let d_s = split.d_s();
    for &k in &study.ks {
        let basis = full_basis.truncated(k);
        for &m in &study.ms {
            // values[run][beta][index]
            let mut values = Vec::with_capacity(study.runs);
            let mut errors = Vec::with_capacity(study.runs);
            for run in 0..study.runs {
                let seed = derive_seed(cfg.seed, &[k as u64, m as u64, run as u64]);
                let mut probes = ctx.probes(seed);
                probes.m = m;
                let th = estimate_thermal(&ham, &split, &basis, &betas, &probes, &ctx.thermal_options())?;
                let mut per_beta = Vec::new();
                let mut per_beta_se = Vec::new();
                for (bi, est) in th.estimates.iter().enumerate() {
                    let (ev, se) = spectrum_with_errors(est)?;
                    for i in 0..d_s {
                        let ex = exact.as_ref().map(|e| e[bi][i]);
                        runs_w.write_record([
                            SCHEMA_VERSION.to_string(),
                            num(h),
                            k.to_string(),
                            m.to_string(),
                            run.to_string(),
                            seed.to_string(),
                            num(betas[bi]),
                            i.to_string(),
                            num(ev[i]),
                            opt(se[i]),
                            opt(ex),
                        ])?;
                    }
                    per_beta.push(ev);
                    per_beta_se.push(se);
                }
                values.push(per_beta);
                errors.push(per_beta_se);
            }
            let r = study.runs as f64;
            for (bi, &beta) in betas.iter().enumerate() {
                for i in 0..d_s {
                    let xs: Vec<f64> = values.iter().map(|v| v[bi][i]).collect();
                    let mean = xs.iter().sum::<f64>() / r;
                    let spread = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0)).sqrt();
                    let jk: Vec<f64> = errors.iter().filter_map(|e| e[bi][i]).collect();
                    let mean_jk = (!jk.is_empty()).then(|| jk.iter().sum::<f64>() / jk.len() as f64);
                    let ex = exact.as_ref().map(|e| e[bi][i]);
                    let rms = ex.map(|e| (xs.iter().map(|x| (x - e).powi(2)).sum::<f64>() / r).sqrt());
                    sum_w.write_record([
                        SCHEMA_VERSION.to_string(),
                        num(h),
                        k.to_string(),
                        m.to_string(),
                        study.runs.to_string(),
                        num(beta),
                        i.to_string(),
                        num(mean),
                        num(spread),
                        opt(mean_jk),
                        opt(ex),
                        opt(rms),
                    ])?;
                }
            }
            runs_w.flush()?;
            sum_w.flush()?;
        }
    }
    Ok(())
}
