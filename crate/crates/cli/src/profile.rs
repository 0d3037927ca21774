//! `variance-profile`: dense variance bound of the deflated estimator.

use csv::Writer;
use partial_trace::oracle::variance_profile;

use crate::context::{num, Context, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};

pub const PROFILE_FILE: &str = "variance_profile.csv";

pub fn run_variance_profile(ctx: &Context) -> CliResult<usize> {
    let cfg = &ctx.cfg;
    let ks = cfg.profile.as_ref().map(|p| p.ks.clone()).unwrap_or_else(|| vec![0, 1, 4, 16]);
    let betas: Vec<f64> = cfg.grid.betas()?.into_iter().filter(|b| b.is_finite()).collect();
    if betas.is_empty() {
        return Err(CliError::Config("grid.betas: needs at least one finite value".into()));
    }
    let mut w = Writer::from_path(ctx.out_dir.join(PROFILE_FILE))?;
    w.write_record(["schema_version", "system", "n_sites", "h", "beta", "k", "log10_bound", "bound"])?;
    let mut rows = 0;
    for h in cfg.grid.fields()? {
        let spec = cfg.system_spec(h)?;
        let ham = ctx.hamiltonian(&spec)?;
        for row in variance_profile(&ham, &betas, &ks)? {
            w.write_record([
                SCHEMA_VERSION.to_string(),
                cfg.system_label(),
                spec.n_sites.to_string(),
                num(h),
                num(row.beta),
                row.k.to_string(),
                num(row.log10_bound),
                num(row.bound()),
            ])?;
            rows += 1;
        }
        w.flush()?;
    }
    Ok(rows)
}
