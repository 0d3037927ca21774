//! `sweep`: ρ* and observables over an (h, β) grid.

use std::fs::File;
use std::time::Instant;

use csv::Writer;
use nalgebra::DMatrix;
use partial_trace::ptrace::{estimate_thermal, ground_state_density};
use partial_trace::spinsys::subsystem_hamiltonian;

use crate::context::{num, observe, opt, Context, Observed, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};

pub const SWEEP_FILE: &str = "sweep.csv";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const TIMING_FILE: &str = "timing.csv";

/// How a row of the β grid was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Path {
    /// `β = 0`: `tr_b I = d_b I`, no sampling needed.
    InfiniteTemperature,
    Estimated,
    GroundState,
}

struct Writers {
    sweep: Writer<File>,
    spectrum: Writer<File>,
    timing: Writer<File>,
}

fn sweep_header(d_s: usize) -> Vec<String> {
    let mut cols: Vec<String> = [
        "schema_version",
        "system",
        "n_sites",
        "n_sys",
        "k",
        "m",
        "t",
        "seed",
        "h",
        "beta",
        "entropy",
        "entropy_stderr",
        "energy",
        "energy_stderr",
        "ergotropy",
        "ergotropy_stderr",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for i in 0..d_s {
        for j in i..d_s {
            cols.push(format!("rho_{i}_{j}"));
        }
    }
    for i in 0..d_s {
        for j in i..d_s {
            cols.push(format!("rho_{i}_{j}_stderr"));
        }
    }
    cols.extend(
        [
            "log_scale",
            "log_trace",
            "clamped_mass",
            "asymmetry",
            "ground_multiplicity",
            "matvecs_eig",
            "matvecs_depth",
            "matvecs_estimator",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    cols
}

fn upper(m: &DMatrix<f64>) -> impl Iterator<Item = f64> + '_ {
    let d = m.nrows();
    (0..d).flat_map(move |i| (i..d).map(move |j| m[(i, j)]))
}

#[derive(Default)]
struct RowExtra {
    t: usize,
    log_scale: f64,
    log_trace: f64,
    asymmetry: f64,
    ground_multiplicity: Option<usize>,
    matvecs: [u64; 3],
}

pub fn run_sweep(ctx: &Context) -> CliResult<usize> {
    let cfg = &ctx.cfg;
    let betas = cfg.grid.betas()?;
    let fields = cfg.grid.fields()?;
    if betas.is_empty() {
        return Err(CliError::Config("grid: no inverse temperatures given".into()));
    }
    let spec0 = cfg.system_spec(fields[0])?;
    let split = ctx.split(&spec0)?;
    let d_s = split.d_s();

    let mut w = Writers {
        sweep: Writer::from_path(ctx.out_dir.join(SWEEP_FILE))?,
        spectrum: Writer::from_path(ctx.out_dir.join(SPECTRUM_FILE))?,
        timing: Writer::from_path(ctx.out_dir.join(TIMING_FILE))?,
    };
    w.sweep.write_record(sweep_header(d_s))?;
    w.spectrum
        .write_record(["schema_version", "h", "beta", "index", "probability", "level"])?;
    w.timing.write_record(["schema_version", "h", "wall_ms"])?;

    let mut first_error = None;
    let mut rows = 0;
    for &h in &fields {
        let start = Instant::now();
        match sweep_point(ctx, h, &betas, &mut w) {
            Ok(n) => rows += n,
            Err(e) => {
                log::error!("h = {h}: {e}");
                first_error.get_or_insert(e);
            }
        }
        w.timing
            .write_record([SCHEMA_VERSION.to_string(), num(h), start.elapsed().as_millis().to_string()])?;
        w.sweep.flush()?;
        w.spectrum.flush()?;
        w.timing.flush()?;
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(rows),
    }
}

fn sweep_point(ctx: &Context, h: f64, betas: &[f64], w: &mut Writers) -> CliResult<usize> {
    let cfg = &ctx.cfg;
    let spec = cfg.system_spec(h)?;
    let split = ctx.split(&spec)?;
    let d_s = split.d_s();
    let ham = ctx.hamiltonian(&spec)?;
    let h_s = subsystem_hamiltonian::<f64>(&spec, &split)?;
    let k = cfg.estimator.k;
    let (basis, eig_mv) = ctx.basis(&ham, k)?;

    let sampled: Vec<f64> = betas.iter().copied().filter(|b| *b > 0.0 && b.is_finite()).collect();
    let thermal = if sampled.is_empty() {
        None
    } else {
        Some(estimate_thermal(
            &ham,
            &split,
            &basis,
            &sampled,
            &ctx.probes(cfg.seed),
            &ctx.thermal_options(),
        )?)
    };

    let mut written = 0;
    for &beta in betas {
        let path = if beta == 0.0 {
            Path::InfiniteTemperature
        } else if beta.is_infinite() {
            Path::GroundState
        } else {
            Path::Estimated
        };
        let mut extra = RowExtra {
            log_trace: f64::NAN,
            ..RowExtra::default()
        };
        extra.matvecs[0] = eig_mv;
        let obs: Observed = match path {
            Path::InfiniteTemperature => {
                let rho = DMatrix::identity(d_s, d_s) / d_s as f64;
                extra.log_trace = (split.d_t() as f64).ln();
                observe(rho, Some(DMatrix::zeros(d_s, d_s)), None, &h_s)?
            }
            Path::GroundState => {
                let (rho, mult) = ground_state_density(&basis, &split, cfg.estimator.ground_tol)?;
                extra.ground_multiplicity = Some(mult);
                observe(rho, Some(DMatrix::zeros(d_s, d_s)), None, &h_s)?
            }
            Path::Estimated => {
                let th = thermal.as_ref().expect("sampled grid is nonempty");
                let i = sampled.iter().position(|&b| b == beta).expect("beta in grid");
                let est = &th.estimates[i];
                extra.t = th.depth;
                extra.log_scale = est.mean.log_scale();
                extra.log_trace = est.mean.log_trace().unwrap_or(f64::NAN);
                extra.asymmetry = est.asymmetry;
                extra.matvecs[1] = th.matvecs.depth_selection;
                extra.matvecs[2] = th.matvecs.estimator;
                let rho = est.density_matrix()?;
                if est.m() >= 2 {
                    let loo = est.leave_one_out_densities()?;
                    observe(rho, Some(est.density_stderr()?), Some(&loo), &h_s)?
                } else {
                    observe(rho, None, None, &h_s)?
                }
            }
        };
        write_row(ctx, &spec, h, beta, &obs, &extra, w)?;
        written += 1;
    }
    Ok(written)
}

fn write_row(
    ctx: &Context,
    spec: &partial_trace::CouplingSpec,
    h: f64,
    beta: f64,
    obs: &Observed,
    extra: &RowExtra,
    w: &mut Writers,
) -> CliResult<()> {
    let cfg = &ctx.cfg;
    let d_s = obs.rho.nrows();
    let exact = extra.t == 0;
    let mut rec: Vec<String> = vec![
        SCHEMA_VERSION.to_string(),
        cfg.system_label(),
        spec.n_sites.to_string(),
        cfg.split.n_sys.to_string(),
        cfg.estimator.k.to_string(),
        if exact { "0".into() } else { cfg.estimator.m.to_string() },
        extra.t.to_string(),
        cfg.seed.to_string(),
        num(h),
        num(beta),
        num(obs.entropy),
        opt(obs.entropy_stderr.or(exact.then_some(0.0))),
        num(obs.energy),
        opt(obs.energy_stderr.or(exact.then_some(0.0))),
        num(obs.ergotropy),
        opt(obs.ergotropy_stderr.or(exact.then_some(0.0))),
    ];
    rec.extend(upper(&obs.rho).map(num));
    match &obs.rho_stderr {
        Some(se) => rec.extend(upper(se).map(num)),
        None => rec.extend(std::iter::repeat_n(String::new(), d_s * (d_s + 1) / 2)),
    }
    rec.extend([
        num(extra.log_scale),
        num(extra.log_trace),
        num(obs.clamped_mass),
        num(extra.asymmetry),
        extra.ground_multiplicity.map(|m| m.to_string()).unwrap_or_default(),
        extra.matvecs[0].to_string(),
        extra.matvecs[1].to_string(),
        extra.matvecs[2].to_string(),
    ]);
    w.sweep.write_record(&rec)?;
    for (i, &p) in obs.probabilities.iter().enumerate() {
        let level = if p > 0.0 { num(-p.ln()) } else { String::new() };
        w.spectrum.write_record([
            SCHEMA_VERSION.to_string(),
            num(h),
            num(beta),
            i.to_string(),
            num(p),
            level,
        ])?;
    }
    Ok(())
}
