//! `bisect-h`: plateaus of the ground-state entropy in h, and Chebyshev
//! sample points inside each plateau.

use std::f64::consts::PI;

use csv::Writer;
use partial_trace::observables::{von_neumann_entropy, DensityMatrix};
use partial_trace::ptrace::ground_state_density;

use crate::config::BisectConfig;
use crate::context::{num, Context, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};

pub const BISECT_FILE: &str = "bisect.csv";

#[derive(Clone, Debug, PartialEq)]
pub struct Plateau {
    pub lo: f64,
    pub hi: f64,
    /// Function value at the interval midpoint.
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct Bisection {
    pub boundaries: Vec<f64>,
    pub plateaus: Vec<Plateau>,
    /// Some jump was not resolved to `tol` within `max_depth` halvings.
    pub truncated: bool,
}

/// `n` Chebyshev nodes of the first kind mapped to `[a, b]`, ascending.
pub fn chebyshev_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n)
        .map(|j| 0.5 * (a + b) + 0.5 * (b - a) * ((2 * j + 1) as f64 * PI / (2 * n) as f64).cos())
        .collect();
    x.reverse();
    x
}

/// Finds the jumps of a piecewise-constant `f` on `[lo, hi]`: a coarse scan
/// followed by bisection of every interval whose endpoint values differ.
pub fn locate_plateaus(
    mut f: impl FnMut(f64) -> CliResult<f64>,
    lo: f64,
    hi: f64,
    opts: &BisectConfig,
) -> CliResult<Bisection> {
    let n = opts.initial_points.max(2);
    let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let mut fs = Vec::with_capacity(n);
    for &x in &xs {
        fs.push(f(x)?);
    }
    let same = |a: f64, b: f64| (a - b).abs() <= opts.entropy_tol;
    let mut boundaries = Vec::new();
    let mut truncated = false;
    // explicit stack of (a, f(a), b, f(b), depth)
    let mut stack: Vec<(f64, f64, f64, f64, usize)> = Vec::new();
    for i in (0..n - 1).rev() {
        if !same(fs[i], fs[i + 1]) {
            stack.push((xs[i], fs[i], xs[i + 1], fs[i + 1], 0));
        }
    }
    while let Some((a, fa, b, fb, depth)) = stack.pop() {
        if b - a <= opts.tol {
            boundaries.push(0.5 * (a + b));
            continue;
        }
        if depth >= opts.max_depth {
            truncated = true;
            boundaries.push(0.5 * (a + b));
            continue;
        }
        let mid = 0.5 * (a + b);
        let fm = f(mid)?;
        if !same(fm, fb) {
            stack.push((mid, fm, b, fb, depth + 1));
        }
        if !same(fa, fm) {
            stack.push((a, fa, mid, fm, depth + 1));
        }
    }
    boundaries.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Boundaries closer than the resolution belong to one transition (the
    // function can take a third value exactly at a level crossing).
    let mut merged: Vec<Vec<f64>> = Vec::new();
    for x in boundaries {
        match merged.last_mut() {
            Some(c) if x - c[c.len() - 1] <= opts.tol => c.push(x),
            _ => merged.push(vec![x]),
        }
    }
    let boundaries: Vec<f64> = merged.iter().map(|c| 0.5 * (c[0] + c[c.len() - 1])).collect();
    let mut edges = vec![lo];
    edges.extend(boundaries.iter().copied());
    edges.push(hi);
    let mut plateaus = Vec::with_capacity(edges.len() - 1);
    for w in edges.windows(2) {
        plateaus.push(Plateau {
            lo: w[0],
            hi: w[1],
            value: f(0.5 * (w[0] + w[1]))?,
        });
    }
    if truncated {
        log::warn!("bisection depth limit reached; some boundaries are coarser than {}", opts.tol);
    }
    Ok(Bisection {
        boundaries,
        plateaus,
        truncated,
    })
}

/// Ground-state entanglement entropy at field `h`.
pub fn ground_entropy(ctx: &Context, h: f64) -> CliResult<f64> {
    let spec = ctx.cfg.system_spec(h)?;
    let split = ctx.split(&spec)?;
    let ham = ctx.hamiltonian(&spec)?;
    let (basis, _) = ctx.basis(&ham, ctx.cfg.estimator.k)?;
    let (rho, _) = ground_state_density(&basis, &split, ctx.cfg.estimator.ground_tol)?;
    Ok(von_neumann_entropy(&DensityMatrix::new(rho)?))
}

/// Returns the sample points; also written to `bisect.csv`.
pub fn run_bisect(ctx: &Context) -> CliResult<Bisection> {
    let opts = ctx
        .cfg
        .bisect
        .as_ref()
        .ok_or_else(|| CliError::Config("bisect: section missing".into()))?;
    if ctx.cfg.estimator.k == 0 {
        return Err(CliError::Config("estimator.k: bisection needs k >= 1".into()));
    }
    let result = locate_plateaus(|h| ground_entropy(ctx, h), opts.h_min, opts.h_max, opts)?;
    let mut w = Writer::from_path(ctx.out_dir.join(BISECT_FILE))?;
    w.write_record(["schema_version", "interval", "h_lo", "h_hi", "entropy", "node", "h"])?;
    for (i, p) in result.plateaus.iter().enumerate() {
        for (j, x) in chebyshev_nodes(p.lo, p.hi, opts.nodes_per_interval).into_iter().enumerate() {
            w.write_record([
                SCHEMA_VERSION.to_string(),
                i.to_string(),
                num(p.lo),
                num(p.hi),
                num(p.value),
                j.to_string(),
                num(x),
            ])?;
        }
    }
    w.flush()?;
    Ok(result)
}
