use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::krylov::{block_lanczos_defl, choose_depth, DeflationBasis, DepthPolicy, GaussRule, LanczosOptions};
use crate::spinsys::{BipartiteSplit, LinOp};
use crate::Real;

use super::estimators::partial_trace_lowrank;
use super::probes::PILOT_STREAM;
use super::{probe_block, LogScaledMatrix, PartialTraceEstimate, ProbeConfig};

#[derive(Clone, Copy, Debug, Default)]
pub struct ThermalOptions {
    pub depth: DepthPolicy,
    pub lanczos: LanczosOptions,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MatvecCounts {
    pub depth_selection: u64,
    /// `Σ_probes t·d_s` (less if a Krylov space was exhausted early).
    pub estimator: u64,
}

#[derive(Clone, Debug)]
pub struct ThermalEstimate<T: Real> {
    pub betas: Vec<T>,
    /// One estimate of `tr_b exp(−βH)` per entry of `betas`.
    pub estimates: Vec<PartialTraceEstimate<T>>,
    pub depth: usize,
    /// Relative change reported by automatic depth selection.
    pub depth_change: Option<f64>,
    /// Energy shift `λ_shift` used inside every exponential.
    pub shift: T,
    /// Probes whose Krylov space became invariant before `depth`.
    pub exhausted_probes: usize,
    pub matvecs: MatvecCounts,
}

/// Deflated estimator of `tr_b exp(−βH)` over a grid of `β`.
///
/// Per probe, `Z = (I − QQᵀ)(I ⊗ v)` seeds one deflated block-Lanczos run;
/// the resulting Gauss rule is reused for every `β`. The deflated part is
/// `Σ_i e^{−β(λ_i − λ_shift)} tr_b(q_i q_iᵀ)` and every term carries the
/// scale `−β·λ_shift` in log form.
pub fn estimate_thermal<T: Real, O: LinOp<T> + ?Sized>(
    h: &O,
    split: &BipartiteSplit,
    basis: &DeflationBasis<T>,
    betas: &[T],
    probes: &ProbeConfig,
    opts: &ThermalOptions,
) -> Result<ThermalEstimate<T>> {
    split.check_len("Hamiltonian", h.dim())?;
    split.check_len("deflation basis", basis.dim())?;
    probes.validate()?;
    if betas.is_empty() {
        return Err(Error::InvalidArgument("empty inverse-temperature grid".into()));
    }
    if let Some(b) = betas.iter().find(|b| !(**b >= T::zero() && b.is_finite())) {
        return Err(Error::InvalidArgument(format!("inverse temperature {b} must be finite and >= 0")));
    }
    let (d_s, d_b) = (split.d_s(), split.d_b());

    if basis.k() == basis.dim() {
        // complete basis: the residual is identically zero
        return full_deflation(split, basis, betas, probes.m);
    }

    let (depth, depth_change, depth_applies) = match opts.depth {
        DepthPolicy::Fixed(t) if t >= 1 => (t, None, 0),
        DepthPolicy::Fixed(_) => return Err(Error::InvalidArgument("Lanczos depth must be at least 1".into())),
        DepthPolicy::Auto { rel_tol, t_max } => {
            let pilot = probe_block(&probes.vector::<T>(d_b, PILOT_STREAM), d_s);
            let c = choose_depth(h, basis, &pilot, betas, T::lit(rel_tol), t_max)?;
            log::debug!("Lanczos depth {} (change {:e})", c.depth, c.change);
            (c.depth, Some(c.change), c.applies)
        }
    };

    let runs = probes.run(|i| {
        let v: DVector<T> = probes.vector(d_b, i as u64);
        let run = block_lanczos_defl(h, &probe_block(&v, d_s), basis, depth, opts.lanczos)?;
        Ok((GaussRule::from_tridiagonal(&run.tridiagonal), run.applies, run.exhausted))
    })?;
    let estimator_applies: u64 = runs.iter().map(|r| r.1).sum();
    let exhausted_probes = runs.iter().filter(|r| r.2).count();

    let shift = match basis.lambda().first() {
        Some(&l) => l,
        None => runs.iter().map(|r| r.0.min_node()).fold(T::max_value().unwrap(), |a, b| a.min(b)),
    };

    let estimates = betas
        .iter()
        .map(|&beta| {
            let log_scale = -beta * shift;
            let f: Vec<T> = basis.lambda().iter().map(|&l| (-beta * (l - shift)).exp()).collect();
            let defl = LogScaledMatrix::new(partial_trace_lowrank(basis.q(), &f, split)?, log_scale);
            let rem = runs
                .iter()
                .map(|(rule, _, _)| LogScaledMatrix::new(rule.evaluate_exp(beta, shift), log_scale))
                .collect();
            Ok(PartialTraceEstimate::from_parts(defl, rem, estimator_applies))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ThermalEstimate {
        betas: betas.to_vec(),
        estimates,
        depth,
        depth_change,
        shift,
        exhausted_probes,
        matvecs: MatvecCounts {
            depth_selection: depth_applies,
            estimator: estimator_applies,
        },
    })
}

fn full_deflation<T: Real>(
    split: &BipartiteSplit,
    basis: &DeflationBasis<T>,
    betas: &[T],
    m: usize,
) -> Result<ThermalEstimate<T>> {
    let shift = basis.lambda()[0];
    let estimates = betas
        .iter()
        .map(|&beta| {
            let f: Vec<T> = basis.lambda().iter().map(|&l| (-beta * (l - shift)).exp()).collect();
            let defl = LogScaledMatrix::new(partial_trace_lowrank(basis.q(), &f, split)?, -beta * shift);
            Ok(PartialTraceEstimate::from_parts(defl, vec![LogScaledMatrix::zeros(split.d_s()); m], 0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ThermalEstimate {
        betas: betas.to_vec(),
        estimates,
        depth: 0,
        depth_change: None,
        shift,
        exhausted_probes: 0,
        matvecs: MatvecCounts::default(),
    })
}

/// Zero-temperature limit of `ρ*`: the average of `tr_b(q_i q_iᵀ)` over the
/// lowest eigenvalue and every eigenvalue within `rel_tol·max(1, |λ_1|)`
/// of it. Returns the density and the multiplet size.
///
/// If the whole basis lies in the multiplet, the true ground space may be
/// larger than the basis; a warning is logged.
pub fn ground_state_density<T: Real>(
    basis: &DeflationBasis<T>,
    split: &BipartiteSplit,
    rel_tol: T,
) -> Result<(DMatrix<T>, usize)> {
    split.check_len("deflation basis", basis.dim())?;
    let lambda = basis.lambda();
    let Some(&l0) = lambda.first() else {
        return Err(Error::InvalidArgument("ground-state density needs k >= 1".into()));
    };
    let gap_tol = rel_tol * l0.abs().max(T::one());
    let mult = lambda.iter().take_while(|&&l| l - l0 <= gap_tol).count();
    if mult == lambda.len() && lambda.len() > 1 {
        log::warn!("ground multiplet fills all {mult} basis vectors; it may extend beyond the basis");
    }
    let w = vec![T::one() / T::from_count(mult); mult];
    let rho = partial_trace_lowrank(&basis.q().columns(0, mult).into_owned(), &w, split)?;
    Ok((rho, mult))
}
