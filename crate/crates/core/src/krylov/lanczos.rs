use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{deflate_in_place, symmetrize, thin_qr};
use crate::spinsys::LinOp;
use crate::Real;

use super::DeflationBasis;

/// Relative size of a diagonal entry of `R` below which a QR block counts
/// as rank deficient.
const DEGENERACY_TOL: f64 = 1e-10;

/// The recurrence stops (the Krylov space is invariant) once the new
/// residual block is this small relative to `‖H V_j‖_F`.
const EXHAUSTION_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    /// Full reorthogonalization of every new block against all previous ones.
    pub reorthogonalize: bool,
    /// Keep the blocks `V_j` (implied by `reorthogonalize`).
    pub retain_basis: bool,
    /// Apply `I − QQᵀ` to the starting block before the first QR.
    pub project_initial: bool,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            reorthogonalize: false,
            retain_basis: false,
            project_initial: true,
        }
    }
}

/// Output of the block recurrence: diagonal blocks `M_0..M_{t−1}`,
/// subdiagonal blocks `R_1..R_{t−1}` and the starting factor `R_0`.
#[derive(Clone, Debug)]
pub struct BlockTridiagonal<T: Real> {
    m_blocks: Vec<DMatrix<T>>,
    r_blocks: Vec<DMatrix<T>>,
    r0: DMatrix<T>,
}

impl<T: Real> BlockTridiagonal<T> {
    pub fn depth(&self) -> usize {
        self.m_blocks.len()
    }

    pub fn block_size(&self) -> usize {
        self.r0.ncols()
    }

    pub fn m_blocks(&self) -> &[DMatrix<T>] {
        &self.m_blocks
    }

    /// `R_1..R_{t−1}`; entry `j − 1` couples `V_j` to `V_{j−1}`.
    pub fn r_blocks(&self) -> &[DMatrix<T>] {
        &self.r_blocks[..self.depth().saturating_sub(1)]
    }

    pub fn r0(&self) -> &DMatrix<T> {
        &self.r0
    }

    /// First `depth` block rows and columns.
    pub fn truncated(&self, depth: usize) -> Self {
        let d = depth.min(self.depth());
        Self {
            m_blocks: self.m_blocks[..d].to_vec(),
            r_blocks: self.r_blocks[..d.saturating_sub(1)].to_vec(),
            r0: self.r0.clone(),
        }
    }

    /// Dense symmetric `(t·b) × (t·b)` matrix.
    pub fn assemble(&self) -> DMatrix<T> {
        let b = self.block_size();
        let t = self.depth();
        let mut out = DMatrix::zeros(t * b, t * b);
        for (j, m) in self.m_blocks.iter().enumerate() {
            out.view_mut((j * b, j * b), (b, b)).copy_from(&symmetrize(m));
        }
        for (j, r) in self.r_blocks().iter().enumerate() {
            out.view_mut(((j + 1) * b, j * b), (b, b)).copy_from(r);
            out.view_mut((j * b, (j + 1) * b), (b, b)).copy_from(&r.transpose());
        }
        out
    }

    /// Plain-text dump: one `M j` / `R j` / `R0` header per block followed by
    /// its rows, whitespace separated, in `{:e}` format.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let mut block = |name: String, m: &DMatrix<T>| {
            let _ = writeln!(s, "{name} {}x{}", m.nrows(), m.ncols());
            for r in 0..m.nrows() {
                let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:e}", m[(r, c)].as_f64())).collect();
                let _ = writeln!(s, "{}", row.join(" "));
            }
        };
        block("R0".into(), &self.r0);
        for (j, m) in self.m_blocks.iter().enumerate() {
            block(format!("M {j}"), m);
        }
        for (j, r) in self.r_blocks().iter().enumerate() {
            block(format!("R {}", j + 1), r);
        }
        s
    }
}

/// Incremental block-Lanczos recurrence with explicit deflation against `Q`.
///
/// Each [`step`](Self::step) applies `H` once to the current block. The QR
/// of the resulting residual is deferred to the next step, so a run of
/// depth `t` costs exactly `t·b` operator applications.
pub struct BlockLanczos<'a, T: Real, O: LinOp<T> + ?Sized> {
    op: &'a O,
    q: &'a DMatrix<T>,
    opts: LanczosOptions,
    prev: Option<DMatrix<T>>,
    current: DMatrix<T>,
    pending: Option<DMatrix<T>>,
    last_hv_norm: T,
    basis: Vec<DMatrix<T>>,
    m_blocks: Vec<DMatrix<T>>,
    r_blocks: Vec<DMatrix<T>>,
    r0: DMatrix<T>,
    applies: u64,
    exhausted: bool,
}

impl<'a, T: Real, O: LinOp<T> + ?Sized> BlockLanczos<'a, T, O> {
    pub fn new(op: &'a O, z: &DMatrix<T>, q: &'a DMatrix<T>, opts: LanczosOptions) -> Result<Self> {
        let n = op.dim();
        if z.nrows() != n {
            return Err(Error::DimensionMismatch {
                context: "block Lanczos start block",
                expected: n,
                got: z.nrows(),
            });
        }
        if q.nrows() != n {
            return Err(Error::DimensionMismatch {
                context: "block Lanczos deflation basis",
                expected: n,
                got: q.nrows(),
            });
        }
        if z.ncols() == 0 || z.ncols() > n {
            return Err(Error::InvalidArgument(format!(
                "block width {} must lie in 1..={n}",
                z.ncols()
            )));
        }
        let mut z0 = z.clone();
        if opts.project_initial {
            deflate_in_place(q, &mut z0);
        }
        let norm = z0.norm();
        if norm == T::zero() {
            return Err(Error::InvalidArgument("starting block is zero after deflation".into()));
        }
        let (v0, r0) = thin_qr(z0);
        check_rank(&r0, norm, 0)?;
        let retain = opts.retain_basis || opts.reorthogonalize;
        Ok(Self {
            op,
            q,
            opts,
            prev: None,
            basis: if retain { vec![v0.clone()] } else { Vec::new() },
            current: v0,
            pending: None,
            last_hv_norm: T::zero(),
            m_blocks: Vec::new(),
            r_blocks: Vec::new(),
            r0,
            applies: 0,
            exhausted: false,
        })
    }

    pub fn depth(&self) -> usize {
        self.m_blocks.len()
    }

    pub fn applies(&self) -> u64 {
        self.applies
    }

    /// True once the block Krylov space stopped growing; the recurrence is
    /// then exact and further steps are no-ops.
    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    /// Extends the recurrence by one block. Returns `false` when the Krylov
    /// space is exhausted and no block was added.
    pub fn step(&mut self) -> Result<bool> {
        if self.exhausted {
            return Ok(false);
        }
        if let Some(x) = self.pending.take() {
            let norm = x.norm();
            if norm <= T::lit(EXHAUSTION_TOL) * self.last_hv_norm {
                self.exhausted = true;
                return Ok(false);
            }
            let (v_next, r) = thin_qr(x);
            check_rank(&r, norm, self.depth())?;
            self.r_blocks.push(r);
            let v_prev = std::mem::replace(&mut self.current, v_next);
            if self.opts.retain_basis || self.opts.reorthogonalize {
                self.basis.push(self.current.clone());
            }
            self.prev = Some(v_prev);
        }

        let mut x = self.op.apply(&self.current);
        self.applies += self.current.ncols() as u64;
        self.last_hv_norm = x.norm();
        if let (Some(prev), Some(r)) = (&self.prev, self.r_blocks.last()) {
            // X = H V_j − V_{j−1} R_jᵀ
            x.gemm(-T::one(), prev, &r.transpose(), T::one());
        }
        let m = self.current.tr_mul(&x);
        x.gemm(-T::one(), &self.current, &m, T::one());
        deflate_in_place(self.q, &mut x);
        if self.opts.reorthogonalize {
            for _ in 0..2 {
                for v in &self.basis {
                    let c = v.tr_mul(&x);
                    x.gemm(-T::one(), v, &c, T::one());
                }
                deflate_in_place(self.q, &mut x);
            }
        }
        self.m_blocks.push(m);
        self.pending = Some(x);
        Ok(true)
    }

    /// Steps until `depth` is reached or the space is exhausted.
    pub fn advance_to(&mut self, depth: usize) -> Result<()> {
        while self.depth() < depth {
            if !self.step()? {
                break;
            }
        }
        Ok(())
    }

    pub fn tridiagonal(&self) -> BlockTridiagonal<T> {
        BlockTridiagonal {
            m_blocks: self.m_blocks.clone(),
            r_blocks: self.r_blocks.clone(),
            r0: self.r0.clone(),
        }
    }

    /// Retained `V_0..V_{t−1}` (empty unless retention or reorthogonalization
    /// was requested).
    pub fn basis(&self) -> &[DMatrix<T>] {
        &self.basis[..self.basis.len().min(self.depth())]
    }

    pub fn finish(self) -> LanczosRun<T> {
        let depth = self.depth();
        let mut basis = self.basis;
        basis.truncate(depth);
        LanczosRun {
            tridiagonal: BlockTridiagonal {
                m_blocks: self.m_blocks,
                r_blocks: self.r_blocks,
                r0: self.r0,
            },
            basis: if self.opts.retain_basis || self.opts.reorthogonalize {
                Some(basis)
            } else {
                None
            },
            applies: self.applies,
            exhausted: self.exhausted,
        }
    }
}

fn check_rank<T: Real>(r: &DMatrix<T>, norm: T, iteration: usize) -> Result<()> {
    let tol = T::lit(DEGENERACY_TOL) * norm;
    for i in 0..r.ncols().min(r.nrows()) {
        let d = r[(i, i)].abs();
        if !(d > tol) {
            return Err(Error::DegenerateKrylov {
                iteration,
                diagonal: d.as_f64(),
                norm: norm.as_f64(),
            });
        }
    }
    Ok(())
}

pub struct LanczosRun<T: Real> {
    pub tridiagonal: BlockTridiagonal<T>,
    pub basis: Option<Vec<DMatrix<T>>>,
    pub applies: u64,
    /// Set when the recurrence stopped early at an invariant subspace.
    pub exhausted: bool,
}

/// Runs the deflated block-Lanczos recurrence to depth `t` (or until the
/// Krylov space is exhausted).
pub fn block_lanczos_defl<T: Real, O: LinOp<T> + ?Sized>(
    op: &O,
    z: &DMatrix<T>,
    basis: &DeflationBasis<T>,
    t: usize,
    opts: LanczosOptions,
) -> Result<LanczosRun<T>> {
    if t == 0 {
        return Err(Error::InvalidArgument("Lanczos depth must be at least 1".into()));
    }
    let mut lz = BlockLanczos::new(op, z, basis.q(), opts)?;
    lz.advance_to(t)?;
    Ok(lz.finish())
}
