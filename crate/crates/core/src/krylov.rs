//! Block Krylov (block Arnoldi) approximation of `e^{τA}·V` for thin `V`.
//!
//! One orthonormal basis of `span{V, AV, …, A^{m−1}V}` serves every `τ`:
//! `e^{τA}·V ≈ Q·e^{τH}·QᵀV` with `H = QᵀAQ`.

use crate::dense::{ensure_finite, ensure_square, exp_actions, RealMatrix};
use crate::error::{Error, Result};

/// Default number of block steps.
pub const DEFAULT_STEPS: usize = 30;

/// Relative size below which a column is treated as linearly dependent.
const DEFLATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct BlockKrylovBasis {
    basis: RealMatrix,
    h: RealMatrix,
    /// `A·Q − Q·H`, nonzero only when the space is not invariant.
    residual: RealMatrix,
    block_width: usize,
    steps: usize,
}

impl BlockKrylovBasis {
    pub fn basis(&self) -> &RealMatrix {
        &self.basis
    }

    pub fn h(&self) -> &RealMatrix {
        &self.h
    }

    /// Width of the first block after deflation.
    pub fn block_width(&self) -> usize {
        self.block_width
    }

    /// Number of block steps actually taken.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// `e^{τA}·V` from a basis, with the generalized residual estimate
/// `‖(AQ − QH)·e^{τH}·QᵀV‖_F`.
#[derive(Debug, Clone)]
pub struct KrylovAction {
    pub value: RealMatrix,
    pub residual: f64,
}

/// Builds the basis of `K_m(A, V)` by block modified Gram–Schmidt with one
/// reorthogonalization pass. When `m·b ≥ n` the space is the whole of `ℝⁿ`.
pub fn build_basis(a: &RealMatrix, v: &RealMatrix, m: usize) -> Result<BlockKrylovBasis> {
    ensure_square(a, "Krylov matrix")?;
    let n = a.nrows();
    if v.nrows() != n {
        return Err(Error::Dimension(format!(
            "Krylov block has {} rows, matrix is {n}x{n}",
            v.nrows()
        )));
    }
    if m == 0 {
        return Err(Error::Domain("Krylov space needs at least one step".into()));
    }
    ensure_finite(a, "Krylov matrix")?;
    ensure_finite(v, "Krylov block")?;

    let mut cols: Vec<nalgebra::DVector<f64>> = Vec::new();
    let floor = DEFLATION_TOL * v.norm();
    let first = orthonormalize_block(&mut cols, v, |_| floor);
    let block_width = first.len();
    let mut current = first;
    let mut steps = usize::from(block_width > 0);
    while steps < m && !current.is_empty() && cols.len() < n {
        let block = RealMatrix::from_columns(&current.iter().map(|&i| cols[i].clone()).collect::<Vec<_>>());
        let w = a * block;
        let norms: Vec<f64> = w.column_iter().map(|c| c.norm()).collect();
        current = orthonormalize_block(&mut cols, &w, |j| DEFLATION_TOL * norms[j]);
        if !current.is_empty() {
            steps += 1;
        }
    }

    let basis = if cols.is_empty() {
        RealMatrix::zeros(n, 0)
    } else {
        RealMatrix::from_columns(&cols)
    };
    let aq = a * &basis;
    let h = basis.transpose() * &aq;
    let residual = aq - &basis * &h;
    Ok(BlockKrylovBasis {
        basis,
        h,
        residual,
        block_width,
        steps,
    })
}

/// Appends the columns of `w`, orthogonalized against `cols` and each other,
/// to `cols`; returns the indices of the accepted ones.
fn orthonormalize_block(
    cols: &mut Vec<nalgebra::DVector<f64>>,
    w: &RealMatrix,
    threshold: impl Fn(usize) -> f64,
) -> Vec<usize> {
    let mut accepted = Vec::new();
    for j in 0..w.ncols() {
        let mut x = w.column(j).into_owned();
        for _pass in 0..2 {
            for q in cols.iter() {
                let c = q.dot(&x);
                x.axpy(-c, q, 1.0);
            }
        }
        let nrm = x.norm();
        if nrm > threshold(j) && nrm > 0.0 {
            cols.push(x / nrm);
            accepted.push(cols.len() - 1);
        }
    }
    accepted
}

/// `Q·e^{τH}·QᵀV`.
pub fn exp_action_krylov(basis: &BlockKrylovBasis, tau: f64, v: &RealMatrix) -> Result<KrylovAction> {
    let mut out = exp_actions_krylov(basis, &[tau], v)?;
    Ok(out.pop().expect("one time"))
}

/// [`exp_action_krylov`] for several times sharing the basis.
pub fn exp_actions_krylov(
    basis: &BlockKrylovBasis,
    taus: &[f64],
    v: &RealMatrix,
) -> Result<Vec<KrylovAction>> {
    if let Some(t) = taus.iter().find(|t| !t.is_finite()) {
        return Err(Error::Domain(format!("Krylov time {t} is not finite")));
    }
    if v.nrows() != basis.basis.nrows() {
        return Err(Error::Dimension(format!(
            "block has {} rows, basis has {}",
            v.nrows(),
            basis.basis.nrows()
        )));
    }
    let e1 = basis.basis.transpose() * v;
    let small = exp_actions(&basis.h, &e1, taus)?;
    Ok(small
        .into_iter()
        .map(|y| KrylovAction {
            value: &basis.basis * &y,
            residual: (&basis.residual * &y).norm(),
        })
        .collect())
}
