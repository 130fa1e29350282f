//! Dense real linear-algebra kernels.
//!
//! Matrices are `nalgebra::DMatrix<f64>` (column-major). The kernels here are
//! the building blocks for everything else in the crate: the matrix
//! exponential, a Schur-based Sylvester solver, rank-revealing compression of
//! `L·D·Lᵀ` factors, and plain-text matrix file formats.

mod compress;
mod expm;
mod expmv;
pub mod io;
mod sylvester;

pub use compress::compress;
pub use expm::expm;
pub use expmv::exp_actions;
pub use sylvester::{solve_sylvester, solve_sylvester_kronecker, KRONECKER_SOLVE_CAP};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub type RealMatrix = DMatrix<f64>;

/// Builds a matrix from row-major entries, rejecting wrong lengths and
/// non-finite values.
pub fn from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<RealMatrix> {
    if entries.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "{} entries for a {rows}x{cols} matrix",
            entries.len()
        )));
    }
    let m = RealMatrix::from_row_slice(rows, cols, entries);
    ensure_finite(&m, "matrix")?;
    Ok(m)
}

pub fn ensure_finite(m: &RealMatrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} has non-finite entries")))
    }
}

pub fn ensure_square(m: &RealMatrix, what: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Maximum absolute column sum.
pub fn norm1(m: &RealMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn norm_fro(m: &RealMatrix) -> f64 {
    m.norm()
}

/// `‖a − b‖_F / ‖b‖_F`, falling back to the absolute difference when `b` vanishes.
pub fn rel_diff(a: &RealMatrix, b: &RealMatrix) -> f64 {
    let diff = (a - b).norm();
    let scale = b.norm();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// `‖m − mᵀ‖_F / ‖m‖_F` (zero for the zero matrix).
pub fn asymmetry(m: &RealMatrix) -> f64 {
    let scale = m.norm();
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / scale
}

pub fn symmetrize(m: &RealMatrix) -> RealMatrix {
    (m + m.transpose()) * 0.5
}

/// Horizontal concatenation; all blocks must share the row count `rows`.
pub fn hcat(rows: usize, blocks: &[&RealMatrix]) -> Result<RealMatrix> {
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = RealMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        if b.nrows() != rows {
            return Err(Error::Dimension(format!(
                "hcat: block has {} rows, expected {rows}",
                b.nrows()
            )));
        }
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    Ok(out)
}

pub fn block_diag(blocks: &[&RealMatrix]) -> RealMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = RealMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_sym_eigenvalue(m: &RealMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}
