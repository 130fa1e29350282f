use super::{asymmetry, ensure_finite, symmetrize, RealMatrix};
use crate::error::{Error, Result};

/// Column compression of a symmetric factorization `L·D·Lᵀ`.
///
/// Thin QR of `L`, then an eigendecomposition of the projected core
/// `R·D·Rᵀ`. Eigenvalues are discarded smallest-magnitude first for as long
/// as the discarded part stays within `tol·‖L·D·Lᵀ‖_F`. The returned factor
/// has orthonormal columns and a diagonal core ordered by decreasing
/// magnitude; indefinite cores are handled.
pub fn compress(l: &RealMatrix, d: &RealMatrix, tol: f64) -> Result<(RealMatrix, RealMatrix)> {
    let (n, r) = l.shape();
    if d.shape() != (r, r) {
        return Err(Error::Dimension(format!(
            "core is {}x{}, factor has {r} columns",
            d.nrows(),
            d.ncols()
        )));
    }
    if !(tol >= 0.0) {
        return Err(Error::Domain(format!("compression tolerance {tol} must be ≥ 0")));
    }
    ensure_finite(l, "LDLᵀ factor")?;
    ensure_finite(d, "LDLᵀ core")?;
    if asymmetry(d) > 1e-12 {
        return Err(Error::Domain(format!(
            "LDLᵀ core is not symmetric (relative asymmetry {:.3e})",
            asymmetry(d)
        )));
    }
    if r == 0 || n == 0 {
        return Ok((RealMatrix::zeros(n, 0), RealMatrix::zeros(0, 0)));
    }

    let qr = l.clone().qr();
    let q = qr.q();
    let rr = qr.r();
    let core = symmetrize(&(&rr * d * rr.transpose()));
    let eig = core.symmetric_eigen();

    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .abs()
            .total_cmp(&eig.eigenvalues[j].abs())
    });
    let total: f64 = eig.eigenvalues.iter().map(|v| v * v).sum::<f64>().sqrt();
    let budget = tol * total;
    let mut dropped_sq = 0.0;
    let mut first_kept = 0;
    for &i in &order {
        let lam = eig.eigenvalues[i];
        if (dropped_sq + lam * lam).sqrt() <= budget {
            dropped_sq += lam * lam;
            first_kept += 1;
        } else {
            break;
        }
    }

    let kept: Vec<usize> = order[first_kept..].iter().rev().copied().collect();
    let k = kept.len();
    let vecs = &eig.eigenvectors;
    let basis = RealMatrix::from_fn(q.ncols(), k, |row, c| vecs[(row, kept[c])]);
    let l_new = q * basis;
    let d_new = RealMatrix::from_fn(k, k, |i, j| {
        if i == j {
            eig.eigenvalues[kept[i]]
        } else {
            0.0
        }
    });
    Ok((l_new, d_new))
}
