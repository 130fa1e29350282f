//! Sylvester equation `A·W + W·D = F`.
//!
//! The default solver is Bartels–Stewart on complex Schur forms: both
//! coefficients are reduced to upper-triangular form, the transformed system
//! is solved column by column by back substitution, and the result is mapped
//! back and projected onto the reals. The Kronecker-vectorized dense solve is
//! kept as a fallback for small systems and as a test oracle.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use super::{ensure_finite, ensure_square, RealMatrix};
use crate::error::{Error, Result};

/// Largest `M·N` for which the vectorized dense solve is attempted.
pub const KRONECKER_SOLVE_CAP: usize = 4096;

/// Relative separation below which the operator is declared singular.
const SEPARATION_TOL: f64 = 1e-14;

type CMatrix = DMatrix<Complex64>;

/// Solves `A·W + W·D = F` for `W` (`A` is M×M, `D` is N×N, `F` is M×N).
pub fn solve_sylvester(a: &RealMatrix, d: &RealMatrix, f: &RealMatrix) -> Result<RealMatrix> {
    check_shapes(a, d, f)?;
    let (m, n) = f.shape();
    if m == 0 || n == 0 {
        return Ok(RealMatrix::zeros(m, n));
    }

    let scale = a.norm() + d.norm();
    let schur_a = Schur::try_new(to_complex(a), 1e-15, 10_000);
    let schur_d = Schur::try_new(to_complex(d), 1e-15, 10_000);
    let (Some(schur_a), Some(schur_d)) = (schur_a, schur_d) else {
        return solve_sylvester_kronecker(a, d, f);
    };
    let (ua, ta) = schur_a.unpack();
    let (ud, td) = schur_d.unpack();

    let separation = (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (ta[(i, i)] + td[(j, j)]).norm())
        .fold(f64::INFINITY, f64::min);
    if separation <= SEPARATION_TOL * scale || separation == 0.0 {
        return Err(Error::Solvability {
            separation,
            condition: scale / separation,
        });
    }

    let g = ua.adjoint() * to_complex(f) * &ud;
    let mut y = CMatrix::zeros(m, n);
    for j in 0..n {
        let mut rhs = g.column(j).into_owned();
        for i in 0..j {
            let coeff = td[(i, j)];
            if coeff != Complex64::new(0.0, 0.0) {
                rhs -= y.column(i) * coeff;
            }
        }
        let shift = td[(j, j)];
        // Back substitution with (Ta + shift·I), upper triangular.
        for r in (0..m).rev() {
            let mut acc = rhs[r];
            for c in r + 1..m {
                acc -= ta[(r, c)] * y[(c, j)];
            }
            y[(r, j)] = acc / (ta[(r, r)] + shift);
        }
    }

    let w = ua * y * ud.adjoint();
    let w = w.map(|z| z.re);
    ensure_finite(&w, "Sylvester solution")?;
    Ok(w)
}

/// Dense solve of `(I⊗A + Dᵀ⊗I)·vec(W) = vec(F)`; limited to `M·N ≤ 4096`.
pub fn solve_sylvester_kronecker(
    a: &RealMatrix,
    d: &RealMatrix,
    f: &RealMatrix,
) -> Result<RealMatrix> {
    check_shapes(a, d, f)?;
    let (m, n) = f.shape();
    if m * n > KRONECKER_SOLVE_CAP {
        return Err(Error::SizeCap(format!(
            "vectorized Sylvester solve needs M·N ≤ {KRONECKER_SOLVE_CAP}, got {}",
            m * n
        )));
    }
    if m == 0 || n == 0 {
        return Ok(RealMatrix::zeros(m, n));
    }
    let mn = m * n;
    let mut k = RealMatrix::zeros(mn, mn);
    for j in 0..n {
        for i in 0..m {
            let row = i + m * j;
            for c in 0..m {
                k[(row, c + m * j)] += a[(i, c)];
            }
            for l in 0..n {
                k[(row, i + m * l)] += d[(l, j)];
            }
        }
    }
    let rhs = nalgebra::DVector::from_column_slice(f.as_slice());
    let lu = k.lu();
    let sol = lu.solve(&rhs).ok_or(Error::Solvability {
        separation: 0.0,
        condition: f64::INFINITY,
    })?;
    let w = RealMatrix::from_column_slice(m, n, sol.as_slice());
    ensure_finite(&w, "Sylvester solution")?;
    Ok(w)
}

fn check_shapes(a: &RealMatrix, d: &RealMatrix, f: &RealMatrix) -> Result<()> {
    ensure_square(a, "Sylvester A")?;
    ensure_square(d, "Sylvester D")?;
    if f.nrows() != a.nrows() || f.ncols() != d.nrows() {
        return Err(Error::Dimension(format!(
            "right-hand side is {}x{}, expected {}x{}",
            f.nrows(),
            f.ncols(),
            a.nrows(),
            d.nrows()
        )));
    }
    ensure_finite(a, "Sylvester A")?;
    ensure_finite(d, "Sylvester D")?;
    ensure_finite(f, "Sylvester F")
}

fn to_complex(m: &RealMatrix) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}
