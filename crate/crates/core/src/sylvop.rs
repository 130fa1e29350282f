//! The Sylvester operator `S(X) = A·X + X·D` and the matrix functions of it
//! that the integrators need.
//!
//! The exponential factorizes as `e^{tS}(X) = e^{tA}·X·e^{tD}`. Linear
//! combinations `Σ φⱼ(hS)(Nⱼ)` are obtained from a single exponential of the
//! block upper-triangular matrix
//!
//! ```text
//!     [ hA   N_k   N_{k-1} ...  N_1 ]
//!     [  0  -hD      I             ]
//!     [  0    0    -hD    I        ]
//!     [              ...       I   ]
//!     [  0    0      0    ...  -hD ]
//! ```
//!
//! applied to `[N_0; 0; …; 0; I]`, keeping the top block and multiplying by
//! `e^{hD}` on the right. For `k = 1` this is the classical augmented-matrix
//! form of the exponential Euler step. When `‖hD‖₁` is large the `e^{-hD}`
//! blocks grow and the final right multiplication cancels that growth, so the
//! interval is split into substeps with `‖hD‖₁/p ≤ 1`; the lower block rows
//! are known polynomials in the substep variable and are reset exactly after
//! each substep.

use crate::dense::{ensure_square, expm, norm1, RealMatrix};
use crate::error::{Error, Result};
use crate::integrators::RiccatiProblem;

/// Bound on `‖hD‖₁` per substep of the augmented evaluation.
const AUGMENTED_SUBSTEP_NORM: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SylvesterOperator {
    a: RealMatrix,
    d: RealMatrix,
}

impl SylvesterOperator {
    pub fn new(a: RealMatrix, d: RealMatrix) -> Result<Self> {
        ensure_square(&a, "Sylvester operator A")?;
        ensure_square(&d, "Sylvester operator D")?;
        Ok(Self { a, d })
    }

    pub fn a(&self) -> &RealMatrix {
        &self.a
    }

    pub fn d(&self) -> &RealMatrix {
        &self.d
    }

    /// `(M, N)`: the operator acts on M×N matrices.
    pub fn shape(&self) -> (usize, usize) {
        (self.a.nrows(), self.d.nrows())
    }

    pub fn check_operand(&self, x: &RealMatrix) -> Result<()> {
        if x.shape() != self.shape() {
            return Err(Error::Dimension(format!(
                "operand is {}x{}, operator acts on {}x{}",
                x.nrows(),
                x.ncols(),
                self.a.nrows(),
                self.d.nrows()
            )));
        }
        Ok(())
    }

    /// `A·X + X·D`.
    pub fn apply(&self, x: &RealMatrix) -> Result<RealMatrix> {
        self.check_operand(x)?;
        Ok(&self.a * x + x * &self.d)
    }

    /// The operator `t·S`.
    pub fn scaled(&self, t: f64) -> Self {
        Self {
            a: &self.a * t,
            d: &self.d * t,
        }
    }

    /// `e^{tS}(X) = e^{tA}·X·e^{tD}`.
    pub fn exp_action(&self, t: f64, x: &RealMatrix) -> Result<RealMatrix> {
        self.check_operand(x)?;
        if t == 0.0 {
            return Ok(x.clone());
        }
        let ea = expm(&(&self.a * t))?;
        let ed = expm(&(&self.d * t))?;
        Ok(ea * x * ed)
    }

    /// `e^{hS}(X) + h·φ₁(hS)(V)` from the augmented matrix `[[A, V], [0, -D]]`.
    pub fn phi1_action_augmented(
        &self,
        h: f64,
        v: &RealMatrix,
        x: &RealMatrix,
    ) -> Result<RealMatrix> {
        self.check_operand(v)?;
        self.check_operand(x)?;
        self.phi_combination_augmented(h, &[x.clone(), v * h])
    }

    /// `Σ_{j=0}^{k} φⱼ(hS)(Nⱼ)` for operands `[N_0, …, N_k]`, exact up to the
    /// accuracy of one matrix exponential of size `M + k·N`.
    pub fn phi_combination_augmented(&self, h: f64, operands: &[RealMatrix]) -> Result<RealMatrix> {
        let Some((first, rest)) = operands.split_first() else {
            return Err(Error::Dimension("empty φ-combination".into()));
        };
        for op in operands {
            self.check_operand(op)?;
        }
        let k = rest.len();
        if k == 0 {
            return self.exp_action(h, first);
        }
        let (m, n) = self.shape();
        if m == 0 || n == 0 {
            return Ok(RealMatrix::zeros(m, n));
        }

        let substeps = ((h.abs() * norm1(&self.d)) / AUGMENTED_SUBSTEP_NORM)
            .ceil()
            .max(1.0) as usize;
        let delta = 1.0 / substeps as f64;

        let size = m + k * n;
        let mut big = RealMatrix::zeros(size, size);
        big.view_mut((0, 0), (m, m)).copy_from(&(&self.a * (h * delta)));
        let neg_d = &self.d * (-h * delta);
        for blk in 0..k {
            let col = m + blk * n;
            // Block `blk` of the top row carries N_{k-blk}.
            big.view_mut((0, col), (m, n)).copy_from(&(&rest[k - 1 - blk] * delta));
            big.view_mut((col, col), (n, n)).copy_from(&neg_d);
            if blk + 1 < k {
                let ident = RealMatrix::identity(n, n) * delta;
                big.view_mut((col, col + n), (n, n)).copy_from(&ident);
            }
        }
        let e = expm(&big)?;
        let e_top_left = e.view((0, 0), (m, m)).into_owned();
        let e_top_blocks: Vec<RealMatrix> = (0..k)
            .map(|blk| e.view((0, m + blk * n), (m, n)).into_owned())
            .collect();
        let ed = expm(&(&self.d * (h * delta)))?;

        let mut y = first.clone();
        for step in 0..substeps {
            let theta = step as f64 * delta;
            let mut z = &e_top_left * &y;
            // Normalized lower block `blk` holds θ^{k-1-blk}/(k-1-blk)!·I.
            let mut weight = 1.0;
            for (p, blk) in (0..k).rev().enumerate() {
                if p > 0 {
                    weight *= theta / p as f64;
                }
                if weight != 0.0 {
                    z += &e_top_blocks[blk] * weight;
                }
            }
            y = z * &ed;
        }
        Ok(y)
    }
}

/// Fréchet linearization of the Riccati right-hand side at `Xₙ`:
/// `Aₙ = A − Xₙ·G`, `Dₙ = D − G·Xₙ`, and the remainder `Gₙ(Xₙ) = Q + Xₙ·G·Xₙ`.
#[derive(Debug, Clone)]
pub struct Linearization {
    pub operator: SylvesterOperator,
    pub remainder_at_x: RealMatrix,
}

impl Linearization {
    pub fn a_n(&self) -> &RealMatrix {
        self.operator.a()
    }

    pub fn d_n(&self) -> &RealMatrix {
        self.operator.d()
    }
}

pub fn linearize(p: &RiccatiProblem, xn: &RealMatrix) -> Result<Linearization> {
    p.check_state(xn)?;
    let xg = xn * p.g();
    let a_n = p.a() - &xg;
    let d_n = p.d() - p.g() * xn;
    let remainder_at_x = p.q() + xg * xn;
    Ok(Linearization {
        operator: SylvesterOperator { a: a_n, d: d_n },
        remainder_at_x,
    })
}

/// Remainder `Gₙ(Y) = F(Y) − Sₙ(Y) = Q − Y·G·Y + Xₙ·G·Y + Y·G·Xₙ`.
pub fn remainder(p: &RiccatiProblem, xn: &RealMatrix, y: &RealMatrix) -> Result<RealMatrix> {
    p.check_state(xn)?;
    p.check_state(y)?;
    let g = p.g();
    let gy = g * y;
    Ok(p.q() - y * &gy + xn * &gy + y * g * xn)
}
